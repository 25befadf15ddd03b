"""Analyzer model and four-fold coincidence rates.

Each path holds an optional quarter-wave plate, an optional half-wave plate
(in beam order QWP then HWP) and a polarizing beam splitter with one
detector per port.  A four-fold coincidence means all four detectors fire,
which requires the two photons in each path to leave through different PBS
ports.

Three scan protocols are supported, named ``fig2a``, ``fig2b`` and
``fig2c``:

===========  =========================  ==============================
scan         path A (fixed)             path B (rotated)
===========  =========================  ==============================
``fig2a``    H/V (no plates)            QWP at the scan angle
``fig2b``    R/L (QWP at 45 deg)        QWP at 45 deg, then HWP rotated
``fig2c``    P/M (HWP at 22.5 deg)      HWP at the scan angle
===========  =========================  ==============================

For a mixture (c0, alpha, beta, gamma) the expected four-fold rate along a
scan is

    c0 * [ alpha/3 * f  +  beta/2 * (f + 1)/2  +  gamma/4 ]

with the normalized fringe f equal to cos^4(2 theta) for ``fig2a``,
cos^2(4 theta) for ``fig2b`` and sin^2(4 theta) for ``fig2c``; the white
noise term is a flat quarter of the total rate.  These closed forms agree
with the full quantum probabilities computed from the states themselves
(see :mod:`etpsim.validate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import polarization as pol
from .states import MixtureModel

__all__ = [
    "AnalyzerSetting", "CoincidenceSummary", "SCANS",
    "fourfold_probability_etp", "fourfold_probability_eop2",
    "fringe_rate", "normalized_fringe", "ratio_r_analytic", "classify",
    "scan_settings", "parallel_angles_deg", "perpendicular_angles_deg",
]

_QUARTER_TURN = math.pi / 4  # QWP angle for circular-basis analysis
_EIGHTH_TURN = math.pi / 8   # HWP angle for diagonal-basis analysis


@dataclass(frozen=True)
class AnalyzerSetting:
    """Wave-plate configuration of one analyzer (QWP, then HWP, then PBS)."""

    qwp_present: bool = False
    qwp_angle: float = 0.0
    hwp_present: bool = False
    hwp_angle: float = 0.0

    def __post_init__(self):
        for name in ("qwp_angle", "hwp_angle"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def hv(cls) -> "AnalyzerSetting":
        """Bare PBS: analyzes the H/V basis."""
        return cls()

    @classmethod
    def rl(cls) -> "AnalyzerSetting":
        """QWP at 45 deg: analyzes the circular (R/L) basis."""
        return cls(qwp_present=True, qwp_angle=_QUARTER_TURN)

    @classmethod
    def pm(cls) -> "AnalyzerSetting":
        """HWP at 22.5 deg: analyzes the diagonal (P/M) basis."""
        return cls(hwp_present=True, hwp_angle=_EIGHTH_TURN)

    def single_unitary(self) -> np.ndarray:
        """Combined Jones matrix of the plate chain (beam order QWP, HWP)."""
        u = np.eye(2, dtype=complex)
        if self.qwp_present:
            u = pol.waveplate("quarter", self.qwp_angle) @ u
        if self.hwp_present:
            u = pol.waveplate("half", self.hwp_angle) @ u
        return u

    def lifted(self) -> np.ndarray:
        """Plate chain acting on the symmetric two-photon subspace."""
        return pol.symmetric_lift(self.single_unitary())

    def basis_name(self) -> str | None:
        """'HV', 'RL' or 'PM' when this setting is one of the named bases.

        Angles of absent plates are ignored.
        """
        for name, ref in (("HV", self.hv()), ("RL", self.rl()), ("PM", self.pm())):
            if self.qwp_present != ref.qwp_present or self.hwp_present != ref.hwp_present:
                continue
            if self.qwp_present and not math.isclose(
                self.qwp_angle, ref.qwp_angle, abs_tol=1e-12
            ):
                continue
            if self.hwp_present and not math.isclose(
                self.hwp_angle, ref.hwp_angle, abs_tol=1e-12
            ):
                continue
            return name
        return None


@dataclass(frozen=True)
class CoincidenceSummary:
    """Counts at same-basis (parallel) and crossed-basis settings.

    ``c_parallel``/``c_perpendicular`` are (possibly averaged) counts;
    the sigmas are their Poisson standard errors.
    """

    c_parallel: float
    c_perpendicular: float
    sigma_parallel: float = 0.0
    sigma_perpendicular: float = 0.0

    def __post_init__(self):
        if self.c_parallel < 0 or self.c_perpendicular < 0:
            raise ValueError("counts must be non-negative")
        if self.sigma_parallel < 0 or self.sigma_perpendicular < 0:
            raise ValueError("count errors must be non-negative")


def _opposite_port_projector_pair(setting: AnalyzerSetting) -> np.ndarray:
    """POVM element on a single-mode photon pair for a split PBS event."""
    lifted = setting.lifted()
    hv = np.zeros(3)
    hv[1] = 1.0
    return lifted.conj().T @ np.outer(hv, hv) @ lifted


def fourfold_probability_etp(
    state: np.ndarray, a: AnalyzerSetting, b: AnalyzerSetting
) -> float:
    """Four-fold coincidence probability for a single-mode pair source.

    ``state`` is a 9-vector on the two-path pair space.  Both photons of a
    path exit different PBS ports exactly when the plate-transformed pair
    projects onto |HV>.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (9,):
        raise ValueError(f"expected a 9-component state, got shape {state.shape}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    proj = np.kron(_opposite_port_projector_pair(a), _opposite_port_projector_pair(b))
    p = float(np.real(np.vdot(state, proj @ state)))
    return max(p, 0.0)


def _opposite_port_projector_modes(setting: AnalyzerSetting) -> np.ndarray:
    """POVM element on two distinguishable photons for a split PBS event.

    Both photons traverse the same plates; the event sums over the two port
    assignments.
    """
    u = setting.single_unitary()
    uu = np.kron(u, u)
    split = np.zeros((4, 4))
    split[1, 1] = 1.0   # first photon H port, second V port
    split[2, 2] = 1.0   # and vice versa
    return uu.conj().T @ split @ uu


def fourfold_probability_eop2(
    state: np.ndarray, a: AnalyzerSetting, b: AnalyzerSetting
) -> float:
    """Four-fold coincidence probability for two independent pairs.

    ``state`` is a 16-vector on qubits (A1, A2, B1, B2).  The analyzers act
    with the same Jones matrix on both photons of a path; the coincidence
    requires opposite PBS ports on each side.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (16,):
        raise ValueError(f"expected a 16-component state, got shape {state.shape}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    proj = np.kron(_opposite_port_projector_modes(a), _opposite_port_projector_modes(b))
    p = float(np.real(np.vdot(state, proj @ state)))
    return max(p, 0.0)


def _fringe_fig2a(theta):
    # cos^4(2 theta), written via cos(4 theta) so grid extrema are exact
    return ((1.0 + np.cos(4.0 * np.asarray(theta, float))) / 2.0) ** 2


def _fringe_fig2b(theta):
    # cos^2(4 theta)
    return (1.0 + np.cos(8.0 * np.asarray(theta, float))) / 2.0


def _fringe_fig2c(theta):
    # sin^2(4 theta)
    return (1.0 - np.cos(8.0 * np.asarray(theta, float))) / 2.0


@dataclass(frozen=True)
class _ScanProtocol:
    name: str
    fringe: object                      # normalized fringe f(theta) in [0, 1]
    fixed_a: object                     # factory for the fixed path-A setting
    rotated_b: object                   # path-B setting at the scan angle
    parallel_deg: tuple                 # fringe maxima within [0, 180] deg
    perpendicular_deg: tuple            # fringe minima within [0, 180] deg


SCANS: dict[str, _ScanProtocol] = {
    "fig2a": _ScanProtocol(
        name="fig2a",
        fringe=_fringe_fig2a,
        fixed_a=AnalyzerSetting.hv,
        rotated_b=lambda t: AnalyzerSetting(qwp_present=True, qwp_angle=t),
        parallel_deg=(0.0, 90.0, 180.0),
        perpendicular_deg=(45.0, 135.0),
    ),
    "fig2b": _ScanProtocol(
        name="fig2b",
        fringe=_fringe_fig2b,
        fixed_a=AnalyzerSetting.rl,
        rotated_b=lambda t: AnalyzerSetting(
            qwp_present=True, qwp_angle=_QUARTER_TURN, hwp_present=True, hwp_angle=t
        ),
        parallel_deg=(0.0, 45.0, 90.0, 135.0, 180.0),
        perpendicular_deg=(22.5, 67.5, 112.5, 157.5),
    ),
    "fig2c": _ScanProtocol(
        name="fig2c",
        fringe=_fringe_fig2c,
        fixed_a=AnalyzerSetting.pm,
        rotated_b=lambda t: AnalyzerSetting(hwp_present=True, hwp_angle=t),
        parallel_deg=(22.5, 67.5, 112.5, 157.5),
        perpendicular_deg=(0.0, 45.0, 90.0, 135.0, 180.0),
    ),
}


def _scan_protocol(scan: str) -> _ScanProtocol:
    try:
        return SCANS[scan]
    except KeyError:
        raise ValueError(
            f"unknown scan {scan!r}; expected one of {sorted(SCANS)}"
        ) from None


def scan_settings(scan: str, angle: float) -> tuple[AnalyzerSetting, AnalyzerSetting]:
    """(fixed path-A setting, path-B setting at ``angle``) for a scan."""
    proto = _scan_protocol(scan)
    return proto.fixed_a(), proto.rotated_b(angle)


def parallel_angles_deg(scan: str) -> tuple:
    """Scan angles (degrees) where both paths analyze the same basis."""
    return _scan_protocol(scan).parallel_deg


def perpendicular_angles_deg(scan: str) -> tuple:
    """Scan angles (degrees) where the analyzed bases are crossed."""
    return _scan_protocol(scan).perpendicular_deg


def normalized_fringe(scan: str, angle):
    """Normalized fringe f(angle) in [0, 1] for a scan (angle in radians)."""
    return _scan_protocol(scan).fringe(angle)


def fringe_rate(m: MixtureModel, scan: str, angle):
    """Expected four-fold counts at a scan angle (radians).

    Vectorized over ``angle``.  Returns
    ``c0 * (alpha/3 * f + beta/2 * (f+1)/2 + gamma/4)``.
    """
    if not isinstance(m, MixtureModel):
        raise TypeError("m must be a MixtureModel")
    f = normalized_fringe(scan, angle)
    return m.c0 * (m.alpha / 3.0 * f + m.beta / 2.0 * (f + 1.0) / 2.0 + m.gamma / 4.0)


def ratio_r_analytic(m: MixtureModel) -> float:
    """Fringe minimum over maximum: (beta/4 + gamma/4) / (alpha/3 + beta/2 + gamma/4).

    The extrema are taken from the closed-form rate model (f = 0 and f = 1),
    so the value is exact rather than grid-based.
    """
    if not isinstance(m, MixtureModel):
        raise TypeError("m must be a MixtureModel")
    peak = m.alpha / 3.0 + m.beta / 2.0 + m.gamma / 4.0
    if peak <= 0.0:
        raise ValueError("degenerate mixture: the maximum rate is zero")
    floor = m.beta / 4.0 + m.gamma / 4.0
    return floor / peak


def classify(a: AnalyzerSetting, b: AnalyzerSetting) -> str:
    """'parallel' when both settings analyze the same named basis.

    Raises ``ValueError`` for settings that are not one of the named bases
    (continuous scan points must be classified by their fringe extrema
    instead).
    """
    name_a, name_b = a.basis_name(), b.basis_name()
    if name_a is None or name_b is None:
        raise ValueError(
            "classification requires named-basis settings (HV, RL or PM)"
        )
    return "parallel" if name_a == name_b else "perpendicular"
