"""Source states for four-photon and two-photon polarization experiments.

Three source models appear throughout the package:

* a single-mode entangled two-photon-polarization state (ETP), in which both
  photons of each pair share one spatiotemporal mode per path so the pair in
  each path is a qutrit;
* two independent entangled one-photon pairs (double EOP) occupying
  distinguishable modes within the same two paths;
* white noise, which is handled at the rate level only: it contributes a
  flat background of one quarter of the total four-fold rate, independent of
  the analyzer settings (no microscopic density matrix is assumed for it).

:class:`MixtureModel` carries the statistical weights (alpha, beta, gamma)
of the three event types together with the total four-fold rate c0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import polarization as pol

__all__ = [
    "make_etp", "make_double_eop", "etp_in_unpolarized_basis",
    "EopState", "make_eop", "MixtureModel",
]

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)


def make_etp() -> np.ndarray:
    """Entangled two-photon-polarization state of paths A and B.

    Returns the 9-component vector over {HH, HV, VV}_A x {HH, HV, VV}_B

        (|HH>_A |VV>_B - |HV>_A |HV>_B + |VV>_A |HH>_B) / sqrt(3)

    i.e. the two-qutrit singlet produced when two down-converted pairs are
    emitted into the same mode of each path.
    """
    psi = np.zeros(9, dtype=complex)
    psi[0 * 3 + 2] = 1.0    # |HH>_A |VV>_B
    psi[1 * 3 + 1] = -1.0   # |HV>_A |HV>_B
    psi[2 * 3 + 0] = 1.0    # |VV>_A |HH>_B
    return psi / _SQRT3


def make_double_eop() -> np.ndarray:
    """Two independent polarization singlets sharing the two paths.

    Returns the 16-component vector on qubits (A1, A2, B1, B2), basis
    {H, V}^4 with A1 most significant: the product of the (A1, B1) singlet
    and the (A2, B2) singlet, each (|H>|V> - |V>|H>)/sqrt(2).
    """
    singlet = np.zeros((2, 2), dtype=complex)
    singlet[0, 1] = 1.0
    singlet[1, 0] = -1.0
    singlet /= _SQRT2
    # psi[a1, a2, b1, b2] = s[a1, b1] * s[a2, b2]
    psi = np.einsum("ab,cd->acbd", singlet, singlet)
    return psi.reshape(16)


def _unpolarized_pair_basis() -> np.ndarray:
    """The three orthonormal unpolarized pair states as rows (HV, PM, RL).

    The circular state carries a +90 deg global phase (i times the real
    product state) so that the three projection coefficients of the
    entangled two-photon source state come out with one common phase.
    """
    return np.vstack(
        [
            pol.pair_state_hv(),
            pol.pair_state_pm(),
            1j * pol.pair_state_rl(),
        ]
    )


def etp_in_unpolarized_basis(state: np.ndarray) -> tuple[np.ndarray, float]:
    """Project a two-path pair state onto the diagonal unpolarized basis.

    Decomposes ``state`` (9-vector) over {|HV>|HV>, |PM>|PM>, |RL>|RL>} and
    reports the residual norm outside that span.

    Returns
    -------
    coeffs : (3,) complex ndarray
    residual : float
        Norm of the component outside the three-dimensional span.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (9,):
        raise ValueError(f"expected a 9-component state, got shape {state.shape}")
    basis = _unpolarized_pair_basis()
    coeffs = np.array([np.vdot(np.kron(b, b), state) for b in basis])
    recon = sum(c * np.kron(b, b) for c, b in zip(coeffs, basis))
    residual = float(np.linalg.norm(state - recon))
    return coeffs, residual


@dataclass(frozen=True)
class EopState:
    """A single polarization-entangled photon pair, optionally depolarized.

    ``vector`` is the pure two-qubit state on (A, B); ``noise`` is the white
    noise fraction p of a Werner-type mixture (1-p)|s><s| + p I/4.
    """

    vector: np.ndarray
    noise: float = 0.0

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=complex)
        if vec.shape != (4,):
            raise ValueError("EopState vector must have 4 components")
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise ValueError("EopState vector must be normalized")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise fraction must lie in [0, 1], got {self.noise}")
        object.__setattr__(self, "vector", vec)

    def density(self) -> np.ndarray:
        """4x4 density operator (1-p)|s><s| + p I/4."""
        pure = np.outer(self.vector, self.vector.conj())
        return (1.0 - self.noise) * pure + self.noise * np.eye(4) / 4.0


def make_eop(noise: float = 0.0) -> EopState:
    """The polarization singlet (|H>_A |V>_B - |V>_A |H>_B)/sqrt(2)."""
    vec = np.zeros(4, dtype=complex)
    vec[0 * 2 + 1] = 1.0
    vec[1 * 2 + 0] = -1.0
    return EopState(vec / _SQRT2, noise=noise)


@dataclass(frozen=True)
class MixtureModel:
    """Statistical mixture of four-fold event types.

    c0     -- total four-fold coincidence rate (counts per integration window)
    alpha  -- fraction of single-mode entangled two-photon events
    beta   -- fraction of independent double-pair events
    gamma  -- white-noise fraction (flat background c0 * gamma / 4)

    alpha + beta + gamma must equal 1.
    """

    c0: float
    alpha: float
    beta: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            val = getattr(self, name)
            if not (math.isfinite(val) and -1e-9 <= val <= 1.0 + 1e-9):
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError(
                "mixture fractions must sum to 1, got "
                f"{self.alpha + self.beta + self.gamma}"
            )
        if not (math.isfinite(self.c0) and self.c0 >= 0.0):
            raise ValueError(f"c0 must be a finite non-negative rate, got {self.c0}")

    @classmethod
    def pure_etp(cls, c0: float = 1.0) -> "MixtureModel":
        return cls(c0=c0, alpha=1.0, beta=0.0, gamma=0.0)

    @classmethod
    def pure_double_eop(cls, c0: float = 1.0) -> "MixtureModel":
        return cls(c0=c0, alpha=0.0, beta=1.0, gamma=0.0)
