"""Cross-validation between the closed-form rate model and the full quantum
calculation, plus structural self-checks.

Every check recomputes both sides from scratch through the public module
attributes, so a fault injected into any operation (for instance replacing
the symmetric lift) is caught here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import measurement as meas
from . import polarization as pol
from . import states

__all__ = ["CheckResult", "run_validation"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_unitary(rng) -> np.ndarray:
    chain = np.eye(2, dtype=complex)
    for _ in range(3):
        kind = "quarter" if rng.integers(2) else "half"
        chain = pol.waveplate(kind, rng.uniform(0.0, np.pi)) @ chain
    return chain


def _check_waveplate_unitarity(tol, rng, n=200):
    worst = 0.0
    for _ in range(n):
        kind = "quarter" if rng.integers(2) else "half"
        u = pol.waveplate(kind, rng.uniform(-np.pi, np.pi))
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(2)))))
    return worst <= tol, f"max |U^t U - I| = {worst:.3e} (tol {tol:.1e})"


def _check_lift_homomorphism(tol, rng, n=200):
    worst = 0.0
    for _ in range(n):
        u, v = _random_unitary(rng), _random_unitary(rng)
        lhs = pol.symmetric_lift(u @ v)
        rhs = pol.symmetric_lift(u) @ pol.symmetric_lift(v)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst <= tol, f"max |L(UV) - L(U)L(V)| = {worst:.3e} (tol {tol:.1e})"


def _check_lift_unitarity(tol, rng, n=200):
    worst = 0.0
    for _ in range(n):
        lifted = pol.symmetric_lift(_random_unitary(rng))
        worst = max(worst, float(np.max(np.abs(lifted.conj().T @ lifted - np.eye(3)))))
    return worst <= tol, f"max |L^t L - I| = {worst:.3e} (tol {tol:.1e})"


def _check_pair_basis_orthonormal(tol, rng):
    basis = np.vstack([pol.pair_state_hv(), pol.pair_state_pm(), pol.pair_state_rl()])
    gram = basis.conj() @ basis.T
    worst = float(np.max(np.abs(gram - np.eye(3))))
    return worst <= tol, f"max |Gram - I| = {worst:.3e} (tol {tol:.1e})"


def _check_source_state_diagonal_form(tol, rng):
    coeffs, residual = states.etp_in_unpolarized_basis(states.make_etp())
    mags_ok = np.allclose(np.abs(coeffs), 1.0 / np.sqrt(3.0), atol=tol)
    common_phase = np.max(np.abs(coeffs - coeffs[0]))
    ok = residual <= tol and mags_ok and common_phase <= tol
    return ok, (
        f"residual = {residual:.3e}, coefficient spread = {common_phase:.3e} "
        f"(tol {tol:.1e})"
    )


def _fringe_mismatch(scan, mixture, quantum_prob, state):
    angles = np.linspace(0.0, np.pi, 181)
    worst = 0.0
    for angle in angles:
        setting_a, setting_b = meas.scan_settings(scan, angle)
        q = quantum_prob(state, setting_a, setting_b)
        model = float(meas.fringe_rate(mixture, scan, angle))
        worst = max(worst, abs(q - model))
    return worst


def _check_etp_fringes(tol, rng):
    state = states.make_etp()
    mixture = states.MixtureModel.pure_etp(c0=1.0)
    worst = max(
        _fringe_mismatch(scan, mixture, meas.fourfold_probability_etp, state)
        for scan in meas.SCANS
    )
    return worst <= tol, f"max |quantum - model| = {worst:.3e} (tol {tol:.1e})"


def _check_double_eop_fringes(tol, rng):
    state = states.make_double_eop()
    mixture = states.MixtureModel.pure_double_eop(c0=1.0)
    worst = max(
        _fringe_mismatch(scan, mixture, meas.fourfold_probability_eop2, state)
        for scan in meas.SCANS
    )
    return worst <= tol, f"max |quantum - model| = {worst:.3e} (tol {tol:.1e})"


def _check_named_basis_matrix(tol, rng):
    state = states.make_etp()
    named = [meas.AnalyzerSetting.hv(), meas.AnalyzerSetting.rl(),
             meas.AnalyzerSetting.pm()]
    table = np.array(
        [[meas.fourfold_probability_etp(state, a, b) for b in named] for a in named]
    )
    worst = float(np.max(np.abs(table - np.eye(3) / 3.0)))
    return worst <= tol, f"max |table - I/3| = {worst:.3e} (tol {tol:.1e})"


def _check_extremum_locations(tol, rng):
    # derivative sign must flip + -> - at maxima and - -> + at minima
    mixture = states.MixtureModel(c0=1.0, alpha=0.6, beta=0.4, gamma=0.0)
    eps = 1e-4
    bad = []
    for scan in meas.SCANS:
        for deg, kind in (
            [(d, "max") for d in meas.parallel_angles_deg(scan)]
            + [(d, "min") for d in meas.perpendicular_angles_deg(scan)]
        ):
            theta = np.radians(deg)
            left = float(meas.fringe_rate(mixture, scan, theta - eps))
            mid = float(meas.fringe_rate(mixture, scan, theta))
            right = float(meas.fringe_rate(mixture, scan, theta + eps))
            if kind == "max" and not (left <= mid >= right):
                bad.append((scan, deg, kind))
            if kind == "min" and not (left >= mid <= right):
                bad.append((scan, deg, kind))
    return not bad, f"misplaced extrema: {bad}" if bad else "all extrema in place"


def _check_probability_range(tol, rng):
    etp = states.make_etp()
    eop2 = states.make_double_eop()
    worst = 0.0
    for _ in range(50):
        setting_a = meas.AnalyzerSetting(
            qwp_present=bool(rng.integers(2)), qwp_angle=rng.uniform(0, np.pi),
            hwp_present=bool(rng.integers(2)), hwp_angle=rng.uniform(0, np.pi),
        )
        setting_b = meas.AnalyzerSetting(
            qwp_present=bool(rng.integers(2)), qwp_angle=rng.uniform(0, np.pi),
            hwp_present=bool(rng.integers(2)), hwp_angle=rng.uniform(0, np.pi),
        )
        for p in (
            meas.fourfold_probability_etp(etp, setting_a, setting_b),
            meas.fourfold_probability_eop2(eop2, setting_a, setting_b),
        ):
            worst = max(worst, -p, p - 1.0)
    return worst <= tol, f"max excursion outside [0,1] = {worst:.3e}"


_CHECKS = [
    ("waveplate_unitarity", _check_waveplate_unitarity, 1e-12),
    ("lift_homomorphism", _check_lift_homomorphism, 1e-10),
    ("lift_unitarity", _check_lift_unitarity, 1e-10),
    ("pair_basis_orthonormal", _check_pair_basis_orthonormal, 1e-12),
    ("source_state_diagonal_form", _check_source_state_diagonal_form, 1e-10),
    ("etp_fringe_model_match", _check_etp_fringes, 1e-9),
    ("double_eop_fringe_model_match", _check_double_eop_fringes, 1e-9),
    ("named_basis_anticorrelation", _check_named_basis_matrix, 1e-10),
    ("fringe_extremum_locations", _check_extremum_locations, 0.0),
    ("probability_range", _check_probability_range, 1e-12),
]


def run_validation(tolerance_scale: float = 1.0, seed: int = 20240401) -> list[CheckResult]:
    """Run every cross-check; tolerances scale by ``tolerance_scale``."""
    if tolerance_scale <= 0:
        raise ValueError("tolerance_scale must be positive")
    results = []
    for name, func, tol in _CHECKS:
        rng = np.random.default_rng(seed)
        try:
            passed, detail = func(tol * tolerance_scale, rng)
        except Exception as exc:  # a broken operation must fail, not crash
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=passed, detail=detail))
    return results
