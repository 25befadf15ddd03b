"""Inference pipeline: the correlation ratio r, the source-discrimination
criterion, mixture-fraction estimates, and fringe fitting.

The discriminating statistic is r = C_perp / C_parallel, the ratio of
crossed-basis to same-basis four-fold counts.  A pure single-mode pair
source gives r = 0, two independent pairs give r = 1/2 even when ideal, and
realistic independent-pair emission only pushes r higher, so

    r < 1/2

indicates a single-mode (qutrit) component.  Inverting the rate model for a
noise-free mixture gives the single-mode fraction

    alpha = (1 - 2 r) / (1 - 2 r / 3),

and with a known white-noise fraction gamma the corrected solution of
r = (beta/4 + gamma/4) / (alpha/3 + beta/2 + gamma/4) under
alpha + beta = 1 - gamma is

    alpha = 3 (1 - 2 r + r gamma) / (3 - 2 r).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit, logit

from .measurement import (
    CoincidenceSummary,
    normalized_fringe,
    parallel_angles_deg,
    perpendicular_angles_deg,
)
from .states import MixtureModel

if TYPE_CHECKING:  # pragma: no cover
    from .montecarlo import CoincidenceDataset

__all__ = [
    "RatioEstimate", "FractionEstimate", "EtpVerdict",
    "SinusoidFit", "FitResult",
    "EstimationError", "UndefinedRatioError", "InfeasibleMixtureError",
    "FitError", "FitDegenerateError",
    "summarize_scan", "estimate_r", "etp_criterion",
    "alpha_from_r", "alpha_beta_with_noise", "fraction_from_ratio",
    "bootstrap_fraction", "fit_fringe", "fit_fringe_points", "fit_sinusoid",
]


class EstimationError(Exception):
    """Base class for estimation failures."""


class UndefinedRatioError(EstimationError):
    """The same-basis count average is zero, so r is undefined."""


class InfeasibleMixtureError(EstimationError):
    """No mixture with the requested noise fraction reproduces this r."""


class FitError(EstimationError):
    """The least-squares fit did not converge within its budget."""


class FitDegenerateError(FitError):
    """The fit design is rank deficient."""


@dataclass(frozen=True)
class RatioEstimate:
    """r = C_perp / C_parallel with its standard error."""

    r: float
    sigma_r: float
    n_experiments: int

    def __post_init__(self):
        if self.r < 0 or self.sigma_r < 0:
            raise ValueError("r and sigma_r must be non-negative")


@dataclass(frozen=True)
class FractionEstimate:
    """Mixture fractions (alpha, beta, gamma) with the error on alpha."""

    alpha: float
    beta: float
    gamma: float
    sigma_alpha: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            val = getattr(self, name)
            if not -1e-9 <= val <= 1.0 + 1e-9:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")


@dataclass(frozen=True)
class EtpVerdict:
    """Outcome of the r < 1/2 criterion.

    ``indicated`` uses the point estimate; ``conservative`` additionally
    requires r + 2 sigma_r < 1/2.
    """

    indicated: bool
    conservative: bool

    def __str__(self) -> str:
        return "etp_indicated" if self.indicated else "not_indicated"


def summarize_scan(dataset: "CoincidenceDataset") -> list[CoincidenceSummary]:
    """Per-repetition same-basis / crossed-basis count summaries.

    Counts are read at the scan's known fringe extremum angles (the grid
    points where the analyzers line up with the named bases) and averaged,
    one summary per repetition.  The grid must contain at least one
    parallel and one perpendicular angle.
    """
    scan = dataset.plan.scan
    grid_deg = dataset.angles_deg
    par_idx = _match_angles(grid_deg, parallel_angles_deg(scan))
    perp_idx = _match_angles(grid_deg, perpendicular_angles_deg(scan))
    if not par_idx or not perp_idx:
        raise ValueError(
            f"grid contains no {'parallel' if not par_idx else 'perpendicular'} "
            f"extremum angles for scan {scan!r}"
        )
    summaries = []
    for rep in range(dataset.counts.shape[0]):
        row = dataset.counts[rep].astype(float)
        c_par, s_par = _mean_counts(row[par_idx])
        c_perp, s_perp = _mean_counts(row[perp_idx])
        summaries.append(
            CoincidenceSummary(
                c_parallel=c_par,
                c_perpendicular=c_perp,
                sigma_parallel=s_par,
                sigma_perpendicular=s_perp,
            )
        )
    return summaries


def _match_angles(grid_deg: np.ndarray, targets_deg) -> list[int]:
    idx = []
    for target in targets_deg:
        hits = np.flatnonzero(np.isclose(grid_deg, target, atol=1e-6))
        idx.extend(int(i) for i in hits)
    return sorted(set(idx))


def _mean_counts(values: np.ndarray) -> tuple[float, float]:
    # Poisson variance floored at 1 per point so zero counts keep an error bar
    mean = float(np.mean(values))
    sigma = math.sqrt(float(np.sum(np.maximum(values, 1.0)))) / len(values)
    return mean, sigma


def estimate_r(summaries: list[CoincidenceSummary]) -> RatioEstimate:
    """Ratio of averaged crossed-basis to averaged same-basis counts.

    The counts are averaged across experiments before taking the ratio;
    the error follows from first-order propagation of the per-experiment
    Poisson errors.
    """
    if not summaries:
        raise ValueError("need at least one coincidence summary")
    n = len(summaries)
    m_par = float(np.mean([s.c_parallel for s in summaries]))
    m_perp = float(np.mean([s.c_perpendicular for s in summaries]))
    if m_par <= 0.0:
        raise UndefinedRatioError("average same-basis count is zero")
    var_par = float(np.sum([s.sigma_parallel ** 2 for s in summaries])) / n ** 2
    var_perp = float(np.sum([s.sigma_perpendicular ** 2 for s in summaries])) / n ** 2
    r = m_perp / m_par
    sigma = math.sqrt(var_perp / m_par ** 2 + (m_perp ** 2 / m_par ** 4) * var_par)
    return RatioEstimate(r=r, sigma_r=sigma, n_experiments=n)


def etp_criterion(estimate: RatioEstimate) -> EtpVerdict:
    """Apply the r < 1/2 criterion to a ratio estimate."""
    return EtpVerdict(
        indicated=estimate.r < 0.5,
        conservative=estimate.r + 2.0 * estimate.sigma_r < 0.5,
    )


def alpha_from_r(r: float) -> float:
    """Single-mode fraction (1 - 2r) / (1 - 2r/3) of a noise-free mixture.

    Valid for r in [0, 1/2]; values above 1/2 are outside the noise-free
    model and clamp to 0 with a warning.
    """
    if not math.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be a finite non-negative ratio, got {r!r}")
    if r > 0.5:
        warnings.warn(
            f"r = {r:.4g} exceeds 1/2 (outside the noise-free mixture model); "
            "clamping alpha to 0",
            stacklevel=2,
        )
        return 0.0
    return (1.0 - 2.0 * r) / (1.0 - 2.0 * r / 3.0)


def feasible_r_range(gamma: float) -> tuple[float, float]:
    """Attainable r values for mixtures with white-noise fraction gamma."""
    return 3.0 * gamma / (4.0 - gamma), 1.0 / (2.0 - gamma)


def alpha_beta_with_noise(r: float, gamma: float) -> FractionEstimate:
    """Mixture fractions reproducing r when the noise fraction is known.

    Solves r = (beta/4 + gamma/4) / (alpha/3 + beta/2 + gamma/4) together
    with alpha + beta = 1 - gamma.
    """
    if not (math.isfinite(gamma) and 0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma!r}")
    if not math.isfinite(r) or r < 0.0:
        raise ValueError(f"r must be a finite non-negative ratio, got {r!r}")
    lo, hi = feasible_r_range(gamma)
    if not lo - 1e-12 <= r <= hi + 1e-12:
        raise InfeasibleMixtureError(
            f"r = {r:.4g} is not attainable with gamma = {gamma:.4g}; "
            f"feasible range is [{lo:.4g}, {hi:.4g}]"
        )
    alpha = 3.0 * (1.0 - 2.0 * r + r * gamma) / (3.0 - 2.0 * r)
    alpha = min(max(alpha, 0.0), 1.0 - gamma)
    beta = 1.0 - gamma - alpha
    return FractionEstimate(alpha=alpha, beta=beta, gamma=gamma)


def _dalpha_dr(r: float, gamma: float) -> float:
    return 3.0 * (3.0 * gamma - 4.0) / (3.0 - 2.0 * r) ** 2


def fraction_from_ratio(estimate: RatioEstimate, gamma: float = 0.0) -> FractionEstimate:
    """Fractions from a ratio estimate, with the error on alpha by the
    first-order delta method."""
    frac = alpha_beta_with_noise(estimate.r, gamma)
    sigma_alpha = abs(_dalpha_dr(estimate.r, gamma)) * estimate.sigma_r
    return FractionEstimate(
        alpha=frac.alpha, beta=frac.beta, gamma=gamma, sigma_alpha=sigma_alpha
    )


def bootstrap_fraction(
    summaries: list[CoincidenceSummary],
    gamma: float = 0.0,
    n_boot: int = 1000,
    seed: int = 0,
) -> FractionEstimate:
    """Parametric bootstrap alternative to the delta-method error on alpha.

    Count averages are resampled from Gaussians matching their Poisson
    errors; resamples falling outside the feasible r range clamp to the
    nearest boundary fraction.
    """
    base = estimate_r(summaries)
    frac = alpha_beta_with_noise(base.r, gamma)
    rng = np.random.default_rng(seed)
    lo, hi = feasible_r_range(gamma)
    alphas = np.empty(n_boot)
    for k in range(n_boot):
        resampled = [
            CoincidenceSummary(
                c_parallel=max(rng.normal(s.c_parallel, s.sigma_parallel), 1e-9),
                c_perpendicular=max(rng.normal(s.c_perpendicular, s.sigma_perpendicular), 0.0),
                sigma_parallel=s.sigma_parallel,
                sigma_perpendicular=s.sigma_perpendicular,
            )
            for s in summaries
        ]
        r_k = min(max(estimate_r(resampled).r, lo), hi)
        alphas[k] = alpha_beta_with_noise(r_k, gamma).alpha
    return FractionEstimate(
        alpha=frac.alpha,
        beta=frac.beta,
        gamma=gamma,
        sigma_alpha=float(np.std(alphas, ddof=1)),
    )


# ---------------------------------------------------------------------------
# fringe fitting

@dataclass(frozen=True)
class SinusoidFit:
    """offset + amplitude * cos(omega * angle - phase), weighted linear fit."""

    offset: float
    amplitude: float
    phase: float
    sigma_offset: float
    sigma_amplitude: float
    chi2: float
    ndof: int


def fit_sinusoid(
    angles, counts, angular_frequency: float, sigmas=None
) -> SinusoidFit:
    """Weighted linear least squares of a sinusoid at a known frequency.

    Weights default to 1/sqrt(max(count, 1)) per point (Poisson).
    """
    angles = np.asarray(angles, dtype=float).ravel()
    counts = np.asarray(counts, dtype=float).ravel()
    if angles.size != counts.size:
        raise ValueError("angles and counts must have matching sizes")
    if angles.size < 5:
        raise ValueError("need at least 5 points for a sinusoid fit")
    if sigmas is None:
        sigmas = np.sqrt(np.maximum(counts, 1.0))
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    if np.any(sigmas <= 0):
        raise ValueError("per-point sigmas must be positive")
    design = np.column_stack(
        [
            np.ones_like(angles),
            np.cos(angular_frequency * angles),
            np.sin(angular_frequency * angles),
        ]
    )
    weighted = design / sigmas[:, None]
    target = counts / sigmas
    coef, *_ = np.linalg.lstsq(weighted, target, rcond=None)
    normal = weighted.T @ weighted
    if np.linalg.matrix_rank(normal) < 3:
        raise FitDegenerateError("sinusoid design matrix is rank deficient")
    cov = np.linalg.inv(normal)
    offset, b, c = coef
    amplitude = math.hypot(b, c)
    phase = math.atan2(c, b)
    # delta method for |(b, c)|
    if amplitude > 0:
        grad = np.array([0.0, b / amplitude, c / amplitude])
        sigma_amp = math.sqrt(float(grad @ cov @ grad))
    else:
        sigma_amp = math.sqrt(float(cov[1, 1] + cov[2, 2]))
    resid = target - weighted @ coef
    chi2 = float(resid @ resid)
    return SinusoidFit(
        offset=float(offset),
        amplitude=float(amplitude),
        phase=float(phase),
        sigma_offset=math.sqrt(float(cov[0, 0])),
        sigma_amplitude=sigma_amp,
        chi2=chi2,
        ndof=int(angles.size - 3),
    )


@dataclass(frozen=True)
class FitResult:
    """Fringe-model fit: natural parameters, errors, and goodness of fit."""

    model: str
    scan: str
    params: dict
    errors: dict
    cov: np.ndarray = field(repr=False)
    chi2: float = 0.0
    ndof: int = 0
    nfev: int = 0

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.ndof if self.ndof > 0 else float("nan")

    def mixture(self) -> MixtureModel:
        return MixtureModel(
            c0=self.params["c0"],
            alpha=self.params["alpha"],
            beta=self.params["beta"],
            gamma=self.params["gamma"],
        )


def fit_fringe(
    dataset: "CoincidenceDataset",
    model: str = "mixture_gamma_fixed",
    gamma: float = 0.0,
    max_nfev: int = 2000,
) -> FitResult:
    """Weighted least-squares fit of the fringe model to a sampled scan.

    Models
    ------
    ``mixture_gamma_fixed``
        Free (c0, alpha) with beta = 1 - gamma - alpha at the given gamma.
    ``mixture_free_gamma``
        Free (c0, alpha, gamma); weakly identifiable from a single scan,
        prefer the fixed-gamma model unless the data demand otherwise.
    ``sinusoid``
        Generic sinusoid at the scan's fundamental fringe frequency
        (visibility-style fit); parameters are offset/amplitude/phase.

    All repetitions are pooled; weights are 1/sigma with
    sigma = sqrt(max(count, 1)).
    """
    angles = np.asarray(dataset.plan.angles, dtype=float)
    reps = dataset.counts.shape[0]
    x = np.tile(angles, reps)
    y = dataset.counts.ravel().astype(float)
    return fit_fringe_points(
        dataset.plan.scan, x, y, model=model, gamma=gamma, max_nfev=max_nfev
    )


_SCAN_FUNDAMENTAL = {"fig2a": 4.0, "fig2b": 8.0, "fig2c": 8.0}


def fit_fringe_points(
    scan: str,
    angles,
    counts,
    model: str = "mixture_gamma_fixed",
    gamma: float = 0.0,
    sigmas=None,
    max_nfev: int = 2000,
) -> FitResult:
    """Fringe fit on bare (angle, count) points; see :func:`fit_fringe`."""
    angles = np.asarray(angles, dtype=float).ravel()
    counts = np.asarray(counts, dtype=float).ravel()
    if angles.size != counts.size:
        raise ValueError("angles and counts must have matching sizes")
    if sigmas is None:
        sigmas = np.sqrt(np.maximum(counts, 1.0))
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    if np.any(sigmas <= 0):
        raise ValueError("per-point sigmas must be positive")

    if model == "sinusoid":
        if scan not in _SCAN_FUNDAMENTAL:
            raise ValueError(f"unknown scan {scan!r}")
        sf = fit_sinusoid(angles, counts, _SCAN_FUNDAMENTAL[scan], sigmas=sigmas)
        return FitResult(
            model=model,
            scan=scan,
            params={"offset": sf.offset, "amplitude": sf.amplitude, "phase": sf.phase},
            errors={"offset": sf.sigma_offset, "amplitude": sf.sigma_amplitude},
            cov=np.zeros((0, 0)),
            chi2=sf.chi2,
            ndof=sf.ndof,
        )
    if model not in ("mixture_gamma_fixed", "mixture_free_gamma"):
        raise ValueError(f"unknown fit model {model!r}")
    free_gamma = model == "mixture_free_gamma"
    n_free = 3 if free_gamma else 2
    if angles.size < n_free + 2:
        raise ValueError(
            f"need at least {n_free + 2} points to fit {model!r}, got {angles.size}"
        )
    if not free_gamma and not 0.0 <= gamma < 1.0:
        raise ValueError(f"fixed gamma must lie in [0, 1), got {gamma!r}")

    f = np.asarray(normalized_fringe(scan, angles), dtype=float)

    def unpack(z):
        c0 = math.exp(z[0])
        if free_gamma:
            g = expit(z[2])
        else:
            g = gamma
        a = (1.0 - g) * expit(z[1])
        b = 1.0 - g - a
        return c0, a, b, g

    def residuals(z):
        c0, a, b, g = unpack(z)
        mean = c0 * (a / 3.0 * f + b / 2.0 * (f + 1.0) / 2.0 + g / 4.0)
        return (mean - counts) / sigmas

    z0 = _initial_guess(counts, gamma if not free_gamma else 0.1, free_gamma)
    res = least_squares(
        residuals, z0, method="lm", max_nfev=max_nfev,
        xtol=1e-14, ftol=1e-14, gtol=1e-14,
    )
    if res.status == 0:
        raise FitError(
            f"fringe fit did not converge within {max_nfev} evaluations; "
            f"last iterate {unpack(res.x)}"
        )
    jac = res.jac
    if np.linalg.matrix_rank(jac) < len(z0):
        raise FitDegenerateError("fringe fit design is rank deficient")
    cov_z = np.linalg.pinv(jac.T @ jac)
    c0, a, b, g = unpack(res.x)

    # chain rule from the interior reparameterization to natural parameters
    grad = np.zeros((4, len(z0)))        # rows: c0, alpha, beta, gamma
    grad[0, 0] = c0
    sa = expit(res.x[1])
    grad[1, 1] = (1.0 - g) * sa * (1.0 - sa)
    grad[2, 1] = -grad[1, 1]
    if free_gamma:
        sg = expit(res.x[2])
        dgdz = sg * (1.0 - sg)
        grad[3, 2] = dgdz
        grad[1, 2] = -dgdz * sa
        grad[2, 2] = -dgdz - grad[1, 2]
    cov_nat = grad @ cov_z @ grad.T
    err = np.sqrt(np.maximum(np.diag(cov_nat), 0.0))
    chi2 = float(res.fun @ res.fun)
    return FitResult(
        model=model,
        scan=scan,
        params={"c0": c0, "alpha": a, "beta": b, "gamma": g},
        errors={"c0": err[0], "alpha": err[1], "beta": err[2], "gamma": err[3]},
        cov=cov_nat,
        chi2=chi2,
        ndof=int(counts.size - len(z0)),
        nfev=int(res.nfev),
    )


def _initial_guess(counts: np.ndarray, gamma: float, free_gamma: bool) -> np.ndarray:
    peak = max(float(np.max(counts)), 1.0)
    floor = max(float(np.min(counts)), 0.0)
    r0 = min(max(floor / peak, 1e-3), 0.999)
    lo, hi = feasible_r_range(gamma)
    r0 = min(max(r0, lo + 1e-6), hi - 1e-6)
    alpha0 = alpha_beta_with_noise(r0, gamma).alpha
    share = min(max(alpha0 / (1.0 - gamma), 0.02), 0.98)
    beta0 = 1.0 - gamma - (1.0 - gamma) * share
    c0_0 = peak / ((1.0 - gamma) * share / 3.0 + beta0 / 2.0 + gamma / 4.0)
    z = [math.log(max(c0_0, 1e-6)), float(logit(share))]
    if free_gamma:
        z.append(float(logit(min(max(gamma, 0.02), 0.98))))
    return np.asarray(z)
