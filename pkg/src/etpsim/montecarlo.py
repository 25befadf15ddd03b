"""Seeded Monte Carlo runner for coincidence-counting experiments.

Counts at each (repetition, angle) grid point are Poisson distributed with
mean ``fringe_rate * window * rate_scale``.  Every point draws from its own
random stream seeded by ``SeedSequence([master_seed, repetition, index])``;
this mixing function is a compatibility contract (golden files depend on
it) and makes the results independent of evaluation order, so grid points
may be sampled concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import polarization as pol
from .estimator import fit_sinusoid
from .states import EopState, MixtureModel
from .measurement import fringe_rate

__all__ = [
    "ExperimentPlan", "CoincidenceDataset",
    "run_scan", "sample_point",
    "twofold_fringe", "run_twofold_scan",
    "visibility", "VisibilityEstimate",
    "DETECTOR_PAIRS",
]

_MAX_POISSON_MEAN = 2.0 ** 62


@dataclass(frozen=True)
class ExperimentPlan:
    """Scan protocol plus sampling parameters.

    angles      -- grid of scan angles, radians
    window_s    -- integration time per grid point, seconds
    rate_scale  -- events per second; probability * window * rate_scale is
                   the Poisson mean (keep both at 1.0 to read the mixture's
                   c0 directly as counts per point)
    repetitions -- number of independent repeats of the full scan
    seed        -- master seed (non-negative, up to 64 bits)
    """

    scan: str
    angles: tuple = ()
    window_s: float = 1.0
    rate_scale: float = 1.0
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.angles) == 0:
            raise ValueError("angle grid must not be empty")
        if not (math.isfinite(self.window_s) and self.window_s > 0):
            raise ValueError("integration window must be positive")
        if not (math.isfinite(self.rate_scale) and self.rate_scale > 0):
            raise ValueError("rate scale must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass(frozen=True)
class CoincidenceDataset:
    """Sampled counts, shape (repetitions, len(angles)), plus the plan."""

    plan: ExperimentPlan
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        expected = (self.plan.repetitions, len(self.plan.angles))
        if counts.shape != expected:
            raise ValueError(f"counts shape {counts.shape} != {expected}")
        if not np.issubdtype(counts.dtype, np.integer) and np.any(counts % 1 != 0):
            raise ValueError("counts must be integers")
        if counts.min(initial=0) < 0:
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def sigmas(self) -> np.ndarray:
        """Poisson error bars sqrt(counts)."""
        return np.sqrt(self.counts.astype(float))

    @property
    def angles_deg(self) -> np.ndarray:
        return np.degrees(np.asarray(self.plan.angles))


def _point_rng(seed: int, repetition: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, repetition, index]))


def _poisson_mean(m: MixtureModel, plan: ExperimentPlan, angle: float) -> float:
    mean = float(fringe_rate(m, plan.scan, angle)) * plan.window_s * plan.rate_scale
    if not math.isfinite(mean) or mean > _MAX_POISSON_MEAN:
        raise ValueError(f"Poisson mean {mean!r} is not representable")
    return mean


def sample_point(m: MixtureModel, plan: ExperimentPlan, repetition: int, index: int) -> int:
    """Sampled counts for one grid point; equals the run_scan entry."""
    mean = _poisson_mean(m, plan, plan.angles[index])
    if mean == 0.0:
        return 0
    return int(_point_rng(plan.seed, repetition, index).poisson(mean))


def run_scan(m: MixtureModel, plan: ExperimentPlan) -> CoincidenceDataset:
    """Simulate the full scan: Poisson counts for every repetition and angle."""
    counts = np.empty((plan.repetitions, len(plan.angles)), dtype=np.int64)
    for rep in range(plan.repetitions):
        for idx in range(len(plan.angles)):
            counts[rep, idx] = sample_point(m, plan, rep, idx)
    return CoincidenceDataset(plan=plan, counts=counts)


# ---------------------------------------------------------------------------
# two-fold fringes (single-pair setup check)

DETECTOR_PAIRS = ("++", "+-", "-+", "--")

_PORT_PROJECTORS = {
    "+": np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex),
    "-": np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),
}


def twofold_fringe(e: EopState, hwp_angle_b: float, detector_pair: str = "++") -> float:
    """Normalized two-fold coincidence rate versus the path-B half-wave plate.

    One photon per path; a half-wave plate at ``hwp_angle_b`` rotates the
    analysis basis in path B.  ``detector_pair`` picks one detector per
    path, e.g. ``'+-'`` for the H port in A and the V port in B.

    The rate is normalized so the noise-free fringe of a maximally
    entangled pair spans [0, 1]; the white noise fraction p of the state
    contributes a flat background of a quarter of that unit rate:

        rate = (1 - p) * f(theta) + p / 4.
    """
    if detector_pair not in DETECTOR_PAIRS:
        raise ValueError(f"detector_pair must be one of {DETECTOR_PAIRS}")
    if not math.isfinite(hwp_angle_b):
        raise ValueError("hwp_angle_b must be finite")
    proj_a = _PORT_PROJECTORS[detector_pair[0]]
    u = pol.waveplate("half", hwp_angle_b)
    proj_b = u.conj().T @ _PORT_PROJECTORS[detector_pair[1]] @ u
    proj = np.kron(proj_a, proj_b)
    q = float(np.real(np.vdot(e.vector, proj @ e.vector)))
    # factor 2 scales the pure coincidence probability (peak 1/2) to unit peak
    return (1.0 - e.noise) * 2.0 * max(q, 0.0) + e.noise / 4.0


def run_twofold_scan(
    e: EopState,
    angles,
    mean_scale: float,
    repetitions: int = 1,
    seed: int = 0,
    detector_pair: str = "++",
) -> np.ndarray:
    """Poisson-sampled two-fold counts, shape (repetitions, len(angles)).

    ``mean_scale`` converts the normalized rate to a Poisson mean; the same
    per-point seeding contract as :func:`run_scan` applies.
    """
    angles = [float(a) for a in angles]
    counts = np.empty((repetitions, len(angles)), dtype=np.int64)
    for rep in range(repetitions):
        for idx, angle in enumerate(angles):
            mean = twofold_fringe(e, angle, detector_pair) * mean_scale
            if not math.isfinite(mean) or mean > _MAX_POISSON_MEAN:
                raise ValueError(f"Poisson mean {mean!r} is not representable")
            counts[rep, idx] = 0 if mean == 0.0 else _point_rng(seed, rep, idx).poisson(mean)
    return counts


@dataclass(frozen=True)
class VisibilityEstimate:
    """Fringe visibility from a fitted sinusoid; degenerate flags flat data."""

    value: float
    offset: float
    amplitude: float
    degenerate: bool = False


def visibility(angles, counts, period: float) -> VisibilityEstimate:
    """(max - min) / (max + min) of a sinusoid fitted to count data.

    Parameters
    ----------
    angles : array of radians (at least 5 points covering one period)
    counts : matching counts (repetitions may be stacked on axis 0)
    period : fringe period in radians

    All-equal counts cannot carry a fringe; they yield visibility 0 with the
    ``degenerate`` flag set.
    """
    angles = np.asarray(angles, dtype=float).ravel()
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 2:
        angles = np.tile(angles, counts.shape[0])
        counts = counts.ravel()
    if angles.size < 5:
        raise ValueError("need at least 5 points covering one fringe period")
    if angles.size != counts.size:
        raise ValueError("angles and counts must have matching sizes")
    if np.ptp(counts) == 0:
        return VisibilityEstimate(
            value=0.0, offset=float(counts[0]), amplitude=0.0, degenerate=True
        )
    fit = fit_sinusoid(angles, counts, angular_frequency=2.0 * math.pi / period)
    if fit.offset <= 0:
        return VisibilityEstimate(
            value=0.0, offset=fit.offset, amplitude=fit.amplitude, degenerate=True
        )
    return VisibilityEstimate(
        value=fit.amplitude / fit.offset,
        offset=fit.offset,
        amplitude=fit.amplitude,
    )
