"""Simulation and estimation toolkit for distinguishing single-mode
entangled two-photon-polarization emission from independent photon pairs
via four-fold coincidence statistics."""

from .polarization import (
    waveplate, symmetric_lift, two_photon_product,
    pair_state_hv, pair_state_pm, pair_state_rl,
)
from .states import (
    make_etp, make_double_eop, make_eop, etp_in_unpolarized_basis,
    EopState, MixtureModel,
)
from .measurement import (
    AnalyzerSetting, CoincidenceSummary,
    fourfold_probability_etp, fourfold_probability_eop2,
    fringe_rate, ratio_r_analytic, classify,
)
from .montecarlo import (
    ExperimentPlan, CoincidenceDataset, run_scan,
    twofold_fringe, run_twofold_scan, visibility,
)
from .estimator import (
    RatioEstimate, FractionEstimate, EtpVerdict,
    summarize_scan, estimate_r, etp_criterion,
    alpha_from_r, alpha_beta_with_noise, fraction_from_ratio,
    fit_fringe, fit_fringe_points, fit_sinusoid,
)
from .bell import (
    BellSettings, chsh_value, optimize_chsh, classical_chsh_max,
)

__version__ = "0.1.0"
