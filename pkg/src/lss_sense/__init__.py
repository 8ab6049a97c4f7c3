"""Trace-based spectrum sensing for large antenna arrays.

Detectors built from the first two spectral moments of the sample
covariance matrix, their exact Gaussian null laws in the large-array limit,
Neyman-Pearson thresholds, a seeded Monte Carlo harness, and independent
numerical oracles (contour integration, quadrature, a standalone
eigensolver) for checking every closed form.
"""

from .detectors import (
    Decision,
    ObservationMatrix,
    ScmSummary,
    baseline_fn,
    baseline_glr,
    baseline_rao,
    compute_scm_summary,
    decide,
    decision_statistic,
    t_hdl,
    t_hdq,
    t_hds,
)
from .oracle import (
    Contour,
    ContourError,
    ContourResult,
    ConvergenceError,
    enclosing_contour,
    hermitian_eigenvalues,
    lss_contour,
    mean_correction_numeric,
    mp_moment_numeric,
)
from .rmt import (
    DetectorKind,
    MpLaw,
    NullDistribution,
    mp_mass_at_zero,
    mp_moment,
    mp_pdf,
    mp_support,
    np_threshold,
    null_distribution,
    q_function,
    q_inverse,
    sensitivity_partials,
    stieltjes_inverse,
    threshold_slope_rates,
)
from .simulate import (
    ChannelModel,
    ExperimentConfig,
    HistogramSummary,
    MonteCarloResult,
    NoiseModel,
    RandomStream,
    RocCurve,
    RocPoint,
    SimulationError,
    default_pfa_grid,
    estimate_roc,
    inverse_scm_bias_check,
    ks_critical_value,
    ks_statistic,
    null_histogram_check,
    pd_vs_snr_sweep,
    run_monte_carlo,
    sample_h0,
    sample_h1,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "ObservationMatrix",
    "ScmSummary",
    "baseline_fn",
    "baseline_glr",
    "baseline_rao",
    "compute_scm_summary",
    "decide",
    "decision_statistic",
    "t_hdl",
    "t_hdq",
    "t_hds",
    "Contour",
    "ContourError",
    "ContourResult",
    "ConvergenceError",
    "enclosing_contour",
    "hermitian_eigenvalues",
    "lss_contour",
    "mean_correction_numeric",
    "mp_moment_numeric",
    "DetectorKind",
    "MpLaw",
    "NullDistribution",
    "mp_mass_at_zero",
    "mp_moment",
    "mp_pdf",
    "mp_support",
    "np_threshold",
    "null_distribution",
    "q_function",
    "q_inverse",
    "sensitivity_partials",
    "stieltjes_inverse",
    "threshold_slope_rates",
    "ChannelModel",
    "ExperimentConfig",
    "HistogramSummary",
    "MonteCarloResult",
    "NoiseModel",
    "RandomStream",
    "RocCurve",
    "RocPoint",
    "SimulationError",
    "default_pfa_grid",
    "estimate_roc",
    "inverse_scm_bias_check",
    "ks_critical_value",
    "ks_statistic",
    "null_histogram_check",
    "pd_vs_snr_sweep",
    "run_monte_carlo",
    "sample_h0",
    "sample_h1",
    "wilson_interval",
    "__version__",
]
