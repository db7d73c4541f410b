"""Nonparametric event-time distribution estimation under interval censoring.

The package provides:

- the NPMLE of a distribution function from current status, case 2 and
  mixed-case interval-censored data (greatest convex minorant / iterative
  convex minorant algorithms);
- the kernel-smoothed maximum likelihood estimator (SMLE);
- model-based ("residual") bootstrap confidence intervals, resampling
  responses from a fitted distribution while holding examination times fixed;
- bootstrap bandwidth selection by minimizing the bootstrap MSE curve;
- Monte Carlo simulation of the Chernoff argmin limit distribution and the
  cube-root-rate scale constants;
- a simulation harness for coverage studies and the companion CLI.
"""

from .gcm import CusumDiagram, IsotonicFit, gcm_left_slopes, isotonic_weighted, pava
from .estimators import (
    CensoringInterval,
    CurrentStatusSample,
    DegenerateDenominatorError,
    MixedCaseSubject,
    NonConvergenceError,
    SmoothedDistribution,
    StepDistribution,
    check_local_linearity,
    icm_one_step,
    kernel_cdf,
    kernel_density,
    npmle_current_status,
    npmle_interval_censored,
    reduce_to_interval,
    smle_eval,
    subject_from_interval,
    turnbull_support,
)
from .bootstrap import (
    BootstrapResult,
    DegenerateSourceError,
    FromNPMLE,
    FromSMLE,
    basic_ci,
    bmse_curve,
    bootstrap_roots,
    resample_subject,
    select_bandwidth,
    stream,
)
from .limits import (
    ChernoffConfig,
    empirical_quantile,
    kappa_case2,
    kappa_cs,
    simulate_chernoff,
)
from .simulate import (
    Case2Design,
    CoverageReport,
    CurrentStatusDesign,
    ExperimentConfig,
    Exponential,
    FoldedStandardNormal,
    MixedCaseDesign,
    QuantileTrajectory,
    Scenario,
    coverage_experiment,
    figure1_density_data,
    figure2_quantile_trajectory,
    sample_scenario,
    true_mse_curve,
)

__version__ = "0.1.0"

__all__ = [
    "CusumDiagram",
    "IsotonicFit",
    "gcm_left_slopes",
    "isotonic_weighted",
    "pava",
    "CensoringInterval",
    "CurrentStatusSample",
    "DegenerateDenominatorError",
    "MixedCaseSubject",
    "NonConvergenceError",
    "SmoothedDistribution",
    "StepDistribution",
    "check_local_linearity",
    "icm_one_step",
    "kernel_cdf",
    "kernel_density",
    "npmle_current_status",
    "npmle_interval_censored",
    "reduce_to_interval",
    "smle_eval",
    "subject_from_interval",
    "turnbull_support",
    "BootstrapResult",
    "DegenerateSourceError",
    "FromNPMLE",
    "FromSMLE",
    "basic_ci",
    "bmse_curve",
    "bootstrap_roots",
    "resample_subject",
    "select_bandwidth",
    "stream",
    "ChernoffConfig",
    "empirical_quantile",
    "kappa_case2",
    "kappa_cs",
    "simulate_chernoff",
    "Case2Design",
    "CoverageReport",
    "CurrentStatusDesign",
    "ExperimentConfig",
    "Exponential",
    "FoldedStandardNormal",
    "MixedCaseDesign",
    "QuantileTrajectory",
    "Scenario",
    "coverage_experiment",
    "figure1_density_data",
    "figure2_quantile_trajectory",
    "sample_scenario",
    "true_mse_curve",
]
