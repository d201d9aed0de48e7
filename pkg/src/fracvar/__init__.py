"""Scaled quadratic variation estimators for fractional diffusions."""

from .estimators import (
    DesignSystem,
    HurstEstimate,
    HurstEstimator,
    TestFunction,
    ThetaEstimate,
    ThetaEstimator,
    build_design,
    estimate_gamma,
    estimate_hurst,
    estimate_theta_known_H,
    estimate_theta_unknown_H,
    rate_delta,
    solve_theta,
)
from .exceptions import *  # noqa: F401,F403
from .fbm import FbmSampleRequest, fbm_covariance, sample_fbm
from .harness import ExperimentConfig, emit_report, run_experiment
from .paths import PartitionSpec, SampledPath, check_path, read_path_csv, write_path_csv
from .problems import builtin_examples, get_example
from .rde import RdeProblem, VectorFieldSet, field_action, solve_2d_linear_exact, solve_heun3
from .variation import ScaledVariationCurve, scaled_cov, scaled_qv, subsample, total_scaled_qv

__version__ = "0.1.0"
