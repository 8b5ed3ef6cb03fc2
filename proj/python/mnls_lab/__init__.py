"""Minimum-norm least squares risk laboratory."""

from ._core import (
    ConfigError,
    ConvergenceError,
    CovarianceModel,
    bai_yin,
    canonical_config,
    conditional_risk,
    deterministic_bounds,
    equicorrelated,
    fit_mnls,
    make_theta,
    op_norm_diff,
    projector_distance,
    run_sweep,
    sample_design,
    sample_eigenvalues,
    sample_labels,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "CovarianceModel",
    "bai_yin",
    "canonical_config",
    "conditional_risk",
    "deterministic_bounds",
    "equicorrelated",
    "fit_mnls",
    "make_theta",
    "op_norm_diff",
    "projector_distance",
    "run_sweep",
    "sample_design",
    "sample_eigenvalues",
    "sample_labels",
]
