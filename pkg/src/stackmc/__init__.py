"""Stacked Monte Carlo: cross-validated surrogate fits as control variates."""
from .distributions import (
    Basis,
    Beta,
    DistributionSpec,
    Gaussian,
    SampleMatrix,
    Uniform,
    basis_expectation,
    beta_raw_moment,
    format_distribution,
    parse_distribution,
    pdf,
    sample,
)
from .errors import StackMCError
from .estimators import (
    AlphaStats,
    Dataset,
    FoldPartition,
    StackReport,
    compute_alpha,
    eim_guard,
    fit_all_estimate,
    is_estimate,
    mc_estimate,
    partition_folds,
    stackmc_estimate,
    stackmc_is_estimate,
)
from .fitters import (
    FitModel,
    FitterSpec,
    analytic_expectation,
    feature_row,
    fit,
    fourier,
    mc_expectation,
    parse_fitter,
    polynomial,
    predict,
)
from .testfunctions import get_function, reference_truth, true_expectation

__version__ = "0.1.0"
