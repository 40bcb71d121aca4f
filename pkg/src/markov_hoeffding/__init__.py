"""Optimal Hoeffding-type deviation bounds for finite reversible Markov chains."""

from .bounds import (
    bound_report,
    log_gaussian_bound,
    log_hoeffding_bound,
    log_lezaud_bound,
    log_product_bound,
    optimal_tilt,
    plan_sample_size,
    rate_I_theta,
    theta_of_t,
)
from .chain_model import ReversibleChainSpec, chain_from_arrays, load_chain, parse_chain
from .errors import (
    ChainValidationError,
    DomainError,
    MarkovHoeffdingError,
    NoSpectralGapError,
)
from .mgf_rate import empirical_rate, matrix_chernoff_bound, mgf_exact
from .oracle import exact_tail_dp
from .spectral import build_clipped_kernel, decompose, gap_summary

__version__ = "0.1.0"

__all__ = [
    "ChainValidationError",
    "DomainError",
    "MarkovHoeffdingError",
    "NoSpectralGapError",
    "ReversibleChainSpec",
    "bound_report",
    "build_clipped_kernel",
    "chain_from_arrays",
    "decompose",
    "empirical_rate",
    "exact_tail_dp",
    "gap_summary",
    "load_chain",
    "log_gaussian_bound",
    "log_hoeffding_bound",
    "log_lezaud_bound",
    "log_product_bound",
    "matrix_chernoff_bound",
    "mgf_exact",
    "optimal_tilt",
    "parse_chain",
    "plan_sample_size",
    "rate_I_theta",
    "theta_of_t",
]
