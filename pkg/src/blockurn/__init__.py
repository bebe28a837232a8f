"""Rates and limits of balanced generalized Polya urns with block triangular replacement."""
from .canonical import (
    AssumptionA,
    CanonicalForm,
    ClusterForm,
    ReplacementSpec,
    block_order,
    check_assumption_a,
    classify_colors,
    increasing_order,
)
from .limits import LimitProfile, limit_profile, w_constants, w_matrices
from .numerics import PFEigenpair, gamma_plus_one, pf_eigenpair, resolvent, rising_product
from .rates import RatePair, RatePlan, cross_check_cluster_rates, rate_pairs
from .report import Analysis, analyze
from .urnsim import (
    expectation,
    expectation_path,
    pow2_schedule,
    run_replications,
    simulate,
    verify,
)

__all__ = [
    "Analysis",
    "AssumptionA",
    "CanonicalForm",
    "ClusterForm",
    "LimitProfile",
    "PFEigenpair",
    "RatePair",
    "RatePlan",
    "ReplacementSpec",
    "analyze",
    "block_order",
    "check_assumption_a",
    "classify_colors",
    "cross_check_cluster_rates",
    "expectation",
    "expectation_path",
    "gamma_plus_one",
    "increasing_order",
    "limit_profile",
    "pf_eigenpair",
    "pow2_schedule",
    "rate_pairs",
    "resolvent",
    "rising_product",
    "run_replications",
    "simulate",
    "verify",
    "w_constants",
    "w_matrices",
]
