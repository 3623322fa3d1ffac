"""Projection and coordinate-descent solver toolkit (native core)."""

from ._dykcd import (
    RegressionProblem,
    SolveResult,
    active_set,
    block_cd,
    bound_deutsch,
    bound_iusem,
    bound_parallel,
    criterion,
    equivalence_check,
    gen_instance,
    general_cd,
    general_equivalence_check,
    grouped_problem,
    kkt_check,
    lasso_cd,
    lasso_problem,
    mu_lower_bound,
    parallel_admm_cd,
    parallel_dykstra_cd,
    reference_lasso,
)

__all__ = [
    "RegressionProblem",
    "SolveResult",
    "active_set",
    "block_cd",
    "bound_deutsch",
    "bound_iusem",
    "bound_parallel",
    "criterion",
    "equivalence_check",
    "gen_instance",
    "general_cd",
    "general_equivalence_check",
    "grouped_problem",
    "kkt_check",
    "lasso_cd",
    "lasso_problem",
    "mu_lower_bound",
    "parallel_admm_cd",
    "parallel_dykstra_cd",
    "reference_lasso",
]
