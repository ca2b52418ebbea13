"""Exact asymptotics of regularized logistic regression, plus a seeded
Monte Carlo lab that fits the finite-dimensional program for comparison."""

from rlrlab._core import (  # noqa: F401
    FixedPoint,
    MetricStat,
    SolveResult,
    SupportRecovery,
    TheoryReport,
    TrialAggregate,
    fit_rlr,
    gamma_map,
    gauss_hermite,
    generate_instance,
    moreau_envelope,
    prox_l1,
    prox_l2sq,
    prox_rho,
    prox_rho_derivative,
    q_function,
    rho,
    rho_prime,
    rho_second,
    run_selftest,
    run_trials,
    solve_fixed_point,
    solve_l2_reduced,
    theory_report,
)

__all__ = [
    "FixedPoint",
    "MetricStat",
    "SolveResult",
    "SupportRecovery",
    "TheoryReport",
    "TrialAggregate",
    "fit_rlr",
    "gamma_map",
    "gauss_hermite",
    "generate_instance",
    "moreau_envelope",
    "prox_l1",
    "prox_l2sq",
    "prox_rho",
    "prox_rho_derivative",
    "q_function",
    "rho",
    "rho_prime",
    "rho_second",
    "run_selftest",
    "run_trials",
    "solve_fixed_point",
    "solve_l2_reduced",
    "theory_report",
]
