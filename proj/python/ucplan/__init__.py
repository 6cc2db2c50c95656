"""Grid-based optimal and robust path planning under delayed target certainty."""

from ._core import (
    Infeasible,
    InvalidInput,
    Stagnation,
    builtin_scenario_names,
    chance_constrained_policy,
    dr_field,
    dr_worst_distribution,
    expected_field,
    march_backward,
    risk_sensitive_field,
    run_cli,
    scenario_fields,
    scenario_json,
    solve_eikonal,
    solve_random_termination,
    tv_distance,
    worst_field,
)

__all__ = [
    "Infeasible",
    "InvalidInput",
    "Stagnation",
    "builtin_scenario_names",
    "chance_constrained_policy",
    "dr_field",
    "dr_worst_distribution",
    "expected_field",
    "march_backward",
    "risk_sensitive_field",
    "run_cli",
    "scenario_fields",
    "scenario_json",
    "solve_eikonal",
    "solve_random_termination",
    "tv_distance",
    "worst_field",
]
