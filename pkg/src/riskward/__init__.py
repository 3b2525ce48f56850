"""Risk-averse multistage programs on scenario trees and time-consistency audits."""

__version__ = "0.1.0"

from .audit import AuditRecord, AuditReport, audit_policy, certify_all_optima, find_inconsistent_optimal_policy
from .nested_risk import NestedSpec, conditional_evaluate, nested_evaluate
from .risk_measures import (
    AVaR,
    DiscreteDistribution,
    EssSup,
    Expectation,
    Spectral,
    SpectralFunction,
    avar_primal_oracle,
    avar_spectral_function,
    dual_argmax,
    evaluate,
    exists_zero_maximizer,
    quantile,
    strict_monotonicity_witness,
)
from .scenario_tree import Node, ScenarioTree, child_distribution, node_probability, validate_tree
from .solver import (
    AffineCost,
    Feasibility,
    MultistageProblem,
    TableCost,
    brute_force_solve,
    policy_nested_value,
    solve_dp,
)
