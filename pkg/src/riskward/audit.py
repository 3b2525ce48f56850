"""Time-consistency audits of optimal policies.

An optimal policy is time consistent when, at every node past the root, its
remaining decisions are still optimal for the tail problem conditioned on
reaching that node with the policy's own previous decision.  The audit
compares the policy's tail value with the dynamic-programming value of that
conditional problem, node by node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .nested_risk import nested_values
from .solver import (
    DEFAULT_TOL,
    DPResult,
    MultistageProblem,
    Policy,
    brute_force_solve,
    check_policy,
    policy_costs,
    solve_dp,
)

GAP_FLOOR = -1e-10
NOT_OPTIMAL_NOTE = "policy not optimal: the time-consistency definition does not apply"


@dataclass(frozen=True)
class AuditRecord:
    node: str
    stage: int
    tail: float
    optimal: float

    @property
    def gap(self) -> float:
        return self.tail - self.optimal


@dataclass
class AuditReport:
    records: list[AuditRecord]
    tol: float
    root_value: float
    optimal_value: float
    policy: Policy = field(repr=False, default_factory=dict)

    @property
    def policy_optimal(self) -> bool:
        return self.root_value <= self.optimal_value + self.tol

    @property
    def time_consistent(self) -> bool:
        return all(r.gap <= self.tol for r in self.records)

    @property
    def note(self) -> str | None:
        return None if self.policy_optimal else NOT_OPTIMAL_NOTE

    def violations(self) -> list[AuditRecord]:
        return [r for r in self.records if r.gap > self.tol]

    def first_witness(self) -> AuditRecord | None:
        bad = self.violations()
        return bad[0] if bad else None

    def record(self, node: str) -> AuditRecord:
        for r in self.records:
            if r.node == node:
                return r
        raise KeyError(node)


def audit_policy(problem: MultistageProblem, policy: Mapping[str, float],
                 tol: float = DEFAULT_TOL, dp: DPResult | None = None) -> AuditReport:
    """Compare the policy's tail value with the conditional optimum at every non-root node.

    Raises :class:`~riskward.solver.InfeasiblePolicyError` for infeasible
    policies.  A feasible but suboptimal policy is still audited; the report
    then carries a note and ``policy_optimal`` is false.  Records follow the
    tree from the root down.
    """
    check_policy(problem, policy)
    if dp is None:
        dp = solve_dp(problem)
    tree = problem.tree
    # one backward pass gives the tail from every node at once
    tails = nested_values(tree, problem.risk, policy_costs(problem, policy))
    records = []
    for nid in tree.subtree(tree.root)[1:]:
        node = tree.node(nid)
        optimal = dp.value_function.value(nid, policy[node.parent])
        records.append(AuditRecord(nid, node.stage, tails[nid], optimal))
    return AuditReport(records, tol, tails[tree.root], dp.value, dict(policy))


def find_inconsistent_optimal_policy(problem: MultistageProblem, tol: float = DEFAULT_TOL,
                                     cap: int | None = None):
    """First optimal policy (in enumeration order) failing the audit, with its report."""
    dp = solve_dp(problem)
    for pol in brute_force_solve(problem, tol, cap).optimal_policies:
        report = audit_policy(problem, pol, tol, dp)
        if not report.time_consistent:
            return pol, report
    return None


@dataclass
class CertificationReport:
    optimal_value: float
    reports: list[AuditReport]

    @property
    def n_optimal(self) -> int:
        return len(self.reports)

    @property
    def n_consistent(self) -> int:
        return sum(r.time_consistent for r in self.reports)

    @property
    def n_inconsistent(self) -> int:
        return self.n_optimal - self.n_consistent

    @property
    def witnesses(self) -> list[AuditReport]:
        return [r for r in self.reports if not r.time_consistent]


def certify_all_optima(problem: MultistageProblem, tol: float = DEFAULT_TOL,
                       cap: int | None = None) -> CertificationReport:
    dp = solve_dp(problem)
    bf = brute_force_solve(problem, tol, cap)
    return CertificationReport(bf.value, [audit_policy(problem, p, tol, dp)
                                          for p in bf.optimal_policies])
