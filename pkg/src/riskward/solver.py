"""Risk-averse multistage problems on scenario trees.

A problem attaches to every node a finite decision grid (optionally depending
on the parent's decision) and a cost of the decision taken there.  The
objective is the nested risk of the resulting cost process.  Two solvers are
provided: backward dynamic programming through the nested recursion, and
exhaustive policy enumeration, which serves as an exactness oracle for it.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .nested_risk import NestedSpec, conditional_evaluate, nested_evaluate
from .scenario_tree import ScenarioTree, validate_tree

DEFAULT_TOL = 1e-9
DEFAULT_ENUM_CAP = 10**6
ENUM_CAP_ENV = "RISKWARD_ENUM_CAP"

Policy = dict  # node id -> decision


class ProblemValidationError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InfeasiblePolicyError(ValueError):
    def __init__(self, node_id: str, message: str):
        self.node_id = node_id
        self.message = message
        super().__init__(f"node {node_id}: {message}")


class EnumerationCapExceeded(RuntimeError):
    def __init__(self, count: int, cap: int):
        self.count, self.cap = count, cap
        super().__init__(f"{count} feasible policies exceed the enumeration cap {cap}")


def point_key(x) -> str:
    """Canonical decimal string of a grid point (``1``, ``1.0``, ``1.00`` agree)."""
    d = x if isinstance(x, Decimal) else Decimal(repr(float(x)))
    d = d.normalize()
    if d == 0:
        return "0"
    return format(d, "f")


def interval_grid(lo: float, hi: float, resolution: int = 2) -> tuple[float, ...]:
    """Evenly spaced grid on ``[lo, hi]``; ``resolution=2`` keeps the endpoints only.

    With affine costs the nested objective is piecewise linear and monotone in
    each decision, so the endpoints already contain an optimum.
    """
    if resolution < 2 or hi < lo:
        raise ValueError("need resolution >= 2 and lo <= hi")
    if lo == hi:
        return (float(lo),)
    return tuple(float(v) for v in np.linspace(lo, hi, resolution))


# -- cost models -----------------------------------------------------------

@dataclass(frozen=True)
class AffineCost:
    c: float
    d: float = 0.0

    def __call__(self, x: float) -> float:
        return self.c * x + self.d

    def covers(self, grid) -> bool:
        return True


@dataclass(frozen=True)
class TableCost:
    """Cost listed per grid point; lookups go through :func:`point_key`."""

    table: Mapping[str, float]

    def __init__(self, table: Mapping):
        object.__setattr__(self, "table", {point_key(k): float(v) for k, v in table.items()})

    def __call__(self, x: float) -> float:
        try:
            return self.table[point_key(x)]
        except KeyError:
            raise ValueError(f"no tabulated cost at {x!r}") from None

    def covers(self, grid) -> bool:
        return all(point_key(x) in self.table for x in grid)


CostModel = Union[AffineCost, TableCost]


@dataclass(frozen=True)
class Feasibility:
    """Decision grid at a node, optionally narrowed by the parent's decision."""

    grid: tuple[float, ...]
    by_parent: Mapping[str, tuple[float, ...]] | None = None

    def __init__(self, grid: Sequence[float], by_parent: Mapping | None = None):
        object.__setattr__(self, "grid", tuple(float(x) for x in grid))
        if by_parent is not None:
            by_parent = {point_key(k): tuple(float(x) for x in v) for k, v in by_parent.items()}
        object.__setattr__(self, "by_parent", by_parent)

    def allowed(self, parent_decision=None) -> tuple[float, ...]:
        if self.by_parent is None or parent_decision is None:
            return self.grid
        try:
            return self.by_parent[point_key(parent_decision)]
        except KeyError:
            raise ValueError(f"no feasible set for parent decision {parent_decision!r}") from None


@dataclass
class MultistageProblem:
    tree: ScenarioTree
    costs: dict[str, CostModel]
    feasible: dict[str, Feasibility]
    risk: NestedSpec

    def problems(self) -> list[str]:
        """Every violated invariant, as messages; empty when valid."""
        out = [str(v) for v in validate_tree(self.tree).violations]
        if out:
            return out
        tree = self.tree
        if len(self.risk) != tree.horizon - 1:
            out.append(f"risk: need {tree.horizon - 1} stage specs, got {len(self.risk)}")
        for extra in sorted(set(self.costs) - set(tree)):
            out.append(f"costs: unknown node {extra}")
        for extra in sorted(set(self.feasible) - set(tree)):
            out.append(f"feasible: unknown node {extra}")
        for nid in tree:
            feas = self.feasible.get(nid)
            cost = self.costs.get(nid)
            if cost is None:
                out.append(f"costs: node {nid} has no cost model")
            if feas is None:
                out.append(f"feasible: node {nid} has no grid")
                continue
            keys = [point_key(x) for x in feas.grid]
            if not keys:
                out.append(f"feasible: node {nid} has an empty grid")
            if len(set(keys)) != len(keys):
                out.append(f"feasible: node {nid} repeats a grid point")
            if cost is not None and not cost.covers(feas.grid):
                out.append(f"costs: table at {nid} does not cover its grid")
            if feas.by_parent is None:
                continue
            parent = tree.node(nid).parent
            if parent is None:
                out.append(f"feasible: root {nid} cannot be keyed by a parent decision")
                continue
            pfeas = self.feasible.get(parent)
            if pfeas is None:
                continue
            for x in pfeas.grid:
                allowed = feas.by_parent.get(point_key(x))
                if allowed is None:
                    out.append(f"feasible: node {nid} lacks an entry for parent decision {point_key(x)}")
                elif not allowed:
                    out.append(f"feasible: node {nid} has an empty set for parent decision {point_key(x)}")
                elif any(point_key(a) not in set(keys) for a in allowed):
                    out.append(f"feasible: node {nid} allows points outside its grid")
        return out

    def validate(self) -> "MultistageProblem":
        found = self.problems()
        if found:
            raise ProblemValidationError(found)
        return self

    def allowed(self, node_id: str, parent_decision=None) -> tuple[float, ...]:
        return self.feasible[node_id].allowed(parent_decision)

    def cost(self, node_id: str, x: float) -> float:
        return self.costs[node_id](x)


# -- policies --------------------------------------------------------------

def check_policy(problem: MultistageProblem, policy: Mapping[str, float]) -> None:
    """Raise :class:`InfeasiblePolicyError` unless the policy is feasible."""
    tree = problem.tree
    for nid in policy:
        if nid not in tree:
            raise InfeasiblePolicyError(nid, "not a node of the tree")
    for nid in tree.subtree(tree.root):
        if nid not in policy:
            raise InfeasiblePolicyError(nid, "no decision assigned")
        parent = tree.node(nid).parent
        prev = None if parent is None else policy[parent]
        allowed = {point_key(x) for x in problem.allowed(nid, prev)}
        if point_key(policy[nid]) not in allowed:
            raise InfeasiblePolicyError(nid, f"decision {policy[nid]!r} not in {sorted(allowed)}")


def policy_costs(problem: MultistageProblem, policy: Mapping[str, float]) -> dict[str, float]:
    return {nid: problem.cost(nid, policy[nid]) for nid in problem.tree}


def policy_nested_value(problem: MultistageProblem, policy: Mapping[str, float],
                        start: str | None = None) -> float:
    check_policy(problem, policy)
    return nested_evaluate(problem.tree, problem.risk, policy_costs(problem, policy), start)


# -- dynamic programming ---------------------------------------------------

class ValueFunction:
    """Optimal tail values keyed by ``(node, parent decision)``.

    The root is keyed with parent decision ``None``.  ``q`` holds the value of
    each candidate decision at a node before minimizing, which depends on the
    decision only.
    """

    def __init__(self):
        self.values: dict[tuple[str, str | None], float] = {}
        self.argmin: dict[tuple[str, str | None], float] = {}
        self.q: dict[str, dict[str, float]] = {}

    @staticmethod
    def _key(node_id: str, parent_decision) -> tuple[str, str | None]:
        return node_id, None if parent_decision is None else point_key(parent_decision)

    def value(self, node_id: str, parent_decision=None) -> float:
        return self.values[self._key(node_id, parent_decision)]

    def best_decision(self, node_id: str, parent_decision=None) -> float:
        return self.argmin[self._key(node_id, parent_decision)]

    def __len__(self) -> int:
        return len(self.values)


class DPResult(NamedTuple):
    value: float
    value_function: ValueFunction
    policy: Policy


def _pick(q: Mapping[str, float], allowed: Sequence[float]) -> tuple[float, float]:
    """Minimum over ``allowed``; ties (up to roundoff) go to the smallest point."""
    best = min(q[point_key(x)] for x in allowed)
    slack = 1e-12 * max(1.0, abs(best))
    x = min(x for x in allowed if q[point_key(x)] <= best + slack)
    return x, best


def solve_dp(problem: MultistageProblem) -> DPResult:
    problem.validate()
    tree = problem.tree
    vf = ValueFunction()
    order = sorted(tree, key=lambda n: -tree.node(n).stage)
    for nid in order:
        kids = tree.children(nid)
        feas = problem.feasible[nid]
        q: dict[str, float] = {}
        for x in feas.grid:
            val = problem.cost(nid, x)
            if kids:
                spec = problem.risk.for_stage(tree.node(nid).stage + 1)
                val += conditional_evaluate(spec, tree, nid, {c: vf.value(c, x) for c in kids})
            q[point_key(x)] = val
        vf.q[nid] = q
        parent = tree.node(nid).parent
        incoming = [None] if parent is None else list(problem.feasible[parent].grid)
        for xp in incoming:
            allowed = feas.allowed(xp)
            if not allowed:
                raise ProblemValidationError([f"empty feasible set at {nid}"])
            x, best = _pick(q, allowed)
            key = vf._key(nid, xp)
            vf.values[key] = best
            vf.argmin[key] = x

    policy: Policy = {}
    for nid in tree.subtree(tree.root):
        parent = tree.node(nid).parent
        policy[nid] = vf.best_decision(nid, None if parent is None else policy[parent])
    return DPResult(vf.value(tree.root), vf, policy)


# -- brute force -----------------------------------------------------------

def enumeration_cap() -> int:
    raw = os.environ.get(ENUM_CAP_ENV)
    return int(raw) if raw else DEFAULT_ENUM_CAP


def count_policies(problem: MultistageProblem) -> int:
    tree = problem.tree

    def count(nid: str, xp) -> int:
        total = 0
        for x in problem.allowed(nid, xp):
            prod = 1
            for c in tree.children(nid):
                prod *= count(c, x)
            total += prod
        return total

    return count(tree.root, None)


def iter_policies(problem: MultistageProblem) -> Iterator[Policy]:
    """All feasible policies, in grid order."""
    tree = problem.tree

    def subtree(nid: str, xp) -> Iterator[dict]:
        kids = tree.children(nid)
        for x in problem.allowed(nid, xp):
            if not kids:
                yield {nid: x}
                continue
            parts = [list(subtree(c, x)) for c in kids]
            for combo in itertools.product(*parts):
                out = {nid: x}
                for part in combo:
                    out.update(part)
                yield out

    for pol in subtree(tree.root, None):
        yield {nid: pol[nid] for nid in tree.subtree(tree.root)}


class BruteForceResult(NamedTuple):
    value: float
    optimal_policies: list
    policy_count: int


def brute_force_solve(problem: MultistageProblem, tol: float = DEFAULT_TOL,
                      cap: int | None = None) -> BruteForceResult:
    """Evaluate every feasible policy; return the optimum and all optima within ``tol``."""
    problem.validate()
    cap = enumeration_cap() if cap is None else cap
    n = count_policies(problem)
    if n > cap:
        raise EnumerationCapExceeded(n, cap)
    tree, risk = problem.tree, problem.risk
    scored = [(pol, nested_evaluate(tree, risk, policy_costs(problem, pol)))
              for pol in iter_policies(problem)]
    best = min(val for _, val in scored)
    optima = [pol for pol, val in scored if val <= best + tol]
    return BruteForceResult(best, optima, n)
