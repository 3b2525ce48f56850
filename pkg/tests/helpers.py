"""Random instance generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from riskward.nested_risk import NestedSpec
from riskward.risk_measures import AVaR, EssSup, Expectation, Spectral, SpectralFunction
from riskward.scenario_tree import Node, ScenarioTree
from riskward.solver import AffineCost, Feasibility, MultistageProblem, TableCost, count_policies

SPEC_KINDS = ("expectation", "esssup", "avar", "spectral")


def random_probs(rng, k: int, equal: bool = False) -> list[float]:
    if equal:
        return [1.0 / k] * k
    w = rng.uniform(0.2, 1.0, size=k)
    p = w / w.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return [float(x) for x in p]


def random_tree(rng, max_horizon: int = 4, max_children: int = 3,
                equal: bool = False, min_horizon: int = 2) -> ScenarioTree:
    horizon = int(rng.integers(min_horizon, max_horizon + 1))
    nodes = [Node("r", 1, None, 1.0)]
    frontier = ["r"]
    for stage in range(2, horizon + 1):
        nxt = []
        for parent in frontier:
            k = int(rng.integers(1, max_children + 1))
            for j, p in enumerate(random_probs(rng, k, equal)):
                nid = f"{parent}.{j}"
                nodes.append(Node(nid, stage, parent, p))
                nxt.append(nid)
        frontier = nxt
    return ScenarioTree(nodes, horizon)


def random_spectral(rng) -> SpectralFunction:
    k = int(rng.integers(1, 4))
    inner = np.sort(rng.choice(np.arange(1, 20), size=k - 1, replace=False)) / 20.0
    bps = [0.0, *inner.tolist(), 1.0]
    raw = np.sort(rng.uniform(0.0, 3.0, size=k))
    if rng.random() < 0.5:
        raw[0] = 0.0
    widths = np.diff(bps)
    if raw @ widths == 0.0:
        raw[-1] = 1.0
    levels = raw / (raw @ widths)
    return SpectralFunction(bps, levels.tolist())


def random_spec(rng, kind: str | None = None):
    kind = kind or SPEC_KINDS[int(rng.integers(len(SPEC_KINDS)))]
    if kind == "expectation":
        return Expectation()
    if kind == "esssup":
        return EssSup()
    if kind == "avar":
        return AVaR(float(rng.choice([0.1, 0.25, 0.3, 0.5, 0.75, 1.0])))
    return Spectral(random_spectral(rng))


def random_problem(rng, kind: str | None = None, max_policies: int = 10**4,
                   max_horizon: int = 4, max_children: int = 3, max_grid: int = 3) -> MultistageProblem:
    """Random problem with at most ``max_policies`` feasible policies.

    Grid values and costs are small integers so that ties, and therefore
    multiple optima, occur often.
    """
    while True:
        tree = random_tree(rng, max_horizon, max_children)
        spec_kind = kind or SPEC_KINDS[int(rng.integers(len(SPEC_KINDS)))]
        risk = NestedSpec([random_spec(rng, spec_kind) for _ in range(tree.horizon - 1)])
        feasible, costs = {}, {}
        for nid in tree.subtree(tree.root):
            g = int(rng.integers(1, max_grid + 1))
            grid = sorted(rng.choice(np.arange(0, 5), size=g, replace=False).tolist())
            parent = tree.node(nid).parent
            by_parent = None
            if parent is not None and rng.random() < 0.25:
                by_parent = {}
                for xp in feasible[parent].grid:
                    keep = [x for x in grid if rng.random() < 0.6] or [grid[int(rng.integers(len(grid)))]]
                    by_parent[xp] = keep
            feasible[nid] = Feasibility(grid, by_parent)
            if rng.random() < 0.5:
                costs[nid] = AffineCost(float(rng.integers(-3, 4)), float(rng.integers(0, 3)))
            else:
                costs[nid] = TableCost({x: float(rng.integers(0, 6)) for x in grid})
        problem = MultistageProblem(tree, costs, feasible, risk).validate()
        if count_policies(problem) <= max_policies:
            return problem
