"""Conditional risk mappings on a scenario tree and their nested composition.

The mapping for stage ``t`` is applied at every stage ``t-1`` node over that
node's child distribution.  Composing the mappings backwards from the leaves
gives the nested (decomposable) risk of a cost process, and starting the
recursion at an interior node gives the conditional tail risk from there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .risk_measures import RiskSpec, evaluate
from .scenario_tree import ScenarioTree, child_distribution

CostProcess = Mapping[str, float]


@dataclass(frozen=True)
class NestedSpec:
    """One risk spec per stage ``t = 2..T``; ``stages[0]`` is stage 2."""

    stages: tuple

    def __init__(self, stages: Sequence[RiskSpec]):
        object.__setattr__(self, "stages", tuple(stages))

    @classmethod
    def uniform(cls, spec: RiskSpec, horizon: int) -> "NestedSpec":
        return cls([spec] * (horizon - 1))

    def __len__(self) -> int:
        return len(self.stages)

    def for_stage(self, t: int) -> RiskSpec:
        if not 2 <= t <= len(self.stages) + 1:
            raise IndexError(f"no conditional mapping for stage {t}")
        return self.stages[t - 2]

    def check(self, horizon: int) -> None:
        if len(self.stages) != horizon - 1:
            raise ValueError(f"need {horizon - 1} stage specs for horizon {horizon}, got {len(self.stages)}")


def conditional_evaluate(spec: RiskSpec, tree: ScenarioTree, node_id: str,
                         child_values: Mapping[str, float]) -> float:
    dist = child_distribution(tree, node_id)
    missing = [c for c in dist.labels if c not in child_values]
    if missing:
        raise ValueError(f"missing child values at {node_id!r}: {missing}")
    return evaluate(spec, dist, [child_values[c] for c in dist.labels])


def nested_values(tree: ScenarioTree, nested: NestedSpec, costs: CostProcess,
                  start: str | None = None) -> dict[str, float]:
    """Backward recursion over the subtree at ``start``; returns every ``W(n)``."""
    if start is None:
        start = tree.root
    nodes = tree.subtree(start)
    missing = [n for n in nodes if n not in costs]
    if missing:
        raise ValueError(f"cost process undefined at {missing}")
    W: dict[str, float] = {}
    for n in reversed(nodes):
        kids = tree.children(n)
        if not kids:
            W[n] = float(costs[n])
        else:
            spec = nested.for_stage(tree.node(n).stage + 1)
            W[n] = float(costs[n]) + evaluate(spec, child_distribution(tree, n), [W[c] for c in kids])
    return W


def nested_evaluate(tree: ScenarioTree, nested: NestedSpec, costs: CostProcess,
                    start: str | None = None) -> float:
    """Nested risk of the cost process from ``start`` (default: the root).

    From a stage ``t`` node this is the stage-``t`` cost plus the tail risk
    composed from the stage ``t+1, ..., T`` mappings.
    """
    if start is None:
        start = tree.root
    tree.node(start)
    return nested_values(tree, nested, costs, start)[start]
