"""Built-in three-stage counterexample.

One root, two equally likely stage-2 nodes, two equally likely leaves under
each.  Decisions are pinned to 0 before the last stage; at the leaves the
decision ranges over ``[1, 2]`` (gridded at its endpoints) with cost
``c * x``, where ``c`` is 1 under the first stage-2 node and 4 under the
second.  Under the max-operator every policy that picks 1 at the expensive
leaves is optimal with value 4, but only the all-ones policy stays optimal
once the first stage-2 node has been reached.
"""

from __future__ import annotations

from .nested_risk import NestedSpec
from .risk_measures import AVaR, EssSup, Expectation, RiskSpec
from .scenario_tree import ScenarioTree, TreeBuilder
from .solver import AffineCost, Feasibility, MultistageProblem, interval_grid

LEAF_COSTS = {"w3_1": 1.0, "w3_2": 1.0, "w3_3": 4.0, "w3_4": 4.0}


def example1_tree() -> ScenarioTree:
    b = TreeBuilder()
    b.add("w1", 1)
    b.add("w2_1", 2, "w1", 0.5).add("w2_2", 2, "w1", 0.5)
    b.add("w3_1", 3, "w2_1", 0.5).add("w3_2", 3, "w2_1", 0.5)
    b.add("w3_3", 3, "w2_2", 0.5).add("w3_4", 3, "w2_2", 0.5)
    return b.build()


def example1_problem(spec: RiskSpec | None = None) -> MultistageProblem:
    tree = example1_tree()
    spec = EssSup() if spec is None else spec
    costs = {"w1": AffineCost(0.0), "w2_1": AffineCost(0.0), "w2_2": AffineCost(0.0)}
    costs.update({nid: AffineCost(c) for nid, c in LEAF_COSTS.items()})
    feasible = {nid: Feasibility([0.0]) for nid in ("w1", "w2_1", "w2_2")}
    feasible.update({nid: Feasibility(interval_grid(1.0, 2.0)) for nid in LEAF_COSTS})
    return MultistageProblem(tree, costs, feasible, NestedSpec.uniform(spec, tree.horizon)).validate()


def consistent_policy() -> dict[str, float]:
    return {"w1": 0.0, "w2_1": 0.0, "w2_2": 0.0, "w3_1": 1.0, "w3_2": 1.0, "w3_3": 1.0, "w3_4": 1.0}


def inconsistent_policy() -> dict[str, float]:
    return {"w1": 0.0, "w2_1": 0.0, "w2_2": 0.0, "w3_1": 2.0, "w3_2": 2.0, "w3_3": 1.0, "w3_4": 1.0}


DEMOS = {
    "example1": ("max-operator (ess-sup) at every stage", lambda: example1_problem(EssSup())),
    "example1-avar": ("nested AV@R at level 0.25", lambda: example1_problem(AVaR(0.25))),
    "example1-expectation": ("risk-neutral nesting (conditional expectations)",
                             lambda: example1_problem(Expectation())),
}
