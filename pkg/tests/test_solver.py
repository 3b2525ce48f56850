import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riskward.demos import consistent_policy, example1_problem, inconsistent_policy
from riskward.nested_risk import NestedSpec, conditional_evaluate, nested_evaluate
from riskward.risk_measures import AVaR, EssSup, Expectation
from riskward.scenario_tree import TreeBuilder
from riskward.solver import (
    AffineCost,
    EnumerationCapExceeded,
    Feasibility,
    InfeasiblePolicyError,
    MultistageProblem,
    ProblemValidationError,
    TableCost,
    brute_force_solve,
    count_policies,
    interval_grid,
    iter_policies,
    point_key,
    policy_nested_value,
    solve_dp,
)

from helpers import random_problem


def test_point_key():
    assert point_key(1) == point_key(1.0) == "1"
    assert point_key(0.1) == "0.1"
    assert point_key(-0.0) == "0"
    assert point_key(100) == "100"


def test_interval_grid():
    assert interval_grid(1, 2) == (1.0, 2.0)
    assert interval_grid(0, 1, 5) == (0.0, 0.25, 0.5, 0.75, 1.0)
    with pytest.raises(ValueError):
        interval_grid(2, 1)


def test_example_dp(problem1):
    dp = solve_dp(problem1)
    assert dp.value == 4
    assert dp.policy == consistent_policy()
    assert dp.value_function.value("w2_1", 0.0) == 1
    assert dp.value_function.value("w2_2", 0.0) == 4


def test_example_brute_force(problem1):
    bf = brute_force_solve(problem1, 1e-9)
    assert bf.value == 4 and bf.policy_count == 16
    assert len(bf.optimal_policies) == 4
    assert all(p["w3_3"] == 1 and p["w3_4"] == 1 for p in bf.optimal_policies)
    assert inconsistent_policy() in bf.optimal_policies


def test_example_policy_values(problem1):
    assert policy_nested_value(problem1, consistent_policy()) == 4
    assert policy_nested_value(problem1, {**consistent_policy(), "w3_1": 2, "w3_2": 2, "w3_3": 2, "w3_4": 2}) == 8
    assert policy_nested_value(problem1, inconsistent_policy(), "w2_1") == 2
    with pytest.raises(InfeasiblePolicyError) as err:
        policy_nested_value(problem1, {**consistent_policy(), "w3_2": 1.5})
    assert err.value.node_id == "w3_2"


def _singleton_problem():
    tree = (TreeBuilder().add("r", 1).add("a", 2, "r", 0.3).add("b", 2, "r", 0.7).build())
    costs = {"r": AffineCost(1.0), "a": AffineCost(2.0, 1.0), "b": TableCost({3: 5.0})}
    feasible = {"r": Feasibility([1]), "a": Feasibility([2]), "b": Feasibility([3])}
    return MultistageProblem(tree, costs, feasible, NestedSpec([AVaR(0.5)]))


def test_singleton_grids():
    problem = _singleton_problem()
    dp = solve_dp(problem)
    forced = {"r": 1.0, "a": 2.0, "b": 3.0}
    assert dp.policy == forced
    assert dp.value == nested_evaluate(problem.tree, problem.risk, {"r": 1.0, "a": 5.0, "b": 5.0})
    bf = brute_force_solve(problem)
    assert bf.optimal_policies == [forced]


def test_parent_keyed_feasibility():
    tree = TreeBuilder().add("r", 1).add("a", 2, "r", 0.5).add("b", 2, "r", 0.5).build()
    feasible = {
        "r": Feasibility([0, 1]),
        "a": Feasibility([0, 1, 2], {0: [2], 1: [0, 1]}),
        "b": Feasibility([0, 1, 2], {"0": [1, 2], "1.0": [0]}),
    }
    costs = {"r": AffineCost(3.0), "a": AffineCost(1.0), "b": AffineCost(1.0)}
    problem = MultistageProblem(tree, costs, feasible, NestedSpec([Expectation()])).validate()
    assert count_policies(problem) == 2 * 1 * 2 // 2 + 2 * 1
    # r=0 forces a=2 and lets b pick 1: 0 + (2 + 1) / 2; r=1 gives 3 + 0
    dp = solve_dp(problem)
    assert dp.value == 1.5 and dp.policy == {"r": 0.0, "a": 2.0, "b": 1.0}
    assert brute_force_solve(problem).value == 1.5
    with pytest.raises(InfeasiblePolicyError):
        policy_nested_value(problem, {"r": 1.0, "a": 2.0, "b": 0.0})


def test_validation_errors():
    problem = _singleton_problem()
    problem.feasible["a"] = Feasibility([])
    with pytest.raises(ProblemValidationError):
        problem.validate()
    problem = _singleton_problem()
    problem.costs["b"] = TableCost({4: 1.0})
    assert any("does not cover" in p for p in problem.problems())
    problem = _singleton_problem()
    problem.risk = NestedSpec([AVaR(0.5), EssSup()])
    assert any("stage specs" in p for p in problem.problems())
    problem = _singleton_problem()
    problem.feasible["a"] = Feasibility([2], {5: [2]})
    assert any("lacks an entry" in p for p in problem.problems())


def test_enumeration_cap(problem1, monkeypatch):
    with pytest.raises(EnumerationCapExceeded):
        brute_force_solve(problem1, cap=15)
    monkeypatch.setenv("RISKWARD_ENUM_CAP", "10")
    with pytest.raises(EnumerationCapExceeded):
        brute_force_solve(problem1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["expectation", "esssup", "avar", "spectral"]))
def test_dp_matches_brute_force(seed, kind):
    problem = random_problem(np.random.default_rng(seed), kind, max_policies=2000)
    dp = solve_dp(problem)
    bf = brute_force_solve(problem)
    assert abs(dp.value - bf.value) <= 1e-10
    assert abs(policy_nested_value(problem, dp.policy) - dp.value) <= 1e-10
    assert dp.policy in bf.optimal_policies
    assert len(list(iter_policies(problem))) == bf.policy_count == count_policies(problem)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_value_function_recursion(seed):
    problem = random_problem(np.random.default_rng(seed), max_policies=2000)
    vf = solve_dp(problem).value_function
    tree = problem.tree
    for (nid, xp_key), value in vf.values.items():
        xp = None if xp_key is None else float(xp_key)
        candidates = []
        for x in problem.allowed(nid, xp):
            q = problem.cost(nid, x)
            if tree.children(nid):
                spec = problem.risk.for_stage(tree.node(nid).stage + 1)
                q += conditional_evaluate(spec, tree, nid, {c: vf.value(c, x) for c in tree.children(nid)})
            candidates.append(q)
        assert value == min(candidates)
