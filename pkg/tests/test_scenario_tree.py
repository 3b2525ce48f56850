import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riskward.scenario_tree import (
    Node,
    ScenarioTree,
    TreeBuilder,
    child_distribution,
    node_probability,
    validate_tree,
)

from helpers import random_tree


def test_example_tree_is_valid(tree1):
    result = validate_tree(tree1)
    assert result.ok, result.violations
    assert tree1.horizon == 3
    assert tree1.leaves() == ["w3_1", "w3_2", "w3_3", "w3_4"]


def test_probabilities_sum_violation():
    tree = (TreeBuilder().add("r", 1).add("a", 2, "r", 0.5).add("b", 2, "r", 0.4).build())
    result = validate_tree(tree)
    assert not result.ok
    assert "cond probs sum" in result.kinds()
    bad = [v for v in result.violations if v.kind == "cond probs sum"][0]
    assert bad.node_ids == ("r",)


def test_leaf_before_horizon():
    tree = (TreeBuilder().add("r", 1).add("a", 2, "r", 0.5).add("b", 2, "r", 0.5)
            .add("a1", 3, "a", 1.0).build())
    result = validate_tree(tree)
    assert "leaf before horizon" in result.kinds()
    assert [v.node_ids for v in result.violations if v.kind == "leaf before horizon"] == [("b",)]


@pytest.mark.parametrize("nodes, kind", [
    ([Node("r", 1, None), Node("s", 1, None)], "root count"),
    ([Node("r", 2, None), Node("a", 3, "r")], "root stage"),
    ([Node("r", 1, None), Node("a", 3, "r")], "stage gap"),
    ([Node("r", 1, None), Node("a", 2, "zz")], "unknown parent"),
    ([Node("r", 1, None), Node("a", 2, "r", 0.0), Node("b", 2, "r", 1.0)], "cond prob range"),
    ([Node("r", 1, None)], "horizon"),
])
def test_structural_violations(nodes, kind):
    assert kind in validate_tree(ScenarioTree(nodes)).kinds()


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        ScenarioTree([Node("r", 1, None), Node("r", 2, "r")])


def test_node_probability(tree1):
    assert node_probability(tree1, "w3_1") == 0.25
    assert node_probability(tree1, "w1") == 1.0
    assert node_probability(tree1, "w2_1") == 0.5
    with pytest.raises(KeyError):
        node_probability(tree1, "nope")


def test_child_distribution(tree1):
    assert child_distribution(tree1, "w2_1").as_dict() == {"w3_1": 0.5, "w3_2": 0.5}
    assert child_distribution(tree1, "w1").as_dict() == {"w2_1": 0.5, "w2_2": 0.5}
    chain = TreeBuilder().add("r", 1).add("c", 2, "r", 1.0).build()
    assert child_distribution(chain, "r").as_dict() == {"c": 1.0}
    with pytest.raises(ValueError):
        child_distribution(tree1, "w3_1")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), equal=st.booleans())
def test_random_tree_invariants(seed, equal):
    tree = random_tree(np.random.default_rng(seed), max_horizon=5, equal=equal)
    assert validate_tree(tree).ok
    assert abs(sum(node_probability(tree, leaf) for leaf in tree.leaves()) - 1.0) <= 1e-12
    for nid in tree:
        node = tree.node(nid)
        if node.parent is not None:
            assert node_probability(tree, nid) == pytest.approx(
                node_probability(tree, node.parent) * node.cond_prob, abs=0, rel=1e-15)
        if not tree.is_leaf(nid):
            dist = child_distribution(tree, nid)
            assert abs(sum(dist.probs) - 1.0) <= 1e-12
            assert all(p > 0 for p in dist.probs)
