"""Finite staged scenario trees.

Nodes at stage ``t`` are the atoms of the stage-``t`` sigma algebra; the root
is the single stage-1 atom.  Conditional probabilities are stored on the
child, so the probability of a node is the product along its root path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    id: str
    stage: int
    parent: str | None
    cond_prob: float = 1.0


@dataclass(frozen=True)
class Violation:
    kind: str
    node_ids: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message} [{', '.join(self.node_ids)}]"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


class ScenarioTree:
    """Rooted tree of :class:`Node` objects with an explicit horizon.

    Construction never raises on malformed data (other than duplicate ids);
    call :func:`validate_tree` to get the list of violated invariants.
    Children keep the order in which nodes were supplied.
    """

    def __init__(self, nodes: Iterable[Node], horizon: int | None = None):
        self._nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise ValueError(f"duplicate node id {node.id!r}")
            self._nodes[node.id] = node
        if horizon is None:
            horizon = max((n.stage for n in self._nodes.values()), default=0)
        self.horizon = int(horizon)
        kids: dict[str, list[str]] = {nid: [] for nid in self._nodes}
        for node in self._nodes.values():
            if node.parent is not None and node.parent in kids:
                kids[node.parent].append(node.id)
        self._children = {nid: tuple(v) for nid, v in kids.items()}
        self._subtrees: dict[str, tuple[str, ...]] = {}
        self._child_dists: dict = {}
        roots = [n.id for n in self._nodes.values() if n.parent is None]
        self._root = roots[0] if len(roots) == 1 else None

    # -- structure ---------------------------------------------------------

    @property
    def root(self) -> str:
        if self._root is None:
            raise ValueError("tree does not have exactly one root")
        return self._root

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScenarioTree):
            return NotImplemented
        return self.horizon == other.horizon and self.nodes == other.nodes

    def __repr__(self) -> str:
        return f"ScenarioTree(horizon={self.horizon}, nodes={len(self)})"

    def children(self, node_id: str) -> tuple[str, ...]:
        try:
            return self._children[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None

    def is_leaf(self, node_id: str) -> bool:
        return not self.children(node_id)

    def leaves(self) -> list[str]:
        return [nid for nid in self._nodes if not self._children[nid]]

    def stage_nodes(self, stage: int) -> list[str]:
        return [n.id for n in self._nodes.values() if n.stage == stage]

    def path(self, node_id: str) -> list[str]:
        """Node ids from the root down to ``node_id`` inclusive."""
        out = [node_id]
        seen = {node_id}
        cur = self.node(node_id).parent
        while cur is not None:
            if cur in seen:
                raise ValueError(f"cycle through node {cur!r}")
            seen.add(cur)
            out.append(cur)
            cur = self.node(cur).parent
        return out[::-1]

    def subtree(self, node_id: str) -> tuple[str, ...]:
        """Ids of ``node_id`` and all its descendants, parents before children."""
        cached = self._subtrees.get(node_id)
        if cached is None:
            out = [node_id]
            i = 0
            while i < len(out):
                out.extend(self.children(out[i]))
                i += 1
            cached = self._subtrees[node_id] = tuple(out)
        return cached


def validate_tree(tree: ScenarioTree) -> ValidationResult:
    """Check every structural and probabilistic invariant; never raises."""
    found: list[Violation] = []

    def report(kind: str, ids: Sequence[str], msg: str) -> None:
        found.append(Violation(kind, tuple(ids), msg))

    nodes = tree.nodes
    if tree.horizon < 2:
        report("horizon", (), f"horizon must be >= 2, got {tree.horizon}")
    roots = [n for n in nodes if n.parent is None]
    if len(roots) != 1:
        report("root count", [n.id for n in roots],
               f"expected exactly one root, found {len(roots)}")
    for r in roots:
        if r.stage != 1:
            report("root stage", [r.id], f"root must be at stage 1, got {r.stage}")
        if abs(r.cond_prob - 1.0) > PROB_TOL:
            report("root prob", [r.id], f"root cond_prob must be 1, got {r.cond_prob}")

    by_id = {n.id: n for n in nodes}
    for n in nodes:
        if not 1 <= n.stage <= max(tree.horizon, 1):
            report("stage range", [n.id], f"stage {n.stage} outside [1, {tree.horizon}]")
        if n.parent is None:
            continue
        if not (0.0 < n.cond_prob <= 1.0 + PROB_TOL):
            report("cond prob range", [n.id], f"cond_prob {n.cond_prob} not in (0, 1]")
        parent = by_id.get(n.parent)
        if parent is None:
            report("unknown parent", [n.id], f"parent {n.parent!r} does not exist")
        elif n.stage != parent.stage + 1:
            report("stage gap", [n.id], f"child at stage {n.stage} under parent at stage {parent.stage}")

    for n in nodes:
        kids = tree.children(n.id)
        if not kids:
            if n.stage != tree.horizon:
                report("leaf before horizon", [n.id],
                       f"leaf at stage {n.stage} but horizon is {tree.horizon}")
            continue
        total = sum(by_id[k].cond_prob for k in kids)
        if abs(total - 1.0) > PROB_TOL:
            report("cond probs sum", [n.id], f"children cond probs sum to {total!r}, not 1")

    # unreachable nodes (cycles or detached components)
    if len(roots) == 1:
        reach = set(tree.subtree(roots[0].id))
        lost = [n.id for n in nodes if n.id not in reach]
        if lost:
            report("unreachable", lost, "nodes not reachable from the root")
    if not found:
        total = sum(node_probability(tree, leaf) for leaf in tree.leaves())
        if abs(total - 1.0) > PROB_TOL:
            report("leaf mass", [], f"leaf probabilities sum to {total!r}")
    return ValidationResult(tuple(found))


def node_probability(tree: ScenarioTree, node_id: str) -> float:
    p = 1.0
    for nid in tree.path(node_id)[1:]:
        p *= tree.node(nid).cond_prob
    return p


def child_distribution(tree: ScenarioTree, node_id: str):
    """Conditional distribution over the children of a non-leaf node."""
    from .risk_measures import DiscreteDistribution

    cache = tree._child_dists
    if node_id not in cache:
        kids = tree.children(node_id)
        if not kids:
            raise ValueError(f"node {node_id!r} is a leaf")
        cache[node_id] = DiscreteDistribution(kids, [tree.node(k).cond_prob for k in kids])
    return cache[node_id]


@dataclass
class TreeBuilder:
    """Small helper for building trees in code."""

    nodes: list[Node] = field(default_factory=list)

    def add(self, node_id: str, stage: int, parent: str | None = None,
            cond_prob: float = 1.0) -> "TreeBuilder":
        self.nodes.append(Node(node_id, stage, parent, cond_prob))
        return self

    def build(self, horizon: int | None = None) -> ScenarioTree:
        return ScenarioTree(self.nodes, horizon)
