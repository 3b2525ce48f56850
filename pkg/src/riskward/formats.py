"""JSON problem and policy files.

Problem file layout::

    {
      "tree":     [{"id": "w1", "stage": 1, "parent": null, "cond_prob": 1}, ...],
      "costs":    {"w1": {"affine": {"c": 0, "d": 0}}, "w2": {"table": {"1": 3.5}}, ...},
      "feasible": {"w1": {"grid": [0]}, "w2": {"grid": [1, 2], "by_parent": {"0": [1]}}, ...},
      "risk":     [{"type": "avar", "alpha": 0.25}, ...]
    }

``risk`` lists the conditional mapping for stages 2..T.  A policy file is a
flat map from node id to decision; decisions are matched against grid points
by their normalized decimal text, so ``1``, ``1.0`` and ``1.00`` all name the
same point.
"""

from __future__ import annotations

import json
from decimal import Decimal
from pathlib import Path
from typing import Any, Mapping

from .nested_risk import NestedSpec
from .risk_measures import AVaR, EssSup, Expectation, RiskSpec, Spectral, SpectralFunction
from .scenario_tree import Node, ScenarioTree
from .solver import (
    AffineCost,
    Feasibility,
    InfeasiblePolicyError,
    MultistageProblem,
    Policy,
    TableCost,
    check_policy,
    point_key,
)


class FileFormatError(ValueError):
    """Malformed file: bad JSON, unknown or missing keys, wrong types."""

    def __init__(self, where: str, message: str):
        self.where = where
        self.message = message
        super().__init__(f"{where}: {message}" if where else message)


class PolicyFileError(ValueError):
    """Policy file names the wrong nodes or off-grid decisions."""

    def __init__(self, node_id: str | None, message: str):
        self.node_id = node_id
        super().__init__(message if node_id is None else f"node {node_id}: {message}")


# -- field helpers ---------------------------------------------------------

def _keys(obj: Any, where: str, required: set[str], optional: frozenset = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise FileFormatError(where, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise FileFormatError(where, f"unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FileFormatError(where, f"missing key(s) {sorted(missing)}")
    return obj


def _number(obj: Any, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float, Decimal)):
        raise FileFormatError(where, f"expected a number, got {obj!r}")
    return float(obj)


def _list(obj: Any, where: str) -> list:
    if not isinstance(obj, list):
        raise FileFormatError(where, f"expected a list, got {type(obj).__name__}")
    return obj


def _string(obj: Any, where: str) -> str:
    if not isinstance(obj, str):
        raise FileFormatError(where, f"expected a string, got {obj!r}")
    return obj


def _decimal_key(text: str, where: str) -> str:
    try:
        return point_key(Decimal(text))
    except Exception:
        raise FileFormatError(where, f"{text!r} is not a decimal number") from None


# -- risk specs ------------------------------------------------------------

def risk_from_dict(obj: Any, where: str = "risk") -> RiskSpec:
    obj = _keys(obj, where, {"type"}, frozenset({"alpha", "breakpoints", "levels"}))
    kind = obj["type"]
    allowed = {"expectation": set(), "esssup": set(), "avar": {"alpha"},
               "spectral": {"breakpoints", "levels"}}
    if kind not in allowed:
        raise FileFormatError(f"{where}.type", f"unknown risk type {kind!r}")
    _keys(obj, where, {"type"} | allowed[kind])
    if kind == "expectation":
        return Expectation()
    if kind == "esssup":
        return EssSup()
    if kind == "avar":
        return AVaR(_number(obj["alpha"], f"{where}.alpha"))
    bps = [_number(x, f"{where}.breakpoints[{i}]") for i, x in enumerate(_list(obj["breakpoints"], f"{where}.breakpoints"))]
    lvs = [_number(x, f"{where}.levels[{i}]") for i, x in enumerate(_list(obj["levels"], f"{where}.levels"))]
    return Spectral(SpectralFunction(bps, lvs))


def risk_to_dict(spec: RiskSpec) -> dict:
    if isinstance(spec, AVaR):
        return {"type": "avar", "alpha": spec.alpha}
    if isinstance(spec, Spectral):
        return {"type": "spectral", "breakpoints": list(spec.sf.breakpoints),
                "levels": list(spec.sf.levels)}
    return {"type": spec.kind}


# -- problems --------------------------------------------------------------

def problem_from_dict(data: Any) -> MultistageProblem:
    """Build a problem from parsed JSON.

    Shape errors raise :class:`FileFormatError`; values that are well formed
    but invalid (a bad AV@R level, a spectral function not integrating to one)
    raise ``ValueError``.  Tree and grid invariants are left to
    :meth:`MultistageProblem.validate`.
    """
    _keys(data, "", {"tree", "costs", "feasible", "risk"}, frozenset({"description"}))
    nodes = []
    for i, raw in enumerate(_list(data["tree"], "tree")):
        where = f"tree[{i}]"
        raw = _keys(raw, where, {"id", "stage"}, frozenset({"parent", "cond_prob"}))
        stage = raw["stage"]
        if isinstance(stage, bool) or not isinstance(stage, int):
            raise FileFormatError(f"{where}.stage", f"expected an integer, got {stage!r}")
        parent = raw.get("parent")
        if parent is not None:
            parent = _string(parent, f"{where}.parent")
        nodes.append(Node(_string(raw["id"], f"{where}.id"), stage, parent,
                          _number(raw.get("cond_prob", 1), f"{where}.cond_prob")))
    try:
        tree = ScenarioTree(nodes)
    except ValueError as exc:
        raise FileFormatError("tree", str(exc)) from None

    costs = {}
    raw_costs = data["costs"]
    if not isinstance(raw_costs, dict):
        raise FileFormatError("costs", "expected an object")
    for nid, raw in raw_costs.items():
        where = f"costs.{nid}"
        if not isinstance(raw, dict) or len(raw) != 1:
            raise FileFormatError(where, "expected exactly one of 'affine' or 'table'")
        (kind, body), = raw.items()
        if kind == "affine":
            body = _keys(body, f"{where}.affine", {"c"}, frozenset({"d"}))
            costs[nid] = AffineCost(_number(body["c"], f"{where}.affine.c"),
                                    _number(body.get("d", 0), f"{where}.affine.d"))
        elif kind == "table":
            if not isinstance(body, dict):
                raise FileFormatError(f"{where}.table", "expected an object")
            costs[nid] = TableCost({_decimal_key(k, f"{where}.table"): _number(v, f"{where}.table.{k}")
                                    for k, v in body.items()})
        else:
            raise FileFormatError(where, f"unknown cost kind {kind!r}")

    feasible = {}
    raw_feas = data["feasible"]
    if not isinstance(raw_feas, dict):
        raise FileFormatError("feasible", "expected an object")
    for nid, raw in raw_feas.items():
        where = f"feasible.{nid}"
        raw = _keys(raw, where, {"grid"}, frozenset({"by_parent"}))
        grid = [_number(x, f"{where}.grid[{i}]") for i, x in enumerate(_list(raw["grid"], f"{where}.grid"))]
        by_parent = None
        if "by_parent" in raw:
            bp = raw["by_parent"]
            if not isinstance(bp, dict):
                raise FileFormatError(f"{where}.by_parent", "expected an object")
            by_parent = {_decimal_key(k, f"{where}.by_parent"):
                         [_number(x, f"{where}.by_parent.{k}") for x in _list(v, f"{where}.by_parent.{k}")]
                         for k, v in bp.items()}
        feasible[nid] = Feasibility(grid, by_parent)

    risk = NestedSpec([risk_from_dict(r, f"risk[{i}]") for i, r in enumerate(_list(data["risk"], "risk"))])
    return MultistageProblem(tree, costs, feasible, risk)


def _cost_to_dict(cost) -> dict:
    if isinstance(cost, AffineCost):
        return {"affine": {"c": cost.c, "d": cost.d}}
    return {"table": {k: v for k, v in cost.table.items()}}


def problem_to_dict(problem: MultistageProblem, description: str | None = None) -> dict:
    tree = problem.tree
    out: dict = {}
    if description:
        out["description"] = description
    out["tree"] = [{"id": n.id, "stage": n.stage, "parent": n.parent, "cond_prob": n.cond_prob}
                   for n in tree.nodes]
    out["costs"] = {nid: _cost_to_dict(c) for nid, c in problem.costs.items()}
    feas = {}
    for nid, f in problem.feasible.items():
        entry: dict = {"grid": list(f.grid)}
        if f.by_parent is not None:
            entry["by_parent"] = {k: list(v) for k, v in f.by_parent.items()}
        feas[nid] = entry
    out["feasible"] = feas
    out["risk"] = [risk_to_dict(s) for s in problem.risk.stages]
    return out


def _read_json(path: str | Path, **kw) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(str(path), exc.strerror or str(exc)) from None
    try:
        return json.loads(text, **kw)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None


def load_problem(path: str | Path) -> MultistageProblem:
    data = _read_json(path)
    try:
        return problem_from_dict(data)
    except FileFormatError as exc:
        raise FileFormatError(f"{path}: field {exc.where or '<top>'}", exc.message) from None


def dump_problem(problem: MultistageProblem, path: str | Path, description: str | None = None) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem, description), indent=2) + "\n",
                          encoding="utf-8")


# -- policies --------------------------------------------------------------

def _json_number(x: float):
    return int(x) if float(x).is_integer() else float(x)


def policy_to_dict(problem: MultistageProblem, policy: Mapping[str, float]) -> dict:
    return {nid: _json_number(policy[nid]) for nid in problem.tree.subtree(problem.tree.root)}


def policy_from_dict(problem: MultistageProblem, data: Any) -> Policy:
    """Match decisions to grid points and check feasibility.

    Numbers should be parsed as :class:`~decimal.Decimal` so the comparison
    sees the literal text of the file.
    """
    if not isinstance(data, dict):
        raise FileFormatError("", "policy file must be a JSON object")
    tree = problem.tree
    extra = [k for k in data if k not in tree]
    if extra:
        raise PolicyFileError(extra[0], "not a node of the tree")
    policy: Policy = {}
    for nid in tree.subtree(tree.root):
        if nid not in data:
            raise PolicyFileError(nid, "no decision given")
        raw = data[nid]
        if isinstance(raw, bool) or not isinstance(raw, (int, float, Decimal)):
            raise FileFormatError(nid, f"expected a number, got {raw!r}")
        key = point_key(Decimal(str(raw)) if not isinstance(raw, Decimal) else raw)
        match = [x for x in problem.feasible[nid].grid if point_key(x) == key]
        if not match:
            raise PolicyFileError(nid, f"decision {raw} is not a grid point")
        policy[nid] = match[0]
    try:
        check_policy(problem, policy)
    except InfeasiblePolicyError as exc:
        raise PolicyFileError(exc.node_id, exc.message) from None
    return policy


def load_policy(problem: MultistageProblem, path: str | Path) -> Policy:
    data = _read_json(path, parse_float=Decimal, parse_int=Decimal)
    return policy_from_dict(problem, data)


def dump_policy(problem: MultistageProblem, policy: Mapping[str, float], path: str | Path) -> None:
    Path(path).write_text(json.dumps(policy_to_dict(problem, policy), indent=2) + "\n",
                          encoding="utf-8")
