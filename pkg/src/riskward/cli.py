"""Command-line front end.

Exit codes::

    0  success (audit: time consistent; check-monotonicity: strictly monotone)
    1  file could not be parsed
    2  file or arguments parsed but invalid
    3  policy enumeration cap exceeded
    4  audit found a time-inconsistent policy
    5  policy file infeasible or covering the wrong nodes
    6  strict-monotonicity witness found
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .audit import audit_policy, find_inconsistent_optimal_policy
from .demos import DEMOS, consistent_policy
from .formats import (
    FileFormatError,
    PolicyFileError,
    dump_policy,
    dump_problem,
    load_policy,
    load_problem,
    policy_to_dict,
)
from .risk_measures import (
    AVaR,
    DiscreteDistribution,
    EssSup,
    Expectation,
    Spectral,
    SpectralFunction,
    spectral_monotonicity_witness,
    strict_monotonicity_witness,
)
from .solver import (
    DEFAULT_TOL,
    EnumerationCapExceeded,
    ProblemValidationError,
    brute_force_solve,
    solve_dp,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_CAP = 3
EXIT_INCONSISTENT = 4
EXIT_POLICY = 5
EXIT_WITNESS = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"


class Output:
    """Human-readable text or line-delimited JSON records."""

    def __init__(self, records: bool, stream=None):
        self.records = records
        self.stream = stream or sys.stdout

    def text(self, line: str = "") -> None:
        if not self.records:
            print(line, file=self.stream)

    def record(self, kind: str, **fields) -> None:
        if self.records:
            print(json.dumps({"record": kind, **fields}), file=self.stream)


def _load(path: str):
    try:
        problem = load_problem(path)
    except FileFormatError as exc:
        raise CliError(EXIT_PARSE, f"parse error: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"invalid problem: {exc}") from None
    try:
        return problem.validate()
    except ProblemValidationError as exc:
        raise CliError(EXIT_INVALID, "invalid problem:\n  " + "\n  ".join(exc.problems)) from None


def _policy_lines(out: Output, policy: dict, indent: str = "  ") -> None:
    for nid, x in policy.items():
        out.text(f"{indent}{nid}: {fmt(x)}")


# -- solve -----------------------------------------------------------------

def cmd_solve(args, out: Output) -> int:
    problem = _load(args.problem)
    dp = solve_dp(problem)
    out.text(f"optimal value = {fmt(dp.value)}")
    out.record("optimal_value", value=dp.value)
    policy = policy_to_dict(problem, dp.policy)
    if args.out:
        dump_policy(problem, dp.policy, args.out)
        out.text(f"policy written to {args.out}")
    else:
        out.text("policy (dynamic programming):")
        out.text(json.dumps(policy, indent=2))
    out.record("policy", policy=policy)
    if args.brute_force:
        try:
            bf = brute_force_solve(problem, args.tol)
        except EnumerationCapExceeded as exc:
            raise CliError(EXIT_CAP, str(exc)) from None
        n = len(bf.optimal_policies)
        out.text(f"{n} optimal {'policy' if n == 1 else 'policies'} "
                 f"(of {bf.policy_count} feasible, brute-force value {fmt(bf.value)})")
        out.record("optimum_count", count=n, feasible=bf.policy_count, value=bf.value)
        for i, pol in enumerate(bf.optimal_policies, 1):
            as_dict = policy_to_dict(problem, pol)
            out.text(f"  #{i}: " + ", ".join(f"{k}={fmt(v)}" for k, v in as_dict.items()))
            out.record("optimum", index=i, policy=as_dict)
    return EXIT_OK


# -- audit -----------------------------------------------------------------

def _render_audit(out: Output, report) -> None:
    for r in report.records:
        out.text(f"node {r.node}: tail {fmt(r.tail)}, optimal {fmt(r.optimal)}, gap {fmt(r.gap)}")
        out.record("audit", node=r.node, stage=r.stage, tail=r.tail, optimal=r.optimal, gap=r.gap)
    if report.note:
        out.text(f"note: {report.note} (policy value {fmt(report.root_value)}, "
                 f"optimum {fmt(report.optimal_value)})")
    witness = report.first_witness()
    if witness is None:
        out.text("verdict: time consistent")
    else:
        out.text(f"verdict: NOT time consistent; first witness node {witness.node}: "
                 f"tail {fmt(witness.tail)}, optimal {fmt(witness.optimal)}, gap {fmt(witness.gap)}")
    out.record("verdict", time_consistent=report.time_consistent,
               policy_optimal=report.policy_optimal, root_value=report.root_value,
               optimal_value=report.optimal_value,
               witness=None if witness is None else witness.node)


def cmd_audit(args, out: Output) -> int:
    problem = _load(args.problem)
    try:
        policy = load_policy(problem, args.policy)
    except FileFormatError as exc:
        raise CliError(EXIT_PARSE, f"policy parse error: {exc}") from None
    except PolicyFileError as exc:
        raise CliError(EXIT_POLICY, f"policy rejected: {exc}") from None
    report = audit_policy(problem, policy, args.tol)
    _render_audit(out, report)
    return EXIT_OK if report.time_consistent else EXIT_INCONSISTENT


# -- check-monotonicity ----------------------------------------------------

def _measure(args):
    kind = args.measure
    if kind == "expectation":
        return Expectation()
    if kind == "esssup":
        return EssSup()
    if kind == "avar":
        if args.alpha is None:
            raise CliError(EXIT_INVALID, "--measure avar needs --alpha")
        return AVaR(args.alpha)
    if not args.breakpoints or not args.levels:
        raise CliError(EXIT_INVALID, "--measure spectral needs --breakpoints and --levels")
    return Spectral(SpectralFunction(args.breakpoints, args.levels))


def _tuple(values) -> str:
    return "(" + ", ".join(fmt(x) for x in values) + ")"


def cmd_check_monotonicity(args, out: Output) -> int:
    try:
        spec = _measure(args)
        if args.atoms < 1:
            raise ValueError("--atoms must be positive")
        labels = [f"a{i + 1}" for i in range(args.atoms)]
        if args.probs:
            dist = DiscreteDistribution(labels, args.probs)
        else:
            dist = DiscreteDistribution.uniform(args.atoms, labels)
    except CliError:
        raise
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"invalid measure: {exc}") from None

    if isinstance(spec, Spectral):
        witness = spectral_monotonicity_witness(spec.sf, dist)
    else:
        witness = strict_monotonicity_witness(spec, dist, n_random=args.random, seed=args.seed)
    name = spec.kind if not isinstance(spec, AVaR) else f"avar(alpha={fmt(spec.alpha)})"
    if witness is None:
        out.text(f"{name} on {args.atoms} atoms: strictly monotone (no witness found)")
        out.record("monotonicity", measure=spec.kind, strict=True)
        return EXIT_OK
    out.text(f"{name} on {args.atoms} atoms: NOT strictly monotone")
    out.text(f"  Z  = {_tuple(witness.Z)}")
    out.text(f"  Z' = {_tuple(witness.Z_prime)}  (Z - 1_A, A = {{{', '.join(witness.zero_set)}}})")
    out.text(f"  common value {fmt(witness.value)}")
    if witness.maximizer is not None:
        out.text(f"  dual maximizer zeta = {_tuple(witness.maximizer.density)}")
    out.record("monotonicity", measure=spec.kind, strict=False, Z=list(witness.Z),
               Z_prime=list(witness.Z_prime), zero_set=list(witness.zero_set), value=witness.value,
               zeta=None if witness.maximizer is None else list(witness.maximizer.density))
    return EXIT_WITNESS


# -- demo ------------------------------------------------------------------

def cmd_demo(args, out: Output) -> int:
    if args.name not in DEMOS:
        raise CliError(EXIT_INVALID, f"unknown demo {args.name!r}; available: {', '.join(DEMOS)}")
    description, build = DEMOS[args.name]
    problem = build()
    out.text(f"demo {args.name}: {description}")
    if not args.no_write:
        path = Path(args.out_dir) / f"{args.name}.json"
        dump_problem(problem, path, description)
        out.text(f"problem file written to {path}")
        out.record("problem_file", path=str(path))

    dp = solve_dp(problem)
    out.text(f"optimal value = {fmt(dp.value)}")
    out.record("optimal_value", value=dp.value)
    out.text("dynamic-programming policy:")
    _policy_lines(out, dp.policy)
    base = audit_policy(problem, consistent_policy(), dp=dp)
    out.text(f"all-ones policy: value {fmt(base.root_value)}, "
             f"{'time consistent' if base.time_consistent else 'NOT time consistent'}")
    out.record("reference_policy", time_consistent=base.time_consistent, value=base.root_value)

    found = find_inconsistent_optimal_policy(problem, args.tol)
    if found is None:
        out.text("every optimal policy is time consistent")
        out.record("inconsistent_policy", found=False)
        return EXIT_OK
    policy, report = found
    w = report.first_witness()
    out.text(f"optimal but time-inconsistent policy (value {fmt(report.root_value)}):")
    _policy_lines(out, policy)
    out.text(f"  at node {w.node}: tail {fmt(w.tail)}, conditional optimum {fmt(w.optimal)}, "
             f"gap {fmt(w.gap)}")
    out.record("inconsistent_policy", found=True, policy=policy_to_dict(problem, policy),
               value=report.root_value, node=w.node, tail=w.tail, optimal=w.optimal, gap=w.gap)
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskward", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--format", choices=["text", "records"], default="text",
                        help="human-readable text or line-delimited JSON records")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file by dynamic programming")
    p.add_argument("problem")
    p.add_argument("--brute-force", action="store_true", help="also enumerate every optimal policy")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="write the DP policy file here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="audit a policy for time consistency")
    p.add_argument("problem")
    p.add_argument("--policy", required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("check-monotonicity", help="search for a strict-monotonicity witness")
    p.add_argument("--measure", required=True, choices=["expectation", "esssup", "avar", "spectral"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--breakpoints", type=float, nargs="+")
    p.add_argument("--levels", type=float, nargs="+")
    p.add_argument("--atoms", type=int, default=4)
    p.add_argument("--probs", type=float, nargs="+", help="atom probabilities (default: equal)")
    p.add_argument("--random", type=int, default=20, help="random candidates after the canonical one")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_monotonicity)

    p = sub.add_parser("demo", help="run a built-in example")
    p.add_argument("name", help=f"one of: {', '.join(DEMOS)}")
    p.add_argument("--out-dir", default=".", help="where to write the problem file")
    p.add_argument("--no-write", action="store_true")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Output(args.format == "records")
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"riskward: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
