"""Static coherent risk measures on finite distributions.

Four measures are supported: expectation, essential supremum (the max over
the support), Average Value-at-Risk and spectral measures with step spectral
functions.  Each can be evaluated three ways where it makes sense: by the
quantile/spectral integral (:func:`evaluate`), by the primal minimization
formula for AV@R (:func:`avar_primal_oracle`), and through a maximizing
density of the dual representation (:func:`dual_argmax`).

Evaluation is written as ``top + sum_i w_i (z_i - top)`` with ``top`` the
largest outcome.  The weights sum to one, so this is the usual weighted sum,
but it returns ``top`` bit-for-bit whenever all weight sits on the maximal
outcomes (AV@R with a small level, ess-sup, constants).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from .polytope import argmax_face_vertices

PROB_TOL = 1e-12
EQ_TOL = 1e-10
ZERO_TOL = 1e-12
ENUMERATION_MAX_ATOMS = 12

RandomVariable = Union[Mapping[Hashable, float], Sequence[float], np.ndarray]


class UnsupportedRiskSpec(ValueError):
    """Raised when an operation is not available for the given measure."""


@dataclass(frozen=True, init=False)
class DiscreteDistribution:
    labels: tuple
    probs: tuple[float, ...]

    def __init__(self, labels: Sequence[Hashable], probs: Sequence[float]):
        labels = tuple(labels)
        probs = tuple(float(p) for p in probs)
        if len(labels) != len(probs):
            raise ValueError("labels and probs differ in length")
        if not labels:
            raise ValueError("distribution needs at least one atom")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate atom labels")
        if any(not p > 0.0 for p in probs):
            raise ValueError("atom probabilities must be strictly positive")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)!r}, not 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, m: int, labels: Sequence[Hashable] | None = None) -> "DiscreteDistribution":
        if labels is None:
            labels = range(m)
        return cls(labels, [1.0 / m] * m)

    def __len__(self) -> int:
        return len(self.labels)

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs))

    def align(self, Z: RandomVariable) -> tuple[float, ...]:
        """Outcome values ordered like ``labels``."""
        if isinstance(Z, Mapping):
            missing = [lab for lab in self.labels if lab not in Z]
            extra = [k for k in Z if k not in set(self.labels)]
            if missing or extra:
                raise ValueError(f"random variable misaligned: missing={missing} extra={extra}")
            return tuple(float(Z[lab]) for lab in self.labels)
        vals = tuple(float(z) for z in Z)
        if len(vals) != len(self.labels):
            raise ValueError(f"random variable has {len(vals)} values for {len(self.labels)} atoms")
        return vals


@dataclass(frozen=True, init=False)
class SpectralFunction:
    """Right-continuous nondecreasing step function on ``[0, 1)``.

    ``levels[j]`` is the value on ``[breakpoints[j], breakpoints[j+1])``.
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __init__(self, breakpoints: Sequence[float], levels: Sequence[float]):
        b = tuple(float(x) for x in breakpoints)
        s = tuple(float(x) for x in levels)
        if len(b) != len(s) + 1 or not s:
            raise ValueError("need len(breakpoints) == len(levels) + 1 >= 2")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(x < 0.0 for x in s):
            raise ValueError("levels must be nonnegative")
        if any(s2 < s1 for s1, s2 in zip(s, s[1:])):
            raise ValueError("levels must be nondecreasing")
        mass = sum(lv * (b2 - b1) for lv, b1, b2 in zip(s, b, b[1:]))
        if abs(mass - 1.0) > PROB_TOL:
            raise ValueError(f"spectral function integrates to {mass!r}, not 1")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", s)

    def __call__(self, t: float) -> float:
        if not 0.0 <= t < 1.0:
            raise ValueError("spectral functions live on [0, 1)")
        for lv, b2 in zip(self.levels, self.breakpoints[1:]):
            if t < b2:
                return lv
        return self.levels[-1]

    def cumulative(self, x: float) -> float:
        """Integral of the step function over ``[0, x]``."""
        total = 0.0
        for lv, b1, b2 in zip(self.levels, self.breakpoints, self.breakpoints[1:]):
            if x <= b1:
                break
            total += lv * (min(x, b2) - b1)
        return total


# -- risk specs ------------------------------------------------------------

@dataclass(frozen=True)
class Expectation:
    kind = "expectation"


@dataclass(frozen=True)
class EssSup:
    kind = "esssup"


@dataclass(frozen=True)
class AVaR:
    alpha: float
    kind = "avar"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"AV@R level must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class Spectral:
    sf: SpectralFunction
    kind = "spectral"


RiskSpec = Union[Expectation, EssSup, AVaR, Spectral]


# -- primal evaluation -----------------------------------------------------

def _sorted_pieces(dist: DiscreteDistribution, z: tuple[float, ...]):
    """Ascending ``(value, prob)`` pairs."""
    return sorted(zip(z, dist.probs), key=lambda vp: vp[0])


def quantile(dist: DiscreteDistribution, Z: RandomVariable, t: float) -> float:
    """Left quantile ``inf{z : P(Z <= z) >= t}`` for ``t`` in ``(0, 1]``."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"quantile level must lie in (0, 1], got {t}")
    pieces = _sorted_pieces(dist, dist.align(Z))
    cum = 0.0
    for value, p in pieces:
        cum += p
        if cum >= t - PROB_TOL:
            return value
    return pieces[-1][0]


def _shifted(z: Sequence[float], weights: Sequence[float]) -> float:
    top = max(z)
    return top + sum(w * (v - top) for v, w in zip(z, weights) if w)


def avar_weights(alpha: float, probs: Sequence[float], z: Sequence[float]) -> list[float]:
    """Weights of the AV@R tail: fill mass ``alpha`` from the top down.

    Ties are visited in index order, so the result is deterministic.
    """
    order = sorted(range(len(z)), key=lambda i: (-z[i], i))
    weights = [0.0] * len(z)
    remaining = alpha
    for i in order:
        if remaining <= 1e-15:
            break
        take = min(probs[i], remaining)
        weights[i] = take / alpha
        remaining -= take
    return weights


def spectral_weights(sf: SpectralFunction, probs: Sequence[float], z: Sequence[float]) -> list[float]:
    """Weight of each atom: the spectral mass over its quantile piece."""
    order = sorted(range(len(z)), key=lambda i: (z[i], i))
    weights = [0.0] * len(z)
    cum = 0.0
    lo = 0.0
    for k, i in enumerate(order):
        cum += probs[i]
        hi = 1.0 if k == len(order) - 1 else min(cum, 1.0)
        weights[i] = sf.cumulative(hi) - sf.cumulative(lo)
        lo = hi
    return weights


def evaluate(spec: RiskSpec, dist: DiscreteDistribution, Z: RandomVariable) -> float:
    z = dist.align(Z)
    if isinstance(spec, Expectation):
        return _shifted(z, dist.probs)
    if isinstance(spec, EssSup):
        return max(z)
    if isinstance(spec, AVaR):
        return _shifted(z, avar_weights(spec.alpha, dist.probs, z))
    if isinstance(spec, Spectral):
        return _shifted(z, spectral_weights(spec.sf, dist.probs, z))
    raise TypeError(f"not a risk spec: {spec!r}")


def avar_primal_argmin(alpha: float, dist: DiscreteDistribution, Z: RandomVariable) -> tuple[float, float]:
    """Minimize ``t + E[Z - t]_+ / alpha`` over the atom values.

    Returns ``(t, value)``; among tied minimizers the largest ``t`` wins.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"AV@R level must lie in (0, 1], got {alpha}")
    z = dist.align(Z)
    scored = [(t, t + sum(p * max(v - t, 0.0) for v, p in zip(z, dist.probs)) / alpha)
              for t in sorted(set(z))]
    best = min(val for _, val in scored)
    slack = 1e-12 * max(1.0, abs(best))
    return max(t for t, val in scored if val <= best + slack), best


def avar_primal_oracle(alpha: float, dist: DiscreteDistribution, Z: RandomVariable) -> float:
    return avar_primal_argmin(alpha, dist, Z)[1]


def avar_spectral_function(alpha: float) -> SpectralFunction:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"AV@R level must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return SpectralFunction((0.0, 1.0), (1.0,))
    return SpectralFunction((0.0, 1.0 - alpha, 1.0), (0.0, 1.0 / alpha))


# -- dual side -------------------------------------------------------------

@dataclass(frozen=True)
class DualMaximizer:
    labels: tuple
    density: tuple[float, ...]
    value: float

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.density))


@dataclass(frozen=True)
class ZeroMaximizer:
    maximizer: DualMaximizer
    zero_set: tuple


def dual_polytope(spec: RiskSpec, dist: DiscreteDistribution):
    """``(A_eq, b_eq, lb, ub)`` describing the set of dual densities."""
    m = len(dist)
    A = np.asarray([dist.probs], dtype=float)
    b = np.array([1.0])
    if isinstance(spec, Expectation):
        return A, b, np.ones(m), np.ones(m)
    if isinstance(spec, EssSup):
        return A, b, np.zeros(m), np.full(m, np.inf)
    if isinstance(spec, AVaR):
        return A, b, np.zeros(m), np.full(m, 1.0 / spec.alpha)
    raise UnsupportedRiskSpec(f"no dual machinery for {type(spec).__name__}")


def _attained(dist: DiscreteDistribution, density: Sequence[float], z: Sequence[float]) -> float:
    return sum(p * d * v for p, d, v in zip(dist.probs, density, z))


def dual_argmax(spec: RiskSpec, dist: DiscreteDistribution, Z: RandomVariable) -> DualMaximizer:
    """One maximizing density of the dual representation at ``Z``."""
    z = dist.align(Z)
    m = len(z)
    if isinstance(spec, Expectation):
        density = [1.0] * m
    elif isinstance(spec, EssSup):
        j = max(range(m), key=lambda i: (z[i], -i))
        density = [0.0] * m
        density[j] = 1.0 / dist.probs[j]
    elif isinstance(spec, AVaR):
        # tail weights w_i = p_i * zeta_i
        w = avar_weights(spec.alpha, dist.probs, z)
        density = [wi / p for wi, p in zip(w, dist.probs)]
    else:
        raise UnsupportedRiskSpec(f"no dual machinery for {type(spec).__name__}")
    return DualMaximizer(dist.labels, tuple(density), _attained(dist, density, z))


def _zero_maximizer_by_enumeration(spec, dist, z):
    A, b, lb, ub = dual_polytope(spec, dist)
    c = np.asarray(dist.probs) * np.asarray(z)
    verts, _ = argmax_face_vertices(c, A, b, lb, ub)
    best = None
    for v in verts:
        zeros = tuple(i for i, x in enumerate(v) if abs(x) <= ZERO_TOL)
        if zeros and (best is None or len(zeros) > len(best[1])):
            best = (v, zeros)
    if best is None:
        return None
    v, zeros = best
    density = [0.0 if i in zeros else float(x) for i, x in enumerate(v)]
    return density, zeros


def _zero_maximizer_combinatorial(spec, dist, z):
    m = len(z)
    p = dist.probs
    if isinstance(spec, Expectation) or m == 1:
        return None
    if isinstance(spec, EssSup):
        j = max(range(m), key=lambda i: (z[i], -i))
        density = [0.0] * m
        density[j] = 1.0 / p[j]
        return density, tuple(i for i in range(m) if i != j)
    if not isinstance(spec, AVaR):
        raise UnsupportedRiskSpec(f"no dual machinery for {type(spec).__name__}")
    alpha = spec.alpha
    # Every maximizer fills the atoms above the boundary value, leaves the
    # atoms below it empty, and spreads the leftover tail mass inside the
    # tie block at the boundary.
    order = sorted(range(m), key=lambda i: (-z[i], i))
    above = 0.0
    k = 0
    while k < m:
        block = [i for i in order if z[i] == z[order[k]]]
        block_mass = sum(p[i] for i in block)
        if above + block_mass >= alpha - PROB_TOL:
            break
        above += block_mass
        k += len(block)
    boundary = z[order[k]]
    leftover = alpha - above
    below = [i for i in range(m) if z[i] < boundary]
    tail_mass = [0.0] * m
    for i in range(m):
        if z[i] > boundary:
            tail_mass[i] = p[i]
    skip = None
    if not below:
        # need an atom of the block whose removal still leaves room for the leftover
        j = min(block, key=lambda i: (p[i], i))
        if block_mass - p[j] < leftover - PROB_TOL:
            return None
        skip = j
    remaining = leftover
    for i in block:
        if i == skip or remaining <= 1e-15:
            continue
        take = min(p[i], remaining)
        tail_mass[i] = take
        remaining -= take
    density = [tm / (alpha * pi) for tm, pi in zip(tail_mass, p)]
    zeros = tuple(i for i in range(m) if density[i] <= ZERO_TOL)
    density = [0.0 if i in zeros else d for i, d in enumerate(density)]
    return density, zeros


def exists_zero_maximizer(spec: RiskSpec, dist: DiscreteDistribution, Z: RandomVariable,
                          method: str = "auto") -> Optional[ZeroMaximizer]:
    """A maximizing density vanishing on some atom, or ``None``.

    ``method`` is ``"enumerate"`` (vertices of the argmax face),
    ``"combinatorial"`` (closed-form face description) or ``"auto"``, which
    enumerates up to 12 atoms and uses the closed form beyond.  A zero
    coordinate anywhere on the face shows up at some vertex, so vertex
    enumeration decides the question exactly.
    """
    z = dist.align(Z)
    if isinstance(spec, Spectral):
        raise UnsupportedRiskSpec("no dual machinery for Spectral")
    if method == "auto":
        method = "enumerate" if len(z) <= ENUMERATION_MAX_ATOMS else "combinatorial"
    if method == "enumerate":
        found = _zero_maximizer_by_enumeration(spec, dist, z)
    elif method == "combinatorial":
        found = _zero_maximizer_combinatorial(spec, dist, z)
    else:
        raise ValueError(f"unknown method {method!r}")
    if found is None:
        return None
    density, zeros = found
    mx = DualMaximizer(dist.labels, tuple(density), _attained(dist, density, z))
    return ZeroMaximizer(mx, tuple(dist.labels[i] for i in zeros))


# -- strict monotonicity ---------------------------------------------------

@dataclass(frozen=True)
class MonotonicityWitness:
    """``Z`` dominates ``Z_prime`` strictly yet both have the same risk."""

    labels: tuple
    Z: tuple[float, ...]
    Z_prime: tuple[float, ...]
    value: float
    value_prime: float
    zero_set: tuple
    maximizer: DualMaximizer | None = None


def _strictly_dominates(z, zp) -> bool:
    return all(a >= b for a, b in zip(z, zp)) and any(a > b for a, b in zip(z, zp))


def _candidates(m: int, n_random: int, seed) -> list[tuple[float, ...]]:
    out = [tuple(float(i + 1) for i in range(m))]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        vals = rng.choice(np.arange(-10 * m, 10 * m + 1), size=m, replace=False)
        out.append(tuple(float(v) for v in vals))
    return out


def _check_witness(spec, dist, z, zp, zero_set, maximizer=None) -> MonotonicityWitness:
    v, vp = evaluate(spec, dist, z), evaluate(spec, dist, zp)
    if not _strictly_dominates(z, zp) or abs(v - vp) > EQ_TOL:
        raise RuntimeError(f"witness construction failed: rho(Z)={v!r}, rho(Z')={vp!r}")
    return MonotonicityWitness(dist.labels, tuple(z), tuple(zp), v, vp, zero_set, maximizer)


def strict_monotonicity_witness(spec: RiskSpec, dist: DiscreteDistribution,
                                candidates: Sequence[RandomVariable] | None = None,
                                n_random: int = 20, seed=0,
                                method: str = "auto") -> Optional[MonotonicityWitness]:
    """Search for ``Z`` and ``Z' = Z - 1_A`` with equal risk.

    ``A`` is the zero set of a maximizing dual density at ``Z``.  Candidates
    default to ``Z_i = i`` (1-based, in label order) followed by ``n_random``
    random variables with distinct values.
    """
    if isinstance(spec, Spectral):
        raise UnsupportedRiskSpec("use spectral_monotonicity_witness for spectral measures")
    if candidates is None:
        candidates = _candidates(len(dist), n_random, seed)
    for cand in candidates:
        z = dist.align(cand)
        found = exists_zero_maximizer(spec, dist, z, method=method)
        if found is None:
            continue
        zero_set = set(found.zero_set)
        zp = tuple(v - 1.0 if lab in zero_set else v for lab, v in zip(dist.labels, z))
        return _check_witness(spec, dist, z, zp, found.zero_set, found.maximizer)
    return None


def spectral_monotonicity_witness(sf: SpectralFunction,
                                  dist: DiscreteDistribution) -> Optional[MonotonicityWitness]:
    """Strict-monotonicity check for a single spectral function.

    On a finite space the lowest-ranked atom gets spectral mass
    ``sf.cumulative(p)``, smallest when that atom is the least likely one.
    If that mass is zero, lowering the atom leaves the risk unchanged.
    """
    m = len(dist)
    j = min(range(m), key=lambda i: (dist.probs[i], i))
    if sf.cumulative(dist.probs[j]) > 0.0:
        return None
    z = [float(m + 1)] * m
    rank = 2
    for i in range(m):
        if i != j:
            z[i] = float(rank)
            rank += 1
    z[j] = 1.0
    zp = list(z)
    zp[j] = 0.0
    return _check_witness(Spectral(sf), dist, tuple(z), tuple(zp), (dist.labels[j],))


def spectral_strictly_monotone(sf: SpectralFunction, dist: DiscreteDistribution | None = None) -> bool:
    """Whether the spectral measure is strictly monotone.

    Without a distribution this is the atomless criterion: the function is
    strictly positive on ``(0, 1)``.  With one, the finite-space version is
    used (see :func:`spectral_monotonicity_witness`).
    """
    if dist is None:
        return sf.levels[0] > 0.0
    return spectral_monotonicity_witness(sf, dist) is None
