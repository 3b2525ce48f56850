"""Vertex enumeration for small bounded polytopes.

Polytopes have the form ``{x : A x = b, lb <= x <= ub}``.  Every vertex is a
basic feasible solution: pick ``rank(A)`` basic columns with a nonsingular
submatrix, pin each remaining coordinate at one of its finite bounds, and
solve for the basic part.  Exhaustive, so only meant for a dozen or so
coordinates.
"""

from __future__ import annotations

import itertools

import numpy as np

FEAS_TOL = 1e-10


def _independent_rows(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows: list[int] = []
    for i in range(A.shape[0]):
        trial = rows + [i]
        if np.linalg.matrix_rank(A[trial], tol=1e-12) == len(trial):
            rows = trial
    if not rows:
        return A[:0], b[:0]
    # dropped rows must be implied by the kept ones
    sol, *_ = np.linalg.lstsq(A[rows].T, A.T, rcond=None)
    if not np.allclose(sol.T @ b[rows], b, atol=1e-9):
        raise ValueError("inconsistent equality system")
    return A[rows], b[rows]


def enumerate_vertices(A, b, lb, ub, tol: float = FEAS_TOL) -> np.ndarray:
    """All vertices of ``{A x = b, lb <= x <= ub}`` as rows, deduplicated.

    ``lb`` must be finite; entries of ``ub`` may be ``inf``.  Returns an
    empty ``(0, n)`` array when the polytope is empty.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n = A.shape[1]
    if not np.all(np.isfinite(lb)):
        raise ValueError("lower bounds must be finite")
    try:
        A, b = _independent_rows(A, b)
    except ValueError:
        return np.zeros((0, n))
    r = A.shape[0]

    found: list[np.ndarray] = []
    for basis in itertools.combinations(range(n), r):
        B = A[:, basis] if r else np.zeros((0, 0))
        if r and abs(np.linalg.det(B)) < 1e-12:
            continue
        rest = [j for j in range(n) if j not in basis]
        choices = [[lb[j]] + ([ub[j]] if np.isfinite(ub[j]) and ub[j] != lb[j] else [])
                   for j in rest]
        for pinned in itertools.product(*choices):
            x = np.empty(n)
            x[rest] = pinned
            if r:
                rhs = b - A[:, rest] @ np.asarray(pinned, dtype=float)
                x[list(basis)] = np.linalg.solve(B, rhs)
            if np.all(x >= lb - tol) and np.all(x <= ub + tol):
                found.append(x)
    if not found:
        return np.zeros((0, n))
    verts = np.array(found)
    # deduplicate degenerate bases hitting the same point
    keep: list[np.ndarray] = []
    for v in verts[np.lexsort(verts.T[::-1])]:
        if all(np.max(np.abs(v - k)) > 1e-9 for k in keep):
            keep.append(v)
    return np.array(keep)


def argmax_face_vertices(c, A, b, lb, ub, tol: float = FEAS_TOL) -> tuple[np.ndarray, float]:
    """Vertices of the face of the polytope maximizing ``c @ x``.

    Returns ``(vertices, optimum)``.  The face is itself a polytope obtained
    by appending the hyperplane ``c @ x = optimum``; its vertices are exactly
    the maximizing vertices of the original polytope.
    """
    verts = enumerate_vertices(A, b, lb, ub, tol)
    if len(verts) == 0:
        raise ValueError("empty polytope")
    c = np.asarray(c, dtype=float)
    scores = verts @ c
    best = float(scores.max())
    slack = tol * max(1.0, abs(best))
    return verts[scores >= best - slack], best
