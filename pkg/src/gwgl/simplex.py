"""Dense primal simplex with Bland's rule for small equality-form LPs.

Desk-scale solver (tens of rows, a few thousand columns): the basis system
is re-solved from scratch every pivot, trading speed for simplicity and
numerical freshness. Bland's pivoting rule rules out cycling on the
degenerate bases that transportation polytopes produce.
"""

from __future__ import annotations

import numpy as np


class SimplexError(RuntimeError):
    pass


def simplex_max(c: np.ndarray, A: np.ndarray, b: np.ndarray, basis,
                max_pivots: int = 200_000):
    """Maximize c'x subject to Ax = b, x >= 0, from a feasible starting basis.

    ``basis`` lists column indices of a feasible basic solution (one per
    row, basis matrix nonsingular). Returns (x, value, basis).
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    basis = list(basis)
    if len(basis) != m:
        raise SimplexError("basis size %d does not match %d rows"
                           % (len(basis), m))
    tol = 1e-11 * max(1.0, float(np.abs(c).max(initial=0.0)))
    ratio_tol = 1e-12

    for _ in range(max_pivots):
        B = A[:, basis]
        try:
            xB = np.linalg.solve(B, b)
            yv = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        xB = np.maximum(xB, 0.0)  # clamp degenerate negatives from round-off
        reduced = c - yv @ A
        reduced[basis] = 0.0
        entering = -1
        for j in range(n):  # Bland: smallest improving index
            if reduced[j] > tol:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = xB
            return x, float(c @ x), basis
        direction = np.linalg.solve(B, A[:, entering])
        leave_pos = -1
        best_ratio = np.inf
        best_var = -1
        for i in range(m):
            if direction[i] > ratio_tol:
                ratio = xB[i] / direction[i]
                if ratio < best_ratio - ratio_tol or (
                        abs(ratio - best_ratio) <= ratio_tol
                        and basis[i] < best_var):
                    best_ratio = ratio
                    best_var = basis[i]
                    leave_pos = i
        if leave_pos < 0:
            raise SimplexError("LP is unbounded")
        basis[leave_pos] = entering
    raise SimplexError("pivot limit exceeded")
