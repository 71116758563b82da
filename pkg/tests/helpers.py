"""Shared reference oracles for the test suite.

Everything here recomputes target quantities along routes independent of the
library's solvers: simplex-free LPs via scipy or raw vertex enumeration,
derivative-free minimization, golden-section search, and explicit sampling.
"""

import numpy as np
from scipy.optimize import linprog, minimize


def random_polish(F, x, seed=0, step0=1.0, shrink=0.5, min_step=1e-11, k=40):
    """Derivative-free descent: random + coordinate directions with greedy
    line extension, shrinking the scale once nothing improves."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, float).copy()
    fx = F(x)
    n = len(x)
    step = step0
    while step > min_step:
        improved = False
        dirs = rng.standard_normal((k, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = np.vstack([dirs, np.eye(n), -np.eye(n)])
        for d in dirs:
            ft = F(x + step * d)
            if ft < fx - 1e-15:
                x = x + step * d
                fx = ft
                improved = True
                while True:
                    ft = F(x + step * d)
                    if ft >= fx - 1e-15:
                        break
                    x = x + step * d
                    fx = ft
        if not improved:
            step *= shrink
    return x, fx


def _nm_chain(F, x, rounds=2):
    res = None
    for _ in range(rounds):
        res = minimize(F, x, method="Nelder-Mead",
                       options=dict(xatol=1e-10, fatol=1e-12, maxiter=8000,
                                    maxfev=8000))
        x = res.x
    return res.x, res.fun


def nm_oracle(F, p, seed=1000, restarts=4, polish_k=60, rounds=3):
    """Restarted Nelder-Mead interleaved with random-direction polish.

    The polish escapes the flat simplices Nelder-Mead collapses into at
    non-smooth valleys; re-running Nelder-Mead from the polished point then
    accelerates along the valley. Returns the best objective value found.
    """
    best_f, best_x = np.inf, None
    for s in range(restarts):
        rr = np.random.default_rng(seed + s)
        x0 = np.zeros(p) if s == 0 else rr.standard_normal(p) * 0.7
        x, f = _nm_chain(F, x0)
        if f < best_f:
            best_f, best_x = f, x
    x, fx = best_x, best_f
    for r in range(rounds):
        x, f_polish = random_polish(F, x, seed=seed + 31 * r, k=polish_k)
        x, f_nm = _nm_chain(F, x, rounds=1)
        new = min(f_polish, f_nm)
        if fx - new < 1e-12:
            fx = min(fx, new)
            break
        fx = new
    return min(fx, best_f)


def structured_oracle(F, blocks, seed=1000, **kw):
    """Minimize over every zero-pattern of the coordinate blocks.

    Group-sparse optima sit at spherical kinks where plain local search has a
    vanishing improvement cone; enumerating which blocks are pinned to zero
    and minimizing the smooth(er) restrictions sidesteps that entirely.
    """
    from itertools import combinations
    dim = sum(len(b) for b in blocks)
    best = F(np.zeros(dim))
    for r in range(1, len(blocks) + 1):
        for keep in combinations(range(len(blocks)), r):
            free = np.concatenate([np.asarray(blocks[k], int) for k in keep])

            def restricted(u, free=free):
                x = np.zeros(dim)
                x[free] = u
                return F(x)

            best = min(best, nm_oracle(restricted, len(free),
                                       seed=seed + 7 * r, **kw))
    return best


def linprog_w1(P, Q, metric):
    """Transport cost by scipy's HiGHS on the full flow LP."""
    C = np.array([[metric(a, b) for b in Q.support] for a in P.support])
    m, n = C.shape
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A[m + j, j::n] = 1.0
    b = np.concatenate([P.probs, Q.probs])
    res = linprog(C.ravel(), A_eq=A[:-1], b_eq=b[:-1], bounds=(0, None),
                  method="highs")
    assert res.status == 0
    return res.fun


def enumerate_lp_vertices_max(c, A, b, tol=1e-9):
    """Exhaustive basic-solution enumeration for a tiny equality-form LP
    (maximize c'x, Ax = b, x >= 0)."""
    from itertools import combinations
    m, n = A.shape
    best = -np.inf
    for cols in combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        x = np.linalg.solve(B, b)
        if np.all(x >= -tol):
            val = float(c[list(cols)] @ np.maximum(x, 0.0))
            best = max(best, val)
    return best


def golden_section(f, lo, hi, tol=1e-10):
    """Minimize a unimodal scalar function on [lo, hi]."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def sample_in_ball(structure, norm, rng):
    """Random point with weighted (q,t)-norm at most 1."""
    from gwgl.norms import group_norm_qt
    dim = structure.p + (1 if norm.response_weight is not None else 0)
    x = rng.standard_normal(dim)
    value = group_norm_qt(x, structure, norm)
    if value == 0.0:
        return x
    return x * (rng.uniform(0.0, 1.0) / value)
