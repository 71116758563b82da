"""Constructive desk-scale oracles for the theorem checks.

These recompute claimed quantities along independent routes (explicit
maximizer construction, direct inequality evaluation) so the closed forms
in the library can be certified numerically.
"""

from __future__ import annotations

import math

import numpy as np

from .groups import GroupStructure
from .norms import WeightedGroupNorm, dual_norm_group, group_norm_qt
from .ot import DiscreteDistribution, dro_worstcase, group_metric, \
    label_metric, mixture_ratio
from .solvers import eval_objective


def _holder_unit_maximizer(v: np.ndarray, q: float) -> np.ndarray:
    """A unit-l_q vector u maximizing v'u (Hoelder equality case)."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.max(initial=0.0) == 0.0:
        u = np.zeros_like(v)
        if u.size:
            u[0] = 1.0
        return u
    if q == 1.0:
        u = np.zeros_like(v)
        k = int(np.argmax(a))
        u[k] = math.copysign(1.0, v[k])
        return u
    if math.isinf(q):
        return np.sign(v) + (v == 0)
    qs = q / (q - 1.0)
    u = np.sign(v) * a ** (qs - 1.0)
    return u / np.linalg.norm(u, ord=q)


def dual_norm_maximizer_oracle(v: np.ndarray, structure: GroupStructure,
                               norm: WeightedGroupNorm) -> float:
    """sup { v'x : ||x_w||_{q,t} <= 1 } by per-group maximizer construction.

    Builds the Hoelder-optimal direction inside every (weighted) group block,
    allocates block magnitudes by a second Hoelder step across blocks, and
    evaluates the inner product numerically.
    """
    v = np.asarray(v, dtype=float).ravel()
    has_resp = norm.response_weight is not None
    blocks = [np.asarray(g, dtype=int) for g in structure.groups]
    weights = list(norm.weights)
    if has_resp:
        blocks.append(np.asarray([structure.p], dtype=int))
        weights.append(norm.response_weight)

    # per-block payoff at unit block budget, and the block directions
    dirs = []
    payoffs = np.zeros(len(blocks))
    for k, g in enumerate(blocks):
        u = _holder_unit_maximizer(v[g], norm.q)
        # scaling so that ||w_k x_g||_q = 1 at unit allocation
        dirs.append(u / weights[k])
        payoffs[k] = float(v[g] @ u) / weights[k]
    alloc = np.abs(_holder_unit_maximizer(payoffs, norm.t))
    x = np.zeros(v.shape[0])
    for k, g in enumerate(blocks):
        x[g] = alloc[k] * dirs[k]
    feas = group_norm_qt(x, structure, norm)
    if feas > 1.0 + 1e-9:
        raise AssertionError("constructed point violates the unit ball: %g"
                             % feas)
    return float(v @ x)


def check_dual_norm(seed: int, trials: int = 1000, max_dim: int = 12) -> dict:
    """Compare the closed-form dual norm against the maximizer oracle."""
    rng = np.random.default_rng(seed)
    qt_choices = [1.0, 1.5, 2.0, 3.0, math.inf]
    worst = 0.0
    for _ in range(trials):
        p = int(rng.integers(2, max_dim + 1))
        cuts = np.sort(rng.choice(np.arange(1, p), size=min(rng.integers(0, 3),
                                                            p - 1),
                                  replace=False))
        sizes = np.diff(np.concatenate([[0], cuts, [p]])).astype(int)
        structure = GroupStructure.from_sizes(sizes)
        use_resp = bool(rng.random() < 0.5)
        norm = WeightedGroupNorm(
            q=qt_choices[rng.integers(len(qt_choices))],
            t=qt_choices[rng.integers(len(qt_choices))],
            weights=rng.uniform(0.3, 3.0, size=len(sizes)),
            response_weight=float(rng.uniform(0.5, 4.0)) if use_resp else None)
        v = rng.standard_normal(p + (1 if use_resp else 0)) * 2.0
        closed = dual_norm_group(v, structure, norm)
        oracle = dual_norm_maximizer_oracle(v, structure, norm)
        worst = max(worst, abs(closed - oracle) / max(1.0, abs(closed)))
    return {"trials": trials, "max_relative_error": worst}


def random_distribution(rng, dim: int, max_points: int = 10,
                        min_points: int = 1) -> DiscreteDistribution:
    n = int(rng.integers(min_points, max_points + 1))
    pts = rng.standard_normal((n, dim)) * 2.0
    w = rng.uniform(0.2, 1.0, size=n)
    return DiscreteDistribution(support=pts, probs=w / w.sum())


def check_mixture_ratio(seed: int, trials: int = 100, q_values=None,
                        dim: int = 2) -> dict:
    """Ratio of distances to the mixture versus the predicted (1-q)/q."""
    rng = np.random.default_rng(seed)
    if q_values is None:
        q_values = [round(0.1 * k, 1) for k in range(1, 10)]
    worst = 0.0
    rows = []
    for k in range(trials):
        q = q_values[k % len(q_values)]
        P = random_distribution(rng, dim)
        P_out = random_distribution(rng, dim)
        ratio = mixture_ratio(P, P_out, q)
        expected = (1.0 - q) / q
        err = abs(ratio - expected)
        worst = max(worst, err)
        rows.append({"q": q, "ratio": ratio, "expected": expected})
    return {"trials": trials, "max_abs_error": worst, "rows": rows}


def check_dro_bound(seed: int, trials: int = 200, response_weight: float = 1.0
                    ) -> dict:
    """Worst-case expected loss never exceeds empirical loss plus radius
    times the dual norm, for both the absolute and logistic losses."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(trials):
        p = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        extra = int(rng.integers(0, 7 - n))
        sizes = [p] if p == 1 or rng.random() < 0.5 else [1, p - 1]
        structure = GroupStructure.from_sizes(sizes)
        beta = rng.standard_normal(p)
        eps = float(rng.uniform(0.0, 1.0))

        # absolute loss with the response inside the metric
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n) * 2.0
        norm = WeightedGroupNorm.two_infinity(structure,
                                              response_weight=response_weight)
        metric = group_metric(structure, norm)
        Zx = rng.standard_normal((extra, p))
        Zy = rng.standard_normal(extra) * 2.0
        Z = np.vstack([np.column_stack([X, y]), np.column_stack([Zx, Zy])])
        worst_case = dro_worstcase(X, y, beta, eps, Z, "lad", metric)
        emp = eval_objective(beta, X, y, structure, 0.0, "lad")
        dual = dual_norm_group(np.append(-beta, 1.0), structure, norm)
        worst = max(worst, worst_case - (emp + eps * dual))

        # logistic loss: labels are immovable in the metric
        ylab = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        metric_lg = label_metric(
            group_metric(structure, WeightedGroupNorm.two_infinity(structure)))
        Zlab = np.where(rng.random(extra) < 0.5, -1.0, 1.0)
        Zg = np.vstack([np.column_stack([X, ylab]),
                        np.column_stack([Zx, Zlab])])
        worst_case = dro_worstcase(X, ylab, beta, eps, Zg, "logloss", metric_lg)
        emp = eval_objective(beta, X, ylab, structure, 0.0, "logloss")
        dual = dual_norm_group(
            beta, structure, WeightedGroupNorm.two_infinity(structure))
        worst = max(worst, worst_case - (emp + eps * dual))
    return {"trials": trials, "max_bound_violation": worst}
