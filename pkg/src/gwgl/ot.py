"""Exact order-one transport distances between small discrete distributions,
the outlier-mixture distance ratio, and the worst-case expected loss over a
transport ball around the empirical distribution.

Costs of +inf mark forbidden moves (used for label mismatches in
classification, where points with different labels are infinitely far apart).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import GroupStructure
from .norms import WeightedGroupNorm, group_norm_qt
from .simplex import simplex_max

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite support points (rows) with probability weights."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, dtype=float))
        probs = np.asarray(self.probs, dtype=float).ravel()
        if support.shape[0] != probs.shape[0]:
            raise ValueError("need one probability per support point")
        if support.shape[0] == 0:
            raise ValueError("support must be non-empty")
        if not np.all(np.isfinite(support)):
            raise ValueError("support points must be finite")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError("probabilities sum to %.17g, off by more than %g"
                             % (probs.sum(), PROB_TOL))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def empirical(cls, points) -> "DiscreteDistribution":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        return cls(support=points, probs=np.full(n, 1.0 / n))

    def to_dict(self) -> dict:
        return {"support": [[float(v) for v in row] for row in self.support],
                "probs": [float(v) for v in self.probs]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteDistribution":
        return cls(support=np.asarray(d["support"], dtype=float),
                   probs=np.asarray(d["probs"], dtype=float))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    matrix: np.ndarray  # rows: source support, cols: target support

    def __post_init__(self):
        object.__setattr__(self, "matrix",
                           np.asarray(self.matrix, dtype=float))

    def check_marginals(self, source: DiscreteDistribution,
                        target: DiscreteDistribution, tol: float = 1e-9):
        if np.abs(self.matrix.sum(axis=1) - source.probs).max() > tol:
            raise ValueError("row sums do not match the source weights")
        if np.abs(self.matrix.sum(axis=0) - target.probs).max() > tol:
            raise ValueError("column sums do not match the target weights")


def lp_metric(p: float = 2.0):
    """Plain l_p ground metric."""
    if math.isinf(p):
        return lambda a, b: float(np.abs(a - b).max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return lambda a, b: float(np.linalg.norm(a - b, ord=p))


def group_metric(structure: GroupStructure, norm: WeightedGroupNorm):
    """Weighted (q,t) group norm of the difference (response block included
    when the norm carries a response weight)."""
    return lambda a, b: group_norm_qt(np.asarray(a, float) - np.asarray(b, float),
                                      structure, norm)


def label_metric(base):
    """Treat the last coordinate as a label: mismatches cost +inf, otherwise
    the base metric on the remaining coordinates."""
    def s(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a[-1] != b[-1]:
            return math.inf
        return base(a[:-1], b[:-1])
    return s


def _as_metric(metric):
    if metric is None:
        return lp_metric(2.0)
    if callable(metric):
        return metric
    if isinstance(metric, (int, float)):
        return lp_metric(float(metric))
    if isinstance(metric, tuple) and len(metric) == 2:
        return group_metric(*metric)
    raise TypeError("metric must be None, an exponent, a callable, or a "
                    "(structure, norm) pair")


def _cost_matrix(src: np.ndarray, dst: np.ndarray, metric) -> np.ndarray:
    C = np.empty((src.shape[0], dst.shape[0]))
    for i, a in enumerate(src):
        for j, b in enumerate(dst):
            C[i, j] = metric(a, b)
    return C


def _northwest_basis(a: np.ndarray, b: np.ndarray):
    """Northwest-corner basic feasible cells (exactly m+n-1 of them)."""
    m, n = a.shape[0], b.shape[0]
    a = a.copy()
    b = b.copy()
    i = j = 0
    cells = []
    flows = []
    while i < m and j < n:
        take = min(a[i], b[j])
        cells.append((i, j))
        flows.append(take)
        if a[i] <= b[j]:
            b[j] -= a[i]
            a[i] = 0.0
            i += 1
        else:
            a[i] -= b[j]
            b[j] = 0.0
            j += 1
    return cells, flows


def _solve_transport(a: np.ndarray, b: np.ndarray, C: np.ndarray):
    """Exact minimum-cost transport between positive weight vectors a, b."""
    m, n = C.shape
    finite = np.isfinite(C)
    if not finite.all():
        # big-M stand-in; feasibility re-checked on the returned plan
        big = 1e4 * (m + n) * (np.abs(C[finite]).max(initial=0.0) + 1.0)
        C = np.where(finite, C, big)
    # equality rows for every source and all but the last (redundant) target
    nvars = m * n
    A = np.zeros((m + n - 1, nvars))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1.0
    for j in range(n - 1):
        A[m + j, j::n] = 1.0
    rhs = np.concatenate([a, b[:-1]])
    cells, _ = _northwest_basis(a, b)
    basis = [i * n + j for i, j in cells]
    x, value, _ = simplex_max(-C.ravel(), A, rhs, basis)
    plan = x.reshape(m, n)
    if not finite.all() and plan[~finite].sum() > 1e-9:
        return math.inf, None
    return float((plan * np.where(finite, C, 0.0)).sum()), plan


def _components(finite: np.ndarray):
    """Connected components of the bipartite graph of finite-cost cells."""
    m, n = finite.shape
    label_src = np.full(m, -1)
    label_dst = np.full(n, -1)
    comp = 0
    for start in range(m):
        if label_src[start] >= 0:
            continue
        stack = [("s", start)]
        label_src[start] = comp
        while stack:
            side, idx = stack.pop()
            if side == "s":
                for j in np.nonzero(finite[idx])[0]:
                    if label_dst[j] < 0:
                        label_dst[j] = comp
                        stack.append(("d", j))
            else:
                for i in np.nonzero(finite[:, idx])[0]:
                    if label_src[i] < 0:
                        label_src[i] = comp
                        stack.append(("s", i))
        comp += 1
    return label_src, label_dst, comp


def w1_discrete(P: DiscreteDistribution, Q: DiscreteDistribution, metric=None):
    """Exact order-one transport cost and an optimal plan.

    Returns (cost, TransportPlan). When forbidden (+inf) moves make the
    problem infeasible the cost is inf and the plan is None.
    """
    metric = _as_metric(metric)
    if P.support.shape[1] != Q.support.shape[1]:
        raise ValueError("supports live in different dimensions")
    src_keep = np.nonzero(P.probs > 0)[0]
    dst_keep = np.nonzero(Q.probs > 0)[0]
    a = P.probs[src_keep]
    b = Q.probs[dst_keep]
    C = _cost_matrix(P.support[src_keep], Q.support[dst_keep], metric)
    m, n = C.shape
    full_plan = np.zeros((P.support.shape[0], Q.support.shape[0]))

    finite = np.isfinite(C)
    if finite.all():
        cost, plan = _solve_transport(a, b, C)
    else:
        label_src, label_dst, ncomp = _components(finite)
        if (label_dst < 0).any() or (label_src < 0).any():
            return math.inf, None
        cost = 0.0
        plan = np.zeros((m, n))
        for k in range(ncomp):
            si = np.nonzero(label_src == k)[0]
            dj = np.nonzero(label_dst == k)[0]
            if abs(a[si].sum() - b[dj].sum()) > PROB_TOL:
                return math.inf, None
            sub_cost, sub_plan = _solve_transport(a[si], b[dj],
                                                  C[np.ix_(si, dj)])
            if sub_plan is None:
                return math.inf, None
            cost += sub_cost
            plan[np.ix_(si, dj)] = sub_plan
    if plan is None:
        return math.inf, None
    full_plan[np.ix_(src_keep, dst_keep)] = plan
    result = TransportPlan(matrix=full_plan)
    result.check_marginals(P, Q)
    return cost, result


def _merge_support(points: np.ndarray, probs: np.ndarray):
    seen = {}
    rows = []
    weights = []
    for point, w in zip(points, probs):
        key = point.tobytes()
        if key in seen:
            weights[seen[key]] += w
        else:
            seen[key] = len(rows)
            rows.append(point)
            weights.append(float(w))
    return np.asarray(rows), np.asarray(weights)


def mixture_ratio(P: DiscreteDistribution, P_out: DiscreteDistribution,
                  q: float, metric=None) -> float:
    """W1(P_out, mix) / W1(P, mix) for the contaminated mixture
    mix = q * P_out + (1 - q) * P. Duplicate support points are merged."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    pts = np.concatenate([P_out.support, P.support])
    wts = np.concatenate([q * P_out.probs, (1.0 - q) * P.probs])
    mix_pts, mix_wts = _merge_support(pts, wts)
    mix = DiscreteDistribution(support=mix_pts, probs=mix_wts)
    w_out, _ = w1_discrete(P_out, mix, metric)
    w_true, _ = w1_discrete(P, mix, metric)
    if w_true <= 1e-15:
        raise ValueError("the two distributions coincide: the mixture equals "
                         "the true distribution and the ratio is undefined")
    return w_out / w_true


def _loss_values(Z: np.ndarray, beta: np.ndarray, loss: str) -> np.ndarray:
    x = Z[:, :-1]
    y = Z[:, -1]
    margins = x @ beta
    if loss == "lad":
        return np.abs(y - margins)
    if loss == "logloss":
        return np.logaddexp(0.0, -y * margins)
    raise ValueError("unknown loss %r" % loss)


def dro_worstcase(X, y, beta, epsilon: float, support, loss: str,
                  metric=None) -> float:
    """Exact worst-case expected loss over the transport ball of radius
    epsilon around the empirical distribution, restricted to the finite
    candidate support.

    ``support`` is a (K, p+1) array of predictor-response points containing
    every sample; the maximization over couplings is solved as a desk-scale
    linear program.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    beta = np.asarray(beta, dtype=float).ravel()
    Z = np.atleast_2d(np.asarray(support, dtype=float))
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if Z.shape[1] != X.shape[1] + 1:
        raise ValueError("support points must have predictor dimension + 1")
    metric = _as_metric(metric)
    samples = np.column_stack([X, y])
    N = samples.shape[0]
    K = Z.shape[0]

    own = []
    for i, s in enumerate(samples):
        hits = np.nonzero(np.all(Z == s, axis=1))[0]
        if hits.size == 0:
            raise ValueError("sample %d is missing from the candidate support"
                             % i)
        own.append(int(hits[0]))

    losses = _loss_values(Z, beta, loss)
    C = _cost_matrix(samples, Z, metric)

    variables = [(i, j) for i in range(N) for j in range(K)
                 if np.isfinite(C[i, j])]
    nv = len(variables)
    A = np.zeros((N + 1, nv + 1))
    cobj = np.zeros(nv + 1)
    for k, (i, j) in enumerate(variables):
        A[i, k] = 1.0
        A[N, k] = C[i, j]
        cobj[k] = losses[j]
    A[N, nv] = 1.0  # slack for the budget row
    rhs = np.concatenate([np.full(N, 1.0 / N), [epsilon]])
    basis = [variables.index((i, own[i])) for i in range(N)] + [nv]
    _, value, _ = simplex_max(cobj, A, rhs, basis)
    return float(value)
