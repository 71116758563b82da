"""Weighted (q,t) group norms, their duals, and the overlapping-group penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import GroupStructure, validate_groups


def _conjugate_exponent(q: float) -> float:
    if q == 1.0:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


@dataclass(frozen=True, eq=False)
class WeightedGroupNorm:
    """(q,t)-norm spec: l_t of the per-group weighted l_q norms.

    ``weights`` holds one positive scalar per group. When ``response_weight``
    is set, vectors carry one extra trailing entry treated as the response,
    contributing ``response_weight * |y|`` as an additional block.
    """

    q: float
    t: float
    weights: np.ndarray
    response_weight: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "weights",
                           np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.q < 1 or self.t < 1:
            raise ValueError("q and t must lie in [1, inf]")
        if np.any(self.weights <= 0):
            raise ValueError("group weights must be positive")
        if self.response_weight is not None:
            object.__setattr__(self, "response_weight", float(self.response_weight))
            if self.response_weight <= 0:
                raise ValueError("response weight must be positive")

    @classmethod
    def two_infinity(cls, structure: GroupStructure,
                     response_weight: float | None = None) -> "WeightedGroupNorm":
        """Max of per-group l2 norms weighted by 1/sqrt(group size)."""
        return cls(q=2.0, t=math.inf, weights=1.0 / structure.sqrt_sizes(),
                   response_weight=response_weight)

    def dual(self) -> "WeightedGroupNorm":
        """Conjugate exponents, inverted weights (response weight included)."""
        m = None if self.response_weight is None else 1.0 / self.response_weight
        return WeightedGroupNorm(q=_conjugate_exponent(self.q),
                                 t=_conjugate_exponent(self.t),
                                 weights=1.0 / self.weights,
                                 response_weight=m)


def _block_lq(z_grouped: np.ndarray, starts: np.ndarray, q: float) -> np.ndarray:
    a = np.abs(z_grouped)
    if math.isinf(q):
        return np.maximum.reduceat(a, starts)
    if q == 1.0:
        return np.add.reduceat(a, starts)
    if q == 2.0:
        return np.sqrt(np.add.reduceat(a * a, starts))
    return np.add.reduceat(a ** q, starts) ** (1.0 / q)


def _lt(blocks: np.ndarray, t: float) -> float:
    if math.isinf(t):
        return float(blocks.max()) if blocks.size else 0.0
    if t == 1.0:
        return float(blocks.sum())
    return float((blocks ** t).sum() ** (1.0 / t))


def group_norm_qt(z: np.ndarray, structure: GroupStructure,
                  norm: WeightedGroupNorm) -> float:
    """Weighted (q,t)-norm of z under the group layout.

    With a response weight set, the last entry of z is the response and adds
    the block ``response_weight * |y|``.
    """
    z = np.asarray(z, dtype=float).ravel()
    has_resp = norm.response_weight is not None
    expected = structure.p + (1 if has_resp else 0)
    if z.shape[0] != expected:
        raise ValueError("vector of length %d does not match p=%d%s"
                         % (z.shape[0], structure.p,
                            " plus response entry" if has_resp else ""))
    if norm.weights.shape[0] != structure.n_groups:
        raise ValueError("norm carries %d weights for %d groups"
                         % (norm.weights.shape[0], structure.n_groups))
    perm, starts, _, _ = structure.flat_index()
    blocks = norm.weights * _block_lq(z[perm], starts, norm.q)
    if has_resp:
        blocks = np.append(blocks, norm.response_weight * abs(z[-1]))
    return _lt(blocks, norm.t)


def dual_norm_group(v: np.ndarray, structure: GroupStructure,
                    norm: WeightedGroupNorm) -> float:
    """Dual of the weighted (q,t)-norm: (q*,t*)-norm with inverted weights."""
    return group_norm_qt(v, structure, norm.dual())


def glasso_penalty(beta: np.ndarray, structure: GroupStructure,
                   weights: np.ndarray | None = None) -> float:
    """Sum over groups of w_l * ||beta_l||_2 with w_l = sqrt(group size).

    Only defined for non-overlapping structures; use omega_overlap otherwise.
    """
    if structure.overlapping:
        raise ValueError("glasso_penalty requires non-overlapping groups; "
                         "use omega_overlap")
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != structure.p:
        raise ValueError("beta has length %d, expected %d" % (beta.shape[0],
                                                              structure.p))
    w = structure.sqrt_sizes() if weights is None else np.asarray(weights, float)
    perm, starts, _, _ = structure.flat_index()
    return float(np.dot(w, _block_lq(beta[perm], starts, 2.0)))


def block_soft_threshold(v: np.ndarray, thresholds: np.ndarray,
                         structure: GroupStructure) -> np.ndarray:
    """Blockwise shrink: v_l * max(0, 1 - thr_l / ||v_l||_2), zero at ||v_l||=0."""
    v = np.asarray(v, dtype=float).ravel()
    perm, starts, _, repeats = structure.flat_index()
    w = v[perm]
    norms = np.sqrt(np.add.reduceat(w * w, starts))
    factors = np.zeros_like(norms)
    nz = norms > 0
    factors[nz] = np.maximum(0.0, 1.0 - thresholds[nz] / norms[nz])
    out = np.empty_like(v)
    out[perm] = w * factors[repeats]
    return out


@dataclass(frozen=True, eq=False)
class LatentDecomposition:
    """Per-group latent vectors v_l (rows, supported on their group) and weights."""

    vectors: np.ndarray  # (L, p)
    weights: np.ndarray  # (L,)

    def combined(self) -> np.ndarray:
        return self.vectors.sum(axis=0)

    def value(self) -> float:
        return float(np.dot(self.weights,
                            np.sqrt((self.vectors ** 2).sum(axis=1))))


def _duplication_map(structure: GroupStructure):
    """Original index per duplicated coordinate, plus per-index cover counts."""
    orig = np.concatenate([np.asarray(g, dtype=int) for g in structure.groups])
    cover = np.bincount(orig, minlength=structure.p).astype(float)
    return orig, cover


def omega_overlap(beta: np.ndarray, structure: GroupStructure,
                  d: np.ndarray, tol: float = 1e-8,
                  max_iters: int = 200_000):
    """Minimal sum of d_l * ||v_l||_2 over decompositions beta = sum_l v_l.

    Each v_l is supported on group l. Solved on the duplicated-coordinate
    representation, where the groups are disjoint and the penalty prox is the
    blockwise shrink, by ADMM splitting the group penalty from the affine
    reconstruction constraint. Returns (value, LatentDecomposition).
    """
    validate_groups(structure)
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != structure.p:
        raise ValueError("beta has length %d, expected %d" % (beta.shape[0],
                                                              structure.p))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape[0] != structure.n_groups:
        raise ValueError("need one weight per group")
    if np.any(d <= 0):
        raise ValueError("group weights d must be positive")

    L = structure.n_groups
    orig, cover = _duplication_map(structure)
    covered = cover[np.abs(beta) > 0]
    if covered.size and np.any(covered == 0):
        j = int(np.nonzero((np.abs(beta) > 0) & (cover == 0))[0][0])
        raise ValueError("nonzero coefficient at index %d is covered by no group" % j)

    dup_structure = GroupStructure.from_sizes(structure.sizes)

    def pack(z_dup):
        vectors = np.zeros((L, structure.p))
        _, starts, sizes, _ = dup_structure.flat_index()
        for l in range(L):
            sl = slice(starts[l], starts[l] + sizes[l])
            vectors[l, orig[sl]] = z_dup[sl]
        return vectors

    if not structure.overlapping:
        # unique decomposition: v_l is just beta restricted to group l
        z = beta[orig]
        vectors = pack(z)
        dec = LatentDecomposition(vectors=vectors, weights=d.copy())
        return dec.value(), dec

    scale = float(np.linalg.norm(beta))
    if scale == 0.0:
        dec = LatentDecomposition(vectors=np.zeros((L, structure.p)),
                                  weights=d.copy())
        return 0.0, dec
    b = beta / scale

    def project(v):
        # closest point with bincount-reconstruction equal to b
        resid = np.bincount(orig, weights=v, minlength=structure.p) - b
        return v - (resid / cover)[orig]

    rho = 1.0
    thresholds = d / rho
    z = project(np.zeros(orig.shape[0]))
    u = z.copy()
    w = np.zeros_like(z)
    eps_abs, eps_rel = 1e-12, tol * 1e-2
    for _ in range(max_iters):
        u = block_soft_threshold(z - w, thresholds, dup_structure)
        z_prev = z
        z = project(u + w)
        w = w + u - z
        r = np.linalg.norm(u - z)
        s = rho * np.linalg.norm(z - z_prev)
        bound = eps_abs * math.sqrt(z.size) + eps_rel * max(np.linalg.norm(u),
                                                            np.linalg.norm(z), 1.0)
        if r <= bound and s <= bound:
            break
    vectors = pack(z) * scale
    dec = LatentDecomposition(vectors=vectors, weights=d.copy())
    return dec.value(), dec
