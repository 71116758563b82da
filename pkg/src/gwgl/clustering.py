"""Correlation-driven grouping of predictors by normalized spectral clustering.

Predictors (columns of the standardized design) are the points. For
unit-norm columns the Gaussian similarity is a monotone function of the
sample correlation (||x_i - x_j||^2 = 2(1 - rho)), so clustering the columns
realizes correlation-based grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import GroupStructure


@dataclass
class ClusteringConfig:
    """``"auto"`` selects k as the smallest connected graph, sigma as the mean
    k-th neighbor distance, and the cluster count by the largest eigengap."""

    k_neighbors: int | str = "auto"
    n_clusters: int | str = "auto"
    sigma: float | str = "auto"
    kmeans_restarts: int = 10
    kmeans_iters: int = 300
    seed: int = 0


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    weights: np.ndarray  # symmetric, zero diagonal, entries in [0, 1]
    k: int
    sigma: float


def _pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    sq = (points * points).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _knn_adjacency(d2: np.ndarray, k: int) -> np.ndarray:
    p = d2.shape[0]
    order = np.argsort(d2 + np.diag(np.full(p, np.inf)), axis=1, kind="stable")
    adj = np.zeros((p, p), dtype=bool)
    rows = np.repeat(np.arange(p), k)
    adj[rows, order[:, :k].ravel()] = True
    return adj | adj.T  # union rule


def _connected(adj: np.ndarray) -> bool:
    return _component_labels(adj).max() == 0


def _component_labels(adj: np.ndarray) -> np.ndarray:
    p = adj.shape[0]
    labels = np.full(p, -1, dtype=int)
    comp = 0
    for start in range(p):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = comp
        while stack:
            i = stack.pop()
            for j in np.nonzero(adj[i])[0]:
                if labels[j] < 0:
                    labels[j] = comp
                    stack.append(j)
        comp += 1
    return labels


def select_knn_k(points: np.ndarray) -> int:
    """Smallest k >= 1 whose union-kNN graph is connected."""
    points = np.asarray(points, dtype=float)
    p = points.shape[0]
    if p < 2:
        raise ValueError("need at least 2 points, got %d" % p)
    d2 = _pairwise_sq_dists(points)
    for k in range(1, p):
        if _connected(_knn_adjacency(d2, k)):
            return k
    return p - 1


def select_sigma(points: np.ndarray, k: int) -> float:
    """Mean Euclidean distance of a point to its k-th nearest other point."""
    points = np.asarray(points, dtype=float)
    p = points.shape[0]
    if not 1 <= k < p:
        raise ValueError("k must satisfy 1 <= k < number of points")
    d = np.sqrt(_pairwise_sq_dists(points))
    d = d + np.diag(np.full(p, np.inf))
    kth = np.sort(d, axis=1)[:, k - 1]
    return float(kth.mean())


def build_similarity_graph(points: np.ndarray,
                           config: ClusteringConfig) -> SimilarityGraph:
    """Gaussian similarities exp(-d^2 / (2 sigma^2)) on union-kNN neighbor pairs."""
    points = np.asarray(points, dtype=float)
    k = select_knn_k(points) if config.k_neighbors == "auto" \
        else int(config.k_neighbors)
    if not 1 <= k < points.shape[0]:
        raise ValueError("k_neighbors must satisfy 1 <= k < number of points")
    sigma = select_sigma(points, k) if config.sigma == "auto" \
        else float(config.sigma)
    if sigma <= 0.0:
        raise ValueError("similarity scale sigma is zero "
                         "(all points identical?)")
    d2 = _pairwise_sq_dists(points)
    W = np.exp(-d2 / (2.0 * sigma * sigma))
    W[~_knn_adjacency(d2, k)] = 0.0
    np.fill_diagonal(W, 0.0)
    return SimilarityGraph(weights=W, k=k, sigma=sigma)


def normalized_laplacian(W: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} W D^{-1/2}."""
    deg = W.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
    return np.eye(W.shape[0]) - W * inv_sqrt[:, None] * inv_sqrt[None, :]


def eigengap_select(eigenvalues) -> int:
    """Cluster count at the largest gap of the ascending spectrum.

    Ties break toward the smaller count.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    if ev.ndim != 1 or ev.size < 2:
        raise ValueError("need an ascending list of at least 2 eigenvalues")
    if np.any(np.diff(ev) < -1e-12):
        raise ValueError("eigenvalues must be ascending")
    gaps = np.diff(ev)
    return int(np.argmax(gaps)) + 1


def _kmeans_once(X: np.ndarray, c: int, rng, iters: int):
    n = X.shape[0]
    # kmeans++ seeding
    centers = np.empty((c, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, c):
        total = d2.sum()
        if total <= 0:
            centers[i] = X[rng.integers(n)]
        else:
            centers[i] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centers[i]) ** 2).sum(axis=1))
    labels = np.zeros(n, dtype=int)
    for _ in range(iters):
        dists = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        for j in range(c):
            members = new_labels == j
            if not members.any():
                # empty cluster: reseed at the point farthest from its center
                far = dists[np.arange(n), new_labels].argmax()
                centers[j] = X[far]
                new_labels[far] = j
                members = new_labels == j
            centers[j] = X[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    dists = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(dists[np.arange(n), labels].sum())
    return labels, inertia


def _kmeans(X: np.ndarray, c: int, restarts: int, iters: int, seed: int):
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, inertia = _kmeans_once(X, c, rng, iters)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best[0]


def cluster_predictors(X: np.ndarray, config: ClusteringConfig) -> GroupStructure:
    """Group the columns of a standardized design matrix.

    Builds the union-kNN Gaussian similarity graph on the columns, takes the
    bottom eigenvectors of the symmetric normalized Laplacian, row-normalizes
    the spectral embedding, and runs seeded k-means restarts (best inertia
    wins). Deterministic for a fixed config.
    """
    X = np.asarray(X, dtype=float)
    points = X.T
    p = points.shape[0]
    graph = build_similarity_graph(points, config)
    L = normalized_laplacian(graph.weights)
    eigvals, eigvecs = np.linalg.eigh(L)
    if config.n_clusters == "auto":
        c = eigengap_select(eigvals)
    else:
        c = int(config.n_clusters)
    if not 1 <= c <= p:
        raise ValueError("number of clusters must lie in 1..%d, got %d" % (p, c))
    if c == p:
        labels = np.arange(p)
    elif c == 1:
        labels = np.zeros(p, dtype=int)
    else:
        emb = eigvecs[:, :c]
        norms = np.linalg.norm(emb, axis=1)
        emb = emb / np.where(norms > 0, norms, 1.0)[:, None]
        labels = _kmeans(emb, c, config.kmeans_restarts, config.kmeans_iters,
                         config.seed)
    # order groups by their smallest member for a stable output
    groups = [tuple(np.nonzero(labels == j)[0]) for j in range(labels.max() + 1)]
    groups = [g for g in groups if g]
    groups.sort(key=lambda g: g[0])
    return GroupStructure(groups=tuple(groups), p=p)


def clustering_diagnostics(X: np.ndarray, config: ClusteringConfig) -> dict:
    """Graph parameters and Laplacian spectrum backing a clustering run."""
    X = np.asarray(X, dtype=float)
    points = X.T
    graph = build_similarity_graph(points, config)
    L = normalized_laplacian(graph.weights)
    eigvals = np.linalg.eigh(L)[0]
    c = eigengap_select(eigvals) if config.n_clusters == "auto" \
        else int(config.n_clusters)
    return {"k": int(graph.k), "sigma": float(graph.sigma),
            "n_clusters": int(c),
            "eigenvalues": [float(v) for v in eigvals]}
