"""Evaluation metrics and the grouping-effect diagnostic."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .groups import GroupStructure, validate_groups


def mad(y_true, y_pred) -> float:
    """Median absolute residual (even length: mean of the middle two)."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("lengths differ: %d vs %d" % (len(y_true), len(y_pred)))
    if y_true.size == 0:
        raise ValueError("empty input")
    return float(np.median(np.abs(y_true - y_pred)))


@dataclass(frozen=True)
class OracleScores:
    rr: float
    rte: float
    pve: float
    ideal_rr: float
    ideal_rte: float
    ideal_pve: float
    null_rr: float
    null_rte: float
    null_pve: float


def oracle_scores(beta_hat, beta_star, Sigma, sigma2: float) -> OracleScores:
    """Relative risk, relative test error, and proportion of variance
    explained of an estimate against the generating model, together with the
    ideal (estimate equal to the truth) and null (zero estimate) references.
    """
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    beta_star = np.asarray(beta_star, dtype=float).ravel()
    Sigma = np.asarray(Sigma, dtype=float)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if Sigma.shape != (beta_star.size, beta_star.size):
        raise ValueError("Sigma must be p x p")
    if np.abs(Sigma - Sigma.T).max() > 1e-10:
        raise ValueError("Sigma must be symmetric")
    signal = float(beta_star @ Sigma @ beta_star)
    if signal <= 0:
        raise ValueError("beta*' Sigma beta* is zero: relative risk undefined")

    def scores(b):
        delta = b - beta_star
        risk = float(delta @ Sigma @ delta)
        rr = risk / signal
        rte = (risk + sigma2) / sigma2
        pve = 1.0 - (risk + sigma2) / (signal + sigma2)
        return rr, rte, pve

    rr, rte, pve = scores(beta_hat)
    irr, irte, ipve = scores(beta_star)
    nrr, nrte, npve = scores(np.zeros_like(beta_star))
    return OracleScores(rr=rr, rte=rte, pve=pve, ideal_rr=irr, ideal_rte=irte,
                        ideal_pve=ipve, null_rr=nrr, null_rte=nrte,
                        null_pve=npve)


def wgd(beta_hat, X, structure: GroupStructure) -> float:
    """Within-group difference: over groups of size >= 2, the pair-averaged
    |beta_i - beta_j| / |x_i' x_j|. X must be standardized so the column inner
    products are sample correlations; zero-correlation pairs are an error
    since the ratio divides by them."""
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    validate_groups(structure, X.shape[1])
    big = [g for g in structure.groups if len(g) >= 2]
    if not big:
        raise ValueError("no group of size >= 2")
    total = 0.0
    for g in big:
        acc = 0.0
        pairs = 0
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                i, j = g[a], g[b]
                corr = float(X[:, i] @ X[:, j])
                if corr == 0.0:
                    raise ValueError(
                        "predictors %d and %d are uncorrelated; the "
                        "within-group ratio divides by their correlation"
                        % (i, j))
                acc += abs((beta_hat[i] - beta_hat[j]) / corr)
                pairs += 1
        total += acc / pairs
    return total / len(big)


@dataclass(frozen=True)
class PairCheck:
    i: int
    j: int
    value: float       # normalized coefficient difference D(i, j)
    bound: float
    correlation: float
    passed: bool


@dataclass(frozen=True)
class GroupingReport:
    pairs: tuple
    skipped: tuple  # predictor indices inside zero-norm blocks
    all_pass: bool

    def to_dict(self) -> dict:
        return {"all_pass": self.all_pass,
                "n_pairs": len(self.pairs),
                "skipped": list(self.skipped),
                "worst_margin": max((p.value - p.bound for p in self.pairs),
                                    default=0.0)}


def grouping_bound_check(fit, X, structure: GroupStructure,
                         epsilon: float) -> GroupingReport:
    """Check every eligible predictor pair against the correlation bound
    sqrt(2(1 - rho)) / (sqrt(N) eps) on the normalized coefficient difference.

    Pairs whose group block norm vanishes are skipped (the bound only binds
    at nonzero blocks). A small multiplicative and additive slack absorbs
    solver tolerance.
    """
    X = np.asarray(X, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    beta = np.asarray(fit.beta, dtype=float)
    validate_groups(structure, X.shape[1])
    N = X.shape[0]
    gid = structure.group_of()
    norms = np.zeros(structure.n_groups)
    for l, g in enumerate(structure.groups):
        norms[l] = np.linalg.norm(beta[list(g)])
    sqrt_sizes = structure.sqrt_sizes()
    live = norms > 1e-12
    skipped = tuple(int(j) for j in range(structure.p) if not live[gid[j]])
    pairs = []
    all_pass = True
    idx = [j for j in range(structure.p) if live[gid[j]]]
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            li, lj = gid[i], gid[j]
            value = abs(sqrt_sizes[li] * beta[i] / norms[li]
                        - sqrt_sizes[lj] * beta[j] / norms[lj])
            rho = float(X[:, i] @ X[:, j])
            bound = math.sqrt(max(2.0 * (1.0 - rho), 0.0)) / (math.sqrt(N)
                                                              * epsilon)
            ok = value <= bound * (1.0 + 1e-3) + 1e-6
            all_pass = all_pass and ok
            pairs.append(PairCheck(i=i, j=j, value=value, bound=bound,
                                   correlation=rho, passed=ok))
    return GroupingReport(pairs=tuple(pairs), skipped=skipped,
                          all_pass=all_pass)


def mpi(ours, others, direction: str = "minimize", sweep_points=None):
    """Maximum percentage improvement of our metric sweep over the best
    competitor, and the sweep point where it is attained.

    ``others`` maps method name to its metric values (or is a 2d array, one
    row per method). Sweep points default to 1-based positions.
    """
    ours = np.asarray(ours, dtype=float).ravel()
    if isinstance(others, dict):
        mat = np.vstack([np.asarray(v, dtype=float).ravel()
                         for v in others.values()])
    else:
        mat = np.atleast_2d(np.asarray(others, dtype=float))
    if mat.shape[0] < 1:
        raise ValueError("need at least one competing method")
    if mat.shape[1] != ours.size:
        raise ValueError("sweep lengths differ")
    if direction not in ("minimize", "maximize"):
        raise ValueError("direction must be minimize or maximize")
    if sweep_points is None:
        sweep_points = np.arange(1, ours.size + 1)
    sweep_points = np.asarray(sweep_points)
    best_other = mat.min(axis=0) if direction == "minimize" else mat.max(axis=0)
    best_val = -np.inf
    best_point = None
    for k in range(ours.size):
        if best_other[k] == 0.0:
            warnings.warn("best competitor is 0 at sweep point %r; skipped"
                          % sweep_points[k])
            continue
        if direction == "minimize":
            gain = 100.0 * (best_other[k] - ours[k]) / best_other[k]
        else:
            gain = 100.0 * (ours[k] - best_other[k]) / best_other[k]
        if gain > best_val:
            best_val = gain
            best_point = sweep_points[k]
    if best_point is None:
        raise ValueError("every sweep point was skipped")
    return float(best_val), best_point
