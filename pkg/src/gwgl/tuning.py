"""Penalty grids and validation-split tuning."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset, split_dataset
from .groups import GroupStructure
from .solvers import FitConfig, FitResult, fit_glasso_l2, fit_gwgl_lg, \
    fit_gwgl_lr


def worker_count() -> int:
    """Fit parallelism cap from GWGL_THREADS (default: serial)."""
    raw = os.environ.get("GWGL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        warnings.warn("GWGL_THREADS=%r is not an integer; running serial" % raw)
        return 1


def _parallel_map(fn, items):
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def tuning_grid(X, y, structure: GroupStructure, kind: str = "gwgl",
                n: int = 50) -> np.ndarray:
    """Ascending penalty grid anchored at lambda_m = ||X'y||_inf.

    The grid is log-spaced between 0.005 * lambda_m and lambda_m; for the
    absolute-loss estimators the values are divided by the largest group size
    and square-rooted, for the squared-loss baseline divided by its square
    root only.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    kind = kind.replace("-", "_")
    if kind not in ("gwgl", "glasso_l2"):
        raise ValueError("kind must be gwgl or glasso_l2")
    if n < 1:
        raise ValueError("grid length must be >= 1")
    lam_max = float(np.abs(X.T @ y).max())
    if lam_max <= 0:
        raise ValueError("X'y vanishes: the tuning anchor is zero")
    max_size = max(structure.sizes)
    base = np.exp(np.linspace(np.log(0.005 * lam_max), np.log(lam_max), n))
    if kind == "gwgl":
        return np.sqrt(base / max_size)
    return base / np.sqrt(max_size)


def zero_threshold(X, y, structure: GroupStructure, loss: str) -> float:
    """Smallest penalty at which the null vector is stationary.

    Derived from the blockwise subdifferential condition at beta = 0 for the
    mean-normalized losses.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    sqrt_sizes = structure.sqrt_sizes()
    if loss == "lad":
        g = X.T @ np.sign(y) / n
    elif loss == "logloss":
        g = X.T @ y / (2.0 * n)
    elif loss == "l2":
        g = 2.0 * (X.T @ y) / n
    else:
        raise ValueError("unknown loss %r" % loss)
    worst = 0.0
    for l, grp in enumerate(structure.groups):
        worst = max(worst, float(np.linalg.norm(g[list(grp)]))
                    / sqrt_sizes[l])
    return worst


def anchored_grid(X, y, structure: GroupStructure, loss: str,
                  n: int = 50) -> np.ndarray:
    """Log-spaced penalty grid between 0.5% of the null threshold and the
    threshold itself (same shape as tuning_grid, anchored where the
    regularization path of the mean-normalized objective actually lives)."""
    top = zero_threshold(X, y, structure, loss)
    if top <= 0:
        raise ValueError("null threshold is zero: no signal to trade off")
    return np.exp(np.linspace(np.log(0.005 * top), np.log(top), n))


@dataclass
class TuningReport:
    grid: np.ndarray
    validation_losses: np.ndarray  # nan where the fit failed
    chosen_epsilon: float
    refit: FitResult
    kind: str
    loss: str

    def to_dict(self) -> dict:
        return {"grid": [float(v) for v in self.grid],
                "validation_losses": [None if np.isnan(v) else float(v)
                                      for v in self.validation_losses],
                "chosen_epsilon": float(self.chosen_epsilon),
                "kind": self.kind, "loss": self.loss,
                "refit": self.refit.to_dict()}


def _unpenalized_loss(beta, X, y, loss: str) -> float:
    z = X @ beta
    if loss == "lad":
        return float(np.mean(np.abs(y - z)))
    if loss == "logloss":
        return float(np.mean(np.logaddexp(0.0, -y * z)))
    r = y - z
    return float(r @ r) / len(y)


def _fit_for_kind(kind, loss, X, y, structure, eps, config):
    cfg = FitConfig(epsilon=eps, max_iters=config.max_iters, tol=config.tol,
                    tau=config.tau, sigma=config.sigma, seed=config.seed)
    if kind == "glasso_l2":
        return fit_glasso_l2(X, y, structure, eps, cfg)
    if loss == "logloss":
        return fit_gwgl_lg(X, y, structure, cfg)
    return fit_gwgl_lr(X, y, structure, cfg)


def tune_epsilon(train: Dataset, structure: GroupStructure, kind: str = "gwgl",
                 split_seed: int = 0, n_grid: int = 50,
                 validation_fraction: float = 0.25,
                 fit_config: FitConfig | None = None,
                 grid=None) -> TuningReport:
    """Pick the penalty by unpenalized validation loss over the grid.

    The training rows are split once (seeded); every grid value is fitted on
    the fit part and scored on the validation part, ties break toward the
    smaller penalty, and the winner is refitted on all of ``train``. Grid
    values whose fit raises are dropped with a warning. ``grid`` overrides
    the default tuning_grid (e.g. with an anchored_grid).
    """
    kind = kind.replace("-", "_")
    if kind not in ("gwgl", "glasso_l2"):
        raise ValueError("kind must be gwgl or glasso_l2")
    loss = "l2" if kind == "glasso_l2" else \
        ("logloss" if train.kind == "binary" else "lad")
    config = fit_config if fit_config is not None else FitConfig()
    fit_part, val_part, _ = split_dataset(
        train, (1.0 - validation_fraction, validation_fraction, 0.0),
        seed=split_seed)
    if val_part.n == 0 or fit_part.n == 0:
        raise ValueError("validation split is empty; need more rows or a "
                         "larger fraction")
    if grid is None:
        grid = tuning_grid(fit_part.X, fit_part.y, structure, kind=kind,
                           n=n_grid)
    else:
        grid = np.asarray(grid, dtype=float)

    def one(eps):
        try:
            fit = _fit_for_kind(kind, loss, fit_part.X, fit_part.y, structure,
                                float(eps), config)
        except (ValueError, RuntimeError) as exc:
            warnings.warn("fit failed at penalty %g: %s" % (eps, exc))
            return np.nan
        return _unpenalized_loss(fit.beta, val_part.X, val_part.y, loss)

    losses = np.asarray(_parallel_map(one, list(grid)), dtype=float)
    if np.all(np.isnan(losses)):
        raise RuntimeError("every grid value failed to fit")
    best = np.nanmin(losses)
    chosen = float(grid[np.nonzero(losses == best)[0][0]])  # tie: smallest
    refit = _fit_for_kind(kind, loss, train.X, train.y, structure, chosen,
                          config)
    return TuningReport(grid=grid, validation_losses=losses,
                        chosen_epsilon=chosen, refit=refit, kind=kind,
                        loss=loss)
