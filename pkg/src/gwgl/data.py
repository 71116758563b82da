"""Synthetic benchmark data, CSV ingestion, standardization, splitting.

The synthetic generator plants a group-sparse coefficient vector (0.5 on
every even-numbered group, counting from 1), draws rows from a blockwise
equicorrelated Gaussian, and contaminates the response with mean-shifted
outliers at rate q. Randomness comes from numpy's default PCG64 generator;
the seed and generator name are recorded in dataset metadata so runs are
reproducible with this implementation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .groups import GroupStructure

RNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class SyntheticSpec:
    group_sizes: tuple
    rho_w: float = 0.0
    snr: float | None = None
    sigma2: float | None = None
    outlier_prob: float = 0.0
    n_samples: int = 100
    seed: int = 0
    # when set, rho_w is redrawn as 0.8 * Uniform(lo, hi) per dataset
    rho_jitter: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "group_sizes",
                           tuple(int(s) for s in self.group_sizes))
        if (self.snr is None) == (self.sigma2 is None):
            raise ValueError("set exactly one of snr and sigma2")
        if self.snr is not None and self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if not 0.0 <= self.rho_w < 1.0:
            raise ValueError("rho_w must lie in [0, 1)")
        if not 0.0 <= self.outlier_prob < 1.0:
            raise ValueError("outlier probability must lie in [0, 1)")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    @property
    def p(self) -> int:
        return sum(self.group_sizes)

    def structure(self) -> GroupStructure:
        return GroupStructure.from_sizes(self.group_sizes)

    def to_dict(self) -> dict:
        return {"group_sizes": list(self.group_sizes), "rho_w": self.rho_w,
                "snr": self.snr, "sigma2": self.sigma2,
                "outlier_prob": self.outlier_prob,
                "n_samples": self.n_samples, "seed": self.seed,
                "rho_jitter": list(self.rho_jitter) if self.rho_jitter else None}


@dataclass
class StandardizationRecord:
    shift: np.ndarray
    scale: np.ndarray  # divisor per column (the original column l2 norm
                       # after centering)

    def coefficients_to_original(self, beta: np.ndarray):
        """Map coefficients of the standardized design back to raw units.

        Returns (beta_raw, intercept) so that X_raw @ beta_raw + intercept
        equals X_std @ beta.
        """
        beta = np.asarray(beta, dtype=float)
        beta_raw = beta / self.scale
        return beta_raw, float(-(self.shift * beta_raw).sum())

    def to_dict(self) -> dict:
        return {"shift": [float(v) for v in self.shift],
                "scale": [float(v) for v in self.scale]}


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    kind: str = "continuous"  # or "binary"
    feature_names: list = field(default_factory=list)
    standardization: StandardizationRecord | None = None
    beta_star: np.ndarray | None = None
    Sigma: np.ndarray | None = None
    sigma2: float | None = None
    spec: SyntheticSpec | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y disagree on the number of rows")
        if self.kind not in ("continuous", "binary"):
            raise ValueError("kind must be continuous or binary")
        if self.kind == "binary" and not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("binary responses must be -1 or +1")
        if not self.feature_names:
            self.feature_names = ["x%d" % (j + 1) for j in range(self.X.shape[1])]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def block_covariance(group_sizes, rho_w: float) -> np.ndarray:
    """Unit diagonal, rho_w off-diagonal inside groups, zero across groups."""
    p = sum(group_sizes)
    Sigma = np.eye(p)
    offset = 0
    for size in group_sizes:
        blk = slice(offset, offset + size)
        Sigma[blk, blk] = rho_w
        offset += size
    np.fill_diagonal(Sigma, 1.0)
    return Sigma


def planted_coefficients(group_sizes, value: float = 0.5) -> np.ndarray:
    """value on every even-numbered group (1-based numbering), 0 elsewhere."""
    parts = []
    for l, size in enumerate(group_sizes, start=1):
        parts.append(np.full(size, value if l % 2 == 0 else 0.0))
    return np.concatenate(parts)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw a dataset from the planted grouped linear model.

    Rows x ~ N(0, Sigma) with the blockwise-constant covariance; the response
    is N(x'beta*, sigma^2) with probability 1 - q and shifted by +5 sigma with
    probability q. When snr is given, sigma^2 = beta*' Sigma beta* / snr.
    """
    rng = np.random.default_rng(spec.seed)
    rho = spec.rho_w
    if spec.rho_jitter is not None:
        lo, hi = spec.rho_jitter
        rho = 0.8 * rng.uniform(lo, hi)
    beta_star = planted_coefficients(spec.group_sizes)
    Sigma = block_covariance(spec.group_sizes, rho)
    chol = np.linalg.cholesky(Sigma)
    X = rng.standard_normal((spec.n_samples, spec.p)) @ chol.T
    signal = float(beta_star @ Sigma @ beta_star)
    if spec.snr is not None:
        sigma2 = signal / spec.snr
    else:
        sigma2 = float(spec.sigma2)
    sigma = math.sqrt(sigma2)
    noise = rng.standard_normal(spec.n_samples) * sigma
    is_outlier = rng.random(spec.n_samples) < spec.outlier_prob
    y = X @ beta_star + noise + 5.0 * sigma * is_outlier
    return Dataset(X=X, y=y, kind="continuous", beta_star=beta_star,
                   Sigma=Sigma, sigma2=sigma2, spec=spec)


def standardize(dataset: Dataset) -> Dataset:
    """Shift every column to zero mean and scale it to unit l2 norm.

    After this, x_i' x_j is the sample correlation of predictors i and j.
    Already-standardized data passes through unchanged (fresh record).
    """
    X = dataset.X
    shift = X.mean(axis=0)
    centered = X - shift
    scale = np.linalg.norm(centered, axis=0)
    dead = np.nonzero(scale <= 1e-300)[0]
    if dead.size:
        raise ValueError("column %r is constant and cannot be standardized"
                         % dataset.feature_names[dead[0]])
    record = StandardizationRecord(shift=shift, scale=scale)
    return Dataset(X=centered / scale, y=dataset.y.copy(), kind=dataset.kind,
                   feature_names=list(dataset.feature_names),
                   standardization=record, beta_star=dataset.beta_star,
                   Sigma=dataset.Sigma, sigma2=dataset.sigma2,
                   spec=dataset.spec)


def apply_standardization(dataset: Dataset,
                          record: StandardizationRecord) -> Dataset:
    """Transform a dataset with a previously fitted standardization record
    (e.g. apply the training transform to test rows)."""
    X = (dataset.X - record.shift) / record.scale
    return Dataset(X=X, y=dataset.y.copy(), kind=dataset.kind,
                   feature_names=list(dataset.feature_names),
                   standardization=record, beta_star=dataset.beta_star,
                   Sigma=dataset.Sigma, sigma2=dataset.sigma2,
                   spec=dataset.spec)


def _format(v: float) -> str:
    return repr(float(v))


def save_dataset(dataset: Dataset, path: str, response: str = "y",
                 metadata_path: str | None = None):
    """Write the dataset as CSV (full round-trip precision) plus an optional
    JSON metadata sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [response])
        for i in range(dataset.n):
            writer.writerow([_format(v) for v in dataset.X[i]]
                            + [_format(dataset.y[i])])
    if metadata_path is not None:
        meta = {"rng": RNG_NAME, "kind": dataset.kind,
                "n_samples": dataset.n, "response": response}
        if dataset.spec is not None:
            meta["spec"] = dataset.spec.to_dict()
        if dataset.beta_star is not None:
            meta["beta_star"] = [float(v) for v in dataset.beta_star]
        if dataset.sigma2 is not None:
            meta["sigma2"] = float(dataset.sigma2)
        if dataset.standardization is not None:
            meta["standardization"] = dataset.standardization.to_dict()
        with open(metadata_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_dataset(path: str, response: str, kind: str = "continuous") -> Dataset:
    """Read a headered numeric CSV; binary responses accept {0,1} or {-1,1}."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("%s is empty" % path) from None
        header = [h.strip() for h in header]
        if response not in header:
            raise ValueError("response column %r not found in %s (columns: %s)"
                             % (response, path, ", ".join(header)))
        ycol = header.index(response)
        rows = []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError("row %d of %s has %d cells, expected %d"
                                 % (rownum, path, len(row), len(header)))
            vals = []
            for cell, name in zip(row, header):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        "non-numeric value %r at row %d, column %r of %s"
                        % (cell, rownum, name, path)) from None
            rows.append(vals)
    if not rows:
        raise ValueError("%s has no data rows" % path)
    data = np.asarray(rows)
    y = data[:, ycol]
    X = np.delete(data, ycol, axis=1)
    names = [h for i, h in enumerate(header) if i != ycol]
    if kind == "binary":
        uniq = set(np.unique(y))
        if uniq <= {0.0, 1.0}:
            y = 2.0 * y - 1.0
        elif not uniq <= {-1.0, 1.0}:
            bad = sorted(uniq - {-1.0, 0.0, 1.0})[0]
            raise ValueError("label %r is outside the {0,1} / {-1,1} encodings"
                             % bad)
    return Dataset(X=X, y=y, kind=kind, feature_names=names)


def split_dataset(dataset: Dataset, fractions, seed: int = 0):
    """Partition rows into (train, validation, test) by a seeded shuffle.

    Validation and test sizes are floors of their fractions; the remainder
    goes to train. Zero fractions give empty parts.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, validation, test)")
    if any(f < 0 for f in fractions):
        raise ValueError("fractions must be non-negative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    n = dataset.n
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = int(math.floor(fractions[1] * n))
    n_test = int(math.floor(fractions[2] * n))
    n_train = n - n_val - n_test
    idx_train = np.sort(order[:n_train])
    idx_val = np.sort(order[n_train:n_train + n_val])
    idx_test = np.sort(order[n_train + n_val:])

    def take(idx):
        return Dataset(X=dataset.X[idx], y=dataset.y[idx], kind=dataset.kind,
                       feature_names=list(dataset.feature_names),
                       standardization=dataset.standardization,
                       beta_star=dataset.beta_star, Sigma=dataset.Sigma,
                       sigma2=dataset.sigma2, spec=dataset.spec)

    return take(idx_train), take(idx_val), take(idx_test)
