"""Sample moments and the empirical rotations built from them.

The pooled covariance uses the maximum-likelihood scaling (per-class
divisor n_m) so that the factored form used by the economy rotation
reproduces it exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import as_sym_matrix, fix_sign_convention, sym_eig_desc

__all__ = [
    "LabeledDataset",
    "EstimatedMoments",
    "RotationBasis",
    "estimate_moments",
    "total_covariance",
    "sample_total_covariance",
    "rotation_full",
    "rotation_economy",
    "rotate_dataset",
]

RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class LabeledDataset:
    """Rows of ``X`` are observations; ``y`` holds class labels 1 or 2."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array (rows = observations)")
        if X.shape[0] != y.size:
            raise ValueError(f"{X.shape[0]} rows but {y.size} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite entries")
        if y.size and not np.all((y == 1) | (y == 2)):
            raise ValueError("labels must be 1 or 2")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def n1(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n2(self) -> int:
        return int(np.sum(self.y == 2))

    def class_rows(self, label: int) -> np.ndarray:
        return self.X[self.y == label]

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(self.X[idx], self.y[idx])


@dataclass(frozen=True)
class EstimatedMoments:
    """Per-class means and the pooled MLE covariance of a labeled dataset."""

    mu1_hat: np.ndarray
    mu2_hat: np.ndarray
    sigma_hat: np.ndarray
    n1: int
    n2: int

    @property
    def mu_hat(self) -> np.ndarray:
        return 0.5 * (self.mu1_hat + self.mu2_hat)

    @property
    def delta_hat(self) -> np.ndarray:
        return self.mu1_hat - self.mu2_hat

    @property
    def p(self) -> int:
        return self.mu1_hat.size


@dataclass(frozen=True)
class RotationBasis:
    """Orthonormal rotation columns with their eigenvalues (descending) and
    the rho used to form the total covariance. ``kind`` is "full" (p x p)
    or "economy" (p x r with r <= p)."""

    columns: np.ndarray
    eigenvalues: np.ndarray
    rho: float
    kind: str

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.float64)
        vals = np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1)
        if cols.ndim != 2 or cols.shape[1] != vals.size:
            raise ValueError("columns and eigenvalues sizes disagree")
        if self.kind not in ("full", "economy"):
            raise ValueError("kind must be 'full' or 'economy'")
        gram = cols.T @ cols
        if gram.size and float(np.max(np.abs(gram - np.eye(cols.shape[1])))) > 1e-8:
            raise ValueError("rotation columns must be orthonormal")
        if vals.size and np.any(np.diff(vals) > 1e-10):
            raise ValueError("eigenvalues must be in descending order")
        if vals.size and vals[-1] < -1e-10 * max(1.0, float(np.max(np.abs(vals)))):
            raise ValueError("eigenvalues must be nonnegative up to roundoff")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def p(self) -> int:
        return self.columns.shape[0]

    @property
    def r(self) -> int:
        return self.columns.shape[1]


def estimate_moments(data: LabeledDataset) -> EstimatedMoments:
    """Class means and the pooled MLE covariance
    ``(n1 S1 + n2 S2) / (n1 + n2)`` with per-class divisor n_m."""
    n1, n2 = data.n1, data.n2
    if n1 < 1 or n2 < 1:
        raise ValueError(f"both classes must be nonempty (n1={n1}, n2={n2})")
    X1, X2 = data.class_rows(1), data.class_rows(2)
    mu1 = X1.mean(axis=0)
    mu2 = X2.mean(axis=0)
    C1 = X1 - mu1
    C2 = X2 - mu2
    sigma = (C1.T @ C1 + C2.T @ C2) / (n1 + n2)
    return EstimatedMoments(mu1_hat=mu1, mu2_hat=mu2,
                            sigma_hat=0.5 * (sigma + sigma.T), n1=n1, n2=n2)


def total_covariance(m: EstimatedMoments, rho: float) -> np.ndarray:
    """Rank-one augmented pooled covariance ``sigma_hat + rho d d^T``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    d = m.delta_hat
    return m.sigma_hat + rho * np.outer(d, d)


def sample_total_covariance(data: LabeledDataset) -> np.ndarray:
    """Covariance of the pooled sample around its global mean (labels
    ignored), computed directly from the definition."""
    if data.n < 2:
        raise ValueError("need at least two observations")
    centered = data.X - data.X.mean(axis=0)
    S = centered.T @ centered / data.n
    return 0.5 * (S + S.T)


def rotation_full(m: EstimatedMoments, rho: float) -> RotationBasis:
    """Full p x p rotation: eigenvectors of the augmented covariance."""
    eig = sym_eig_desc(total_covariance(m, rho))
    return RotationBasis(columns=eig.vectors, eigenvalues=eig.values,
                         rho=rho, kind="full")


def _factor_matrix(data: LabeledDataset, m: EstimatedMoments, rho: float) -> np.ndarray:
    """(n+1) x p matrix Y with Y^T Y equal to the augmented covariance:
    rows are the centered observations over sqrt(n), plus sqrt(rho) d^T."""
    n = data.n
    Y = np.empty((n + 1, data.p))
    Y[:n][data.y == 1] = (data.class_rows(1) - m.mu1_hat) / np.sqrt(n)
    Y[:n][data.y == 2] = (data.class_rows(2) - m.mu2_hat) / np.sqrt(n)
    Y[n] = np.sqrt(rho) * m.delta_hat
    return Y


def rotation_economy(data: LabeledDataset, rho: float,
                     r: int | None = None) -> RotationBasis:
    """Economy rotation via the small Gram matrix.

    Eigendecomposes the (n+1) x (n+1) matrix ``Y Y^T`` (same nonzero
    spectrum as ``Y^T Y``) and maps eigenvectors back through ``Y^T``,
    normalized to unit columns. Default width is min(n, numerical rank);
    requesting more than the numerical rank clips with a warning.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    m = estimate_moments(data)
    Y = _factor_matrix(data, m, rho)
    eig = sym_eig_desc(Y @ Y.T)
    top = float(eig.values[0]) if eig.values.size else 0.0
    rank = int(np.sum(eig.values > RANK_REL_TOL * max(top, 0.0))) if top > 0 else 0
    r_default = min(data.n, rank)
    if r is None:
        r_use = r_default
    else:
        if r < 1:
            raise ValueError("r must be >= 1")
        r_use = int(r)
        if r_use > rank:
            warnings.warn(
                f"requested r={r_use} exceeds numerical rank {rank}; clipping",
                stacklevel=2,
            )
            r_use = rank
    if r_use == 0:
        raise ValueError("augmented covariance is numerically zero")
    vals = eig.values[:r_use]
    cols = Y.T @ eig.vectors[:, :r_use] / np.sqrt(vals)
    return RotationBasis(columns=fix_sign_convention(cols), eigenvalues=vals,
                         rho=rho, kind="economy")


def rotate_dataset(data: LabeledDataset, basis: RotationBasis) -> LabeledDataset:
    """Project every observation onto the basis columns; labels unchanged."""
    if basis.p != data.p:
        raise ValueError(
            f"basis dimension {basis.p} does not match data dimension {data.p}")
    return LabeledDataset(data.X @ basis.columns, data.y)
