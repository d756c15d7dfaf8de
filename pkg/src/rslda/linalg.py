"""Dense symmetric linear algebra and scalar normal-distribution helpers.

Everything here is deterministic for fixed inputs: eigenvectors follow a
fixed sign convention (largest-magnitude entry made non-negative) so that
downstream rotations are reproducible from run to run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "EigenSystem",
    "SpikeDecomposition",
    "DavisKahanCheck",
    "as_sym_matrix",
    "sym_eig_desc",
    "fix_sign_convention",
    "pseudo_inverse",
    "spiked_inverse",
    "operator_norm",
    "normal_cdf",
    "normal_quantile",
    "random_orthogonal",
    "check_weyl",
    "check_davis_kahan",
]

SYM_ATOL = 1e-12


def as_sym_matrix(S, atol: float = SYM_ATOL) -> np.ndarray:
    """Validate a square symmetric matrix and return it as float64.

    Entries must be finite and ``|S - S.T|`` must not exceed ``atol``
    anywhere; the returned matrix is exactly symmetrized.
    """
    A = np.asarray(S, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    if A.size and float(np.max(np.abs(A - A.T))) > atol:
        raise ValueError(f"matrix is not symmetric within atol={atol:g}")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order; column j of ``vectors`` is the unit
    eigenvector paired with ``values[j]``."""

    values: np.ndarray
    vectors: np.ndarray


def fix_sign_convention(V: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-|entry| component is
    non-negative (ties broken by lowest row index)."""
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)  # argmax takes the first on ties
    flip = V[idx, np.arange(V.shape[1])] < 0
    V[:, flip] *= -1.0
    return V


def sym_eig_desc(S) -> EigenSystem:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    For repeated eigenvalues the eigenvectors are an arbitrary orthonormal
    basis of the eigenspace; only the sign convention is pinned down.
    """
    A = as_sym_matrix(S)
    try:
        vals, vecs = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigendecomposition of {A.shape[0]}x{A.shape[0]} symmetric "
            f"matrix did not converge"
        ) from exc
    return EigenSystem(values=vals[::-1].copy(),
                       vectors=fix_sign_convention(vecs[:, ::-1]))


def pseudo_inverse(S, rel_tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with magnitude below ``rel_tol`` times the largest magnitude
    are treated as exact zeros. The all-zero matrix maps to itself.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    eig = sym_eig_desc(S)
    cutoff = rel_tol * float(np.max(np.abs(eig.values))) if eig.values.size else 0.0
    inv_vals = np.where(np.abs(eig.values) > cutoff,
                        np.divide(1.0, eig.values,
                                  out=np.zeros_like(eig.values),
                                  where=np.abs(eig.values) > cutoff),
                        0.0)
    P = (eig.vectors * inv_vals) @ eig.vectors.T
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class SpikeDecomposition:
    """Isotropic base plus orthonormal rank-one spikes:
    ``base * I + sum_i heights[i] * outer(spikes[:, i], spikes[:, i])``."""

    base: float
    heights: np.ndarray   # (k,) positive spike heights
    spikes: np.ndarray    # (p, k) orthonormal columns

    def __post_init__(self):
        heights = np.asarray(self.heights, dtype=np.float64).reshape(-1)
        spikes = np.asarray(self.spikes, dtype=np.float64)
        if spikes.ndim != 2 or spikes.shape[1] != heights.size:
            raise ValueError("spikes must be a (p, k) matrix matching heights")
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "spikes", spikes)
        if not self.base > 0:
            raise ValueError("base must be positive")
        if heights.size and np.min(heights) <= 0:
            raise ValueError("spike heights must be positive")
        if heights.size:
            gram = spikes.T @ spikes
            if float(np.max(np.abs(gram - np.eye(heights.size)))) > 1e-8:
                raise ValueError("spike vectors must be orthonormal")

    @property
    def dim(self) -> int:
        return self.spikes.shape[0]

    def matrix(self) -> np.ndarray:
        """Reconstruct the dense symmetric matrix."""
        return self.base * np.eye(self.dim) + (self.spikes * self.heights) @ self.spikes.T


def spiked_inverse(d: SpikeDecomposition) -> np.ndarray:
    """Closed-form inverse of ``a*I + sum a_i xi_i xi_i^T``:
    ``a^{-1} I - sum a_i / (a (a + a_i)) xi_i xi_i^T``."""
    coeff = d.heights / (d.base * (d.base + d.heights)) if d.heights.size else d.heights
    inv = np.eye(d.dim) / d.base
    if d.heights.size:
        inv -= (d.spikes * coeff) @ d.spikes.T
    return 0.5 * (inv + inv.T)


def operator_norm(M) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return float(ndtr(x))


def normal_quantile(q: float) -> float:
    """Standard normal quantile; ``q`` must lie strictly inside (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {q!r}")
    return float(ndtri(q))


def random_orthogonal(p: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix, deterministic for a given seed."""
    if p < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    # sign fix makes the factorization (and the draw) unique
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def check_weyl(A, v, rho: float) -> bool:
    """Check eigenvalue interlacing between ``A`` and ``A + rho v v^T``.

    With eigenvalues sorted descending and primes for the updated matrix,
    interlacing means a'_1 >= a_1 >= a'_2 >= a_2 >= ... >= a_p.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    A = as_sym_matrix(A)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    vals = sym_eig_desc(A).values
    vals_up = sym_eig_desc(A + rho * np.outer(v, v)).values
    scale = max(1.0, float(np.max(np.abs(vals_up))) if vals_up.size else 1.0)
    tol = 1e-8 * scale
    merged = np.empty(2 * vals.size)
    merged[0::2] = vals_up
    merged[1::2] = vals
    return bool(np.all(np.diff(merged) <= tol))


@dataclass(frozen=True)
class DavisKahanCheck:
    """Result of the projector-perturbation bound check."""

    lhs: float
    rhs: float
    ok: bool
    applicable: bool
    gap: float


def check_davis_kahan(A, B, k: int) -> DavisKahanCheck:
    """Compare ``||P - Q||`` against ``||A - B|| / z`` for the projectors onto
    the top-k eigenspaces of A and B.

    The bound needs the top-k eigenvalues of both matrices separated from
    the rest by a common gap ``z``; when the spectra do not admit one the
    check is reported as not applicable.
    """
    ea = sym_eig_desc(A)
    eb = sym_eig_desc(B)
    p = ea.values.size
    if not 1 <= k < p:
        raise ValueError(f"split index must satisfy 1 <= k < {p}")
    top_min = min(ea.values[k - 1], eb.values[k - 1])
    rest_max = max(ea.values[k], eb.values[k])
    gap = float(top_min - rest_max)
    if gap <= 0:
        return DavisKahanCheck(lhs=np.nan, rhs=np.nan, ok=False,
                               applicable=False, gap=gap)
    P = ea.vectors[:, :k] @ ea.vectors[:, :k].T
    Q = eb.vectors[:, :k] @ eb.vectors[:, :k].T
    lhs = operator_norm(P - Q)
    rhs = operator_norm(as_sym_matrix(A) - as_sym_matrix(B)) / gap
    return DavisKahanCheck(lhs=lhs, rhs=rhs, ok=bool(lhs <= rhs + 1e-8),
                           applicable=True, gap=gap)
