"""Sample covariance and access to its principal submatrices.

Two strategies give the same submatrices: form the full ``p x p`` matrix
once and slice it, or compute each ``d x d`` block from the projected
data.  :func:`choose_strategy` picks between them with the operation
counts ``n p^2 + A B d^2`` against ``A B n d^2``.
"""
import numpy as np

from .errors import InvalidInput
from .linalg import symmetrize

PRECOMPUTED = "precomputed"
ON_DEMAND = "on-demand"
AUTO = "auto"
STRATEGIES = (AUTO, PRECOMPUTED, ON_DEMAND)

PSD_TOL = 1e-8


def as_data_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInput(f"data must be a 2-d array, got shape {X.shape}")
    n, p = X.shape
    if n < 1 or p < 1:
        raise InvalidInput(f"data must have n >= 1 and p >= 1, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("data has non-finite entries")
    return X


def center_columns(X):
    """Subtract each column's mean."""
    X = as_data_matrix(X)
    return X - X.mean(axis=0)


def sample_covariance(X):
    """``n^{-1} sum_i x_i x_i^T`` -- divisor n and no centring."""
    X = as_data_matrix(X)
    S = X.T @ X / X.shape[0]
    return (S + S.T) / 2


def choose_strategy(n, p, A, B, d):
    """`PRECOMPUTED` iff ``n p^2 + A B d^2 <= A B n d^2``."""
    full = n * p * p + A * B * d * d
    projected = A * B * n * d * d
    return PRECOMPUTED if full <= projected else ON_DEMAND


class CovarianceSource:
    """Read-only provider of principal submatrices of the sample covariance.

    Build with :meth:`from_data` (either mode) or :meth:`from_matrix`
    (precomputed, checked for positive semidefiniteness).
    """

    def __init__(self, mode, p, matrix=None, data=None, centered=False):
        self.mode = mode
        self.p = p
        self.centered = centered
        self._matrix = matrix
        self._data = data

    @classmethod
    def from_data(cls, X, mode=PRECOMPUTED, center=False):
        X = center_columns(X) if center else as_data_matrix(X)
        if mode == PRECOMPUTED:
            S = sample_covariance(X)
            S.setflags(write=False)
            return cls(PRECOMPUTED, X.shape[1], matrix=S, centered=center)
        if mode == ON_DEMAND:
            X = np.ascontiguousarray(X)
            X.setflags(write=False)
            return cls(ON_DEMAND, X.shape[1], data=X, centered=center)
        raise InvalidInput(f"unknown covariance mode {mode!r}")

    @classmethod
    def from_matrix(cls, S):
        S = symmetrize(S)
        lam_min = np.linalg.eigvalsh(S)[0]
        if lam_min < -PSD_TOL:
            raise InvalidInput(f"matrix is not PSD: smallest eigenvalue {lam_min:.3e}")
        S.setflags(write=False)
        return cls(PRECOMPUTED, S.shape[0], matrix=S)

    @property
    def n(self):
        return None if self._data is None else self._data.shape[0]

    def full(self):
        """The full ``p x p`` sample covariance."""
        if self._matrix is not None:
            return self._matrix
        return sample_covariance(self._data)

    def diagonal(self):
        if self._matrix is not None:
            return np.diagonal(self._matrix).copy()
        X = self._data
        return np.einsum("ij,ij->j", X, X) / X.shape[0]

    def cells_per_chunk(self, d, limit):
        """Largest batch of ``d``-subsets to process at once, at most `limit`.

        On-demand batches gather ``n x cells x d`` values, so they are capped
        at about 2**21 gathered entries.
        """
        if self._data is None:
            return limit
        return max(1, min(limit, 2**21 // (self._data.shape[0] * d)))

    def _check(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.p):
            raise InvalidInput(f"projection indices out of range for p={self.p}")
        return idx

    def submatrix(self, S):
        """``Sigma^(S,S)`` for one index set (array-like or AxisProjection)."""
        idx = getattr(S, "indices", S)
        idx = self._check(idx)
        return self.submatrices(idx[None, :])[0]

    def submatrices(self, idx):
        """Stack of principal submatrices for an ``(N, d)`` array of index sets."""
        idx = self._check(idx)
        if self._matrix is not None:
            return self._matrix[idx[:, :, None], idx[:, None, :]]
        Xs = self._data[:, idx]  # (n, N, d)
        Xs = np.moveaxis(Xs, 0, 1)  # (N, n, d)
        S = np.matmul(np.swapaxes(Xs, 1, 2), Xs) / self._data.shape[0]
        return (S + np.swapaxes(S, 1, 2)) / 2


def projected_covariance(src, S):
    """The ``d x d`` principal submatrix of the covariance at `S`."""
    return src.submatrix(S)
