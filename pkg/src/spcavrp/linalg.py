"""Dense symmetric eigensolvers, projectors and principal angles.

Every eigenvector returned from this module follows one sign convention:
the entry of largest absolute value is positive, ties going to the
smallest index.  This makes repeated calls bit-identical.
"""
import numpy as np

from .errors import InvalidInput, RankDeficient

ZERO_TOL = 1e-12
RANK_TOL = 1e-10


def _as_symmetric(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    return M


def symmetrize(M):
    """Return the symmetric matrix whose upper triangle is that of `M`."""
    M = _as_symmetric(M)
    upper = np.triu(M)
    return upper + np.triu(M, 1).T


def fix_signs(vectors):
    """Flip columns (in place, also returned) so the largest-|entry| is positive.

    Works on a single ``(dim, r)`` matrix or a stack ``(..., dim, r)``.
    ``argmax`` returns the first maximiser, which gives the smallest-index
    tie-break.
    """
    idx = np.argmax(np.abs(vectors), axis=-2)
    pivot = np.take_along_axis(vectors, idx[..., None, :], axis=-2)
    signs = np.where(pivot < 0, -1.0, 1.0)
    vectors *= signs
    return vectors


class EigenSystem:
    """Leading eigenpairs of a symmetric matrix, values nonincreasing."""

    __slots__ = ("values", "vectors")

    def __init__(self, values, vectors):
        self.values = values
        self.vectors = vectors

    def __iter__(self):
        return iter((self.values, self.vectors))

    def __repr__(self):
        return f"EigenSystem(values={self.values!r})"


def eig_top(M, r=None):
    """The `r` algebraically largest eigenpairs of the symmetric matrix `M`.

    Only the upper triangle of `M` is read.
    """
    M = symmetrize(M)
    dim = M.shape[0]
    if r is None:
        r = dim
    if not 1 <= r <= dim:
        raise InvalidInput(f"r must lie in [1, {dim}], got {r}")
    values, vectors = np.linalg.eigh(M)
    values = values[::-1][:r].copy()
    vectors = vectors[:, ::-1][:, :r].copy()
    fix_signs(vectors)
    return EigenSystem(values, vectors)


def batched_eigh_desc(stack):
    """Eigenvalues (descending) and eigenvectors for a stack of symmetric matrices.

    Sign convention is *not* applied; callers that only need squared
    components skip that cost.
    """
    values, vectors = np.linalg.eigh(stack)
    return values[..., ::-1], vectors[..., ::-1]


def orthonormal_range(V, tol=RANK_TOL):
    """Orthonormal basis for the column space of `V` (may have zero columns)."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.size == 0 or np.max(np.abs(V)) <= ZERO_TOL:
        return np.zeros((V.shape[0], 0))
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    keep = s > tol * s[0]
    return U[:, keep]


def proj_orth_complement(V, allow_rank_deficient=False):
    """Projector onto the orthogonal complement of the column space of `V`.

    ``I - V (V^T V)^{-1} V^T`` for full column rank `V`, and the identity
    when `V` is numerically zero.  A nonzero rank-deficient `V` raises
    :class:`RankDeficient` unless `allow_rank_deficient` is set, in which
    case the projector onto the complement of its range is returned.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2:
        raise InvalidInput(f"expected a matrix, got shape {V.shape}")
    if not np.all(np.isfinite(V)):
        raise InvalidInput("matrix has non-finite entries")
    p, r = V.shape
    eye = np.eye(p)
    if V.size == 0 or np.max(np.abs(V)) <= ZERO_TOL:
        return eye

    # Singular values below RANK_TOL * s_max count as zero.
    Q = orthonormal_range(V)
    if Q.shape[1] < r and not allow_rank_deficient:
        raise RankDeficient(f"V has rank {Q.shape[1]} < {r} columns")
    H = eye - Q @ Q.T
    return (H + H.T) / 2


def principal_angle_sines(U, V):
    """Sines of the principal angles between two orthonormal frames.

    Ordered as the cosines (singular values of ``U^T V``) decrease.  Angles
    with cosine above ``1/sqrt(2)`` take their sine from the singular values
    of ``V - U U^T V`` instead, since ``sqrt(1 - cos^2)`` cannot resolve
    sines below about 1e-8.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if V.ndim == 1:
        V = V[:, None]
    if U.shape != V.shape:
        raise InvalidInput(f"frame shapes differ: {U.shape} vs {V.shape}")
    C = U.T @ V
    cosines = np.clip(np.linalg.svd(C, compute_uv=False), 0.0, 1.0)
    sines = np.sqrt(1.0 - cosines**2)
    residual = np.linalg.svd(V - U @ C, compute_uv=False)[::-1]
    small = cosines**2 >= 0.5
    sines[small] = np.clip(residual[small], 0.0, 1.0)
    return sines
