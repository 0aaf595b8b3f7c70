"""Reference estimators: plain PCA and diagonal thresholding."""
import numpy as np

from .errors import InvalidInput
from .estimator import top_l_support
from .linalg import eig_top


def vanilla_pca(src, m=1):
    """Top-`m` eigenvectors of the full sample covariance."""
    if not 1 <= m <= src.p:
        raise InvalidInput(f"m must lie in [1, {src.p}], got {m}")
    return eig_top(src.full(), m).vectors


def diagonal_threshold(src, k, m=1):
    """Keep the `k` largest diagonal entries, then run PCA on that block.

    Returns ``(support, frame)`` with the frame zero outside the support.
    """
    if not 1 <= k <= src.p:
        raise InvalidInput(f"k must lie in [1, {src.p}], got {k}")
    if not 1 <= m <= k:
        raise InvalidInput(f"m must lie in [1, k={k}], got {m}")
    support = top_l_support(src.diagonal(), k)
    frame = np.zeros((src.p, m))
    frame[support] = eig_top(src.submatrix(support), m).vectors
    return support, frame

