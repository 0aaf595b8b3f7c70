"""Sparse PCA by aggregating eigenvector information over random projections.

For each of ``A`` groups of ``B`` random ``d``-subsets, the subset whose
principal submatrix has the largest sum of top-``m`` eigenvalues is
kept.  Coordinates are scored by the eigengap-weighted squared loadings
of the kept submatrices, averaged over groups; the ``l`` best coordinates
form the support of the final estimate, whose components are the leading
eigenvectors of the covariance restricted to that support.  With ``m=1``
this is the single-component estimator.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from math import ceil, comb

import numpy as np

from . import projections
from .covariance import AUTO, ON_DEMAND, PRECOMPUTED, STRATEGIES, CovarianceSource, choose_strategy, as_data_matrix
from .errors import InvalidInput
from .linalg import batched_eigh_desc, eig_top

# Cells per batched eigendecomposition.  Fixed so that results never
# depend on the number of worker threads.
CHUNK_CELLS = 4096


def default_A(p):
    """300 groups for p around 100, 800 for p around 1000."""
    return 300 if p < 316 else 800


def default_B(A):
    return ceil(A / 3)


@dataclass(frozen=True)
class SpcavrpConfig:
    d: int
    l: int
    A: int = 300
    B: int = 100
    m: int = 1
    seed: int = 0
    strategy: str = AUTO
    exhaustive: bool = False
    center: bool = False
    enumeration_cap: int = projections.DEFAULT_ENUMERATION_CAP

    def validate(self, p):
        if self.A < 1 or self.B < 1:
            raise InvalidInput(f"A and B must be positive, got A={self.A}, B={self.B}")
        if not 1 <= self.d <= p:
            raise InvalidInput(f"d must lie in [1, {p}], got {self.d}")
        if not 1 <= self.l <= p:
            raise InvalidInput(f"l must lie in [1, {p}], got {self.l}")
        if not 1 <= self.m <= self.d:
            raise InvalidInput(f"m must lie in [1, d={self.d}], got {self.m}")
        if self.l < self.m:
            raise InvalidInput(f"l={self.l} is smaller than m={self.m}")
        if self.strategy not in STRATEGIES:
            raise InvalidInput(f"unknown strategy {self.strategy!r}")
        if self.exhaustive and comb(p, self.d) > self.enumeration_cap:
            raise InvalidInput(
                f"exhaustive mode needs C({p}, {self.d}) <= {self.enumeration_cap}"
            )

    def to_dict(self):
        return asdict(self)


@dataclass
class GroupSelection:
    """The winning projection of one group."""

    a: int
    b_star: int
    eigenvalues: np.ndarray  # m + 1 values, the last may be the zero convention
    eigenvectors: np.ndarray  # d x m
    support: projections.AxisProjection

    @property
    def eigen_sum(self):
        return float(self.eigenvalues[:-1].sum())


@dataclass
class Estimate:
    vectors: np.ndarray
    support: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    b_star: np.ndarray
    selected_sums: np.ndarray
    selected_indices: np.ndarray
    selected_eigenvalues: np.ndarray = field(repr=False)
    selected_vectors: np.ndarray = field(repr=False)
    strategy: str = PRECOMPUTED
    # Set when fewer than l coordinates received a positive score.
    short_scores: bool = False

    @property
    def p(self):
        return self.vectors.shape[0]

    @property
    def m(self):
        return self.vectors.shape[1]

    def selections(self):
        p = self.p
        return [
            GroupSelection(
                a,
                int(self.b_star[a]),
                self.selected_eigenvalues[a],
                self.selected_vectors[a],
                projections.AxisProjection(tuple(self.selected_indices[a]), p),
            )
            for a in range(len(self.b_star))
        ]


def _cell_eigen(src, idx, m):
    """Top ``m+1`` eigenvalues (zero-padded) and top ``m`` eigenvectors per cell."""
    values, vectors = batched_eigh_desc(src.submatrices(idx))
    d = idx.shape[1]
    if m < d:
        lam = values[:, : m + 1]
    else:
        lam = np.concatenate([values[:, :m], np.zeros((len(idx), 1))], axis=1)
    return np.ascontiguousarray(lam), np.ascontiguousarray(vectors[:, :, :m])


def _eigen_sums(lam, m):
    total = lam[..., 0].copy()
    for r in range(1, m):
        total += lam[..., r]
    return total


def _select_groups(src, group_idx, m):
    """Selection for a block of groups; `group_idx` has shape ``(g, B, d)``."""
    g, B, d = group_idx.shape
    lam, vec = _cell_eigen(src, group_idx.reshape(g * B, d), m)
    sums = _eigen_sums(lam, m).reshape(g, B)
    b_star = np.argmax(sums, axis=1)
    flat = np.arange(g) * B + b_star
    return (
        b_star,
        sums[np.arange(g), b_star],
        group_idx[np.arange(g), b_star],
        lam[flat],
        vec[flat],
    )


def select_in_group(src, group, m, a=0):
    """Pick the projection in `group` with the largest top-`m` eigenvalue sum.

    `group` is a sequence of :class:`AxisProjection` or an ``(B, d)`` index
    array.  Ties go to the smallest position.
    """
    idx = np.asarray(
        [getattr(S, "indices", S) for S in group], dtype=np.int64
    )
    if idx.ndim != 2 or idx.shape[0] < 1:
        raise InvalidInput("group must contain at least one projection")
    if not 1 <= m <= idx.shape[1]:
        raise InvalidInput(f"m must lie in [1, {idx.shape[1]}], got {m}")
    b_star, _, support, lam, vec = _select_groups(src, idx[None], m)
    return GroupSelection(
        a, int(b_star[0]), lam[0], vec[0], projections.AxisProjection(tuple(support[0]), src.p)
    )


def _scores(selected_idx, lam, vec, p):
    """Eigengap-weighted average of squared loadings, summed in group order."""
    A, _ = selected_idx.shape
    m = vec.shape[2]
    contrib = (lam[:, 0] - lam[:, m])[:, None] * vec[:, :, 0] ** 2
    for r in range(1, m):
        contrib += (lam[:, r] - lam[:, m])[:, None] * vec[:, :, r] ** 2
    w = np.bincount(selected_idx.ravel(), weights=contrib.ravel(), minlength=p)
    return w / A


def accumulate_scores(selections, m, p):
    """Importance scores from the per-group selections."""
    if not selections:
        raise InvalidInput("need at least one group selection")
    idx = np.array([s.support.indices for s in selections], dtype=np.int64)
    lam = np.array([s.eigenvalues for s in selections], dtype=float)
    vec = np.array([s.eigenvectors for s in selections], dtype=float)
    if lam.shape[1] != m + 1 or vec.shape[2] != m:
        raise InvalidInput("selections do not match m")
    return _scores(idx, lam, vec, p)


def top_l_support(w, l):
    """Sorted indices of the `l` largest scores, ties to the smaller index."""
    w = np.asarray(w, dtype=float)
    if not 1 <= l <= w.shape[0]:
        raise InvalidInput(f"l must lie in [1, {w.shape[0]}], got {l}")
    return np.sort(np.argsort(-w, kind="stable")[:l])


def _run_chunks(func, chunks, threads):
    if threads <= 1 or len(chunks) <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, chunks))


def _select_random(src, cfg, threads):
    p = src.p
    per_chunk = max(1, src.cells_per_chunk(cfg.d, CHUNK_CELLS) // cfg.B)
    starts = list(range(0, cfg.A, per_chunk))

    def work(start):
        groups = np.arange(start, min(start + per_chunk, cfg.A))
        idx = projections.grid_indices(p, cfg.d, cfg.A, cfg.B, cfg.seed, groups)
        return _select_groups(src, idx, cfg.m)

    parts = _run_chunks(work, starts, threads)
    return tuple(np.concatenate(arrs) for arrs in zip(*parts))


def _select_exhaustive(src, cfg, threads):
    """One group holding every ``d``-subset; the global first maximiser wins."""
    all_idx = projections.enumerate_indices(src.p, cfg.d, cfg.enumeration_cap)
    size = src.cells_per_chunk(cfg.d, CHUNK_CELLS)
    starts = list(range(0, len(all_idx), size))

    def work(start):
        idx = all_idx[start : start + size]
        lam, vec = _cell_eigen(src, idx, cfg.m)
        sums = _eigen_sums(lam, cfg.m)
        j = int(np.argmax(sums))
        return sums[j], start + j, lam[j], vec[j]

    parts = _run_chunks(work, starts, threads)
    best = max(range(len(parts)), key=lambda i: (parts[i][0], -i))
    total, b, lam, vec = parts[best]
    return (
        np.array([b]),
        np.array([total]),
        all_idx[b][None],
        lam[None],
        vec[None],
    )


def resolve_strategy(cfg, n, p):
    if cfg.strategy != AUTO:
        return cfg.strategy
    B = comb(p, cfg.d) if cfg.exhaustive else cfg.B
    A = 1 if cfg.exhaustive else cfg.A
    return choose_strategy(n, p, A, B, cfg.d)


def fit_source(src, cfg, threads=1):
    """Run the estimator against an existing :class:`CovarianceSource`."""
    p = src.p
    cfg.validate(p)
    select = _select_exhaustive if cfg.exhaustive else _select_random
    b_star, sums, sel_idx, lam, vec = select(src, cfg, threads)
    w = _scores(sel_idx, lam, vec, p)
    support = top_l_support(w, cfg.l)
    final = eig_top(src.submatrix(support), cfg.m)
    vectors = np.zeros((p, cfg.m))
    vectors[support] = final.vectors
    return Estimate(
        vectors=vectors,
        support=support,
        eigenvalues=final.values,
        scores=w,
        b_star=b_star,
        selected_sums=sums,
        selected_indices=sel_idx,
        selected_eigenvalues=lam,
        selected_vectors=vec,
        strategy=src.mode,
        short_scores=bool(np.count_nonzero(w > 0) < cfg.l),
    )


def fit(X, cfg, threads=1):
    """Estimate the leading sparse eigenspace of the data `X` (rows are observations)."""
    X = as_data_matrix(X)
    n, p = X.shape
    cfg.validate(p)
    mode = resolve_strategy(cfg, n, p)
    src = CovarianceSource.from_data(X, mode=mode, center=cfg.center)
    return fit_source(src, cfg, threads=threads)
