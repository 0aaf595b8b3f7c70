"""Axis-aligned random projections.

A projection onto the coordinates ``S`` is stored as its sorted index
array.  Randomness comes from a counter-based generator: each cell
``(a, b)`` of a projection grid gets a 64-bit key

    key = mix(mix(mix(seed) ^ a) ^ b)

where ``mix`` is the SplitMix64 finaliser, and its ``i``-th draw is
``mix(key + (i + 1) * GAMMA)`` -- exactly the SplitMix64 output stream
started from state ``key``.  A cell therefore depends only on
``(seed, a, b)``, never on evaluation order, chunking or thread count.

Subsets are drawn by a partial Fisher-Yates shuffle of ``0..p-1`` (first
``d`` positions).  The bounded integer for position ``i`` is
``floor(U * (p - i))`` with ``U`` the top 53 bits of a draw divided by
``2**53``; its deviation from exact uniformity is below ``p / 2**53``.
"""
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import InvalidInput, TooLarge

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

DEFAULT_ENUMERATION_CAP = 10**6


def _mix_array(z):
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * np.uint64(_M1)
        z = z ^ (z >> np.uint64(27))
        z = z * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


def mix64(x):
    """SplitMix64 finaliser applied to ``x + GAMMA`` (Python ints, 64-bit)."""
    z = (x + GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, *path):
    """Fold integers into a 64-bit seed, one SplitMix64 round per component."""
    h = mix64(int(seed) & MASK64)
    for part in path:
        h = mix64(h ^ (int(part) & MASK64))
    return h


def _draws(keys, count):
    """First `count` SplitMix64 outputs of every key; shape ``(len(keys), count)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    steps = (np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GAMMA))
    with np.errstate(over="ignore"):
        states = keys[:, None] + steps[None, :]
    return _mix_array(states)


def _uniform53(bits):
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def subsets_from_keys(keys, p, d):
    """One sorted ``d``-subset of ``range(p)`` per key, shape ``(len(keys), d)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    count = keys.shape[0]
    if d == p:
        return np.tile(np.arange(p, dtype=np.int64), (count, 1))
    u = _uniform53(_draws(keys, d))
    spans = p - np.arange(d)
    offsets = np.minimum((u * spans).astype(np.int64), spans - 1)
    perm = np.tile(np.arange(p, dtype=np.int64), (count, 1))
    rows = np.arange(count)
    for i in range(d):
        j = i + offsets[:, i]
        chosen = perm[rows, j]
        perm[rows, j] = perm[:, i]
        perm[:, i] = chosen
    return np.sort(perm[:, :d], axis=1)


@dataclass(frozen=True)
class AxisProjection:
    """The coordinate projection onto a sorted index set."""

    indices: tuple
    p: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidInput(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.p):
            raise InvalidInput(f"indices out of range for p={self.p}: {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def d(self):
        return len(self.indices)

    def as_array(self):
        return np.array(self.indices, dtype=np.int64)

    def matrix(self):
        """The ``p x p`` diagonal 0/1 matrix."""
        P = np.zeros((self.p, self.p))
        P[self.indices, self.indices] = 1.0
        return P


def _check_pd(p, d):
    if p < 1 or not 1 <= d <= p:
        raise InvalidInput(f"need 1 <= d <= p, got d={d}, p={p}")


def sample_projection(p, d, key):
    """A uniformly random ``d``-subset of ``range(p)`` drawn from stream `key`."""
    _check_pd(p, d)
    idx = subsets_from_keys(np.array([int(key) & MASK64], dtype=np.uint64), p, d)[0]
    return AxisProjection(tuple(idx), p)


def grid_keys(seed, A, B, groups=None):
    """Stream keys for the cells of an ``A x B`` grid, shape ``(len(groups), B)``."""
    if groups is None:
        groups = np.arange(A)
    groups = np.asarray(groups, dtype=np.uint64)
    base = np.array([mix64(int(seed) & MASK64)], dtype=np.uint64)
    with np.errstate(over="ignore"):
        ka = _mix_array((base ^ groups) + np.uint64(GAMMA))
        kb = ka[:, None] ^ np.arange(B, dtype=np.uint64)[None, :]
        return _mix_array(kb + np.uint64(GAMMA))


def grid_indices(p, d, A, B, seed, groups=None):
    """Index arrays for (a subset of) the grid, shape ``(len(groups), B, d)``."""
    _check_pd(p, d)
    if A < 1 or B < 1:
        raise InvalidInput(f"need A, B >= 1, got A={A}, B={B}")
    keys = grid_keys(seed, A, B, groups)
    return subsets_from_keys(keys.ravel(), p, d).reshape(keys.shape + (d,))


@dataclass(frozen=True)
class ProjectionGrid:
    p: int
    d: int
    indices: np.ndarray  # (A, B, d)

    @property
    def A(self):
        return self.indices.shape[0]

    @property
    def B(self):
        return self.indices.shape[1]

    def cell(self, a, b):
        return AxisProjection(tuple(self.indices[a, b]), self.p)


def sample_grid(p, d, A, B, master_seed):
    """The ``A x B`` grid of independent uniform projections for `master_seed`."""
    indices = grid_indices(p, d, A, B, master_seed)
    indices.setflags(write=False)
    return ProjectionGrid(p, d, indices)


def enumeration_size(p, d):
    return comb(p, d)


def enumerate_indices(p, d, cap=DEFAULT_ENUMERATION_CAP):
    """All ``d``-subsets of ``range(p)`` in lexicographic order, as an array."""
    _check_pd(p, d)
    total = comb(p, d)
    if total > cap:
        raise TooLarge(f"C({p}, {d}) = {total} exceeds cap {cap}")
    flat = np.fromiter(
        (i for c in combinations(range(p), d) for i in c),
        dtype=np.int64,
        count=total * d,
    )
    return flat.reshape(total, d)


def enumerate_all(p, d, cap=DEFAULT_ENUMERATION_CAP):
    """Every ``d``-dimensional axis projection in lexicographic order."""
    return [AxisProjection(tuple(row), p) for row in enumerate_indices(p, d, cap)]
