"""Losses, support metrics, tuning curves and small exact oracles."""
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, lgamma

import numpy as np

from . import projections
from .errors import InvalidInput, TooLarge, Unreachable
from .estimator import top_l_support
from .linalg import ZERO_TOL, batched_eigh_desc, eig_top, fix_signs, principal_angle_sines

BRUTE_FORCE_CAP = 10**5
EXACT_B_MAX_P = 2000


def subspace_loss(U, V):
    """Frobenius norm of the sines of the principal angles between `U` and `V`."""
    s = principal_angle_sines(U, V)
    return float(np.sqrt(np.sum(s**2)))


def support_metrics(est_support, true_support):
    """``(|est & true| / |true|, |est - true|)``."""
    est = {int(i) for i in est_support}
    true = {int(i) for i in true_support}
    if not true:
        raise InvalidInput("true support is empty")
    return len(est & true) / len(true), len(est - true)


@dataclass
class VarCurve:
    l_grid: np.ndarray
    values: np.ndarray
    supports: list


def var_curve(scores, src, l_grid):
    """Explained variance of the top-``l`` restricted leading eigenvector, per ``l``.

    Reuses the importance scores of a completed fit; nothing is re-projected.
    """
    scores = np.asarray(scores, dtype=float)
    l_grid = np.asarray(l_grid, dtype=np.int64)
    p = scores.shape[0]
    if l_grid.size and (l_grid.min() < 1 or l_grid.max() > p):
        raise InvalidInput(f"l values must lie in [1, {p}]")
    values = np.empty(len(l_grid))
    supports = []
    for i, l in enumerate(l_grid):
        S = top_l_support(scores, int(l))
        sub = src.submatrix(S)
        v = eig_top(sub, 1).vectors[:, 0]
        values[i] = v @ sub @ v
        supports.append(S)
    return VarCurve(l_grid, values, supports)


@dataclass(frozen=True)
class HypergeomParams:
    """Draw `d` balls from `p`, of which `k` are white."""

    d: int
    k: int
    p: int

    def __post_init__(self):
        if not (0 <= self.k <= self.p and 0 <= self.d <= self.p):
            raise InvalidInput(f"invalid hypergeometric parameters {self}")

    @property
    def lo(self):
        return max(0, self.d + self.k - self.p)

    @property
    def hi(self):
        return min(self.d, self.k)

    @property
    def mode(self):
        return min(self.hi, max(self.lo, (self.d + 1) * (self.k + 1) // (self.p + 2)))


def _log_comb(a, b):
    return lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1)


def hypergeom_logpmf(x, params):
    d, k, p = params.d, params.k, params.p
    if not params.lo <= x <= params.hi:
        return -np.inf
    return _log_comb(k, x) + _log_comb(p - k, d - x) - _log_comb(p, d)


def _tail_weights(params):
    """Support values and weights ``pmf(x) / pmf(mode)``, built outward from the mode.

    Consecutive pmf ratios ``(k-x)(d-x) / ((x+1)(p-k-d+x+1))`` are exact to
    rounding, so the weights that matter carry relative error ~1e-15 even
    for p around 1e6, where direct log-gamma differences lose ~1e-9.
    """
    d, k, p = params.d, params.k, params.p
    lo, hi, mode = params.lo, params.hi, params.mode
    up = np.arange(mode, hi, dtype=float)
    log_up = np.log((k - up) * (d - up)) - np.log((up + 1) * (p - k - d + up + 1))
    down = np.arange(mode, lo, -1, dtype=float)
    log_down = np.log(down * (p - k - d + down)) - np.log((k - down + 1) * (d - down + 1))
    right = np.concatenate([[0.0], np.cumsum(log_up)])
    left = np.concatenate([[0.0], np.cumsum(log_down)])[1:][::-1]
    logw = np.concatenate([left, right])
    xs = np.arange(lo, hi + 1)
    return xs, np.exp(logw)


def hypergeom_cdf(t, params):
    """``P(X <= t)`` for ``X ~ HyperGeom(d, k, p)``."""
    if not isinstance(params, HypergeomParams):
        params = HypergeomParams(*params)
    t = int(np.floor(t))
    if t < params.lo:
        return 0.0
    if t >= params.hi:
        return 1.0
    xs, w = _tail_weights(params)
    total = w.sum()
    # Sum whichever tail is smaller.
    if t < params.mode:
        return float(w[xs <= t].sum() / total)
    return float(1.0 - w[xs > t].sum() / total)


def hypergeom_sf(t, params):
    """``P(X > t)``, summed directly from the upper tail when it is the smaller one."""
    if not isinstance(params, HypergeomParams):
        params = HypergeomParams(*params)
    t = int(np.floor(t))
    if t < params.lo:
        return 1.0
    if t >= params.hi:
        return 0.0
    xs, w = _tail_weights(params)
    total = w.sum()
    if t < params.mode:
        return float(1.0 - w[xs <= t].sum() / total)
    return float(w[xs > t].sum() / total)


def _exact_upper_tail(t, d, k, p):
    num = sum(comb(k, x) * comb(p - k, d - x) for x in range(t, min(d, k) + 1))
    return Fraction(num, comb(p, d))


def choose_B(t, d, k, p):
    """Group size ``ceil(1 / (2 P(X >= t)))`` with ``X ~ HyperGeom(d, k, p)``.

    Exact rational arithmetic for ``p <= 2000``; above that the float tail is
    used and a quotient within 1e-12 (relative) of an integer is snapped to it.
    """
    params = HypergeomParams(d, k, p)
    if not 1 <= t <= k:
        raise InvalidInput(f"t must lie in [1, k={k}], got {t}")
    if t > params.hi:
        raise Unreachable(f"P(X >= {t}) = 0 for HyperGeom(d={d}, k={k}, p={p})")
    if p <= EXACT_B_MAX_P:
        q = _exact_upper_tail(t, d, k, p)
        return int(ceil(Fraction(1, 2) / q))
    q = hypergeom_sf(t - 1, params)
    if q <= 0:
        raise Unreachable(f"P(X >= {t}) underflows for HyperGeom(d={d}, k={k}, p={p})")
    x = 0.5 / q
    nearest = round(x)
    if abs(x - nearest) <= 1e-12 * max(1.0, x):
        return int(nearest)
    return int(ceil(x))


def incoherence(V):
    """``(nnzr, mu)``: number of nonzero rows and the max/min nonzero row-norm ratio."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    norms = np.linalg.norm(V, axis=1)
    nz = norms[norms > ZERO_TOL]
    if nz.size == 0:
        raise InvalidInput("all rows are zero")
    return int(nz.size), float(nz.max() / nz.min())


def brute_force_sparse_pc(src, k, cap=BRUTE_FORCE_CAP):
    """Exact maximiser of ``v^T S v`` over unit vectors with at most `k` nonzeros.

    Scans every ``k x k`` principal submatrix; ties go to the
    lexicographically smallest support.  Returns ``(support, direction, value)``.
    """
    p = src.p
    if not 1 <= k <= p:
        raise InvalidInput(f"k must lie in [1, {p}], got {k}")
    if comb(p, k) > cap:
        raise TooLarge(f"C({p}, {k}) = {comb(p, k)} exceeds cap {cap}")
    all_idx = projections.enumerate_indices(p, k, cap)
    best_val, best_j = -np.inf, -1
    for start in range(0, len(all_idx), 4096):
        values, _ = batched_eigh_desc(src.submatrices(all_idx[start : start + 4096]))
        j = int(np.argmax(values[:, 0]))
        if values[j, 0] > best_val:
            best_val, best_j = values[j, 0], start + j
    support = all_idx[best_j]
    top = eig_top(src.submatrix(support), 1)
    direction = np.zeros(p)
    direction[support] = top.vectors[:, 0]
    fix_signs(direction[:, None])
    return support, direction, float(best_val)
