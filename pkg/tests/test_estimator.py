from itertools import combinations

import numpy as np
import pytest

from spcavrp.covariance import CovarianceSource
from spcavrp.errors import InvalidInput
from spcavrp.estimator import (
    SpcavrpConfig,
    accumulate_scores,
    fit,
    fit_source,
    select_in_group,
    top_l_support,
)
from spcavrp.evaluation import subspace_loss
from spcavrp.projections import AxisProjection

from conftest import random_psd


def enumerate_oracle(S, k):
    """Best k-subset by leading eigenvalue, scanning combinations in order."""
    best, best_val = None, -np.inf
    for c in combinations(range(S.shape[0]), k):
        val = np.linalg.eigvalsh(S[np.ix_(c, c)])[-1]
        if val > best_val:
            best, best_val = c, val
    w, V = np.linalg.eigh(S[np.ix_(best, best)])
    v = np.zeros(S.shape[0])
    v[list(best)] = V[:, -1]
    return np.array(best), v


def test_select_in_group_single_projection():
    src = CovarianceSource.from_matrix(np.diag(np.arange(1.0, 7.0)))
    sel = select_in_group(src, [AxisProjection((1, 4), 6)], m=1)
    assert sel.b_star == 0


def test_select_in_group_picks_larger_diagonal():
    src = CovarianceSource.from_matrix(np.diag(1.0 + np.arange(6)))
    sel = select_in_group(src, [AxisProjection((0,), 6), AxisProjection((3,), 6)], m=1)
    assert sel.b_star == 1
    assert sel.support.indices == (3,)
    np.testing.assert_allclose(sel.eigenvalues, [4.0, 0.0])


def test_select_in_group_tie_goes_first():
    src = CovarianceSource.from_matrix(np.eye(5))
    sel = select_in_group(src, [AxisProjection((0, 1), 5), AxisProjection((2, 3), 5)], m=1)
    assert sel.b_star == 0


def test_accumulate_scores_diagonal_example():
    S = np.eye(8)
    S[2, 2], S[5, 5] = 3.0, 1.0
    src = CovarianceSource.from_matrix(S)
    sel = select_in_group(src, [AxisProjection((2, 5), 8)], m=1)
    w = accumulate_scores([sel], m=1, p=8)
    expected = np.zeros(8)
    expected[2] = 2.0
    np.testing.assert_allclose(w, expected, atol=1e-15)


def test_accumulate_scores_zero_gap_and_averaging():
    src = CovarianceSource.from_matrix(2.0 * np.eye(6))
    sels = [select_in_group(src, [AxisProjection((a, a + 1), 6)], m=1, a=a) for a in range(5)]
    np.testing.assert_array_equal(accumulate_scores(sels, 1, 6), np.zeros(6))

    rng = np.random.default_rng(0)
    src = CovarianceSource.from_matrix(random_psd(rng, 6)[0])
    one = select_in_group(src, [AxisProjection((0, 2, 3), 6)], m=2)
    np.testing.assert_allclose(
        accumulate_scores([one] * 7, 2, 6), accumulate_scores([one], 2, 6), rtol=1e-15
    )


def test_top_l_support():
    np.testing.assert_array_equal(top_l_support([0.3, 0.1, 0.3, 0.0], 2), [0, 2])
    np.testing.assert_array_equal(top_l_support(np.zeros(5), 5), np.arange(5))
    w = np.random.default_rng(1).permutation(20) / 7.0
    np.testing.assert_array_equal(top_l_support(w, 6), np.sort(np.argsort(w)[::-1][:6]))


def test_exhaustive_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(5):
        S, X = random_psd(rng, 10)
        est = fit(X, SpcavrpConfig(d=2, l=2, m=1, exhaustive=True))
        support, v = enumerate_oracle(S, 2)
        np.testing.assert_array_equal(est.support, support)
        assert subspace_loss(est.vectors, v[:, None]) <= 1e-10


def test_exhaustive_diagonal_picks_e1():
    lam = np.array([5.0] + [1.0] * 5)
    n = 6
    X = np.diag(np.sqrt(n * lam))
    est = fit(X, SpcavrpConfig(d=1, l=1, exhaustive=True))
    np.testing.assert_allclose(est.vectors[:, 0], np.eye(6)[0])


def test_fit_support_and_orthonormality(spike_data):
    _, X = spike_data
    est = fit(X, SpcavrpConfig(d=6, l=8, A=60, B=20, m=3, seed=4))
    assert len(est.support) == 8
    off = np.setdiff1d(np.arange(30), est.support)
    assert np.all(est.vectors[off] == 0)
    np.testing.assert_allclose(est.vectors.T @ est.vectors, np.eye(3), atol=1e-10)
    assert np.all(np.diff(est.eigenvalues) <= 0)


def test_fit_recovers_spike(spike_data):
    model, X = spike_data
    est = fit(X, SpcavrpConfig(d=5, l=5, A=100, B=30, seed=1))
    np.testing.assert_array_equal(est.support, np.arange(5))
    assert subspace_loss(est.vectors, model.vectors) < 0.15


def test_fit_deterministic_across_threads(spike_data):
    _, X = spike_data
    cfg = SpcavrpConfig(d=5, l=5, A=200, B=40, m=2, seed=99)
    a = fit(X, cfg, threads=1)
    b = fit(X, cfg, threads=4)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    assert a.scores.tobytes() == b.scores.tobytes()
    np.testing.assert_array_equal(a.b_star, b.b_star)


def test_strategies_agree(spike_data):
    _, X = spike_data
    pre = fit(X, SpcavrpConfig(d=5, l=5, A=30, B=10, seed=5, strategy="precomputed"))
    lazy = fit(X, SpcavrpConfig(d=5, l=5, A=30, B=10, seed=5, strategy="on-demand"))
    np.testing.assert_array_equal(pre.support, lazy.support)
    np.testing.assert_allclose(pre.scores, lazy.scores, atol=1e-10)


def test_selections_reproduce_scores(spike_data):
    _, X = spike_data
    est = fit(X, SpcavrpConfig(d=4, l=6, A=25, B=8, m=2, seed=3))
    np.testing.assert_allclose(accumulate_scores(est.selections(), 2, 30), est.scores, rtol=1e-14)


def test_m_equal_d_uses_zero_convention():
    rng = np.random.default_rng(2)
    S, _ = random_psd(rng, 5)
    src = CovarianceSource.from_matrix(S)
    sel = select_in_group(src, [AxisProjection((0, 1), 5)], m=2)
    assert sel.eigenvalues[-1] == 0.0
    np.testing.assert_allclose(sel.eigenvalues[:2], np.linalg.eigvalsh(S[:2, :2])[::-1])


def test_short_scores_flag():
    S = np.diag([4.0, 1.0, 1.0, 1.0, 1.0])
    est = fit_source(CovarianceSource.from_matrix(S), SpcavrpConfig(d=1, l=3, exhaustive=True))
    assert est.short_scores
    assert len(est.support) == 3


@pytest.mark.parametrize(
    "kwargs",
    [dict(d=3, l=2, m=3), dict(d=7, l=2), dict(d=2, l=7), dict(d=2, l=2, A=0), dict(d=2, l=2, strategy="x")],
)
def test_invalid_configs(kwargs):
    with pytest.raises(InvalidInput):
        fit(np.ones((4, 6)), SpcavrpConfig(**kwargs))


def test_l_below_m_rejected():
    with pytest.raises(InvalidInput):
        fit(np.ones((4, 6)), SpcavrpConfig(d=3, l=1, m=2))


def test_empty_data_rejected():
    with pytest.raises(InvalidInput):
        fit(np.ones((0, 4)), SpcavrpConfig(d=1, l=1))
