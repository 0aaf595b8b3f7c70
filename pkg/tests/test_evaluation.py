from fractions import Fraction
from math import comb

import numpy as np
import pytest

from spcavrp.covariance import CovarianceSource
from spcavrp.errors import InvalidInput, TooLarge, Unreachable
from spcavrp.evaluation import (
    HypergeomParams,
    brute_force_sparse_pc,
    choose_B,
    hypergeom_cdf,
    hypergeom_logpmf,
    incoherence,
    subspace_loss,
    support_metrics,
    var_curve,
)
from spcavrp.models import make_single_spike

from conftest import random_psd


def exact_cdf(t, d, k, p):
    return sum(
        (Fraction(comb(k, x) * comb(p - k, d - x), comb(p, d)) for x in range(0, t + 1)),
        Fraction(0),
    )


def test_subspace_loss_examples():
    I = np.eye(4)
    assert subspace_loss(I[:, :2], I[:, :2]) == 0.0
    assert subspace_loss(I[:, 0], I[:, 1]) == pytest.approx(1.0)
    c, s = np.cos(0.3), np.sin(0.3)
    rotated = I[:, :2] @ np.array([[c, -s], [s, c]])
    assert subspace_loss(I[:, :2], rotated) <= 1e-15


def test_subspace_loss_single_vector_formula():
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 7))
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    assert subspace_loss(u, v) == pytest.approx(np.sqrt(1 - (u @ v) ** 2), abs=1e-14)


def test_subspace_loss_resolves_tiny_angles():
    u = np.array([1.0, 0.0])
    v = np.array([np.cos(1e-12), np.sin(1e-12)])
    assert subspace_loss(u, v) == pytest.approx(1e-12, rel=1e-6)


def test_support_metrics():
    assert support_metrics([1, 2, 3], [1, 2, 3]) == (1.0, 0)
    assert support_metrics(range(5), range(5, 10)) == (0.0, 5)
    rec, false = support_metrics([0, 1, 2], [1, 2, 3])
    assert rec == pytest.approx(2 / 3) and false == 1


def test_hypergeom_examples():
    assert hypergeom_cdf(2, (2, 2, 4)) == 1.0
    assert hypergeom_cdf(0, (2, 2, 4)) == pytest.approx(1 / 6, abs=1e-15)
    assert hypergeom_cdf(1, (2, 2, 4)) == pytest.approx(5 / 6, abs=1e-15)
    # Drawing every ball: point mass at k.
    assert hypergeom_cdf(2, (7, 3, 7)) == 0.0
    assert hypergeom_cdf(3, (7, 3, 7)) == 1.0
    assert hypergeom_cdf(-1, (3, 2, 6)) == 0.0
    assert np.exp(hypergeom_logpmf(1, HypergeomParams(2, 2, 4))) == pytest.approx(4 / 6)


def test_hypergeom_matches_enumeration_small():
    worst = 0.0
    for p in range(1, 13):
        for k in range(p + 1):
            for d in range(p + 1):
                for t in range(0, min(d, k) + 1):
                    got = hypergeom_cdf(t, HypergeomParams(d, k, p))
                    worst = max(worst, abs(got - float(exact_cdf(t, d, k, p))))
    assert worst <= 1e-12


def test_hypergeom_large_p_against_product_form():
    # P(X = 0) = prod_i (p - k - i) / (p - i), accumulated in exact rationals.
    d, k, p = 40, 30, 10**6
    exact = Fraction(1)
    for i in range(d):
        exact *= Fraction(p - k - i, p - i)
    assert hypergeom_cdf(0, (d, k, p)) == pytest.approx(float(exact), abs=1e-12)


def test_hypergeom_invalid():
    with pytest.raises(InvalidInput):
        hypergeom_cdf(1, (3, 5, 4))


def test_choose_B_examples():
    assert choose_B(1, 5, 5, 5) == 1
    assert choose_B(1, 2, 2, 4) == 1
    assert choose_B(2, 2, 2, 4) == 3
    with pytest.raises(Unreachable):
        choose_B(3, 2, 3, 10)
    with pytest.raises(InvalidInput):
        choose_B(0, 2, 3, 10)


def test_choose_B_large_p_agrees_with_exact():
    # Float path (p > 2000) against exact rationals.
    d, k, p, t = 40, 30, 2500, 2
    q = 1 - exact_cdf(t - 1, d, k, p)
    expected = -(-Fraction(1, 2) // q)
    assert choose_B(t, d, k, p) == expected


def test_incoherence_examples():
    V = np.zeros((6, 2))
    V[:3] = 1 / np.sqrt(6)
    assert incoherence(V) == (3, pytest.approx(1.0))
    assert incoherence(make_single_spike(20, 7, 1.0).vectors) == (7, pytest.approx(1.0))
    assert incoherence(make_single_spike(20, 7, 1.0, "linear").vectors) == (7, pytest.approx(7.0))
    with pytest.raises(InvalidInput):
        incoherence(np.zeros((3, 1)))


def test_var_curve_examples():
    rng = np.random.default_rng(1)
    S, _ = random_psd(rng, 6)
    src = CovarianceSource.from_matrix(S)
    curve = var_curve(rng.random(6), src, [6])
    assert curve.values[0] == pytest.approx(np.linalg.eigvalsh(S)[-1])

    src = CovarianceSource.from_matrix(np.diag([5.0, 1.0, 1.0]))
    curve = var_curve(np.array([0.9, 0.1, 0.0]), src, [1])
    assert curve.values[0] == pytest.approx(5.0)
    with pytest.raises(InvalidInput):
        var_curve(np.ones(3), src, [4])


def test_brute_force_diagonal_and_full():
    # Every subset holding index 1 attains 4; the first in lexicographic order wins.
    src = CovarianceSource.from_matrix(np.diag([1.0, 4.0, 2.0, 3.0, 0.5]))
    support, v, val = brute_force_sparse_pc(src, 2)
    np.testing.assert_array_equal(support, [0, 1])
    np.testing.assert_allclose(v, [0, 1, 0, 0, 0])
    assert val == pytest.approx(4.0)

    rng = np.random.default_rng(2)
    S, _ = random_psd(rng, 5)
    support, v, val = brute_force_sparse_pc(CovarianceSource.from_matrix(S), 5)
    w, U = np.linalg.eigh(S)
    assert val == pytest.approx(w[-1])
    assert subspace_loss(v, U[:, -1]) < 1e-10


def test_brute_force_beats_random_search():
    rng = np.random.default_rng(3)
    S, _ = random_psd(rng, 6)
    _, _, val = brute_force_sparse_pc(CovarianceSource.from_matrix(S), 2)
    best = -np.inf
    for _ in range(1000):
        v = np.zeros(6)
        idx = rng.choice(6, 2, replace=False)
        v[idx] = rng.standard_normal(2)
        v /= np.linalg.norm(v)
        best = max(best, v @ S @ v)
    assert val >= best - 1e-12


def test_brute_force_cap():
    with pytest.raises(TooLarge):
        brute_force_sparse_pc(CovarianceSource.from_matrix(np.eye(40)), 10)
