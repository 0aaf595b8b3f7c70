import numpy as np
import pytest

from spcavrp.covariance import (
    ON_DEMAND,
    PRECOMPUTED,
    CovarianceSource,
    center_columns,
    choose_strategy,
    projected_covariance,
    sample_covariance,
)
from spcavrp.errors import InvalidInput
from spcavrp.projections import AxisProjection


def test_center_columns_examples():
    np.testing.assert_array_equal(center_columns([[3.0, -1.0, 2.0]]), [[0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(center_columns([[1.0, 2.0], [3.0, 4.0]]), [[-1, -1], [1, 1]])
    X = center_columns(np.random.default_rng(0).standard_normal((20, 4)))
    np.testing.assert_allclose(center_columns(X), X, atol=1e-12)


def test_sample_covariance_examples():
    np.testing.assert_array_equal(sample_covariance([[1.0, 2.0]]), [[1, 2], [2, 4]])
    np.testing.assert_allclose(sample_covariance(np.eye(2)), np.diag([0.5, 0.5]))
    X = np.random.default_rng(1).standard_normal((10, 3))
    np.testing.assert_allclose(sample_covariance(3 * X), 9 * sample_covariance(X))


def test_centered_covariance_matches_numpy():
    X = np.random.default_rng(2).standard_normal((30, 5)) + 4
    np.testing.assert_allclose(sample_covariance(center_columns(X)), np.cov(X.T, bias=True), atol=1e-12)


def test_projected_covariance_examples():
    X = np.random.default_rng(4).standard_normal((8, 5))
    S = sample_covariance(X)
    pre = CovarianceSource.from_data(X, PRECOMPUTED)
    lazy = CovarianceSource.from_data(X, ON_DEMAND)
    np.testing.assert_allclose(projected_covariance(pre, AxisProjection(tuple(range(5)), 5)), S)
    np.testing.assert_allclose(projected_covariance(pre, [3]), [[S[3, 3]]])
    np.testing.assert_allclose(
        projected_covariance(lazy, [1, 3]), projected_covariance(pre, [1, 3]), atol=1e-10
    )
    with pytest.raises(InvalidInput):
        projected_covariance(pre, [0, 5])


def test_choose_strategy():
    assert choose_strategy(100, 10, 10, 10, 10) == PRECOMPUTED
    assert choose_strategy(50, 10**4, 50, 50, 10) == ON_DEMAND
    # d = p with A = B = 1: n p^2 + p^2 versus n p^2 -- full matrix costs more.
    assert choose_strategy(5, 4, 1, 1, 4) == ON_DEMAND
    # n p^2 + A B d^2 = 8 + 8 = A B n d^2 = 16: the tie goes to the full matrix.
    assert choose_strategy(2, 2, 2, 1, 2) == PRECOMPUTED
    assert choose_strategy(2, 2, 1, 1, 2) == ON_DEMAND
    assert choose_strategy(1, 1, 1, 1, 1) == ON_DEMAND


def test_from_matrix_rejects_indefinite():
    with pytest.raises(InvalidInput):
        CovarianceSource.from_matrix(np.diag([1.0, -1.0]))
    src = CovarianceSource.from_matrix(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(src.diagonal(), [2.0, 1.0])


def test_on_demand_diagonal():
    X = np.random.default_rng(5).standard_normal((12, 6))
    lazy = CovarianceSource.from_data(X, ON_DEMAND)
    np.testing.assert_allclose(lazy.diagonal(), np.diag(sample_covariance(X)))
