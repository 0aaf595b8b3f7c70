import numpy as np
import pytest

from spcavrp.models import make_single_spike, sample_gaussian


def random_psd(rng, p, n=None):
    """Sample covariance of ``n`` Gaussian rows with a random mixing matrix."""
    n = n or 3 * p
    G = rng.standard_normal((p, p))
    X = rng.standard_normal((n, p)) @ G
    return X.T @ X / n, X


@pytest.fixture
def spike_data():
    model = make_single_spike(30, 5, 4.0)
    return model, sample_gaussian(model, 400, 11)


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(label, passed, detail)``."""

    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
