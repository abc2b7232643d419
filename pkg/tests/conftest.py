import numpy as np
import pytest

from rpca.linop import DenseOperator, HadamardSpectrumOperator


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Acceptance runs are single-threaded unless a test opts in."""
    monkeypatch.setenv("RPCA_THREADS", "1")


@pytest.fixture
def dense_op(rng):
    return DenseOperator(rng.standard_normal((5, 7)))


@pytest.fixture
def hadamard_op():
    return HadamardSpectrumOperator([1.0, 0.7, 0.5, 0.2])
