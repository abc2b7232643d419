import numpy as np
import pytest

from rpca.errors import ContractViolation, NumericalBreakdown
from rpca.linop import CallbackOperator, DenseOperator
from rpca.randsvd import LowRankFactors, SketchParams, approximate
from rpca.specnorm import certify, estimate_spectral_norm, residual_operator

from . import planted_matrix


def test_diagonal_example():
    estimate = estimate_spectral_norm(DenseOperator(np.diag([5.0, 1.0, 1.0])), 20, seed=1)
    assert abs(estimate.value - 5.0) <= 1e-6
    assert estimate.iterations == 20 and estimate.seed == 1


def test_zero_matrix_has_zero_norm():
    assert estimate_spectral_norm(DenseOperator(np.zeros((4, 6)))).value == 0.0


def test_estimate_never_exceeds_the_norm(rng):
    for trial in range(50):
        A = rng.standard_normal((rng.integers(2, 30), rng.integers(2, 30)))
        true = np.linalg.norm(A, 2)
        assert estimate_spectral_norm(DenseOperator(A), 20, seed=trial).value <= true * (1 + 1e-12)


def test_estimate_is_accurate_with_a_spectral_gap(rng):
    hits = 0
    for trial in range(50):
        m, n = rng.integers(5, 40, size=2)
        r = min(m, n)
        sigma = np.concatenate([[1.0], np.sort(rng.uniform(0, 0.8, r - 1))[::-1]])
        A = planted_matrix(rng, m, n, sigma)
        hits += estimate_spectral_norm(DenseOperator(A), 20, seed=trial).value >= 0.9
    assert hits >= 49


def test_estimate_is_deterministic(rng):
    op = DenseOperator(rng.standard_normal((10, 12)))
    assert estimate_spectral_norm(op, seed=5).value == estimate_spectral_norm(op, seed=5).value


def test_iterations_must_be_positive(dense_op):
    with pytest.raises(ContractViolation):
        estimate_spectral_norm(dense_op, iterations=0)


def test_non_finite_iterate_is_a_breakdown():
    op = CallbackOperator((3, 3), lambda X: X * np.inf, lambda Y: Y)
    with pytest.raises(NumericalBreakdown):
        estimate_spectral_norm(op)


def test_residual_of_exact_truncation_is_next_singular_value(rng):
    sigma = 0.7 ** np.arange(30)
    A = planted_matrix(rng, 30, 40, sigma)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    k = 4
    factors = LowRankFactors(U=U[:, :k], sigma=s[:k], V=Vt[:k].T)
    delta = certify(DenseOperator(A), factors, 20, seeds=(0, 1, 2)).value
    assert abs(delta - sigma[k]) <= 1e-6 * sigma[k]


def test_zero_factors_certify_the_norm_of_a(rng):
    A = planted_matrix(rng, 12, 20, [3.0, 1.0, 0.5])
    factors = LowRankFactors(U=np.zeros((12, 2)), sigma=np.zeros(2), V=np.zeros((20, 2)))
    assert np.isclose(certify(DenseOperator(A), factors).value, 3.0, rtol=1e-6)


def test_transposed_factors_are_checked_against_the_transpose(rng):
    A = rng.standard_normal((20, 30))
    factors = approximate(DenseOperator(A), SketchParams(k=3, variant="transpose"))
    residual = residual_operator(DenseOperator(A), factors)
    assert (residual.shape.rows, residual.shape.cols) == (30, 20)
    assert certify(DenseOperator(A), factors).value <= np.linalg.norm(A.T - factors.dense(), 2) * (1 + 1e-12)


def test_certify_needs_a_seed(dense_op):
    factors = LowRankFactors(U=np.zeros((5, 1)), sigma=np.zeros(1), V=np.zeros((7, 1)))
    with pytest.raises(ContractViolation):
        certify(dense_op, factors, seeds=())
