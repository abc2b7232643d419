"""Randomized power-method estimates of spectral norms, used to certify
delta = ||A - U diag(sigma) V^T|| without forming the residual."""

import logging
from typing import Iterable

import numpy as np
from pydantic import BaseModel, Field

from rpca.errors import ContractViolation, NumericalBreakdown
from rpca.linop import LinearOperator, LowRankResidualOperator
from rpca.randsvd import LowRankFactors

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 20


class NormEstimate(BaseModel):
    value: float = Field(ge=0)
    iterations: int
    seed: int


def estimate_spectral_norm(op: LinearOperator, iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> NormEstimate:
    """Estimate ||B|| from below by ``iterations`` normalized B^T B power steps.

    The start vector is standard Gaussian; the returned value is ||B v|| for
    the final unit iterate v, so it never exceeds the true norm.
    """
    if iterations < 1:
        raise ContractViolation(f"estimate_spectral_norm needs iterations >= 1, got {iterations}")

    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(op.shape.cols)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        v = op.apply_transpose_block(op.apply_block(v))
        size = np.linalg.norm(v)
        if not np.isfinite(size):
            raise NumericalBreakdown("power method", "iterate norm is not finite")
        if size == 0.0:
            return NormEstimate(value=0.0, iterations=iterations, seed=seed)
        v /= size

    value = float(np.linalg.norm(op.apply_block(v)))
    return NormEstimate(value=value, iterations=iterations, seed=seed)


def residual_operator(A: LinearOperator, F: LowRankFactors) -> LinearOperator:
    """A - U diag(sigma) V^T as a matrix-free operator (A^T - ... for transposed factors)."""
    target = A.T if F.approximates_transpose else A
    return LowRankResidualOperator(target, F.U * F.sigma, F.V)


def certify(
    A: LinearOperator,
    F: LowRankFactors,
    iterations: int = DEFAULT_ITERATIONS,
    seeds: Iterable[int] = (0,),
) -> NormEstimate:
    """Worst (largest) residual-norm estimate over several start vectors."""
    residual = residual_operator(A, F)
    estimates = [estimate_spectral_norm(residual, iterations, seed) for seed in seeds]
    if not estimates:
        raise ContractViolation("certify needs at least one seed")
    worst = max(estimates, key=lambda e: e.value)
    logger.debug(f"Certified delta = {worst.value:.4e} over {len(estimates)} start vector(s)")
    return worst
