"""Randomized low-rank SVD by power-iteration sketching.

Four variants share one entry point, ``approximate``:

power
    R = G (A A^T)^i A, Q spans the top-k right singular subspace of R,
    T = A Q = U S W^T, V = Q W.
transpose
    R = G (A A^T)^i, Q an m x k basis from R, T = A^T Q. The factors
    approximate A^T (U is n x k, V is m x k).
sixstep
    As power, but Q is a pivoted-QR basis for all l sketch rows (l >= 2k);
    the rank-l SVD is truncated to k at the end.
blanczos
    Stacks every intermediate sketch G A, G A A^T A, ... into one
    (i+1)l x n matrix, orthonormalizes it by pivoted QR, and truncates the
    resulting rank-(i+1)l SVD to k.

When A has more rows than columns the operator is transposed internally
and the factors are swapped back, so callers see one convention.
"""

import logging
import time
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, model_validator

from rpca.errors import ContractViolation, NumericalBreakdown
from rpca.kernels import householder_qr, orthonormal_range_k, small_svd
from rpca.linop import LinearOperator, Shape, TransposedOperator

logger = logging.getLogger(__name__)

Variant = Literal["power", "transpose", "sixstep", "blanczos"]
VARIANTS: tuple[str, ...] = ("power", "transpose", "sixstep", "blanczos")

DEFAULT_OVERSAMPLING = 2
GUARANTEED_OVERSAMPLING = 12


class SketchParams(BaseModel):
    """Algorithm configuration. ``l`` defaults to k + 2, ``i`` to 1."""

    model_config = ConfigDict(frozen=True)

    k: PositiveInt
    l: Optional[PositiveInt] = None
    i: NonNegativeInt = 1
    variant: Variant = "power"
    seed: int = Field(default=0x5EED, ge=0, lt=2**64)

    @model_validator(mode="before")
    @classmethod
    def _default_l(cls, data):
        if isinstance(data, dict) and data.get("l") is None and data.get("k") is not None:
            data = {**data, "l": data["k"] + DEFAULT_OVERSAMPLING}
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.l <= self.k:
            raise ValueError(f"need l > k, got k={self.k}, l={self.l}")
        if self.variant == "sixstep" and self.l < 2 * self.k:
            raise ValueError(f"sixstep needs l >= 2k, got k={self.k}, l={self.l}")
        if self.variant == "transpose" and self.i < 1:
            raise ValueError("the transpose variant needs i >= 1")
        return self

    @classmethod
    def guaranteed(cls, k: int, **kwargs) -> "SketchParams":
        """Oversampling l = k + 12, the setting with a 1 - 1e-15 success guarantee."""
        return cls(k=k, l=k + GUARANTEED_OVERSAMPLING, **kwargs)

    @property
    def sketch_width(self) -> int:
        return (self.i + 1) * self.l if self.variant == "blanczos" else self.l

    def check_shape(self, shape: Shape) -> None:
        """Raise ContractViolation unless the parameters suit an operator of this shape."""
        short = min(shape.rows, shape.cols)
        if self.variant == "blanczos":
            if self.sketch_width > short - self.k:
                raise ContractViolation(
                    f"blanczos needs (i+1)*l <= min(m, n) - k, got (i+1)*l = {self.sketch_width}, "
                    f"min(m, n) - k = {short - self.k} for shape {shape}"
                )
        elif self.l > short - self.k:
            raise ContractViolation(
                f"{self.variant} needs l <= min(m, n) - k, got l = {self.l}, "
                f"min(m, n) - k = {short - self.k} for shape {shape}"
            )


class GaussianSketch(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    G: np.ndarray
    seed: int


class LowRankFactors(BaseModel):
    """U diag(sigma) V^T, approximating A (or A^T when ``approximates_transpose``)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    approximates_transpose: bool = False

    @model_validator(mode="after")
    def _check(self):
        k = self.sigma.size
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != k or self.V.shape[1] != k:
            raise ValueError(f"factor shapes {self.U.shape}, {self.sigma.shape}, {self.V.shape} disagree")
        if np.any(self.sigma < 0) or np.any(np.diff(self.sigma) > 0):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        return self

    @property
    def k(self) -> int:
        return self.sigma.size

    def dense(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T

    def orthonormality_residuals(self) -> tuple[float, float]:
        """Frobenius norms of U^T U - I and V^T V - I."""
        eye = np.eye(self.k)
        return (
            float(np.linalg.norm(self.U.T @ self.U - eye)),
            float(np.linalg.norm(self.V.T @ self.V - eye)),
        )


class CostReport(BaseModel):
    """Columns pushed through A and A^T, plus the dominant dense-work term."""

    a_applies: int
    at_applies: int
    dense_work: int
    breakdown: dict[str, int]


def gaussian_matrix(l: int, m: int, seed: int) -> GaussianSketch:
    """l x m i.i.d. standard normal matrix from a Philox stream keyed by ``seed``."""
    if l < 1 or m < 1:
        raise ContractViolation(f"gaussian_matrix needs positive sizes, got {l} x {m}")
    rng = np.random.Generator(np.random.Philox(seed))
    return GaussianSketch(G=rng.standard_normal((l, m)), seed=seed)


def _checked(block: np.ndarray, step: str) -> np.ndarray:
    if not np.all(np.isfinite(block)):
        raise NumericalBreakdown(step)
    return block


def _sketch_columns(A: LinearOperator, params: SketchParams) -> list[np.ndarray]:
    """Transposed sketches R^T = A^T G^T, A^T A R^T, ...; one entry per stage for blanczos."""
    G = gaussian_matrix(params.l, A.shape.rows, params.seed).G
    stage = _checked(A.apply_transpose_block(G.T), "sketch G A")
    stages = [stage]
    for step in range(params.i):
        stage = _checked(A.apply_block(stage), f"power step {step + 1}: apply A")
        stage = _checked(A.apply_transpose_block(stage), f"power step {step + 1}: apply A^T")
        stages.append(stage)
    if params.variant == "blanczos":
        return stages
    return stages[-1:]


def _pivoted_basis(Rt: np.ndarray, k: int, step: str) -> np.ndarray:
    qr = householder_qr(Rt, pivoting="column")
    if qr.rank < k:
        raise NumericalBreakdown(step, f"sketch has numerical rank {qr.rank} < k = {k}")
    return qr.Q


def _finish(A: LinearOperator, Q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    T = _checked(A.apply_block(Q), "form T = A Q")
    svd = small_svd(T)
    V = Q @ svd.V
    return svd.U[:, :k], svd.sigma[:k], V[:, :k]


def _approximate_short(A: LinearOperator, params: SketchParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = params.k
    if params.variant == "transpose":
        G = gaussian_matrix(params.l, A.shape.rows, params.seed).G
        Rt = G.T
        for step in range(params.i):
            Rt = _checked(A.apply_transpose_block(Rt), f"power step {step + 1}: apply A^T")
            Rt = _checked(A.apply_block(Rt), f"power step {step + 1}: apply A")
        Q, _ = orthonormal_range_k(Rt.T, k)
        return _finish(TransposedOperator(A), Q, k)

    stages = _sketch_columns(A, params)
    if params.variant == "power":
        Q, rho = orthonormal_range_k(stages[0].T, k)
        logger.debug(f"Sketch singular values: rho_1 = {rho[0]:.3e}, rho_k+1 = {rho[k]:.3e}")
    elif params.variant == "sixstep":
        Q = _pivoted_basis(stages[0], k, "pivoted QR of the sketch")
    else:
        Q = _pivoted_basis(np.hstack(stages), k, "pivoted QR of the stacked sketch")
    return _finish(A, Q, k)


def approximate(A: LinearOperator, params: SketchParams) -> LowRankFactors:
    """Rank-k approximation U diag(sigma) V^T of A (of A^T for the transpose variant)."""
    params.check_shape(A.shape)
    started = time.perf_counter()

    flipped = A.shape.rows > A.shape.cols
    U, sigma, V = _approximate_short(TransposedOperator(A) if flipped else A, params)
    if flipped:
        U, V = V, U

    logger.debug(
        f"{params.variant} approximation of {A.shape} (k={params.k}, l={params.l}, i={params.i}) "
        f"took {time.perf_counter() - started:.3f}s"
    )
    return LowRankFactors(
        U=np.ascontiguousarray(U),
        sigma=sigma,
        V=np.ascontiguousarray(V),
        approximates_transpose=params.variant == "transpose",
    )


def cost_report(A_shape: Shape, params: SketchParams) -> CostReport:
    """Operator-application counts (in columns) and the dense-work term.

    Counts refer to the caller's A; when A has more rows than columns the
    algorithm runs on A^T, so the roles of A and A^T swap.
    """
    k, l, i = params.k, params.l, params.i
    short, long = sorted((A_shape.rows, A_shape.cols))

    if params.variant == "power":
        breakdown = {"sketch_at": l, "power_a": i * l, "power_at": i * l, "t_a": k}
        dense = l * l * long
    elif params.variant == "transpose":
        breakdown = {"sketch_at": 0, "power_a": i * l, "power_at": i * l, "t_at": k}
        dense = l * l * short
    elif params.variant == "sixstep":
        breakdown = {"sketch_at": l, "power_a": i * l, "power_at": i * l, "t_a": l}
        dense = l * l * long
    else:
        width = (i + 1) * l
        breakdown = {"sketch_at": l, "power_a": i * l, "power_at": i * l, "t_a": width}
        dense = width * width * long

    a = breakdown["power_a"] + breakdown.get("t_a", 0)
    at = breakdown["sketch_at"] + breakdown["power_at"] + breakdown.get("t_at", 0)
    if A_shape.rows > A_shape.cols:
        a, at = at, a
    return CostReport(a_applies=a, at_applies=at, dense_work=dense, breakdown=breakdown)
