"""Matrix-free linear operators.

Every algorithm in rpca touches the matrix being approximated only through
``apply_block`` (A @ X for an n x s block X) and ``apply_transpose_block``
(A.T @ Y for an m x s block Y). The backends here are a dense array, a CSR
sparse matrix, and the Hadamard-structured test operator whose application
costs O(m log m) per column via the fast Walsh-Hadamard transform.
"""

import logging
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import scipy.sparse
from pydantic import BaseModel, ConfigDict, PositiveInt, ValidationError

from rpca.config import get_settings
from rpca.errors import ContractViolation

logger = logging.getLogger(__name__)


class Shape(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: PositiveInt
    cols: PositiveInt

    @classmethod
    def of(cls, rows: int, cols: int) -> "Shape":
        try:
            return cls(rows=rows, cols=cols)
        except ValidationError as e:
            raise ContractViolation(f"shape must be positive, got {rows} x {cols}") from e

    def __str__(self):
        return f"{self.rows}x{self.cols}"


def _as_block(X, rows: int, op_name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != rows or X.shape[1] < 1:
        raise ContractViolation(
            f"{op_name}: expected a block with {rows} rows and at least one column, got shape {X.shape}"
        )
    return X


class LinearOperator(ABC):
    """An m x n real matrix accessible only through block products."""

    shape: Shape

    @abstractmethod
    def _apply(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _apply_transpose(self, Y: np.ndarray) -> np.ndarray:
        ...

    def apply_block(self, X) -> np.ndarray:
        vector = np.ndim(X) == 1
        out = self._apply(_as_block(X, self.shape.cols, "apply_block"))
        return out[:, 0] if vector else out

    def apply_transpose_block(self, Y) -> np.ndarray:
        vector = np.ndim(Y) == 1
        out = self._apply_transpose(_as_block(Y, self.shape.rows, "apply_transpose_block"))
        return out[:, 0] if vector else out

    @property
    def T(self) -> "LinearOperator":
        return TransposedOperator(self)

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


def apply_block(op: LinearOperator, X) -> np.ndarray:
    """Return A @ X for the matrix A represented by ``op``."""
    return op.apply_block(X)


def apply_transpose_block(op: LinearOperator, Y) -> np.ndarray:
    """Return A.T @ Y for the matrix A represented by ``op``."""
    return op.apply_transpose_block(Y)


def _map_columns(fn: Callable[[np.ndarray], np.ndarray], X: np.ndarray) -> np.ndarray:
    # columns are independent, so chunked output equals the serial result
    threads = get_settings().threads
    cols = X.shape[1]
    if threads <= 1 or cols < 2:
        return fn(X)
    chunks = np.array_split(np.arange(cols), min(threads, cols))
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda idx: fn(np.ascontiguousarray(X[:, idx])), chunks))
    return np.hstack(parts)


class DenseOperator(LinearOperator):
    def __init__(self, data):
        data = np.array(data, dtype=np.float64, order="C")
        if data.ndim != 2:
            raise ContractViolation(f"dense matrix must be 2-D, got {data.ndim}-D")
        if not np.all(np.isfinite(data)):
            raise ContractViolation("dense matrix contains NaN or Inf entries")
        self.shape = Shape.of(*data.shape)
        self.data = data
        self.data.setflags(write=False)

    def _apply(self, X):
        return self.data @ X

    def _apply_transpose(self, Y):
        return self.data.T @ Y


class SparseCsrOperator(LinearOperator):
    """CSR-backed operator; the arrays are validated, then handed to scipy."""

    def __init__(self, indptr, indices, values, shape: tuple[int, int]):
        self.shape = Shape.of(*shape)
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        rows, cols = self.shape.rows, self.shape.cols

        if indptr.shape != (rows + 1,) or indptr[0] != 0:
            raise ContractViolation(f"row offsets must have length {rows + 1} and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise ContractViolation("row offsets must be nondecreasing")
        if indptr[-1] != values.size or indices.size != values.size:
            raise ContractViolation(
                f"offsets[rows] = {indptr[-1]} must equal the number of stored values {values.size}"
            )
        if indices.size and (indices.min() < 0 or indices.max() >= cols):
            raise ContractViolation(f"column indices must lie in [0, {cols})")
        row_of = np.repeat(np.arange(rows), np.diff(indptr))
        same_row = row_of[1:] == row_of[:-1]
        if np.any(np.diff(indices)[same_row] <= 0):
            raise ContractViolation("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(values)):
            raise ContractViolation("sparse matrix contains NaN or Inf entries")

        self.matrix = scipy.sparse.csr_array((values, indices, indptr), shape=(rows, cols))

    @classmethod
    def from_scipy(cls, matrix) -> "SparseCsrOperator":
        csr = scipy.sparse.csr_array(matrix, dtype=np.float64)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.indptr, csr.indices, csr.data, csr.shape)

    def _apply(self, X):
        return np.asarray(self.matrix @ X)

    def _apply_transpose(self, Y):
        return np.asarray(self.matrix.T @ Y)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def fwht_in_place(v: np.ndarray) -> np.ndarray:
    """Overwrite ``v`` with H @ v, H the unnormalized Sylvester-Hadamard matrix.

    ``v`` may be a vector or a C-contiguous block; the transform runs along
    axis 0. Divide by sqrt(len) for the orthogonal action.
    """
    if not isinstance(v, np.ndarray) or v.ndim == 0:
        raise ContractViolation("fwht_in_place needs a numpy array")
    n = v.shape[0]
    if not _is_power_of_two(n):
        raise ContractViolation(f"fwht_in_place needs a power-of-two length, got {n}")
    if not v.flags.c_contiguous:
        raise ContractViolation("fwht_in_place needs a C-contiguous array")

    h = 1
    while h < n:
        pairs = v.reshape(n // (2 * h), 2, h, *v.shape[1:])
        top = pairs[:, 0].copy()
        pairs[:, 0] += pairs[:, 1]
        np.subtract(top, pairs[:, 1], out=pairs[:, 1])
        h *= 2
    return v


class HadamardSpectrumOperator(LinearOperator):
    """A = U diag(sigma) V.T with U, V normalized Sylvester-Hadamard matrices.

    U is m x m, V is 2m x 2m and only the first m columns of V carry weight,
    so A is m x 2m with singular values ``sigma``.
    """

    def __init__(self, sigma):
        sigma = np.array(sigma, dtype=np.float64)
        m = sigma.size
        if sigma.ndim != 1 or not _is_power_of_two(m):
            raise ContractViolation(f"sigma must be a vector of power-of-two length, got shape {sigma.shape}")
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise ContractViolation("sigma must be finite and nonnegative")
        if np.any(np.diff(sigma) > 0):
            raise ContractViolation("sigma must be nonincreasing")
        sigma.setflags(write=False)
        self.sigma = sigma
        self.m = m
        self.n = 2 * m
        self.shape = Shape.of(self.m, self.n)

    def _apply_serial(self, X):
        z = fwht_in_place(np.array(X, order="C"))
        head = np.ascontiguousarray(z[: self.m]) * (self.sigma[:, None] / np.sqrt(self.n))
        return fwht_in_place(head) / np.sqrt(self.m)

    def _apply_transpose_serial(self, Y):
        w = fwht_in_place(np.array(Y, order="C")) * (self.sigma[:, None] / np.sqrt(self.m))
        padded = np.zeros((self.n, Y.shape[1]))
        padded[: self.m] = w
        return fwht_in_place(padded) / np.sqrt(self.n)

    def _apply(self, X):
        return _map_columns(self._apply_serial, X)

    def _apply_transpose(self, Y):
        return _map_columns(self._apply_transpose_serial, Y)


class TransposedOperator(LinearOperator):
    def __init__(self, op: LinearOperator):
        self.op = op
        self.shape = Shape.of(op.shape.cols, op.shape.rows)

    def _apply(self, X):
        return self.op.apply_transpose_block(X)

    def _apply_transpose(self, Y):
        return self.op.apply_block(Y)

    @property
    def T(self) -> LinearOperator:
        return self.op


class CallbackOperator(LinearOperator):
    """Wrap a pair of block callbacks (A @ X, A.T @ Y) as an operator."""

    def __init__(self, shape: tuple[int, int], apply: Callable, apply_transpose: Callable):
        self.shape = Shape.of(*shape)
        self._fn = apply
        self._fn_t = apply_transpose

    def _apply(self, X):
        return np.asarray(self._fn(X), dtype=np.float64).reshape(self.shape.rows, X.shape[1])

    def _apply_transpose(self, Y):
        return np.asarray(self._fn_t(Y), dtype=np.float64).reshape(self.shape.cols, Y.shape[1])


class CountingOperator(LinearOperator):
    """Pass-through operator that counts the columns pushed through A and A.T."""

    def __init__(self, op: LinearOperator):
        self.op = op
        self.shape = op.shape
        self.a_columns = 0
        self.at_columns = 0
        self._lock = threading.Lock()

    def _apply(self, X):
        with self._lock:
            self.a_columns += X.shape[1]
        return self.op.apply_block(X)

    def _apply_transpose(self, Y):
        with self._lock:
            self.at_columns += Y.shape[1]
        return self.op.apply_transpose_block(Y)

    def reset(self):
        with self._lock:
            self.a_columns = 0
            self.at_columns = 0


class LowRankResidualOperator(LinearOperator):
    """A - left @ right.T, never materialized."""

    def __init__(self, op: LinearOperator, left, right):
        left = np.asarray(left, dtype=np.float64)
        right = np.asarray(right, dtype=np.float64)
        m, n = op.shape.rows, op.shape.cols
        if left.ndim != 2 or right.ndim != 2 or left.shape[0] != m or right.shape[0] != n \
                or left.shape[1] != right.shape[1]:
            raise ContractViolation(
                f"residual factors must be {m} x r and {n} x r, got {left.shape} and {right.shape}"
            )
        self.op = op
        self.left = left
        self.right = right
        self.shape = op.shape

    def _apply(self, X):
        return self.op.apply_block(X) - self.left @ (self.right.T @ X)

    def _apply_transpose(self, Y):
        return self.op.apply_transpose_block(Y) - self.right @ (self.left.T @ Y)


def to_dense(op: LinearOperator) -> np.ndarray:
    """Materialize ``op`` by applying it to the identity (small sizes only)."""
    rows, cols = op.shape.rows, op.shape.cols
    if rows < cols:
        return op.apply_transpose_block(np.eye(rows)).T.copy()
    return op.apply_block(np.eye(cols))
