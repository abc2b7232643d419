"""Dense factorization kernels: Householder QR (thin and truncated
column-pivoted), a small dense SVD, and SVD-based orthonormalization.

Sign conventions: the diagonal of every R factor is nonnegative, and each
left singular vector has its largest-magnitude entry positive.
"""

import logging
from typing import Literal, Optional, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict

from rpca.config import get_settings
from rpca.errors import ContractViolation

logger = logging.getLogger(__name__)

# rows updated per slab in the pivoted QR, bounds temporary memory
_SLAB_ROWS = 1024


class _Factors(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class ThinQr(_Factors):
    Q: np.ndarray
    R: np.ndarray


class PivotedQr(_Factors):
    """M[:, perm] = Q @ R + residual, with the residual orthogonal to Q.

    ``pivot_norms[j]`` is the norm of the column picked at step j, which was
    the largest remaining column norm at that step; ``trailing_norms`` are the
    column norms of the residual after the last step.
    """

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    rank: int
    pivot_norms: np.ndarray
    trailing_norms: np.ndarray


class SmallSvd(_Factors):
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


def _require_finite_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ContractViolation(f"{name}: expected a nonempty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation(f"{name}: input contains NaN or Inf entries")
    return M


def normalize_signs(U: np.ndarray, V: Optional[np.ndarray] = None):
    """Flip column pairs so the largest-magnitude entry of each column of U is positive."""
    if U.shape[1] == 0:
        return U, V
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[rows, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    U = U * signs
    if V is not None:
        V = V * signs
    return U, V


def householder_qr(
    M,
    pivoting: Literal["none", "column"] = "none",
    max_rank: Optional[int] = None,
    overwrite_input: bool = False,
) -> Union[ThinQr, PivotedQr]:
    """Householder QR of an n x r matrix.

    With ``pivoting="none"`` returns the thin factorization M = Q R (n >= r).
    With ``pivoting="column"`` runs greedy column pivoting for at most
    ``max_rank`` reflections (default min(n, r)); an all-zero remaining
    block stops it early and ``rank`` counts the reflections taken.
    """
    M = _require_finite_matrix(M, "householder_qr")
    n, r = M.shape

    if pivoting == "none":
        if max_rank is not None:
            raise ContractViolation("householder_qr: max_rank applies only to column pivoting")
        if n < r:
            raise ContractViolation(f"householder_qr: thin QR needs rows >= cols, got {n} x {r}")
        Q, R = scipy.linalg.qr(M, mode="economic", check_finite=False)
        signs = np.where(np.diag(R) < 0, -1.0, 1.0)
        return ThinQr(Q=Q * signs, R=np.triu(R * signs[:, None]))

    if pivoting != "column":
        raise ContractViolation(f"householder_qr: unknown pivoting '{pivoting}'")
    limit = min(n, r)
    if max_rank is None:
        max_rank = limit
    if not 1 <= max_rank <= limit:
        raise ContractViolation(f"householder_qr: max_rank must lie in [1, {limit}] for a {n} x {r} matrix, got {max_rank}")
    return _pivoted_householder(M if overwrite_input else M.copy(), max_rank)


def _pivoted_householder(W: np.ndarray, max_rank: int) -> PivotedQr:
    n, r = W.shape
    perm = np.arange(r)
    reflectors = []
    pivot_norms = []

    for j in range(max_rank):
        trailing = W[j:, j:]
        norms = np.sqrt(np.einsum("ij,ij->j", trailing, trailing))
        p = j + int(np.argmax(norms))
        alpha = float(norms[p - j])
        if alpha == 0.0:
            break
        if p != j:
            W[:, [j, p]] = W[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]

        v = W[j:, j].copy()
        v[0] += alpha if v[0] >= 0 else -alpha
        v /= np.linalg.norm(v)
        proj = 2.0 * (v @ W[j:, j:])
        for start in range(j, n, _SLAB_ROWS):
            stop = min(start + _SLAB_ROWS, n)
            W[start:stop, j:] -= np.outer(v[start - j: stop - j], proj)
        W[j + 1:, j] = 0.0

        reflectors.append(v)
        pivot_norms.append(alpha)

    rank = len(reflectors)
    R = np.triu(W[:rank, :])
    trailing = W[rank:, rank:]
    trailing_norms = np.sqrt(np.einsum("ij,ij->j", trailing, trailing))

    Q = np.eye(n, rank)
    for j in reversed(range(rank)):
        v = reflectors[j]
        Q[j:, :] -= 2.0 * np.outer(v, v @ Q[j:, :])
    signs = np.where(np.diag(R[:, :rank]) < 0, -1.0, 1.0)

    logger.debug(f"Pivoted QR of {n} x {r}: rank {rank}, last pivot norm {pivot_norms[-1] if rank else 0.0:.3e}")
    return PivotedQr(
        Q=Q * signs,
        R=R * signs[:, None],
        perm=perm,
        rank=rank,
        pivot_norms=np.array(pivot_norms),
        trailing_norms=trailing_norms,
    )


def small_svd(M, cap: Optional[int] = None) -> SmallSvd:
    """Thin SVD M = U diag(sigma) V.T of a dense matrix whose smaller side is at most ``cap``."""
    M = _require_finite_matrix(M, "small_svd")
    if cap is None:
        cap = get_settings().small_svd_cap
    if min(M.shape) > cap:
        raise ContractViolation(f"small_svd: min dimension {min(M.shape)} exceeds the cap {cap}")

    try:
        U, sigma, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        U, sigma, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd", check_finite=False)
    U, V = normalize_signs(U, Vt.T)
    return SmallSvd(U=U, sigma=sigma, V=V)


def orthonormal_range_k(R, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal n x k basis Q for the dominant k-dimensional range of R.T.

    R is l x n with k < l <= n. Q holds the leading k left singular vectors
    of R.T, so min_S ||Q S - R.T|| equals rho[k], the (k+1)st singular value
    of R. Computed as a thin QR of R.T followed by an l x l SVD of its
    triangular factor.
    """
    R = _require_finite_matrix(R, "orthonormal_range_k")
    l, n = R.shape
    if not 1 <= k < l <= n:
        raise ContractViolation(f"orthonormal_range_k: need 1 <= k < l <= n, got k={k}, l={l}, n={n}")

    thin = householder_qr(R.T)
    inner = small_svd(thin.R)
    Q = thin.Q @ inner.U[:, :k]
    Q, _ = normalize_signs(Q)
    return Q, inner.sigma
