"""Closed-form accuracy bounds and failure probabilities for the power variant.

With probability at least Pi,

    ||A - U S V^T|| <= 16 gamma beta l ((m - k) / l)^(1 / (4i + 2)) sigma_{k+1},

where Pi = 1 - (two Gaussian upper-tail terms) - (one lower-tail term).
Every term is evaluated in log space: (2 gamma^2 / e^(gamma^2 - 1))^(m - k)
underflows long before m reaches realistic sizes.
"""

import math
from typing import Optional

from pydantic import BaseModel, Field

from rpca.errors import ContractViolation

GUARANTEED_BETA = 2.57
GUARANTEED_GAMMA = 2.43


class BoundParams(BaseModel):
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    l: int = Field(ge=1)
    i: int = Field(ge=0)
    beta: float = Field(gt=0)
    gamma: float

    @classmethod
    def guaranteed(cls, m: int, k: int, i: int = 1, n: Optional[int] = None) -> "BoundParams":
        """l = k + 12, beta = 2.57, gamma = 2.43."""
        return cls(m=m, n=m if n is None else n, k=k, l=k + 12, i=i,
                   beta=GUARANTEED_BETA, gamma=GUARANTEED_GAMMA)

    def violations(self) -> list[str]:
        failed = []
        if not self.gamma > 1:
            failed.append(f"gamma > 1 (gamma = {self.gamma})")
        if not self.k < self.l <= self.m - self.k:
            failed.append(f"k < l <= m - k (k = {self.k}, l = {self.l}, m - k = {self.m - self.k})")
        if not self.m <= self.n:
            failed.append(f"m <= n (m = {self.m}, n = {self.n})")
        if not (self.l - self.k + 1) * self.beta >= 1:
            failed.append(f"(l - k + 1) beta >= 1 (got {(self.l - self.k + 1) * self.beta:.4g})")
        if not 2 * self.l**2 * self.gamma**2 * self.beta**2 >= 1:
            failed.append(f"2 l^2 gamma^2 beta^2 >= 1 (got {2 * self.l**2 * self.gamma**2 * self.beta**2:.4g})")
        return failed

    def require(self) -> None:
        failed = self.violations()
        if failed:
            raise ContractViolation("bound preconditions violated: " + "; ".join(failed))


class BoundReport(BaseModel):
    accuracy_coefficient: float
    success_probability: float
    failure_probability: float
    terms: dict[str, float]


class AuxiliaryBounds(BaseModel):
    """Probabilities and coefficients of the supporting singular-value estimates."""

    fit_probability: float
    stretch_probability: float
    sketch_residual_probability: float
    gaussian_norm_coefficient: float
    least_singular_coefficient: float
    notes: dict[str, str]


def _exp(log_value: float) -> float:
    return math.exp(log_value) if log_value > -745.0 else 0.0


def gaussian_norm_failure(count: int, gamma: float, scale: float = 2.0) -> float:
    """(1 / (scale (gamma^2-1) sqrt(pi count gamma^2))) (2 gamma^2 / e^(gamma^2-1))^count.

    With scale = 4 this bounds the probability that a count x count standard
    Gaussian matrix has greatest singular value above sqrt(2 count) gamma.
    """
    if gamma <= 1 or count < 1:
        raise ContractViolation(f"gaussian_norm_failure needs gamma > 1 and count >= 1, got {gamma}, {count}")
    g2 = gamma * gamma
    log_value = (
        -math.log(scale * (g2 - 1))
        - 0.5 * math.log(math.pi * count * g2)
        + count * (math.log(2 * g2) - (g2 - 1))
    )
    return _exp(log_value)


def least_singular_failure(count: int, beta: float) -> float:
    """(1 / sqrt(2 pi count)) (e / (count beta))^count.

    For an l x j standard Gaussian matrix and count = l - j + 1 this bounds
    the probability that its least singular value falls below 1 / (sqrt(l) beta).
    """
    if count < 1 or beta <= 0:
        raise ContractViolation(f"least_singular_failure needs count >= 1 and beta > 0, got {count}, {beta}")
    log_value = -0.5 * math.log(2 * math.pi * count) + count * (1 - math.log(count * beta))
    return _exp(log_value)


def monotone_tail(x: float, alpha: float) -> float:
    """(1 / sqrt(2 pi x)) (e alpha / x)^x, decreasing for x > alpha."""
    if x <= 0 or alpha < 0:
        raise ContractViolation(f"monotone_tail needs x > 0 and alpha >= 0, got {x}, {alpha}")
    if alpha == 0:
        return 0.0
    return _exp(-0.5 * math.log(2 * math.pi * x) + x * (1 + math.log(alpha) - math.log(x)))


def accuracy_bound(p: BoundParams) -> float:
    """Coefficient C with ||A - U S V^T|| <= C sigma_{k+1} with probability Pi."""
    p.require()
    return 16 * p.gamma * p.beta * p.l * ((p.m - p.k) / p.l) ** (1 / (4 * p.i + 2))


def explicit_bound(m: int, k: int, l: int, i: int) -> float:
    """The looser 100 l ((m - k) / l)^(1 / (4i + 2)) coefficient (holds with probability > 1 - 1e-15 for l = k + 12)."""
    return 100 * l * ((m - k) / l) ** (1 / (4 * i + 2))


def success_probability(p: BoundParams) -> BoundReport:
    p.require()
    terms = {
        "gaussian_tail_m_minus_k": gaussian_norm_failure(p.m - p.k, p.gamma),
        "gaussian_tail_l": gaussian_norm_failure(p.l, p.gamma),
        "least_singular_tail": least_singular_failure(p.l - p.k + 1, p.beta),
    }
    failure = sum(terms.values())
    return BoundReport(
        accuracy_coefficient=accuracy_bound(p),
        success_probability=1.0 - failure,
        failure_probability=min(1.0, failure),
        terms=terms,
    )


def auxiliary_bounds(p: BoundParams, j: int) -> AuxiliaryBounds:
    """Evaluate the supporting probability bounds at reduced rank ``j`` (1 <= j < k, k + j < m)."""
    if not 1 <= j < p.k < p.l < p.m <= p.n:
        raise ContractViolation(
            f"auxiliary_bounds needs 1 <= j < k < l < m <= n, got j={j}, k={p.k}, l={p.l}, m={p.m}, n={p.n}"
        )
    if not p.k + j < p.m:
        raise ContractViolation(f"auxiliary_bounds needs k + j < m, got k + j = {p.k + j}, m = {p.m}")
    if p.gamma <= 1:
        raise ContractViolation(f"auxiliary_bounds needs gamma > 1, got {p.gamma}")

    wide = max(p.m - p.k, p.l)
    fit = (
        1
        - least_singular_failure(p.l - j + 1, p.beta)
        - gaussian_norm_failure(wide, p.gamma, scale=4)
        - gaussian_norm_failure(p.l, p.gamma, scale=4)
    )
    stretch = (
        1
        - gaussian_norm_failure(max(p.m - p.k - j, p.l), p.gamma, scale=4)
        - gaussian_norm_failure(max(p.k + j, p.l), p.gamma, scale=4)
    )
    sketch_residual = (
        1
        - gaussian_norm_failure(wide, p.gamma, scale=4)
        - gaussian_norm_failure(p.l, p.gamma, scale=4)
    )
    return AuxiliaryBounds(
        fit_probability=fit,
        stretch_probability=stretch,
        sketch_residual_probability=sketch_residual,
        gaussian_norm_coefficient=math.sqrt(2 * p.n) * p.gamma,
        least_singular_coefficient=1 / (math.sqrt(p.l) * p.beta),
        notes={
            "fit_probability": "a matrix F with ||F|| <= sqrt(l) beta / sigma_j^(2i) maps the sketch close to A",
            "stretch_probability": "rho_{k+1} of G A stays within sqrt(2 max(k+j,l)) gamma sigma_{k+1} + sqrt(2 max(m-k-j,l)) gamma sigma_{k+j+1}",
            "sketch_residual_probability": "rho_{j+1} of the powered sketch is controlled by sigma_{j+1}^(2i+1) and sigma_{k+1}^(2i+1)",
            "gaussian_norm_coefficient": "greatest singular value of an l x m Gaussian matrix is at most sqrt(2n) gamma",
            "least_singular_coefficient": "least singular value of an l x j Gaussian matrix is at least 1 / (sqrt(l) beta)",
        },
    )
