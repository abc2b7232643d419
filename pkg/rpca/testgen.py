"""Synthetic test matrices and the benchmark tables.

The test matrix is A = U diag(sigma) V^T with U an m x m and V a 2m x 2m
normalized Hadamard matrix. Its spectrum pairs up the leading k values on
geometric plateaus from 1 down to sigma_{k+1}, then decays linearly to 0:

    sigma_j = sigma_{k+1} ** (floor(j/2) / floor(k/2))   j = 1..k
    sigma_j = sigma_{k+1} * (m - j) / (m - k - 1)        j = k+1..m
"""

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from rpca.config import get_settings
from rpca.errors import ContractViolation
from rpca.kernels import householder_qr
from rpca.linop import HadamardSpectrumOperator, LinearOperator, LowRankResidualOperator, to_dense
from rpca.randsvd import SketchParams, approximate
from rpca.specnorm import DEFAULT_ITERATIONS, certify, estimate_spectral_norm
from rpca.theory import explicit_bound

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (0x5EED, 0x5EED + 1, 0x5EED + 2)
QR_BASELINE_CAP = 4096
TABLES = (1, 2, 3, 4, 5, 6)
CSV_COLUMNS = ("m", "n", "i", "variant", "sigma_k1", "delta", "t_seconds", "seed0", "seed1", "seed2")


class SpectrumSpec(BaseModel):
    m: int
    k: int = Field(default=10, ge=2)
    sigma_k1: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def _check(self):
        if self.m < 1 or self.m & (self.m - 1):
            raise ValueError(f"m must be a power of two, got {self.m}")
        return self

    @property
    def n(self) -> int:
        return 2 * self.m


class BenchRow(BaseModel):
    m: int
    n: int
    i: int
    variant: str
    seeds: list[int]
    t_seconds: float
    sigma_k1: float
    delta: float
    bound: Optional[float] = None

    def csv_record(self) -> dict:
        record = {
            "m": self.m, "n": self.n, "i": self.i, "variant": self.variant,
            "sigma_k1": self.sigma_k1, "delta": self.delta, "t_seconds": self.t_seconds,
        }
        for idx in range(3):
            record[f"seed{idx}"] = self.seeds[idx] if idx < len(self.seeds) else ""
        return record


def build_spectrum(spec: SpectrumSpec) -> np.ndarray:
    m, k, s = spec.m, spec.k, spec.sigma_k1
    if m < k + 2:
        raise ContractViolation(f"build_spectrum needs m >= k + 2 = {k + 2}, got m = {m}")
    j = np.arange(1, m + 1)
    sigma = s * ((m - j) / (m - k - 1))
    head = j[:k]
    sigma[:k] = s ** ((head // 2) / (k // 2))
    return sigma


def spectrum_rows(spec: SpectrumSpec) -> list[tuple[int, float]]:
    return [(j + 1, float(value)) for j, value in enumerate(build_spectrum(spec))]


def write_spectrum_csv(spec: SpectrumSpec, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("j", "sigma"))
        writer.writerows((j, repr(value)) for j, value in spectrum_rows(spec))
    return path


def build_test_operator(spec: SpectrumSpec) -> HadamardSpectrumOperator:
    return HadamardSpectrumOperator(build_spectrum(spec))


def certify_seed(seed: int) -> int:
    """Start-vector seed for certifying the trial sketched with ``seed``."""
    return int(np.random.SeedSequence(seed).generate_state(1, dtype=np.uint64)[0])


def pivoted_qr_residual_norm(
    op: LinearOperator,
    k: int,
    seeds: Iterable[int] = DEFAULT_SEEDS,
    iterations: int = DEFAULT_ITERATIONS,
) -> float:
    """||A - (Q R P^T)^T|| for the rank-k pivoted QR of A^T; worst estimate over ``seeds``."""
    m, n = op.shape.rows, op.shape.cols
    if max(m, n) > 2 * QR_BASELINE_CAP or min(m, n) > QR_BASELINE_CAP:
        raise ContractViolation(f"pivoted QR baseline is capped at m <= {QR_BASELINE_CAP}, got {op.shape}")

    At = to_dense(op.T)
    qr = householder_qr(At, pivoting="column", max_rank=k, overwrite_input=True)
    del At
    # undo the column permutation: A^T ~ Q (R P^T)
    R_unpermuted = np.zeros_like(qr.R)
    R_unpermuted[:, qr.perm] = qr.R
    residual = LowRankResidualOperator(op, R_unpermuted.T, qr.Q)
    return max(estimate_spectral_norm(residual, iterations, certify_seed(seed)).value for seed in seeds)


def pivoted_qr_baseline(spec: SpectrumSpec, k: int, seeds: Iterable[int] = DEFAULT_SEEDS) -> BenchRow:
    seeds = list(seeds)
    if spec.m > QR_BASELINE_CAP:
        raise ContractViolation(f"pivoted QR baseline is capped at m <= {QR_BASELINE_CAP}, got m = {spec.m}")
    started = time.perf_counter()
    delta = pivoted_qr_residual_norm(build_test_operator(spec), k, seeds)
    return BenchRow(
        m=spec.m, n=spec.n, i=0, variant="pivoted_qr", seeds=seeds,
        t_seconds=time.perf_counter() - started, sigma_k1=spec.sigma_k1, delta=delta,
    )


def _trial(op: LinearOperator, params: SketchParams) -> tuple[float, float]:
    started = time.perf_counter()
    factors = approximate(op, params)
    delta = certify(op, factors, DEFAULT_ITERATIONS, seeds=(certify_seed(params.seed),)).value
    return delta, time.perf_counter() - started


def run_cell(spec: SpectrumSpec, variant: str, i: int, seeds: Iterable[int] = DEFAULT_SEEDS,
             l: Optional[int] = None) -> BenchRow:
    """One table cell: worst delta and mean time over independent trials."""
    seeds = list(seeds)
    op = build_test_operator(spec)
    params = [SketchParams(k=spec.k, l=l, i=i, variant=variant, seed=seed) for seed in seeds]

    threads = get_settings().threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda p: _trial(op, p), params))
    else:
        results = [_trial(op, p) for p in params]

    delta = max(d for d, _ in results)
    l_used = params[0].l
    row = BenchRow(
        m=spec.m, n=spec.n, i=i, variant=variant, seeds=seeds,
        t_seconds=float(np.mean([t for _, t in results])),
        sigma_k1=spec.sigma_k1, delta=delta,
        bound=explicit_bound(spec.m, spec.k, l_used, i) * spec.sigma_k1,
    )
    if delta < spec.sigma_k1 * (1 - 1e-6):
        logger.warning(f"Certified delta {delta:.4e} below sigma_k+1 = {spec.sigma_k1:.1e} (m={spec.m}, {variant}, i={i})")
    if row.bound is not None and delta > row.bound:
        logger.warning(f"Certified delta {delta:.4e} exceeds the explicit bound {row.bound:.4e}")
    return row


def _largest_size(scale_cap: int) -> int:
    return 1 << (scale_cap.bit_length() - 1)


def table_cells(table: int, scale_cap: int) -> list[tuple[SpectrumSpec, str, int]]:
    """(spec, variant, i) cells of a benchmark table, capped at m <= scale_cap."""
    if table not in TABLES:
        raise ContractViolation(f"unknown benchmark table {table} (expected 1-6)")
    if scale_cap < 512 or scale_cap & (scale_cap - 1):
        raise ContractViolation(f"scale cap must be a power of two >= 512, got {scale_cap}")

    top = _largest_size(scale_cap)
    if table in (1, 2):
        i = 1 if table == 1 else 0
        sizes = [m for m in (512 * 4**p for p in range(8)) if m <= scale_cap]
        return [(SpectrumSpec(m=m, sigma_k1=0.001), "power", i) for m in sizes]
    if table == 3:
        spec = SpectrumSpec(m=top, sigma_k1=0.01)
        cells = [(spec, "power", 0)]
        for i in (1, 2, 3):
            cells += [(spec, "transpose", i), (spec, "power", i)]
        return cells
    if table in (4, 5):
        variant = "power" if table == 4 else "blanczos"
        return [(SpectrumSpec(m=top, sigma_k1=10.0**-e), variant, 1) for e in (2, 4, 6, 8, 10, 12, 14)]
    sizes = [m for m in (512 * 2**p for p in range(4)) if m <= min(scale_cap, QR_BASELINE_CAP)]
    return [(SpectrumSpec(m=m, sigma_k1=0.001), "pivoted_qr", 0) for m in sizes]


def run_benchmark(table: int, scale_cap: int = 4096, seeds: Iterable[int] = DEFAULT_SEEDS,
                  out_dir=None) -> list[BenchRow]:
    """Reproduce a benchmark table up to ``scale_cap``; writes CSV and JSON when ``out_dir`` is given."""
    seeds = list(seeds)
    rows = []
    for spec, variant, i in table_cells(table, scale_cap):
        logger.info(f"Table {table}: m={spec.m}, {variant}, i={i}, sigma_k+1={spec.sigma_k1:.1e}")
        if variant == "pivoted_qr":
            rows.append(pivoted_qr_baseline(spec, spec.k, seeds))
        else:
            rows.append(run_cell(spec, variant, i, seeds))
    if out_dir is not None:
        write_rows(rows, Path(out_dir), f"table{table}")
    return rows


def write_rows(rows: list[BenchRow], out_dir: Path, stem: str) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    with csv_path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(row.csv_record() for row in rows)
    json_path.write_text(json.dumps([row.model_dump() for row in rows], indent=2))
    return csv_path, json_path
