"""Command-line front end.

    python -m rpca approx INPUT --k 10 --out DIR [--certify]
    python -m rpca approx --testgen m=512 sigma=0.001 --out DIR --certify
    python -m rpca verify DIR --input INPUT
    python -m rpca bench 1 --cap 2048 --out DIR
    python -m rpca bound --m 512 --k 10 --preset guaranteed
    python -m rpca spectrum --m 512 --sigma 0.001 --out spectrum.csv

Exit codes: 0 success, 2 I/O failure, 3 parse failure, 4 parameter or
contract violation, 5 numerical breakdown.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from rpca.config import get_settings, setup_logger
from rpca.errors import ContractViolation, FormatError, InputOutputError, RpcaError
from rpca.linop import CountingOperator, LinearOperator
from rpca.matio import load_operator, read_rpca_binary, write_rpca_binary
from rpca.randsvd import VARIANTS, LowRankFactors, SketchParams, approximate
from rpca.specnorm import DEFAULT_ITERATIONS, certify
from rpca.testgen import (
    TABLES,
    SpectrumSpec,
    build_test_operator,
    certify_seed,
    run_benchmark,
    write_spectrum_csv,
)
from rpca.theory import GUARANTEED_BETA, GUARANTEED_GAMMA, BoundParams, accuracy_bound, explicit_bound, success_probability

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED


class JobConfig(BaseModel):
    input_path: Optional[Path] = None
    fmt: Optional[str] = None
    testgen: Optional[SpectrumSpec] = None
    k: int
    l: Optional[int] = None
    i: int = 1
    variant: str = "power"
    seed: int = DEFAULT_SEED
    out_dir: Path
    certify: bool = False
    power_iters: int = DEFAULT_ITERATIONS

    def params(self) -> SketchParams:
        return SketchParams(k=self.k, l=self.l, i=self.i, variant=self.variant, seed=self.seed)


class ApproxReport(BaseModel):
    rows: int
    cols: int
    k: int
    l: int
    i: int
    variant: str
    seed: int
    approximates_transpose: bool
    delta: Optional[float] = None
    certify_seed: Optional[int] = None
    power_iters: Optional[int] = None
    bound_coefficient: float
    a_applies: int
    at_applies: int
    wall_seconds: float
    u_orthonormality: float
    v_orthonormality: float


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(ContractViolation.exit_code)


def _parse_testgen(tokens: list[str]) -> SpectrumSpec:
    keys = {"m": "m", "sigma": "sigma_k1", "sigma_k1": "sigma_k1", "k": "k"}
    values = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or key not in keys:
            raise ContractViolation(f"--testgen expects m=<int> sigma=<float> [k=<int>], got '{token}'")
        values[keys[key]] = value
    if "m" not in values or "sigma_k1" not in values:
        raise ContractViolation("--testgen needs both m=<int> and sigma=<float>")
    return SpectrumSpec(**values)


def _load(input_path, fmt, testgen) -> LinearOperator:
    if testgen is not None:
        return build_test_operator(testgen)
    if input_path is None:
        raise ContractViolation("an input matrix path or --testgen is required")
    return load_operator(input_path, fmt)


def _write_sigma(path: Path, sigma: np.ndarray) -> None:
    path.write_text("".join(f"{value!r}\n" for value in sigma.tolist()))


def _read_sigma(path: Path) -> np.ndarray:
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise InputOutputError(f"cannot read {path}: {e.strerror}") from e
    values = []
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            values.append(float(text))
        except ValueError as e:
            raise FormatError(f"{path}: cannot parse singular value", line=lineno) from e
    return np.array(values)


def cmd_approx(config: JobConfig) -> int:
    params = config.params()
    op = _load(config.input_path, config.fmt, config.testgen)
    logger.info(f"Loaded {op.shape.rows} x {op.shape.cols} operator")
    counted = CountingOperator(op)

    started = time.perf_counter()
    factors = approximate(counted, params)
    wall = time.perf_counter() - started

    delta = None
    seed_for_norm = None
    if config.certify:
        seed_for_norm = certify_seed(params.seed)
        delta = certify(op, factors, config.power_iters, seeds=(seed_for_norm,)).value
        logger.info(f"Certified delta = {delta:.4e}")

    u_res, v_res = factors.orthonormality_residuals()
    report = ApproxReport(
        rows=op.shape.rows, cols=op.shape.cols, k=params.k, l=params.l, i=params.i,
        variant=params.variant, seed=params.seed,
        approximates_transpose=factors.approximates_transpose,
        delta=delta, certify_seed=seed_for_norm,
        power_iters=config.power_iters if config.certify else None,
        bound_coefficient=explicit_bound(min(op.shape.rows, op.shape.cols), params.k, params.l, params.i),
        a_applies=counted.a_columns, at_applies=counted.at_columns,
        wall_seconds=wall, u_orthonormality=u_res, v_orthonormality=v_res,
    )

    out = config.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_rpca_binary(out / "U.rpca", factors.U)
        write_rpca_binary(out / "V.rpca", factors.V)
        _write_sigma(out / "S.txt", factors.sigma)
        (out / "report.json").write_text(report.model_dump_json(indent=2))
    except OSError as e:
        raise InputOutputError(f"cannot write results to {out}: {e.strerror}") from e

    print(f"rank-{params.k} {params.variant} approximation written to {out}")
    if delta is not None:
        print(f"delta = {delta:.4e}")
    return 0


def cmd_verify(out_dir: Path, input_path, fmt, testgen) -> int:
    """Re-read approx output and check it against report.json."""
    try:
        report = ApproxReport.model_validate_json((out_dir / "report.json").read_text())
    except OSError as e:
        raise InputOutputError(f"cannot read {out_dir / 'report.json'}: {e.strerror}") from e
    except ValidationError as e:
        raise FormatError(f"{out_dir / 'report.json'} is not a valid report: {e.errors()[0]['msg']}") from e

    factors = LowRankFactors(
        U=read_rpca_binary(out_dir / "U.rpca"),
        sigma=_read_sigma(out_dir / "S.txt"),
        V=read_rpca_binary(out_dir / "V.rpca"),
        approximates_transpose=report.approximates_transpose,
    )
    u_res, v_res = factors.orthonormality_residuals()
    print(f"||U^T U - I||_F = {u_res:.3e}  ||V^T V - I||_F = {v_res:.3e}")
    mismatches = []
    if not np.isclose(u_res, report.u_orthonormality, rtol=1e-6, atol=1e-15):
        mismatches.append("U orthonormality")
    if not np.isclose(v_res, report.v_orthonormality, rtol=1e-6, atol=1e-15):
        mismatches.append("V orthonormality")

    if report.delta is not None:
        op = _load(input_path, fmt, testgen)
        delta = certify(op, factors, report.power_iters, seeds=(report.certify_seed,)).value
        print(f"delta = {delta:.4e} (report: {report.delta:.4e})")
        if not np.isclose(delta, report.delta, rtol=1e-9, atol=0.0):
            mismatches.append("delta")

    if mismatches:
        raise ContractViolation(f"verification mismatch: {', '.join(mismatches)}")
    print("verified")
    return 0


def _format_row(row) -> str:
    i = f"({row.i})" if row.variant == "transpose" else str(row.i)
    return f"{row.m:>7} {row.n:>8} {i:>4} {row.t_seconds:>10.2E} {row.sigma_k1:>10.2E} {row.delta:>10.2E}  {row.variant}"


def cmd_bench(table: int, cap: int, out_dir: Path) -> int:
    if table not in TABLES:
        raise ContractViolation(f"unknown benchmark table {table} (expected 1-6)")
    rows = run_benchmark(table, cap, out_dir=out_dir)
    print(f"{'m':>7} {'n':>8} {'i':>4} {'t':>10} {'sigma_k+1':>10} {'delta':>10}")
    for row in rows:
        print(_format_row(row))
    print(f"results written to {out_dir}")
    return 0


def cmd_bound(p: BoundParams, sweep_i: Optional[int]) -> int:
    report = success_probability(p)
    print(f"accuracy coefficient     {report.accuracy_coefficient:.6e}")
    print(f"success probability      {report.success_probability:.16e}")
    print(f"failure probability      {report.failure_probability:.6e}")
    for name, value in report.terms.items():
        print(f"  {name:<24} {value:.6e}")
    if sweep_i is not None:
        for i in range(sweep_i + 1):
            print(f"i = {i:<3} coefficient {accuracy_bound(p.model_copy(update={'i': i})):.6e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rpca", description="Randomized low-rank SVD toolkit")
    parser.add_argument("--log-level", type=str.upper, default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="Override RPCA_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    source = _Parser(add_help=False)
    source.add_argument("--format", dest="fmt", choices=["mtx", "bin"], default=None,
                        help="Input format (inferred from the file suffix if omitted)")
    source.add_argument("--testgen", nargs="+", metavar="KEY=VALUE", default=None,
                        help="Use the synthetic Hadamard test matrix, e.g. m=512 sigma=0.001")

    approx = sub.add_parser("approx", parents=[source], help="Approximate a matrix")
    approx.add_argument("input", nargs="?", type=Path, help="Matrix file (Matrix Market or rpca binary)")
    approx.add_argument("--k", type=int, default=None, help="Target rank (default 10 with --testgen)")
    approx.add_argument("--l", type=int, default=None, help="Sketch size (default k + 2)")
    approx.add_argument("--i", type=int, default=1, help="Power iterations")
    approx.add_argument("--variant", choices=VARIANTS, default="power")
    approx.add_argument("--seed", type=int, default=DEFAULT_SEED)
    approx.add_argument("--random-seed", action="store_true", help="Draw the seed from system entropy")
    approx.add_argument("--certify", action="store_true", help="Estimate delta = ||A - U S V^T||")
    approx.add_argument("--power-iters", type=int, default=DEFAULT_ITERATIONS)
    approx.add_argument("--out", type=Path, required=True)

    verify = sub.add_parser("verify", parents=[source], help="Check approx output against its report")
    verify.add_argument("out", type=Path)
    verify.add_argument("--input", type=Path, default=None)

    bench = sub.add_parser("bench", help="Reproduce a benchmark table")
    bench.add_argument("table", type=int)
    bench.add_argument("--cap", type=int, default=4096)
    bench.add_argument("--out", type=Path, default=Path("bench_results"))

    bound = sub.add_parser("bound", help="Evaluate the accuracy bound and its probability")
    bound.add_argument("--m", type=int, required=True)
    bound.add_argument("--n", type=int, default=None)
    bound.add_argument("--k", type=int, default=10)
    bound.add_argument("--l", type=int, default=None)
    bound.add_argument("--i", type=int, default=1)
    bound.add_argument("--beta", type=float, default=GUARANTEED_BETA)
    bound.add_argument("--gamma", type=float, default=GUARANTEED_GAMMA)
    bound.add_argument("--preset", choices=["guaranteed"], default=None,
                       help="l = k + 12, beta = 2.57, gamma = 2.43")
    bound.add_argument("--sweep-i", type=int, default=None, metavar="N",
                       help="Also print the coefficient for i = 0..N")

    spectrum = sub.add_parser("spectrum", help="Write the test-matrix spectrum as CSV")
    spectrum.add_argument("--m", type=int, default=512)
    spectrum.add_argument("--k", type=int, default=10)
    spectrum.add_argument("--sigma", type=float, default=0.001)
    spectrum.add_argument("--out", type=Path, default=Path("spectrum.csv"))
    return parser


def _dispatch(args) -> int:
    testgen = _parse_testgen(args.testgen) if getattr(args, "testgen", None) else None

    if args.command == "approx":
        k = args.k if args.k is not None else (testgen.k if testgen is not None else None)
        if k is None:
            raise ContractViolation("--k is required unless --testgen is given")
        seed = args.seed
        if args.random_seed:
            seed = int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
        config = JobConfig(
            input_path=args.input, fmt=args.fmt, testgen=testgen, k=k, l=args.l, i=args.i,
            variant=args.variant, seed=seed, out_dir=args.out, certify=args.certify,
            power_iters=args.power_iters,
        )
        return cmd_approx(config)
    if args.command == "verify":
        return cmd_verify(args.out, args.input, args.fmt, testgen)
    if args.command == "bench":
        return cmd_bench(args.table, args.cap, args.out)
    if args.command == "bound":
        if args.preset == "guaranteed":
            l, beta, gamma = args.k + 12, GUARANTEED_BETA, GUARANTEED_GAMMA
        else:
            l = args.l if args.l is not None else args.k + 2
            beta, gamma = args.beta, args.gamma
        p = BoundParams(m=args.m, n=args.n if args.n is not None else args.m, k=args.k, l=l,
                        i=args.i, beta=beta, gamma=gamma)
        return cmd_bound(p, args.sweep_i)
    path = write_spectrum_csv(SpectrumSpec(m=args.m, k=args.k, sigma_k1=args.sigma), args.out)
    print(f"spectrum written to {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
        setup_logger(args.log_level or settings.log_level)
        return _dispatch(args)
    except RpcaError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(part) for part in err["loc"])
        print(f"error: invalid parameter {where}: {err['msg']}", file=sys.stderr)
        return ContractViolation.exit_code


if __name__ == "__main__":
    sys.exit(main())
