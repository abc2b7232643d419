import json

import numpy as np
import pytest

from rpca.cli import main
from rpca.matio import read_rpca_binary, write_rpca_binary

from . import CERTIFIED_FLOOR, planted_matrix


@pytest.fixture
def rank_five_input(tmp_path, rng):
    path = tmp_path / "a.rpca"
    write_rpca_binary(path, planted_matrix(rng, 64, 96, np.linspace(1.0, 0.2, 5)))
    return path


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_approx_writes_factors_and_report(tmp_path, rank_five_input, capsys):
    out = tmp_path / "out"
    assert main(["approx", str(rank_five_input), "--k", "5", "--certify", "--out", str(out)]) == 0
    report = read_report(out)
    assert report["delta"] <= 1e-9
    assert (report["rows"], report["cols"], report["l"], report["i"]) == (64, 96, 7, 1)
    assert (report["a_applies"], report["at_applies"]) == (12, 14)
    assert read_rpca_binary(out / "U.rpca").shape == (64, 5)
    assert read_rpca_binary(out / "V.rpca").shape == (96, 5)
    assert len((out / "S.txt").read_text().split()) == 5
    assert "delta" in capsys.readouterr().out


def test_verify_accepts_untouched_output(tmp_path, rank_five_input, capsys):
    out = tmp_path / "out"
    main(["approx", str(rank_five_input), "--k", "5", "--variant", "blanczos", "--certify", "--out", str(out)])
    assert main(["verify", str(out), "--input", str(rank_five_input)]) == 0
    assert "verified" in capsys.readouterr().out


def test_verify_flags_tampered_singular_values(tmp_path, rank_five_input, capsys):
    out = tmp_path / "out"
    main(["approx", str(rank_five_input), "--k", "5", "--certify", "--out", str(out)])
    (out / "S.txt").write_text("2.0\n1.0\n0.5\n0.4\n0.3\n")
    assert main(["verify", str(out), "--input", str(rank_five_input)]) == 4
    assert "delta" in capsys.readouterr().err


def test_approx_on_the_test_matrix(tmp_path):
    out = tmp_path / "out"
    assert main(["approx", "--testgen", "m=512", "sigma=0.001", "--certify", "--out", str(out)]) == 0
    report = read_report(out)
    assert report["k"] == 10 and report["cols"] == 1024
    assert CERTIFIED_FLOOR * 0.001 <= report["delta"] <= 0.003


def test_malformed_matrix_market_is_a_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix\n1 1\n1.0\n")
    assert main(["approx", str(path), "--k", "1", "--out", str(tmp_path / "out")]) == 3
    assert "line 1" in capsys.readouterr().err


def test_missing_input_is_an_io_error(tmp_path):
    assert main(["approx", str(tmp_path / "nope.rpca"), "--k", "2", "--out", str(tmp_path / "out")]) == 2


def test_rank_too_large_is_a_contract_violation(tmp_path, rank_five_input):
    assert main(["approx", str(rank_five_input), "--k", "40", "--out", str(tmp_path / "out")]) == 4


def test_overflow_is_a_numerical_breakdown(tmp_path, rng):
    path = tmp_path / "huge.rpca"
    write_rpca_binary(path, rng.standard_normal((20, 30)) * 1e200)
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["approx", str(path), "--k", "2", "--out", str(tmp_path / "out")]) == 5


def test_unknown_table_is_rejected(tmp_path):
    assert main(["bench", "7", "--out", str(tmp_path)]) == 4


def test_bench_writes_table(tmp_path, capsys):
    assert main(["bench", "1", "--cap", "512", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "table1.csv").exists()
    assert "512" in capsys.readouterr().out


def test_bound_preset(capsys):
    assert main(["bound", "--m", "512", "--k", "10", "--preset", "guaranteed", "--sweep-i", "2"]) == 0
    out = capsys.readouterr().out
    failure = float(next(line for line in out.splitlines() if line.startswith("failure")).split()[-1])
    assert failure < 1e-15
    assert "i = 2" in out


def test_bound_rejects_gamma_one(capsys):
    assert main(["bound", "--m", "512", "--gamma", "1.0"]) == 4
    assert "gamma > 1" in capsys.readouterr().err


def test_bad_arguments_exit_with_contract_code():
    with pytest.raises(SystemExit) as err:
        main(["approx", "--variant", "lanczos", "--out", "x"])
    assert err.value.code == 4


def test_spectrum_command(tmp_path):
    path = tmp_path / "s.csv"
    assert main(["spectrum", "--m", "16", "--out", str(path)]) == 0
    assert len(path.read_text().splitlines()) == 17
