"""Matrix file formats: the rpca dense binary format and Matrix Market text.

rpca binary layout (all little-endian): 4-byte magic ``RPCA``, u32 version
(= 1), u64 rows, u64 cols, then rows * cols f64 values in row-major order.
"""

import logging
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from rpca.errors import ContractViolation, FormatError, InputOutputError
from rpca.linop import DenseOperator, LinearOperator, SparseCsrOperator

logger = logging.getLogger(__name__)

MAGIC = b"RPCA"
VERSION = 1
_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("rows", "<u8"), ("cols", "<u8")])


def write_rpca_binary(path, array) -> None:
    array = np.asarray(array, dtype=np.float64)
    if array.ndim != 2:
        raise ContractViolation(f"rpca binary files hold 2-D matrices, got {array.ndim}-D")
    header = np.array([(MAGIC, VERSION, array.shape[0], array.shape[1])], dtype=_HEADER)
    try:
        with open(path, "wb") as f:
            f.write(header.tobytes())
            f.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
    except OSError as e:
        raise InputOutputError(f"cannot write {path}: {e.strerror}") from e


def read_rpca_binary(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise InputOutputError(f"cannot read {path}: {e.strerror}") from e

    if len(raw) < _HEADER.itemsize:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    header = np.frombuffer(raw, dtype=_HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise FormatError(f"{path}: bad magic {bytes(header['magic'])!r}, expected {MAGIC!r}")
    if int(header["version"]) != VERSION:
        raise FormatError(f"{path}: unsupported version {int(header['version'])}")
    rows, cols = int(header["rows"]), int(header["cols"])
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: empty matrix {rows} x {cols}")
    payload = len(raw) - _HEADER.itemsize
    if payload != rows * cols * 8:
        raise FormatError(f"{path}: expected {rows * cols * 8} data bytes for {rows} x {cols}, found {payload}")

    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.itemsize).reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: matrix contains NaN or Inf entries")
    return data


def _numbers(text: str, count: int, lineno: int, cast=float) -> list:
    parts = text.split()
    if len(parts) != count:
        raise FormatError(f"expected {count} fields, found {len(parts)}", line=lineno)
    try:
        return [cast(p) for p in parts]
    except ValueError as e:
        raise FormatError(f"cannot parse number: {e}", line=lineno) from e


def read_matrix_market(path) -> LinearOperator:
    """Read a real Matrix Market file: ``array`` gives a dense operator,
    ``coordinate`` a CSR one."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise InputOutputError(f"cannot read {path}: {e.strerror}") from e
    except UnicodeDecodeError as e:
        raise FormatError(f"{path} is not a text file", line=1) from e

    header = lines[0].split() if lines else []
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise FormatError("expected '%%MatrixMarket matrix <layout> <field> <symmetry>' header", line=1)
    layout, field, symmetry = (h.lower() for h in header[2:])
    if layout not in ("array", "coordinate"):
        raise FormatError(f"unsupported layout '{layout}'", line=1)
    if field not in ("real", "double", "integer"):
        raise FormatError(f"unsupported field '{field}' (real matrices only)", line=1)
    if symmetry not in ("general", "symmetric", "skew-symmetric"):
        raise FormatError(f"unsupported symmetry '{symmetry}'", line=1)

    body = [(n, text) for n, text in enumerate(lines[1:], start=2)
            if text.strip() and not text.lstrip().startswith("%")]
    if not body:
        raise FormatError("missing size line", line=len(lines) + 1)

    size_line, size_text = body[0]
    entries = body[1:]
    if layout == "array":
        rows, cols = _numbers(size_text, 2, size_line, int)
        _check_array(entries, rows, cols, symmetry, size_line)
    else:
        rows, cols, nnz = _numbers(size_text, 3, size_line, int)
        _check_coordinate(entries, rows, cols, nnz, symmetry, size_line)

    # lines are validated above; scipy does the assembly and symmetry expansion
    try:
        matrix = scipy.io.mmread(path)
    except (ValueError, OSError) as e:
        raise FormatError(f"cannot assemble matrix: {e}", line=size_line) from e

    logger.debug(f"Read {layout} Matrix Market file {path} ({rows} x {cols})")
    if layout == "array":
        return DenseOperator(np.asarray(matrix, dtype=np.float64))
    return SparseCsrOperator.from_scipy(matrix)


def _check_array(entries, rows, cols, symmetry, size_line) -> None:
    if rows < 1 or cols < 1:
        raise FormatError(f"invalid size {rows} x {cols}", line=size_line)
    if symmetry != "general" and rows != cols:
        raise FormatError("symmetric matrices must be square", line=size_line)

    # symmetric files store the lower triangle only, skew-symmetric without the diagonal
    if symmetry == "general":
        expected = rows * cols
    elif symmetry == "symmetric":
        expected = rows * (rows + 1) // 2
    else:
        expected = rows * (rows - 1) // 2
    if len(entries) != expected:
        last = entries[-1][0] if entries else size_line
        raise FormatError(f"expected {expected} values, found {len(entries)}", line=last)

    for lineno, text in entries:
        (value,) = _numbers(text, 1, lineno)
        if not np.isfinite(value):
            raise FormatError("non-finite value", line=lineno)


def _check_coordinate(entries, rows, cols, nnz, symmetry, size_line) -> None:
    if rows < 1 or cols < 1 or nnz < 0:
        raise FormatError(f"invalid size {rows} x {cols} with {nnz} entries", line=size_line)
    if symmetry != "general" and rows != cols:
        raise FormatError("symmetric matrices must be square", line=size_line)
    if len(entries) != nnz:
        last = entries[-1][0] if entries else size_line
        raise FormatError(f"expected {nnz} entries, found {len(entries)}", line=last)

    for lineno, text in entries:
        i, j, value = _numbers(text, 3, lineno)
        if i != int(i) or j != int(j) or not (1 <= i <= rows and 1 <= j <= cols):
            raise FormatError(f"index ({text.split()[0]}, {text.split()[1]}) out of range", line=lineno)
        if not np.isfinite(value):
            raise FormatError("non-finite value", line=lineno)


def load_operator(path, fmt=None) -> LinearOperator:
    """Load a matrix file as an operator; ``fmt`` is 'mtx' or 'bin' (inferred from the suffix if None)."""
    if fmt is None:
        fmt = "mtx" if Path(path).suffix.lower() == ".mtx" else "bin"
    if fmt == "mtx":
        return read_matrix_market(path)
    if fmt == "bin":
        return DenseOperator(read_rpca_binary(path))
    raise ContractViolation(f"unknown matrix format '{fmt}' (expected mtx or bin)")
