"""Text formats: PathFile, FieldFile and the CSV ReportFile.

Paths and fields are written with 17 significant digits so that parsing a
written file gives back the exact doubles; report aggregates use 6.
"""
import csv
import io
import math
from pathlib import Path as FilePath

import numpy as np

from gauge.models import GROUP_SIZE, ConnectionField
from loopcalc.sysutils.constants import GroupTag
from loopcalc.sysutils.exceptions import LoopCalcError, ParseError
from paths.models import Path
from verify.models import VerificationReport

REPORT_HEADER = ["identity", "samples", "max_error", "mean_error", "observed_order", "tolerance", "pass"]


def _exact(x: float) -> str:
    return format(x, '.17g')


def _aggregate(x: float) -> str:
    return format(x, '.6g')


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith('#'):
            yield number, line.split()


def _real(token: str, number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"'{token}' is not a number", number)
    if not math.isfinite(value):
        raise ParseError(f"'{token}' is not finite", number)
    return value


def _positive_int(token: str, number: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got '{token}'", number)
    if value < 1:
        raise ParseError(f"{what} must be positive, got {value}", number)
    return value


def _reals(tokens: list[str], count: int, number: int, what: str) -> list[float]:
    if len(tokens) != count:
        raise ParseError(f"{what} needs {count} numbers, got {len(tokens)}", number)
    return [_real(token, number) for token in tokens]


# -----------------------------
# PATH FILE
# -----------------------------
def parse_path(text: str) -> Path:
    dim = base = None
    vertices = []
    for number, (keyword, *rest) in _lines(text):
        if keyword == 'dim':
            if dim is not None:
                raise ParseError("duplicate dim line", number)
            if len(rest) != 1:
                raise ParseError("dim takes exactly one value", number)
            dim = _positive_int(rest[0], number, "dim")
        elif keyword == 'base':
            if dim is None:
                raise ParseError("base before dim", number)
            if base is not None:
                raise ParseError("duplicate base line", number)
            base = _reals(rest, dim, number, "base")
        elif keyword == 'v':
            if base is None:
                raise ParseError("vertex before base", number)
            vertices.append(_reals(rest, dim, number, "vertex"))
        else:
            raise ParseError(f"unknown keyword '{keyword}'", number)
    if dim is None or base is None:
        raise ParseError("a path file needs a dim line and a base line")
    return Path(tuple(base), tuple(tuple(v) for v in vertices))


def write_path(p: Path) -> str:
    lines = [f"dim {p.dim}", "base " + " ".join(_exact(c) for c in p.base)]
    lines += ["v " + " ".join(_exact(c) for c in v) for v in p.vertices]
    return "\n".join(lines) + "\n"


# -----------------------------
# FIELD FILE
# -----------------------------
def _matrix(tokens: list[str], d: int, number: int, what: str) -> np.ndarray:
    values = _reals(tokens, 2 * d * d, number, what)
    pairs = np.array(values).reshape(d * d, 2)
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(d, d)


def _index(token: str, n: int, number: int) -> int:
    index = _positive_int(token, number, "index")
    if index > n:
        raise ParseError(f"index {index} is outside 1..{n}", number)
    return index - 1


def _group(rest: list[str], number: int) -> tuple[GroupTag, int]:
    if not 1 <= len(rest) <= 2:
        raise ParseError("group line is 'group u1|su2|gl <d>'", number)
    try:
        group = GroupTag(rest[0])
    except ValueError:
        raise ParseError(f"unknown group '{rest[0]}'", number)
    fixed = GROUP_SIZE.get(group)
    if len(rest) == 1:
        if fixed is None:
            raise ParseError("gl needs an explicit matrix size", number)
        return group, fixed
    d = _positive_int(rest[1], number, "matrix size")
    if fixed is not None and d != fixed:
        raise ParseError(f"{group.value} matrices are {fixed}x{fixed}, got {d}", number)
    return group, d


def parse_field(text: str) -> ConnectionField:
    """Read a FieldFile. Omitted C and D matrices are zero."""
    group = d = n = None
    C = D = None
    seen = set()
    for number, (keyword, *rest) in _lines(text):
        if keyword == 'group':
            if group is not None:
                raise ParseError("duplicate group line", number)
            group, d = _group(rest, number)
            continue
        if keyword == 'dim':
            if n is not None:
                raise ParseError("duplicate dim line", number)
            if len(rest) != 1:
                raise ParseError("dim takes exactly one value", number)
            n = _positive_int(rest[0], number, "dim")
            continue
        if keyword not in ('C', 'D'):
            raise ParseError(f"unknown keyword '{keyword}'", number)
        if group is None or n is None:
            raise ParseError(f"{keyword} line before the group and dim lines", number)
        if C is None:
            C = np.zeros((n, d, d), dtype=complex)
            D = np.zeros((n, n, d, d), dtype=complex)

        arity = 1 if keyword == 'C' else 2
        if len(rest) < arity:
            raise ParseError(f"{keyword} line is missing its indices", number)
        key = (keyword, *(_index(token, n, number) for token in rest[:arity]))
        if key in seen:
            raise ParseError(f"duplicate {keyword} {' '.join(rest[:arity])}", number)
        seen.add(key)
        target = C if keyword == 'C' else D
        target[key[1:]] = _matrix(rest[arity:], d, number, keyword)

    if group is None or n is None:
        raise ParseError("a field file needs a group line and a dim line")
    if C is None:
        C = np.zeros((n, d, d), dtype=complex)
        D = np.zeros((n, n, d, d), dtype=complex)
    return ConnectionField(group=group, C=C, D=D)


def _matrix_tokens(M: np.ndarray) -> str:
    return " ".join(f"{_exact(z.real)} {_exact(z.imag)}" for z in M.ravel())


def write_field(A: ConnectionField) -> str:
    """FieldFile text for ``A``; zero matrices are omitted."""
    lines = [f"group {A.group.value} {A.size}", f"dim {A.dim}"]
    for mu in range(A.dim):
        if np.any(A.C[mu]):
            lines.append(f"C {mu + 1} {_matrix_tokens(A.C[mu])}")
    for mu in range(A.dim):
        for nu in range(A.dim):
            if np.any(A.D[mu, nu]):
                lines.append(f"D {mu + 1} {nu + 1} {_matrix_tokens(A.D[mu, nu])}")
    return "\n".join(lines) + "\n"


# -----------------------------
# MATRICES AND REPORTS
# -----------------------------
def format_matrix(M) -> str:
    """One line per row, entries as ``re+imi`` with 17 significant digits."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    rows = (" ".join(f"{z.real:.17g}{z.imag:+.17g}i" for z in row) for row in M)
    return "\n".join(rows) + "\n"


def write_report(report: VerificationReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for record in report.records:
        writer.writerow([
            record.identity.value,
            record.samples,
            _aggregate(record.max_error),
            _aggregate(record.mean_error),
            _aggregate(record.observed_order),
            _aggregate(record.tolerance),
            "true" if record.passed else "false",
        ])
    writer.writerow([
        "ALL",
        report.total_samples,
        _aggregate(report.max_error),
        _aggregate(report.mean_error),
        "nan",
        "nan",
        "true" if report.passed else "false",
    ])
    return buffer.getvalue()


def _read(location, parse):
    try:
        return parse(FilePath(location).read_text(encoding="utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{location}: not a UTF-8 text file (byte {exc.start})") from exc
    except LoopCalcError as exc:
        raise type(exc)(f"{location}: {exc}") from exc


def read_path_file(location) -> Path:
    return _read(location, parse_path)


def read_field_file(location) -> ConnectionField:
    return _read(location, parse_field)
