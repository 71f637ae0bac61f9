"""CSV matrices, key=value config files, run manifests and seeding helpers."""
import contextlib
import csv
import dataclasses
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from lge.solver import SolverConfig


class MatrixFormatError(ValueError):
    """A matrix CSV could not be parsed."""


def format_float(x):
    return repr(float(x)) if np.isfinite(x) else str(float(x))


def matrix_to_csv(M):
    """Headerless row-major CSV text; ``repr`` gives shortest round-trip digits."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in M)


def atomic_write_text(path, text):
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_matrix(path, M):
    atomic_write_text(path, matrix_to_csv(M))


def read_matrix(path):
    """Parse a headerless numeric CSV into a 2-D float array.

    Raises :class:`MatrixFormatError` naming the offending row/column.
    """
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            vals = []
            for j, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise MatrixFormatError(f"{path}: row {i}, column {j}: not a number: {cell!r}") from None
                if not np.isfinite(v):
                    raise MatrixFormatError(f"{path}: row {i}, column {j}: non-finite value {cell!r}")
                vals.append(v)
            if rows and len(vals) != len(rows[0]):
                raise MatrixFormatError(
                    f"{path}: row {i} has {len(vals)} columns, expected {len(rows[0])}"
                )
            rows.append(vals)
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix")
    return np.array(rows, dtype=float)


def write_table(path, header, rows):
    """CSV with a header line; floats written at full precision."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(c) for c in row] for row in reader if row]


def parse_kv(text):
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def format_kv(mapping):
    return "".join(f"{k}={v}\n" for k, v in mapping.items())


def _coerce(value, default):
    if isinstance(default, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(float(value))
    if isinstance(default, float):
        return float(value)
    return str(value)


def config_from_mapping(mapping, base=None):
    """Build a :class:`SolverConfig` from string values; unknown keys are ignored
    here and returned separately."""
    base = base or SolverConfig()
    fields = {f.name for f in dataclasses.fields(SolverConfig)}
    changes, extra = {}, {}
    for key, value in mapping.items():
        if key in fields:
            changes[key] = _coerce(value, getattr(base, key))
        else:
            extra[key] = value
    return base.replace(**changes), extra


def load_config(path, base=None):
    return config_from_mapping(parse_kv(Path(path).read_text()), base)


def config_to_kv(cfg):
    return format_kv({k: (format_float(v) if isinstance(v, float) else v) for k, v in cfg.as_dict().items()})


def cell_rng(master_seed, *cell):
    """Independent stream for one grid cell.

    Keyed on ``(master_seed, *cell)`` so adding cells never shifts the streams
    of existing ones.
    """
    return np.random.default_rng([int(master_seed), *(int(c) for c in cell)])


@contextlib.contextmanager
def fixed_threads(n=1):
    """Limit BLAS/OpenMP pools so dense kernels are bitwise reproducible."""
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield
