"""Plain-text serialisation of scalar and vector fields.

Layout: ``#``-prefixed ``key = value`` header lines, then one whitespace
separated row per lattice point in row-major order (x outer, p inner) holding
``x p value`` or ``x p jx jp``.  Numbers use ``%.8e`` (9 significant digits)
and lines end in LF, so identical fields give identical bytes.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, VectorField

FORMAT_VERSION = 1
_NUM = "%.8e"

# display magnification for plots; never applied to the stored values
SCALE_FACTORS = {"j_env": 375.0, "j_env_extracted": 375.0, "j_damp": 125.0, "j_diff": 125.0}


class FieldFileError(OSError):
    pass


@dataclass(frozen=True)
class FieldFile:
    path: Path
    kind: str
    grid: Grid
    provenance: str
    scale_factor: float
    sha256: str


def _fmt(a: np.ndarray) -> np.ndarray:
    # adding 0.0 folds -0.0 into 0.0
    return np.char.mod(_NUM, np.asarray(a, dtype=float) + 0.0)


def _render(field: ScalarField | VectorField, kind: str, provenance: str, scale_factor: float) -> bytes:
    g = field.grid
    if "\n" in provenance or "\n" in kind:
        raise ValueError("kind and provenance must be single-line strings")
    vector = isinstance(field, VectorField)
    header = [
        f"# format = wigner-field/{FORMAT_VERSION}",
        f"# kind = {kind}",
        f"# columns = {'x p jx jp' if vector else 'x p value'}",
        f"# nx = {g.nx}",
        f"# np = {g.n_p}",
        f"# x_range = {_NUM % g.x_min} {_NUM % g.x_max}",
        f"# p_range = {_NUM % g.p_min} {_NUM % g.p_max}",
        f"# provenance = {provenance}",
        f"# scale_factor = {scale_factor!r}",
    ]
    X, P = g.mesh()
    cols = [_fmt(X.ravel()), _fmt(P.ravel())]
    cols += [_fmt(field.jx), _fmt(field.jp)] if vector else [_fmt(field.values)]
    rows = cols[0]
    for c in cols[1:]:
        rows = np.char.add(np.char.add(rows, " "), c)
    return ("\n".join(header + rows.tolist()) + "\n").encode("ascii")


def atomic_write(path: str | Path, data: bytes) -> str:
    """Write ``data`` through a temporary sibling and rename it into place; returns its sha256."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise FieldFileError(f"{path}: {exc.strerror or exc}") from exc
    return hashlib.sha256(data).hexdigest()


def export_field(
    field: ScalarField | VectorField,
    kind: str,
    path: str | Path,
    provenance: str = "",
    scale_factor: float | None = None,
) -> FieldFile:
    """Write ``field`` to ``path``.

    ``scale_factor`` is display metadata only; it defaults to the entry for
    ``kind`` in ``SCALE_FACTORS`` (1 otherwise).
    """
    if scale_factor is None:
        scale_factor = SCALE_FACTORS.get(kind, 1.0)
    data = _render(field, kind, provenance, float(scale_factor))
    digest = atomic_write(path, data)
    return FieldFile(Path(path), kind, field.grid, provenance, float(scale_factor), digest)


def read_field(path: str | Path) -> tuple[ScalarField | VectorField, dict[str, str]]:
    """Parse a field file back into a field and its header dictionary."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as exc:
        raise FieldFileError(f"{path}: {exc.strerror or exc}") from exc
    header: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    try:
        nx, n_p = int(header["nx"]), int(header["np"])
        x0, x1 = (float(v) for v in header["x_range"].split())
        p0, p1 = (float(v) for v in header["p_range"].split())
        ncol = len(header["columns"].split())
    except (KeyError, ValueError) as exc:
        raise FieldFileError(f"{path}: malformed header ({exc})") from None
    grid = Grid(nx, n_p, x0, x1, p0, p1)
    data = np.loadtxt(body, ndmin=2) if body else np.zeros((0, ncol))
    if data.shape != (grid.size, ncol):
        raise FieldFileError(f"{path}: expected {grid.size} rows of {ncol} columns, found {data.shape}")
    X, P = grid.mesh()
    if not (np.allclose(data[:, 0], X.ravel(), atol=1e-7) and np.allclose(data[:, 1], P.ravel(), atol=1e-7)):
        raise FieldFileError(f"{path}: row coordinates do not match the header grid")
    if ncol == 4:
        return VectorField(grid, data[:, 2], data[:, 3]), header
    return ScalarField(grid, data[:, 2]), header


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
