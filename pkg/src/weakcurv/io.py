"""GRID2D v1 text files, metric bundles, rate CSVs and JSON reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .fields import Grid2D, ScalarField2D, SymMatrixField2D

MAGIC = "GRID2D"


def fmt(x) -> str:
    """17 significant digits, round-trip exact."""
    return f"{float(x):.17g}"


def write_grid(path, field: ScalarField2D | np.ndarray, grid: Grid2D | None = None):
    if isinstance(field, ScalarField2D):
        grid, vals = field.grid, field.values
    else:
        vals = np.asarray(field, dtype=np.float64)
        if grid is None:
            raise ValueError("grid required when writing a bare array")
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{MAGIC} {grid.nx} {grid.ny} {fmt(grid.x0)} {fmt(grid.y0)} {fmt(grid.h)}\n")
        for row in np.asarray(vals, dtype=np.float64).reshape(grid.ny, grid.nx):
            fh.write(" ".join(fmt(v) for v in row))
            fh.write("\n")
    return path


def read_grid(path) -> ScalarField2D:
    text = Path(path).read_text()
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) != 6 or parts[0] != MAGIC:
        raise ValueError(f"{path}: not a GRID2D v1 file (header {head!r})")
    nx, ny = int(parts[1]), int(parts[2])
    x0, y0, h = (float(p) for p in parts[3:])
    vals = np.array(body.split(), dtype=np.float64)
    if vals.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {vals.size}")
    grid = Grid2D(nx, ny, x0, y0, h)
    return ScalarField2D(grid, vals.reshape(ny, nx))


def write_metric_bundle(directory, g: SymMatrixField2D, name="metric"):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for comp in ("g11", "g12", "g22"):
        fn = f"{name}_{comp}.grid"
        write_grid(d / fn, getattr(g, comp))
        files[comp] = fn
    manifest = {"format": "GRID2D-metric v1", "files": files, "metric": bool(g.metric), "lambda": g.lam}
    write_json(d / f"{name}.json", manifest)
    return d / f"{name}.json"


def read_metric_bundle(manifest_path) -> SymMatrixField2D:
    p = Path(manifest_path)
    m = json.loads(p.read_text())
    comps = [read_grid(p.parent / m["files"][c]) for c in ("g11", "g12", "g22")]
    return SymMatrixField2D(*comps, metric=bool(m.get("metric", False)), lam=float(m.get("lambda", 0.0)))


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_rate_csv(path, fit):
    path = Path(path)
    lines = ["eps,norm"] + [f"{fmt(e)},{fmt(n)}" for e, n in fit.pairs]
    path.write_text("\n".join(lines) + "\n")
    return path
