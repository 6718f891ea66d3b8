"""CSV snapshots, manifests and gnuplot stubs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fields import PhaseGrid, WignerField

FMT = "%.17g"


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % float(v)
    return str(v)


def time_tag(t: float) -> str:
    return ("%.6f" % t).rstrip("0").rstrip(".") or "0"


def write_table(path: Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path: Path) -> tuple[list, np.ndarray]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(v) for v in row] for row in r if row]
    return header, np.array(data)


def field_header(dim: int) -> list:
    if dim == 1:
        return ["x", "xi", "w"]
    return [f"x{i + 1}" for i in range(dim)] + [f"xi{i + 1}" for i in range(dim)] + ["w"]


def write_field(path: Path, w: WignerField) -> Path:
    g = w.grid
    x, v = g.mesh()
    if g.dim == 1:
        cols = [x.ravel(), v.ravel()]
    else:
        cols = [x[..., i].ravel() for i in range(g.dim)] + [v[..., i].ravel() for i in range(g.dim)]
    cols.append(w.values.ravel())
    return write_table(path, field_header(g.dim), zip(*cols))


def read_field(path: Path, time: float = 0.0) -> WignerField:
    """Inverse of :func:`write_field`; the grid is recovered from the node columns."""
    header, data = read_table(path)
    if not header or header[-1] != "w" or (len(header) - 1) % 2:
        raise ConfigError(f"{path}: expected columns x..., xi..., w")
    d = (len(header) - 1) // 2
    xs = np.unique(data[:, 0])
    vs = np.unique(data[:, d])
    nx, nv = xs.size, vs.size
    # first node is -l exactly
    grid = PhaseGrid(d, float(-xs[0]), float(-vs[0]), nx, nv)
    if not (np.allclose(grid.x, xs, atol=1e-9 * grid.lx) and np.allclose(grid.v, vs, atol=1e-9 * grid.lv)):
        raise ConfigError(f"{path}: nodes are not the symmetric grid (j - n/2) h")
    if data.shape[0] != nx**d * nv**d:
        raise ConfigError(f"{path}: row count does not match a tensor grid")
    return WignerField(grid, data[:, -1].reshape(grid.shape), time)


def write_density(path: Path, grid: PhaseGrid, n: np.ndarray) -> Path:
    if grid.dim == 1:
        return write_table(path, ["x", "n"], zip(grid.x, n))
    mesh = np.meshgrid(*([grid.x] * grid.dim), indexing="ij")
    cols = [m.ravel() for m in mesh] + [n.ravel()]
    return write_table(path, [f"x{i + 1}" for i in range(grid.dim)] + ["n"], zip(*cols))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def write_manifest(outdir: Path, manifest: dict) -> Path:
    path = Path(outdir) / "manifest.json"
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(outdir: Path) -> dict:
    path = Path(outdir) / "manifest.json"
    if not path.exists():
        raise ConfigError(f"{outdir}: no manifest.json")
    return json.loads(path.read_text())


def write_gnuplot_stub(outdir: Path, name: str, csv_name: str, columns: list, xcol: int = 1,
                       surface: bool = False) -> Path:
    """Companion gnuplot script for one CSV; plotting itself stays external."""
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             f"set title '{name}'"]
    if surface:
        lines += ["set view map", "set pm3d at b",
                  f"splot '{csv_name}' using 1:2:3 with pm3d"]
    else:
        plots = [f"'{csv_name}' using {xcol}:{c} with lines" for c in columns]
        lines.append("plot " + ", \\\n     ".join(plots))
    path = Path(outdir) / f"plot_{name}.gp"
    path.write_text("\n".join(lines) + "\n")
    return path
