"""Phase-space grids, sampled Wigner fields and built-in initial data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform tensor grid on [-lx, lx)^d x [-lv, lv)^d.

    Nodes are ``(j - n/2) h`` with ``h = 2 l / n``, so the origin is a node and the
    grid is the natural FFT grid.  Array layout is ``(nx,)*d + (nv,)*d``.
    """

    dim: int
    lx: float
    lv: float
    nx: int
    nv: int

    def __post_init__(self):
        for n in (self.nx, self.nv):
            if n < 8 or n % 2:
                raise ValueError(f"sample counts must be even and >= 8, got {n}")
        if not (self.lx > 0 and self.lv > 0):
            raise ValueError("extents must be positive")

    @property
    def hx(self) -> float:
        return 2 * self.lx / self.nx

    @property
    def hv(self) -> float:
        return 2 * self.lv / self.nv

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.hx

    @property
    def v(self) -> np.ndarray:
        return (np.arange(self.nv) - self.nv // 2) * self.hv

    @property
    def shape(self) -> tuple:
        return (self.nx,) * self.dim + (self.nv,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (self.hx * self.hv) ** self.dim

    @property
    def x_cell(self) -> float:
        return self.hx**self.dim

    @property
    def v_cell(self) -> float:
        return self.hv**self.dim

    def mesh(self):
        """(x, xi) arrays; shape ``self.shape`` for d = 1, ``self.shape + (d,)`` otherwise."""
        d = self.dim
        if d == 1:
            return np.meshgrid(self.x, self.v, indexing="ij")
        axes = [self.x] * d + [self.v] * d
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids[:d], axis=-1), np.stack(grids[d:], axis=-1)

    def as_dict(self) -> dict:
        return dict(dim=self.dim, lx=self.lx, lv=self.lv, nx=self.nx, nv=self.nv)


class WignerField:
    """Immutable snapshot of w(t, x, xi) sampled on a :class:`PhaseGrid`."""

    __slots__ = ("grid", "values", "time")

    def __init__(self, grid: PhaseGrid, values, time: float = 0.0):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(time))

    def __setattr__(self, name, value):
        raise AttributeError("WignerField is immutable")

    def __repr__(self):
        return f"WignerField(t={self.time:g}, mass={self.mass:.6g}, grid={self.grid})"

    @property
    def mass(self) -> float:
        return float(self.values.sum()) * self.grid.cell_volume

    def with_values(self, values, time: float | None = None) -> WignerField:
        return WignerField(self.grid, values, self.time if time is None else time)

    def normalized(self) -> WignerField:
        m = self.mass
        if m == 0:
            raise ValueError("cannot normalize a field with zero mass")
        return self.with_values(self.values / m)

    def scaled(self, c: float) -> WignerField:
        return self.with_values(c * self.values)


def gaussian_values(grid: PhaseGrid, mean=(0.0, 0.0), cov=((1.0, 0.0), (0.0, 1.0))) -> np.ndarray:
    """Unit-mass Gaussian, identical 2x2 covariance on every (x_i, xi_i) pair.

    ``mean`` is ``(mx, mv)``; each entry may be a scalar or a length-d vector.
    """
    d = grid.dim
    cov = np.asarray(cov, dtype=float)
    prec = np.linalg.inv(cov)
    mx = np.broadcast_to(np.asarray(mean[0], float), (d,))
    mv = np.broadcast_to(np.asarray(mean[1], float), (d,))
    x, v = grid.mesh()
    if d == 1:
        dx, dv = x - mx[0], v - mv[0]
    else:
        dx, dv = x - mx, v - mv
    q = prec[0, 0] * dx * dx + 2 * prec[0, 1] * dx * dv + prec[1, 1] * dv * dv
    if d > 1:
        q = q.sum(axis=-1)
    norm = ((2 * math.pi) * math.sqrt(np.linalg.det(cov))) ** d
    return np.exp(-0.5 * q) / norm


def gaussian(grid: PhaseGrid, mean=(0.0, 0.0), cov=((1.0, 0.0), (0.0, 1.0)), weight: float = 1.0) -> WignerField:
    return WignerField(grid, weight * gaussian_values(grid, mean, cov))


def gaussian_mixture(grid: PhaseGrid, weights, means, covs) -> WignerField:
    """Sum of weighted Gaussians; negative weights give signed (non-positive) data."""
    total = np.zeros(grid.shape)
    for wt, mean, cov in zip(weights, means, covs):
        total += wt * gaussian_values(grid, mean, cov)
    return WignerField(grid, total)


def signed_mixture(grid: PhaseGrid, plus: float = 1.5, minus: float = 0.5,
                   plus_mean=(-3.5, 0.0), minus_mean=(3.5, 0.0), width: float = 0.6) -> WignerField:
    """``plus`` * N(plus_mean) - ``minus`` * N(minus_mean) with well separated supports."""
    cov = ((width**2, 0.0), (0.0, width**2))
    return gaussian_mixture(grid, [plus, -minus], [plus_mean, minus_mean], [cov, cov])
