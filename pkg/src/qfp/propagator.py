"""Exact-in-time evolution of sampled Wigner fields and their macroscopic moments.

The solution operator is applied in Fourier space, where it is diagonal up to the
linear change of variables by the flow:

    w^(t, kappa) = w0^(Phi_t^T kappa) * exp(-kappa^T Sigma(t) kappa / 2).

``w0^`` is evaluated off-grid by a separable non-uniform DFT (trapezoid rule, which
is spectrally accurate for smooth decaying data) and the result is brought back to
the output grid with an inverse FFT.  Mass is the ``kappa = 0`` mode and is
therefore preserved to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characteristics import flow_matrix
from .errors import GridMismatch, SupportOverflow
from .fields import PhaseGrid, WignerField
from .greens_kernel import covariance
from .model import ModelParams, stationary_covariance

OVERFLOW_TOL = 1e-4
_CHUNK_BYTES = 64 * 2**20


def _wavenumbers(n: int, h: float) -> np.ndarray:
    return 2 * math.pi * np.fft.fftfreq(n, h)


def _pair_nudft(arr, i, d, qx, qv, x_in, v_in, shape_out):
    """Contract axes (i, d+i) of ``arr`` against exp(-i(qx x + qv v)) for every target pair."""
    a = np.moveaxis(arr, (i, d + i), (0, 1))
    rest = a.shape[2:]
    a = a.reshape(a.shape[0], a.shape[1], -1)
    qx = qx.ravel()
    qv = qv.ravel()
    npts = qx.size
    out = np.empty((npts, a.shape[2]), dtype=complex)
    chunk = max(1, _CHUNK_BYTES // (16 * a.shape[1] * a.shape[2]))
    for s in range(0, npts, chunk):
        sl = slice(s, s + chunk)
        ex = np.exp(-1j * np.outer(qx[sl], x_in))
        ev = np.exp(-1j * np.outer(qv[sl], v_in))
        tmp = np.tensordot(ex, a, axes=(1, 0))  # (chunk, nv, rest)
        out[sl] = np.einsum("pbr,pb->pr", tmp, ev)
    out = out.reshape(shape_out + rest)
    return np.moveaxis(out, (0, 1), (i, d + i))


def boundary_fraction(values: np.ndarray, dim: int, band: int | None = None) -> float:
    """Share of |w| mass lying in the outer ``band`` cells of any axis."""
    total = np.abs(values).sum()
    if total == 0:
        return 0.0
    inner = np.abs(values)
    for ax, n in enumerate(values.shape):
        b = band if band is not None else max(2, n // 16)
        idx = [slice(None)] * values.ndim
        idx[ax] = slice(b, n - b)
        inner = inner[tuple(idx)]
    return float(1.0 - inner.sum() / total)


def propagate(p: ModelParams, w0: WignerField, t: float, out_grid: PhaseGrid | None = None,
              check_support: bool = True) -> WignerField:
    """Solution at time ``w0.time + t`` sampled on ``out_grid`` (default: the input grid)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    gin = w0.grid
    gout = out_grid or gin
    if gout.dim != gin.dim or gin.dim != p.dim:
        raise GridMismatch("grid and model dimensions differ")
    d = p.dim
    if check_support and boundary_fraction(w0.values, d) > OVERFLOW_TOL:
        raise SupportOverflow("initial data reaches the grid boundary band")

    phi = flow_matrix(p, t)
    sig = covariance(p, t).sigma
    k = _wavenumbers(gout.nx, gout.hx)
    eta = _wavenumbers(gout.nv, gout.hv)
    K, E = np.meshgrid(k, eta, indexing="ij")
    qx = phi[0, 0] * K + phi[1, 0] * E
    qv = phi[0, 1] * K + phi[1, 1] * E
    keep = (np.abs(qx) <= math.pi / gin.hx * (1 + 1e-12)) & (np.abs(qv) <= math.pi / gin.hv * (1 + 1e-12))
    damp = np.exp(-0.5 * (sig[0, 0] * K * K + 2 * sig[0, 1] * K * E + sig[1, 1] * E * E)) * keep

    spec = np.asarray(w0.values, dtype=complex)
    for i in range(d):
        spec = _pair_nudft(spec, i, d, qx, qv, gin.x, gin.v, (gout.nx, gout.nv))
        bshape = [1] * (2 * d)
        bshape[i], bshape[d + i] = gout.nx, gout.nv
        spec = spec * damp.reshape(bshape)
    spec *= gin.cell_volume

    # node y_j = (j - n/2) h, so exp(i kappa_m y_j) = (-1)^m exp(2 pi i m j / n)
    for ax, (n, h) in enumerate([(gout.nx, gout.hx)] * d + [(gout.nv, gout.hv)] * d):
        m = np.rint(np.fft.fftfreq(n) * n)
        shape = [1] * (2 * d)
        shape[ax] = n
        spec = spec * np.cos(math.pi * m).reshape(shape) / h
    values = np.fft.ifftn(spec).real

    if check_support and boundary_fraction(values, d) > OVERFLOW_TOL:
        raise SupportOverflow(
            f"solution at t={w0.time + t:g} leaves the grid; enlarge the extents or use auto_grid")
    return WignerField(gout, values, w0.time + t)


def propagate_many(p: ModelParams, w0: WignerField, times, out_grid: PhaseGrid | None = None):
    """Independent propagations from ``w0`` to each time in ``times``."""
    return [propagate(p, w0, t, out_grid) for t in times]


def field_mean_cov(w: WignerField):
    """Mean (mx, mv) and 2x2 covariance of |w| pooled over coordinate pairs."""
    g = w.grid
    a = np.abs(w.values)
    tot = a.sum()
    x, v = g.mesh()
    if g.dim == 1:
        x, v = x[..., None], v[..., None]
    a = a[..., None]
    axes = tuple(range(2 * g.dim))
    mx = (a * x).sum(axis=axes) / tot
    mv = (a * v).sum(axis=axes) / tot
    dx, dv = x - mx, v - mv
    cxx = (a * dx * dx).sum() / (tot * g.dim)
    cxv = (a * dx * dv).sum() / (tot * g.dim)
    cvv = (a * dv * dv).sum() / (tot * g.dim)
    return (mx, mv), np.array([[cxx, cxv], [cxv, cvv]])


def auto_grid(p: ModelParams, w0: WignerField, t: float, sigmas: float = 6.0,
              nx: int | None = None, nv: int | None = None) -> PhaseGrid:
    """Output grid wide enough for the solution at time ``t``.

    Extents cover ``sigmas`` standard deviations of the propagated first two moments
    of |w0| (and of the steady state in the confined case), never shrinking below
    the input grid.
    """
    g = w0.grid
    (mx, mv), c0 = field_mean_cov(w0)
    phi = flow_matrix(p, t)
    ct = phi @ c0 @ phi.T + covariance(p, t).sigma
    mxt = phi[0, 0] * mx + phi[0, 1] * mv
    mvt = phi[1, 0] * mx + phi[1, 1] * mv
    lx = float(np.max(np.abs(mxt))) + sigmas * math.sqrt(ct[0, 0])
    lv = float(np.max(np.abs(mvt))) + sigmas * math.sqrt(ct[1, 1])
    if p.confined:
        cs = stationary_covariance(p)
        lx = max(lx, sigmas * math.sqrt(cs[0, 0]))
        lv = max(lv, sigmas * math.sqrt(cs[1, 1]))
    return PhaseGrid(g.dim, max(lx, g.lx), max(lv, g.lv), nx or g.nx, nv or g.nv)


@dataclass(frozen=True)
class MacroscopicFields:
    """Position density n, raw flux j and corrected flux J = j - Dqq grad n.

    For d > 1 the flux arrays carry a trailing component axis of length d.
    """

    grid: PhaseGrid
    n: np.ndarray
    j: np.ndarray
    J: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.n.sum()) * self.grid.x_cell


def _deriv(f: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    if order == 2:
        return np.gradient(f, h, axis=axis, edge_order=2)
    if order == 4:
        g = np.gradient(f, h, axis=axis, edge_order=2)
        f = np.moveaxis(f, axis, 0)
        g = np.moveaxis(g, axis, 0)
        g[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        return np.moveaxis(g, 0, axis)
    raise ValueError("order must be 2 or 4")


def _grad_x(n: np.ndarray, grid: PhaseGrid, order: int) -> np.ndarray:
    if grid.dim == 1:
        return _deriv(n, grid.hx, 0, order)
    return np.stack([_deriv(n, grid.hx, a, order) for a in range(grid.dim)], axis=-1)


def _div_x(f: np.ndarray, grid: PhaseGrid, order: int) -> np.ndarray:
    if grid.dim == 1:
        return _deriv(f, grid.hx, 0, order)
    return sum(_deriv(f[..., a], grid.hx, a, order) for a in range(grid.dim))


def moments(w: WignerField, dqq: float = 0.0, order: int = 2) -> MacroscopicFields:
    """n and j by xi-quadrature; grad n by centered differences of the given order."""
    g = w.grid
    d = g.dim
    vaxes = tuple(range(d, 2 * d))
    n = w.values.sum(axis=vaxes) * g.v_cell
    if d == 1:
        j = (w.values * g.v[None, :]).sum(axis=1) * g.hv
    else:
        _, v = g.mesh()
        j = np.stack([(w.values * v[..., a]).sum(axis=vaxes) for a in range(d)], axis=-1) * g.v_cell
    J = j - dqq * _grad_x(n, g, order)
    return MacroscopicFields(g, n, j, J)


def continuity_residual(p: ModelParams, w_a: WignerField, w_b: WignerField, order: int = 2,
                        trim: int = 2) -> float:
    """max |(n_b - n_a)/dt + div J_mid| over interior x-nodes, J_mid the average flux."""
    if w_a.grid != w_b.grid:
        raise GridMismatch("fields live on different grids")
    dt = w_b.time - w_a.time
    if dt <= 0:
        raise ValueError("second field must be later than the first")
    ma = moments(w_a, p.dqq, order)
    mb = moments(w_b, p.dqq, order)
    res = (mb.n - ma.n) / dt + 0.5 * (_div_x(ma.J, w_a.grid, order) + _div_x(mb.J, w_a.grid, order))
    if trim:
        res = res[(slice(trim, -trim),) * w_a.grid.dim]
    return float(np.max(np.abs(res)))


def split_signed(w: WignerField) -> tuple[WignerField, WignerField]:
    v = w.values
    return w.with_values(np.maximum(v, 0.0)), w.with_values(np.maximum(-v, 0.0))


def lp_norm(w: WignerField | np.ndarray, p: float = 1.0, cell: float | None = None) -> float:
    """Grid L^p norm; ``p = inf`` gives the max norm."""
    if isinstance(w, WignerField):
        vals, cell = w.values, w.grid.cell_volume
    else:
        vals = np.asarray(w)
        if cell is None:
            raise ValueError("cell volume required for raw arrays")
    a = np.abs(vals)
    if math.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return float(a.sum() * cell)
    return float((a**p).sum() * cell) ** (1.0 / p)
