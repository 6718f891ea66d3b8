"""Finite-difference reference solver on a truncated phase-space box.

Strang splitting per step: half a step of transport + friction, one full step of
diffusion, then another half step of transport.  The transport substep is
semi-Lagrangian along the exact flow (cubic spline interpolation) with the volume
factor exp(2 d gamma tau).  Diffusion is explicit Heun (RK2) with conservative
second-order stencils and the 4-point cross stencil.  Outside the box w = 0.

The oracle shares only the flow map with the analytic path; it never touches the
kernel covariance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .characteristics import flow_matrix
from .errors import StabilityViolation, SupportOverflow
from .fields import PhaseGrid, WignerField
from .model import ModelParams

C_STAB = 0.4


def stable_dt(grid: PhaseGrid, p: ModelParams, c_stab: float = C_STAB) -> float:
    """c_stab * min(hx/max|xi|, hv/max|w0^2 x + 2 gamma xi|, hx^2/(2d Dqq), hv^2/(2d Dpp))."""
    d = grid.dim
    vmax = grid.lv
    fmax = p.omega0**2 * grid.lx + 2 * p.gamma * grid.lv
    bounds = [grid.hx / vmax, grid.hv**2 / (2 * d * p.dpp)]
    if fmax > 0:
        bounds.append(grid.hv / fmax)
    if p.dqq > 0:
        bounds.append(grid.hx**2 / (2 * d * p.dqq))
    return c_stab * min(bounds)


@dataclass(frozen=True)
class FdConfig:
    grid: PhaseGrid
    dt: float
    band: int = 8
    band_rate: float = 20.0
    c_stab: float = C_STAB
    scheme: str = "strang-sl-heun"

    def check(self, p: ModelParams):
        limit = stable_dt(self.grid, p, self.c_stab)
        if self.dt > limit * (1 + 1e-12):
            raise StabilityViolation(f"dt={self.dt:.3g} exceeds the stability bound {limit:.3g}")


def default_config(grid: PhaseGrid, p: ModelParams, **kw) -> FdConfig:
    return FdConfig(grid=grid, dt=stable_dt(grid, p, kw.get("c_stab", C_STAB)), **kw)


def _damping(grid: PhaseGrid, band: int, rate: float, dt: float) -> np.ndarray:
    """exp(-rate dt s^2) with s rising from 0 to 1 across the outer ``band`` cells."""
    d = grid.dim
    prof = np.zeros(grid.shape)
    for ax, n in enumerate(grid.shape):
        j = np.arange(n)
        dist = np.minimum(j, n - 1 - j)
        s = np.clip((band - dist) / band, 0.0, 1.0) if band > 0 else np.zeros(n)
        shape = [1] * (2 * d)
        shape[ax] = n
        prof = np.maximum(prof, (s * s).reshape(shape))
    return np.exp(-rate * dt * prof)


def _shift(a: np.ndarray, ax: int, k: int) -> np.ndarray:
    """a[i + k] along ``ax`` with zeros outside the box."""
    out = np.zeros_like(a)
    n = a.shape[ax]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k > 0:
        src[ax], dst[ax] = slice(k, n), slice(0, n - k)
    else:
        src[ax], dst[ax] = slice(0, n + k), slice(-k, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def diffusion_rhs(p: ModelParams, grid: PhaseGrid, w: np.ndarray) -> np.ndarray:
    """Dqq Lap_x w + Dpp Lap_xi w + 2 Dpq sum_i d_xi d_ei w."""
    d = grid.dim
    hx, hv = grid.hx, grid.hv
    out = np.zeros_like(w)
    for i in range(d):
        ax, av = i, d + i
        if p.dqq:
            out += p.dqq * (_shift(w, ax, 1) - 2 * w + _shift(w, ax, -1)) / hx**2
        out += p.dpp * (_shift(w, av, 1) - 2 * w + _shift(w, av, -1)) / hv**2
        if p.dpq:
            wp, wm = _shift(w, ax, 1), _shift(w, ax, -1)
            cross = (_shift(wp, av, 1) - _shift(wp, av, -1) - _shift(wm, av, 1) + _shift(wm, av, -1))
            out += 2 * p.dpq * cross / (4 * hx * hv)
    return out


class _Transport:
    """Precomputed spline sample points for the transport substep of length ``tau``."""

    def __init__(self, p: ModelParams, grid: PhaseGrid, tau: float):
        d = grid.dim
        inv = flow_matrix(p, -tau)
        x, v = grid.mesh()
        if d == 1:
            x, v = x[..., None], v[..., None]
        xs = inv[0, 0] * x + inv[0, 1] * v
        vs = inv[1, 0] * x + inv[1, 1] * v
        x0, v0 = grid.x[0], grid.v[0]
        coords = [(xs[..., i] - x0) / grid.hx for i in range(d)]
        coords += [(vs[..., i] - v0) / grid.hv for i in range(d)]
        self.coords = np.stack(coords)
        self.factor = math.exp(2 * d * p.gamma * tau)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.factor * map_coordinates(w, self.coords, order=3, mode="constant", cval=0.0)


@dataclass
class MassAudit:
    initial: float
    damping_loss: float = 0.0
    boundary_flux: float = 0.0
    fixer_defect: float = 0.0  # total |mass| restored after interpolation
    max_step_residual: float = 0.0

    def balance(self, final: float) -> float:
        """final - (initial - damping - boundary flux); the fixer restores mass, so ~0."""
        return final - (self.initial - self.damping_loss - self.boundary_flux)


@dataclass
class FdResult:
    field: WignerField
    snapshots: dict
    steps: int
    dt: float
    audit: MassAudit
    min_ratio: float = 0.0  # most negative min(w)/max(w) seen
    notes: list = field(default_factory=list)


class FdSolver:
    """Holds the precomputed operators for one (params, config) pair."""

    def __init__(self, cfg: FdConfig, p: ModelParams):
        cfg.check(p)
        self.cfg, self.p, self.grid = cfg, p, cfg.grid
        self.half = _Transport(p, cfg.grid, 0.5 * cfg.dt)
        self.mask = _damping(cfg.grid, cfg.band, cfg.band_rate, cfg.dt)
        self.cell = cfg.grid.cell_volume

    def _transport(self, w, audit):
        m0 = w.sum()
        out = self.half(w)
        m1 = out.sum()
        if m1 != 0 and m0 != 0:
            # spline interpolation is not conservative; restore the pre-step mass
            out *= m0 / m1
            audit.fixer_defect += abs(m1 - m0) * self.cell
            audit.max_step_residual = max(audit.max_step_residual, abs(m1 - m0) * self.cell)
        return out

    def step(self, w: np.ndarray, audit: MassAudit) -> np.ndarray:
        dt, p, g = self.cfg.dt, self.p, self.grid
        w = self._transport(w, audit)
        m0 = w.sum()
        k1 = diffusion_rhs(p, g, w)
        w1 = w + dt * k1
        w = w + 0.5 * dt * (k1 + diffusion_rhs(p, g, w1))
        audit.boundary_flux += (m0 - w.sum()) * self.cell
        w = self._transport(w, audit)
        m0 = w.sum()
        w = w * self.mask
        audit.damping_loss += (m0 - w.sum()) * self.cell
        return w


def fd_step(cfg: FdConfig, p: ModelParams, w: WignerField) -> WignerField:
    audit = MassAudit(w.mass)
    solver = FdSolver(cfg, p)
    return w.with_values(solver.step(np.array(w.values), audit), w.time + cfg.dt)


def fd_solve(cfg: FdConfig, p: ModelParams, w0: WignerField, t_end: float, snapshot_times=(),
             overflow_tol: float = 1e-4) -> FdResult:
    """March from ``w0`` to ``w0.time + t_end``, landing exactly on every snapshot time.

    Each segment between consecutive stops uses the largest dt <= cfg.dt that divides it.
    Snapshot times are offsets from ``w0.time``.
    """
    stops = sorted({float(s) for s in snapshot_times if 0 < s < t_end} | {float(t_end)})
    w = np.array(w0.values)
    audit = MassAudit(w0.mass)
    snaps, solvers = {}, {}
    min_ratio, steps, t0, dt_used = 0.0, 0, 0.0, cfg.dt
    for stop in stops:
        n = max(1, math.ceil((stop - t0) / cfg.dt - 1e-9))
        dt = (stop - t0) / n
        key = round(dt, 15)
        if key not in solvers:
            solvers[key] = FdSolver(FdConfig(cfg.grid, dt, cfg.band, cfg.band_rate, cfg.c_stab,
                                             cfg.scheme), p)
        solver = solvers[key]
        for k in range(n):
            w = solver.step(w, audit)
            steps += 1
            if steps % 16 == 0 or k == n - 1:
                top = np.abs(w).max()
                if top > 0:
                    min_ratio = min(min_ratio, w.min() / top)
        snaps[stop] = w0.with_values(w, w0.time + stop)
        t0, dt_used = stop, min(dt_used, dt)
    if audit.damping_loss > overflow_tol * max(abs(audit.initial), 1e-300):
        raise SupportOverflow(f"damping band absorbed {audit.damping_loss:.3g} of the mass")
    for s in snapshot_times:
        if float(s) not in snaps:
            snaps[float(s)] = snaps[float(t_end)] if float(s) >= t_end else w0
    return FdResult(snaps[float(t_end)], snaps, steps, dt_used, audit, min_ratio)
