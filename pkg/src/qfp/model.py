"""Model parameters, Lindblad gate and the drift/diffusion form of the harmonic QFP equation.

All kinetic quantities live on phase space ``y = (x, xi)`` with ``x, xi`` in R^d.
Every matrix in the model is a 2x2 "symbol" tensored with the d x d identity, so
most routines work with the 2x2 symbol and expand with :func:`expand` only when a
full 2d x 2d matrix is needed.  The coordinate order of the full matrix is
``(x_1..x_d, xi_1..xi_d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateDiffusion, LindbladViolation, NegativeParameter, NoEquilibrium


@dataclass(frozen=True)
class ModelParams:
    """Friction, confinement and diffusion constants (units with hbar = m = 1 by default).

    Only finiteness and signs are checked here; the Lindblad condition is checked by
    :func:`validate_params`, so classical-limit parameter sets (Dqq = Dpq = 0 with
    gamma > 0) can still be built for comparison runs.
    """

    gamma: float
    omega0: float
    dpp: float
    dqq: float = 0.0
    dpq: float = 0.0
    dim: int = 1
    hbar: float = 1.0
    mass: float = 1.0
    lindblad_margin: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        raw = {k: getattr(self, k) for k in ("gamma", "omega0", "dpp", "dqq", "dpq", "hbar", "mass")}
        for name, value in raw.items():
            if not math.isfinite(float(value)):
                raise NegativeParameter(f"{name} must be finite, got {value!r}")
        for name in ("gamma", "omega0", "dqq", "dpq"):
            if raw[name] < 0:
                raise NegativeParameter(f"{name} must be >= 0, got {raw[name]!r}")
        if raw["dpp"] <= 0:
            raise NegativeParameter(f"dpp must be > 0, got {raw['dpp']!r}")
        if raw["hbar"] <= 0 or raw["mass"] <= 0:
            raise NegativeParameter("hbar and mass must be > 0")
        if int(self.dim) != self.dim or self.dim < 1:
            raise NegativeParameter(f"dim must be a positive integer, got {self.dim!r}")
        # exact margin on the inputs as given (floats convert to Fraction exactly)
        fr = {k: Fraction(v) for k, v in raw.items()}
        margin = fr["dpp"] * fr["dqq"] - fr["dpq"] ** 2 - fr["hbar"] ** 2 * fr["gamma"] ** 2 / 4
        object.__setattr__(self, "lindblad_margin", margin)
        for name, value in raw.items():
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def confined(self) -> bool:
        return self.gamma > 0 and self.omega0 > 0

    def replace(self, **changes) -> ModelParams:
        kw = dict(gamma=self.gamma, omega0=self.omega0, dpp=self.dpp, dqq=self.dqq,
                  dpq=self.dpq, dim=self.dim, hbar=self.hbar, mass=self.mass)
        kw.update(changes)
        return ModelParams(**kw)

    def as_dict(self) -> dict:
        return dict(gamma=self.gamma, omega0=self.omega0, dpp=self.dpp, dqq=self.dqq,
                    dpq=self.dpq, dim=self.dim, hbar=self.hbar, mass=self.mass)

    @classmethod
    def from_physical(cls, coupling: float, kb_t: float, omega_cutoff: float, omega0: float,
                      mass: float = 1.0, hbar: float = 1.0, dim: int = 1) -> ModelParams:
        """Caldeira-Leggett type constants from bath coupling, temperature and cutoff."""
        return cls(
            gamma=coupling / (2 * mass),
            omega0=omega0,
            dpp=coupling * kb_t,
            dqq=coupling * hbar**2 / (12 * mass**2 * kb_t),
            dpq=coupling * omega_cutoff * hbar**2 / (12 * math.pi * mass * kb_t),
            dim=dim, hbar=hbar, mass=mass,
        )

    def unit_mass(self) -> ModelParams:
        """Rescale to m = 1: the kinetic modules only use the m = 1 form of the equation."""
        m = self.mass
        if m == 1.0:
            return self
        return self.replace(omega0=self.omega0 / math.sqrt(m), dpp=self.dpp / m**2,
                            dpq=self.dpq / m, hbar=self.hbar / m, mass=1.0)


def validate_params(p: ModelParams) -> ModelParams:
    """Return ``p`` unchanged if it satisfies the Lindblad condition, else raise.

    The comparison is exact rational arithmetic, so the equality case is accepted.
    """
    if p.gamma == 0 and not p.dpp > 0:
        raise LindbladViolation("dpp must be > 0 when gamma == 0")
    if p.lindblad_margin < 0:
        raise LindbladViolation(
            f"dpp*dqq - dpq^2 = {p.dpp * p.dqq - p.dpq**2:.6g} < hbar^2 gamma^2 / 4 = "
            f"{p.hbar**2 * p.gamma**2 / 4:.6g}"
        )
    return p


def shift_frame(omega0: float, a, dim: int = 1) -> np.ndarray:
    """Translation x -> x - x_c that removes the linear term of V = w0^2|x|^2/2 + a.x + b."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (dim,))
    if omega0 == 0:
        if np.any(a != 0):
            raise NegativeParameter("a linear potential term needs omega0 > 0 to be shifted away")
        return np.zeros(dim)
    return -a / omega0**2


def expand(sym: np.ndarray, dim: int) -> np.ndarray:
    """Kronecker-expand a 2x2 symbol to the full 2d x 2d phase-space matrix."""
    return np.kron(np.asarray(sym, dtype=float), np.eye(dim))


def diffusion_symbol(p: ModelParams) -> np.ndarray:
    return np.array([[p.dqq, p.dpq], [p.dpq, p.dpp]])


def drift_symbol(p: ModelParams) -> np.ndarray:
    """Matrix B with P(x, xi) = B (x, xi) = (-xi, w0^2 x + 2 gamma xi)."""
    return np.array([[0.0, -1.0], [p.omega0**2, 2 * p.gamma]])


@dataclass(frozen=True)
class DriftDiffusion:
    D: np.ndarray
    B: np.ndarray
    dim: int

    def P(self, x, xi):
        """Drift evaluated at (x, xi); arrays broadcast, last axis of length d optional."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        b = self.B
        return b[0, 0] * x + b[0, 1] * xi, b[1, 0] * x + b[1, 1] * xi


def drift_diffusion(p: ModelParams) -> DriftDiffusion:
    return DriftDiffusion(D=expand(diffusion_symbol(p), p.dim),
                          B=drift_symbol(p), dim=p.dim)


def diffusion_eigenvalues(p: ModelParams) -> tuple[float, float]:
    """Smallest and largest eigenvalue of D (closed form of the 2x2 symbol)."""
    root = math.hypot(p.dpp - p.dqq, 2 * p.dpq)
    return 0.5 * (p.dpp + p.dqq - root), 0.5 * (p.dpp + p.dqq + root)


def smallest_diffusion_eigenvalue(p: ModelParams) -> float:
    delta = diffusion_eigenvalues(p)[0]
    if delta <= 0:
        raise DegenerateDiffusion(f"D is not positive definite (smallest eigenvalue {delta:.3g})")
    return delta


def stationary_covariance(p: ModelParams) -> np.ndarray:
    """Per-dimension covariance of the steady state from the Lyapunov equation.

    Solves M S + S M^T = -2 D for the linear system y' = M y, M = -B.
    """
    if not p.confined:
        raise NoEquilibrium("a steady state needs gamma > 0 and omega0 > 0")
    w2, g = p.omega0**2, p.gamma
    # unknowns (Sxx, Sxv, Svv)
    lhs = np.array([
        [0.0, 2.0, 0.0],
        [-w2, -2 * g, 1.0],
        [0.0, -2 * w2, -4 * g],
    ])
    rhs = -2 * np.array([p.dqq, p.dpq, p.dpp])
    sxx, sxv, svv = np.linalg.solve(lhs, rhs)
    return np.array([[sxx, sxv], [sxv, svv]])


@dataclass(frozen=True)
class EquilibriumPotential:
    """A(y) = y^T H y / 2 + log_norm, with w_inf = exp(-A)."""

    hess_symbol: np.ndarray
    log_norm: float
    dim: int

    @property
    def hessA(self) -> np.ndarray:
        return expand(self.hess_symbol, self.dim)

    @property
    def kappa1(self) -> float:
        return float(np.linalg.eigvalsh(self.hess_symbol)[0])

    def __call__(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        h = self.hess_symbol
        q = h[0, 0] * x * x + 2 * h[0, 1] * x * xi + h[1, 1] * xi * xi
        if self.dim > 1:
            q = q.sum(axis=-1)
        return 0.5 * q + self.log_norm

    def grad(self, x, xi):
        h = self.hess_symbol
        return h[0, 0] * x + h[0, 1] * xi, h[1, 0] * x + h[1, 1] * xi


def equilibrium_potential(p: ModelParams) -> EquilibriumPotential:
    cov = stationary_covariance(p)
    hess = np.linalg.inv(cov)
    hess = 0.5 * (hess + hess.T)
    log_norm = 0.5 * p.dim * math.log((2 * math.pi) ** 2 * np.linalg.det(cov))
    return EquilibriumPotential(hess_symbol=hess, log_norm=log_norm, dim=p.dim)


def _points(grid_or_points):
    if hasattr(grid_or_points, "mesh"):
        return grid_or_points.mesh()
    x, xi = grid_or_points
    return np.asarray(x, dtype=float), np.asarray(xi, dtype=float)


def drift_decomposition_residual(p: ModelParams, grid) -> float:
    """max |div(D F w_inf)| over ``grid`` (a PhaseGrid or a pair of (x, xi) arrays).

    F = D^-1 P - grad A.  When D is singular (classical limit) only D F = P - D grad A
    is defined and is used directly.  The divergence is exact: for a linear field
    K y, div(K y w) = (tr K - y^T H K y) w.
    """
    pot = equilibrium_potential(p)
    H = pot.hess_symbol
    D = diffusion_symbol(p)
    B = drift_symbol(p)
    if abs(np.linalg.det(D)) > 1e-14 * max(1.0, np.abs(D).max()) ** 2:
        F = np.linalg.solve(D, B) - H
        K = D @ F
    else:
        K = B - D @ H
    HK = H @ K
    HK = 0.5 * (HK + HK.T)
    x, xi = _points(grid)
    quad = HK[0, 0] * x * x + 2 * HK[0, 1] * x * xi + HK[1, 1] * xi * xi
    if p.dim > 1:
        quad = quad.sum(axis=-1)
    w = np.exp(-pot(x, xi))
    res = (p.dim * np.trace(K) - quad) * w
    return float(np.max(np.abs(res)))
