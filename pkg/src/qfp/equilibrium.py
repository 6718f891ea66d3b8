"""Steady state of the confined equation and certificates for its absence otherwise.

Fourier convention throughout: f^(k, eta) = int f(x, xi) exp(-i(x.k + xi.eta)) dx dxi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import HasEquilibrium, NoEquilibrium
from .fields import PhaseGrid, WignerField
from .model import ModelParams, drift_symbol, diffusion_symbol


@dataclass(frozen=True)
class QCoefficients:
    Q11: float
    Q12: float
    Q22: float

    @property
    def Q(self) -> float:
        return self.Q11 * self.Q22 - self.Q12**2


def q_coefficients(p: ModelParams) -> QCoefficients:
    w, g = p.omega0, p.gamma
    q11 = p.dpp + w * w * p.dqq
    return QCoefficients(q11, 2 * w * g * p.dqq, q11 + 4 * g * (p.dpq + g * p.dqq))


def _require_confined(p: ModelParams):
    if not p.confined:
        raise NoEquilibrium(
            f"no normalizable steady state for gamma={p.gamma:g}, omega0={p.omega0:g}")


@dataclass(frozen=True)
class SteadyState:
    """w_inf(y) = norm * exp(-y^T P y / 2) with per-pair precision P.

    ``P = (2 gamma / Q) [[Q11 w0^2, Q12 w0], [Q12 w0, Q22]]`` and
    ``norm = (gamma w0 / (pi sqrt(Q)))^d``, the constant giving unit mass.
    """

    params: ModelParams
    qc: QCoefficients

    @property
    def precision(self) -> np.ndarray:
        g, w, q = self.params.gamma, self.params.omega0, self.qc
        c = 2 * g / q.Q
        return c * np.array([[q.Q11 * w * w, q.Q12 * w], [q.Q12 * w, q.Q22]])

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)

    @property
    def norm(self) -> float:
        p = self.params
        return (p.gamma * p.omega0 / (math.pi * math.sqrt(self.qc.Q))) ** p.dim

    @property
    def kappa1(self) -> float:
        return float(np.linalg.eigvalsh(self.precision)[0])

    def exponent(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        P = self.precision
        q = P[0, 0] * x * x + 2 * P[0, 1] * x * xi + P[1, 1] * xi * xi
        if self.params.dim > 1:
            q = q.sum(axis=-1)
        return 0.5 * q

    def __call__(self, x, xi):
        return self.norm * np.exp(-self.exponent(x, xi))

    def log(self, x, xi):
        return math.log(self.norm) - self.exponent(x, xi)

    def sample(self, grid: PhaseGrid, time: float = 0.0) -> WignerField:
        x, xi = grid.mesh()
        return WignerField(grid, self(x, xi), time)

    def density(self, x):
        """n_inf(x) = int w_inf dxi (Gaussian with variance Sigma_xx per coordinate)."""
        x = np.asarray(x, dtype=float)
        sxx = self.covariance[0, 0]
        q = x * x / sxx
        if self.params.dim > 1:
            q = q.sum(axis=-1)
        return np.exp(-0.5 * q) / (2 * math.pi * sxx) ** (self.params.dim / 2)


def steady_state(p: ModelParams) -> SteadyState:
    _require_confined(p)
    return SteadyState(p, q_coefficients(p))


def classical_steady_state(p: ModelParams, x, xi):
    """Maxwellian-times-Gaussian steady state of the classical kinetic equation (Dqq = Dpq = 0)."""
    _require_confined(p)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    e = p.omega0**2 * x * x + xi * xi
    if p.dim > 1:
        e = e.sum(axis=-1)
    return (p.gamma * p.omega0 / (math.pi * p.dpp)) ** p.dim * np.exp(-p.gamma / p.dpp * e)


def fourier_coefficients(p: ModelParams) -> tuple[float, float, float]:
    """(a, b, c) with w_inf^(k, eta) = exp(-(a|k|^2 + b|eta|^2 - c k.eta))."""
    _require_confined(p)
    g, w2 = p.gamma, p.omega0**2
    a = p.dpp / (4 * g * w2) + p.dpq / w2 + p.dqq * (g / w2 + 1 / (4 * g))
    b = (p.dpp + p.dqq * w2) / (4 * g)
    return a, b, p.dqq


def steady_state_fourier(p: ModelParams, k, eta):
    a, b, c = fourier_coefficients(p)
    k = np.asarray(k, dtype=float)
    eta = np.asarray(eta, dtype=float)
    q = a * k * k + b * eta * eta - c * k * eta
    if p.dim > 1:
        q = q.sum(axis=-1)
    return np.exp(-q)


def fourier_stationarity_residual(p: ModelParams, k, eta):
    """w0^2 eta.grad_k w^ + (2 gamma eta - k).grad_eta w^ + theta w^ with analytic gradients."""
    a, b, c = fourier_coefficients(p)
    k = np.asarray(k, dtype=float)
    eta = np.asarray(eta, dtype=float)
    f = steady_state_fourier(p, k, eta)
    gk = -(2 * a * k - c * eta)
    ge = -(2 * b * eta - c * k)
    th = p.dpp * eta * eta + p.dqq * k * k + 2 * p.dpq * k * eta
    r = p.omega0**2 * eta * gk + (2 * p.gamma * eta - k) * ge + th
    if p.dim > 1:
        r = r.sum(axis=-1)
    return r * f


def stationarity_residual(p: ModelParams, grid: PhaseGrid, qc: QCoefficients | None = None,
                          trim: int = 1) -> float:
    """max |div(D grad w + P w)| / max w over interior nodes, exact derivatives.

    ``qc`` overrides the Q-coefficients (used for sensitivity checks).  For
    w = c exp(-y^T H y / 2) and K = B - D H, the operator gives (d tr K - y^T H K y) w.
    """
    _require_confined(p)
    ss = SteadyState(p, qc or q_coefficients(p))
    H = ss.precision
    K = drift_symbol(p) - diffusion_symbol(p) @ H
    HK = H @ K
    HK = 0.5 * (HK + HK.T)
    x, xi = grid.mesh()
    quad = HK[0, 0] * x * x + 2 * HK[0, 1] * x * xi + HK[1, 1] * xi * xi
    if p.dim > 1:
        quad = quad.sum(axis=-1)
    w = ss(x, xi)
    res = (p.dim * np.trace(K) - quad) * w
    if trim:
        res = res[(slice(trim, -trim),) * res.ndim]
    return float(np.max(np.abs(res)) / ss.norm)


def equilibrium_density_matrix(p: ModelParams, x, y):
    """rho_inf(x, y) = int w_inf((x + y)/2, xi) exp(-i xi.(x - y)) dxi in closed form.

    The constant is fixed by unit trace, so rho_inf(x, x) = n_inf(x); it evaluates to
    (w0 sqrt(gamma / (pi Q22)))^d.  For d > 1 squares are Euclidean norms and
    x^2 - y^2 is |x|^2 - |y|^2.
    """
    _require_confined(p)
    q = q_coefficients(p)
    g, w = p.gamma, p.omega0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s, r = x + y, x - y
    sq = lambda a: (a * a).sum(axis=-1) if p.dim > 1 else a * a  # noqa: E731
    expo = -(g * g * w * w * sq(s) + q.Q * sq(r)) / (4 * g * q.Q22)
    phase = w * q.Q12 / q.Q22 * 0.5 * (sq(x) - sq(y))
    const = (w * math.sqrt(g / (math.pi * q.Q22))) ** p.dim
    return const * np.exp(expo + 1j * phase)


def source_eigenvalues(p: ModelParams) -> tuple[complex, complex]:
    """gamma -+ sqrt(gamma^2 - w0^2); both have positive real part when gamma > 0."""
    r = complex(p.gamma**2 - p.omega0**2) ** 0.5
    return p.gamma - r, p.gamma + r


@dataclass(frozen=True)
class EnergyCounterexample:
    y_a: tuple
    y_b: tuple
    energy: float
    w_a: float
    w_b: float

    @property
    def relative_gap(self) -> float:
        return abs(self.w_a - self.w_b) / max(self.w_a, self.w_b)


def energy_counterexample(p: ModelParams, radius: float = 1.0) -> EnergyCounterexample:
    """Two points on one level set of H = |xi|^2/2 + w0^2|x|^2/2 with different w_inf.

    The points differ only in the sign of x.xi, which the Q12 cross term detects.
    """
    ss = steady_state(p)
    c = radius / math.sqrt(2)
    ya = (c / p.omega0, c)
    yb = (c / p.omega0, -c)
    one = np.ones(p.dim) if p.dim > 1 else 1.0
    wa = float(ss(ya[0] * one, ya[1] * one))
    wb = float(ss(yb[0] * one, yb[1] * one))
    return EnergyCounterexample(ya, yb, p.dim * radius**2 / 2, wa, wb)


@dataclass(frozen=True)
class NonExistenceCertificate:
    """Closed characteristic of the stationary Fourier equation along which
    w^(s) = w^(0) exp(-exponent) with exponent > 0, forcing w^ = 0 there."""

    case: str
    k0: np.ndarray
    eta0: np.ndarray
    s: float
    exponent: float
    exponent_quadrature: float
    closure_error: float

    @property
    def factor(self) -> float:
        return math.exp(-self.exponent)

    @property
    def valid(self) -> bool:
        return self.exponent > 0 and self.closure_error < 1e-8


def _theta(p, k, eta):
    return p.dpp * eta @ eta + p.dqq * k @ k + 2 * p.dpq * k @ eta


def no_steady_state_certificate(p: ModelParams, k0=None, eta0=None, s: float | None = None
                                ) -> NonExistenceCertificate:
    """Witness data for the three unconfined regimes.

    free streaming: k0 = 0, any eta0 (fixed point), exponent Dpp |eta0|^2 s;
    friction only: eta0 = k0 / (2 gamma) (fixed point), exponent theta s;
    oscillator only: any start, one period s = 2 pi / w0,
    exponent (pi / w0^3)(Dpp + w0^2 Dqq)(|k0|^2 + w0^2 |eta0|^2).
    """
    if p.confined:
        raise HasEquilibrium("parameters are confined; a steady state exists")
    d = p.dim
    e1 = np.eye(d)[0]
    g, w = p.gamma, p.omega0
    if g == 0 and w == 0:
        case = "free_streaming"
        k0 = np.zeros(d)
        eta0 = e1 if eta0 is None else np.broadcast_to(np.asarray(eta0, float), (d,))
        s = 1.0 if s is None else s
        exponent = p.dpp * float(eta0 @ eta0) * s
    elif w == 0:
        case = "friction_only"
        k0 = e1 if k0 is None else np.broadcast_to(np.asarray(k0, float), (d,))
        eta0 = k0 / (2 * g)
        s = 1.0 if s is None else s
        exponent = float(_theta(p, k0, eta0)) * s
    else:
        case = "oscillator_only"
        k0 = e1 if k0 is None else np.broadcast_to(np.asarray(k0, float), (d,))
        eta0 = np.zeros(d) if eta0 is None else np.broadcast_to(np.asarray(eta0, float), (d,))
        s = 2 * math.pi / w
        exponent = math.pi / w**3 * (p.dpp + w * w * p.dqq) * float(k0 @ k0 + w * w * eta0 @ eta0)

    def rhs(_, z):
        k, eta = z[:d], z[d:2 * d]
        return np.concatenate([w * w * eta, 2 * g * eta - k, [_theta(p, k, eta)]])

    sol = solve_ivp(rhs, (0.0, s), np.concatenate([k0, eta0, [0.0]]), method="DOP853",
                    rtol=1e-12, atol=1e-13)
    end = sol.y[:, -1]
    closure = float(np.max(np.abs(end[:2 * d] - np.concatenate([k0, eta0]))))
    return NonExistenceCertificate(case, np.asarray(k0, float), np.asarray(eta0, float), float(s),
                                   float(exponent), float(end[-1]), closure)
