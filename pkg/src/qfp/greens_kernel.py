"""Covariance functions lambda, nu, mu and the Gaussian kernels F and G.

Conventions
-----------
With X_{-t}(x, xi) = alpha x + beta xi,

    lambda = int_0^t Dqq a^2 + Dpp b^2 + 2 Dpq a b,
    nu     = int_0^t Dqq a'^2 + Dpp b'^2 + 2 Dpq a' b',
    mu     = 2 int_0^t Dqq a a' + Dpp b b' + Dpq (a b)',

and F(t, .) is the centred Gaussian on R^{2d} whose per-pair covariance is
[[2 lambda, -mu], [-mu, 2 nu]], i.e.

    F(t, x, xi) = exp(-(nu|x|^2 + lambda|xi|^2 + mu x.xi) / disc) / ((2 pi)^d disc^{d/2}),
    F^(t, k, eta) = exp(-(lambda|k|^2 + nu|eta|^2 - mu k.eta)),   disc = 4 lambda nu - mu^2,

with the transform  F^(k, eta) = int F exp(-i(x.k + xi.eta)).  The real-space and
Fourier-space expressions are a consistent pair under these signs.

Closed forms are evaluated through the forward covariance

    Sigma(t) = int_0^t Phi_r 2D Phi_r^T dr,   G(t, y, y0) = N(y - Phi_t y0; Sigma(t)),

which is related to the kernel covariance by Sigma = Phi_t Sigma~ Phi_t^T and is the
well-conditioned object for large t.  The two are the same function evaluated with
(gamma, Dpq) -> (-gamma, -Dpq) and a sign flip of the off-diagonal entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .characteristics import (SERIES_SWITCH, apply_flow, cs_functions, flow_coefficients, flow_inverse,
                              flow_matrix)
from .errors import RangeOverflow, SingularTime
from .model import ModelParams

T_MIN = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _jexp(c: float, t: float) -> float:
    """int_0^t exp(c r) dr."""
    if c == 0.0:
        return t
    return math.expm1(c * t) / c


def _gl_integrals(a: float, s: float, t: float):
    # composite Gauss-Legendre; panels keep the exponential rate per panel O(1)
    rate = abs(a) + 2 * math.sqrt(abs(s))
    n_panels = max(1, math.ceil(rate * t / 2.0))
    edges = np.linspace(0.0, t, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    C, S = cs_functions(s, r)
    e = np.exp(a * r) * wts
    return float(e @ (C * C)), float(e @ (C * S)), float(e @ (S * S))


def _exp_cs_integrals(a: float, s: float, t: float):
    """(I_CC, I_CS, I_SS) = int_0^t e^{a r} (C^2, C S, S^2) dr for squared frequency s."""
    if t == 0.0:
        return 0.0, 0.0, 0.0
    if s == 0.0:
        if a == 0.0:
            return t, t**2 / 2, t**3 / 3
        if abs(a) * t >= 2.0:
            ea = math.exp(a * t)
            m0 = math.expm1(a * t) / a
            m1 = (t * ea - m0) / a
            m2 = (t * t * ea - 2 * m1) / a
            return m0, m1, m2
        return _gl_integrals(a, s, t)
    if abs(s) * t * t < SERIES_SWITCH:
        return _gl_integrals(a, s, t)
    j1 = _jexp(a, t)
    w = math.sqrt(abs(s))
    b = 2 * w
    if s > 0:
        ea = math.exp(a * t)
        den = a * a + b * b
        jc = (ea * (a * math.cos(b * t) + b * math.sin(b * t)) - a) / den
        js = (ea * (a * math.sin(b * t) - b * math.cos(b * t)) + b) / den
    else:
        jp, jm = _jexp(a + b, t), _jexp(a - b, t)
        jc, js = 0.5 * (jp + jm), 0.5 * (jp - jm)
    return 0.5 * (j1 + jc), js / (2 * w), (j1 - jc) / (2 * s)


def _forward_sigma(gamma, omega0, dpp, dqq, dpq, t):
    """Entries (Sxx, Sxv, Svv) of int_0^t Phi_r 2D Phi_r^T dr (per coordinate pair)."""
    w2 = omega0**2
    icc, ics, iss = _exp_cs_integrals(-2 * gamma, w2 - gamma**2, t)
    g = gamma
    sxx = 2 * (dqq * (icc + 2 * g * ics + g * g * iss) + 2 * dpq * (ics + g * iss) + dpp * iss)
    sxv = 2 * (-w2 * dqq * (ics + g * iss) - w2 * dpq * iss
               + dpq * (icc - g * g * iss) + dpp * (ics - g * iss))
    svv = 2 * (dqq * w2 * w2 * iss - 2 * dpq * w2 * (ics - g * iss)
               + dpp * (icc - 2 * g * ics + g * g * iss))
    return sxx, sxv, svv


@dataclass(frozen=True)
class CovarianceTriple:
    t: float
    lam: float
    nu: float
    mu: float
    disc: float
    sigma: np.ndarray  # forward covariance Sigma(t), 2x2 per coordinate pair
    gamma: float
    dim: int

    @property
    def kernel_cov(self) -> np.ndarray:
        return np.array([[2 * self.lam, -self.mu], [-self.mu, 2 * self.nu]])

    @property
    def rw(self) -> float:
        """exp(-4 gamma t) disc, equal to det Sigma(t)."""
        return float(np.linalg.det(self.sigma))


def covariance(p: ModelParams, t: float, method: str = "closed") -> CovarianceTriple:
    """lambda, nu, mu, disc at time ``t``.

    ``method="closed"`` uses the regime-matched antiderivatives; ``"quadrature"``
    integrates the defining integrands with adaptive Gauss-Kronrod (cross-check path).
    """
    t = float(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    g = p.gamma
    if method == "closed":
        try:
            sxx, sxv, svv = _forward_sigma(g, p.omega0, p.dpp, p.dqq, p.dpq, t)
            txx, txv, tvv = _forward_sigma(-g, p.omega0, p.dpp, p.dqq, -p.dpq, t)
            disc = math.exp(4 * g * t) * (sxx * svv - sxv * sxv) if t > 0 else 0.0
        except OverflowError as exc:
            raise RangeOverflow(f"kernel covariance overflows at t={t:g}") from exc
        if not all(map(math.isfinite, (txx, txv, tvv, disc))):
            raise RangeOverflow(f"kernel covariance overflows at t={t:g}")
        lam, nu, mu = 0.5 * txx, 0.5 * tvv, txv
        sigma = np.array([[sxx, sxv], [sxv, svv]])
    elif method == "quadrature":
        lam, nu, mu = _quadrature_triple(p, t)
        kcov = np.array([[2 * lam, -mu], [-mu, 2 * nu]])
        phi = flow_matrix(p, t)
        sigma = phi @ kcov @ phi.T
        disc = 4 * lam * nu - mu * mu
    else:
        raise ValueError(f"unknown method {method!r}")
    return CovarianceTriple(t=t, lam=lam, nu=nu, mu=mu, disc=disc, sigma=sigma, gamma=g, dim=p.dim)


def _quadrature_triple(p: ModelParams, t: float):
    if t == 0.0:
        return 0.0, 0.0, 0.0

    def coeffs(r):
        c = flow_coefficients(p, r)
        return float(c.alpha), float(c.beta), float(c.alpha_dot), float(c.beta_dot)

    def f_lam(r):
        a, b, _, _ = coeffs(r)
        return p.dqq * a * a + p.dpp * b * b + 2 * p.dpq * a * b

    def f_nu(r):
        _, _, ad, bd = coeffs(r)
        return p.dqq * ad * ad + p.dpp * bd * bd + 2 * p.dpq * ad * bd

    def f_mu(r):
        a, b, ad, bd = coeffs(r)
        return 2 * (p.dqq * a * ad + p.dpp * b * bd + p.dpq * (ad * b + a * bd))

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=500)
    return tuple(integrate.quad(f, 0.0, t, **opts)[0] for f in (f_lam, f_nu, f_mu))


def _quad_form(sym, x, xi, dim):
    q = sym[0, 0] * x * x + 2 * sym[0, 1] * x * xi + sym[1, 1] * xi * xi
    if dim > 1:
        q = q.sum(axis=-1)
    return q


def _check_time(t):
    if not t > T_MIN:
        raise SingularTime(f"kernel evaluation needs t > {T_MIN:g}; use the initial data at t = 0")


def kernel_f(p: ModelParams, t: float, x, xi, cov: CovarianceTriple | None = None):
    """F(t, z) = exp(-2 d gamma t) N(Phi_t z; Sigma(t)).

    The pull-back covariance [[2 lam, -mu], [-mu, 2 nu]] becomes badly conditioned for
    large (gamma + |Omega|) t, and a Gaussian built from its rounded entries loses mass
    at the level cond * eps; the forward covariance stays well conditioned.
    """
    _check_time(t)
    cov = cov or covariance(p, t)
    d = p.dim
    u, v = apply_flow(flow_matrix(p, t), x, xi)
    expo = 0.5 * _quad_form(np.linalg.inv(cov.sigma), u, v, d)
    return np.exp(-expo) / ((2 * math.pi) ** d * cov.disc ** (d / 2))


def kernel_f_hat(p: ModelParams, t: float, k, eta, cov: CovarianceTriple | None = None):
    cov = cov or covariance(p, t)
    sym = np.array([[cov.lam, -cov.mu / 2], [-cov.mu / 2, cov.nu]])
    return np.exp(-_quad_form(sym, np.asarray(k, float), np.asarray(eta, float), p.dim))


def kernel_g(p: ModelParams, t: float, x, xi, x0, xi0, cov: CovarianceTriple | None = None):
    """G(t, y, y0) = exp(2 d gamma t) F(t, Phi_{-t}(y) - y0)."""
    _check_time(t)
    cov = cov or covariance(p, t)
    xb, vb = flow_inverse(p, t, x, xi)
    return math.exp(2 * p.dim * p.gamma * t) * kernel_f(p, t, xb - np.asarray(x0, float),
                                                        vb - np.asarray(xi0, float), cov)


def transition_density(p: ModelParams, t: float, x, xi, x0, xi0, cov: CovarianceTriple | None = None):
    """G in the forward form N(y - Phi_t y0; Sigma(t)); stable for large t."""
    _check_time(t)
    cov = cov or covariance(p, t)
    phi = flow_matrix(p, t)
    x0 = np.asarray(x0, float)
    xi0 = np.asarray(xi0, float)
    dx = np.asarray(x, float) - (phi[0, 0] * x0 + phi[0, 1] * xi0)
    dv = np.asarray(xi, float) - (phi[1, 0] * x0 + phi[1, 1] * xi0)
    det = float(np.linalg.det(cov.sigma))
    prec = np.linalg.inv(cov.sigma)
    d = p.dim
    return np.exp(-0.5 * _quad_form(prec, dx, dv, d)) / ((2 * math.pi) ** d * det ** (d / 2))


def chapman_kolmogorov_residual(p: ModelParams, t: float, s: float, grid, n_pairs: int = 6,
                                seed: int = 0) -> float:
    """max |int G(t, y, z) G(s, z, y0) dz - G(t + s, y, y0)| over sampled (y, y0).

    The z-integral is the trapezoidal sum over ``grid`` (d = 1 grids only).
    """
    if s == 0.0:
        _check_time(t)
        return 0.0
    _check_time(t)
    _check_time(s)
    if p.dim != 1:
        raise ValueError("chapman_kolmogorov_residual supports d = 1 grids")
    rng = np.random.default_rng(seed)
    zx, zv = grid.mesh()
    cov_t, cov_s, cov_ts = covariance(p, t), covariance(p, s), covariance(p, t + s)
    scale = 0.25 * min(grid.lx, grid.lv)
    worst = 0.0
    for _ in range(n_pairs):
        y = rng.uniform(-scale, scale, 2)
        y0 = rng.uniform(-scale, scale, 2)
        left = kernel_g(p, t, y[0], y[1], zx, zv, cov_t)
        right = kernel_g(p, s, zx, zv, y0[0], y0[1], cov_s)
        val = float(np.sum(left * right)) * grid.cell_volume
        ref = float(kernel_g(p, t + s, y[0], y[1], y0[0], y0[1], cov_ts))
        worst = max(worst, abs(val - ref))
    return worst


def kernel_pde_residual(p: ModelParams, t: float, y, y0, h: float) -> float:
    """|G_t - div(D grad G + P G)| at one point (d = 1), all derivatives by central
    differences of step ``h`` in x, xi and t.  The truncation error is O(h^2)."""
    _check_time(t - h)
    if p.dim != 1:
        raise ValueError("kernel_pde_residual supports d = 1")
    x, v = float(y[0]), float(y[1])

    def g(dt=0.0, dx=0.0, dv=0.0):
        return float(transition_density(p, t + dt, x + dx, v + dv, y0[0], y0[1]))

    g0 = g()
    gt = (g(dt=h) - g(dt=-h)) / (2 * h)
    gx = (g(dx=h) - g(dx=-h)) / (2 * h)
    gv = (g(dv=h) - g(dv=-h)) / (2 * h)
    gxx = (g(dx=h) - 2 * g0 + g(dx=-h)) / h**2
    gvv = (g(dv=h) - 2 * g0 + g(dv=-h)) / h**2
    gxv = (g(dx=h, dv=h) - g(dx=h, dv=-h) - g(dx=-h, dv=h) + g(dx=-h, dv=-h)) / (4 * h * h)
    diff = p.dqq * gxx + 2 * p.dpq * gxv + p.dpp * gvv
    drift = -v * gx + (p.omega0**2 * x + 2 * p.gamma * v) * gv + 2 * p.gamma * g0
    return abs(gt - diff - drift)
