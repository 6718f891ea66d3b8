"""Quick invariant suite run by ``qfp verify``; each check returns a CheckResult."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .characteristics import flow_forward, jacobian_determinant
from .dispersion import rate_rw, rate_rw_kernel, verify_orders
from .entropy import QUADRATIC, verify_entropy_decay
from .equilibrium import (equilibrium_density_matrix, no_steady_state_certificate,
                          stationarity_residual, steady_state, steady_state_fourier)
from .errors import LindbladViolation
from .fields import PhaseGrid, WignerField, gaussian
from .greens_kernel import covariance, kernel_f, kernel_f_hat
from .model import ModelParams, stationary_covariance, validate_params
from .propagator import lp_norm, moments, propagate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""


def _result(name, value, tol, detail=""):
    return CheckResult(name, bool(value <= tol), float(value), tol, detail)


def check_lindblad(p: ModelParams) -> CheckResult:
    ok = True
    try:
        validate_params(p)
    except LindbladViolation:
        ok = False
    edge = ModelParams(2.0, 1.0, 1.0, 1.0, 0.0)  # dpp dqq - dpq^2 == gamma^2 / 4 exactly
    try:
        validate_params(edge)
    except LindbladViolation:
        ok = False
    try:
        validate_params(ModelParams(2.0, 1.0, 1.0, 0.99, 0.0))
        ok = False
    except LindbladViolation:
        pass
    return CheckResult("lindblad gate", ok, 0.0 if ok else 1.0, 0.0)


def check_flow(p: ModelParams, t_end: float = 10.0) -> CheckResult:
    ts = np.linspace(0.0, t_end, 41)
    w2, g = p.omega0**2, p.gamma
    worst = 0.0
    for y0 in ((1.0, 0.0), (0.0, 1.0)):
        sol = solve_ivp(lambda _, y: [y[1], -w2 * y[0] - 2 * g * y[1]], (0, t_end), y0,
                        t_eval=ts, method="DOP853", rtol=1e-13, atol=1e-15)
        x, v = np.array([flow_forward(p, t, y0[0], y0[1]) for t in ts]).T
        scale = np.maximum(np.abs(sol.y).max(axis=0), 1e-300)
        err = np.maximum(np.abs(x - sol.y[0]), np.abs(v - sol.y[1])) / scale
        worst = max(worst, float(err.max()))
    return _result("flow vs ODE", worst, 1e-9)


def check_jacobian(p: ModelParams, t: float = 1.7, h: float = 0.5) -> CheckResult:
    # the flow is linear, so a wide central difference is exact and avoids roundoff
    cols = []
    for e in ((1.0, 0.0), (0.0, 1.0)):
        fp = np.array(flow_forward(p, t, 0.3 + h * e[0], -0.2 + h * e[1]))
        fm = np.array(flow_forward(p, t, 0.3 - h * e[0], -0.2 - h * e[1]))
        cols.append((fp - fm) / (2 * h))
    det = float(np.linalg.det(np.array(cols).T)) ** p.dim
    exact = jacobian_determinant(p, t)
    return _result("jacobian", abs(det / exact - 1), 1e-8)


def principal_nodes(cov: np.ndarray, n: int = 128, width: float = 10.0):
    """Square grid in the eigenbasis of a 2x2 covariance, mapped back to (x, xi).

    Returns (x, xi, cell); the rotation has unit Jacobian so ``cell`` is the area element.
    """
    ev, vec = np.linalg.eigh(cov)
    s = np.sqrt(ev)
    u = [(np.arange(n) - n // 2) * (2 * width * si / n) for si in s]
    a, b = np.meshgrid(u[0], u[1], indexing="ij")
    x = vec[0, 0] * a + vec[0, 1] * b
    xi = vec[1, 0] * a + vec[1, 1] * b
    return x, xi, (u[0][1] - u[0][0]) * (u[1][1] - u[1][0])


def check_kernel(p: ModelParams, t: float = 1.0) -> list[CheckResult]:
    cov = covariance(p, t)
    q = p.replace(dim=1)
    x, xi, cell = principal_nodes(cov.kernel_cov)
    f = kernel_f(q, t, x, xi, cov)
    mass = f.sum() * cell
    sx, sv = math.sqrt(2 * cov.lam), math.sqrt(2 * cov.nu)
    k = np.array([0.0, 0.5 / sx, 1.0 / sx])
    e = np.array([0.0, 0.7 / sv, -0.4 / sv])
    dft = np.array([(f * np.exp(-1j * (x * a + xi * b))).sum() * cell for a, b in zip(k, e)])
    ferr = float(np.abs(dft - kernel_f_hat(q, t, k, e, cov)).max())
    return [_result("kernel mass", abs(mass - 1), 1e-8),
            _result("kernel Fourier pair", ferr, 1e-6),
            CheckResult("kernel discriminant", cov.disc > 0, cov.disc, 0.0)]


def _confined_grid(p: ModelParams, n: int = 96) -> PhaseGrid:
    c = stationary_covariance(p)
    return PhaseGrid(1, 8 * math.sqrt(c[0, 0]), 8 * math.sqrt(c[1, 1]), n, n)


def check_equilibrium(p: ModelParams) -> list[CheckResult]:
    q = p.replace(dim=1)
    ss = steady_state(q)
    g = _confined_grid(q)
    w = ss.sample(g)
    fine = PhaseGrid(1, g.lx, g.lv, 512, 64)
    J = moments(ss.sample(fine), q.dqq, order=4).J
    prop = max(lp_norm(propagate(q, w, t).values - w.values, 1, g.cell_volume) for t in (0.5, 2.0))
    xs = np.linspace(-2, 2, 9)
    rho = float(np.abs(equilibrium_density_matrix(q, xs, xs) - ss.density(xs)).max())
    return [
        _result("steady mass", abs(w.mass - 1), 1e-8),
        _result("stationarity residual", stationarity_residual(q, g), 1e-10),
        _result("zero flux", float(np.abs(J).max()), 1e-6),
        _result("steady under propagation", prop, 1e-6),
        _result("Fourier normalization", abs(float(steady_state_fourier(q, 0.0, 0.0)) - 1), 0.0),
        _result("density matrix diagonal", rho, 1e-8),
    ]


def check_mass(p: ModelParams) -> CheckResult:
    q = p.replace(dim=1)
    if q.confined:
        g = _confined_grid(q, 128)
    else:
        g = PhaseGrid(1, 40, 12, 256, 128)
    w0 = gaussian(g, (0.5, 0.0), ((0.4, 0.0), (0.0, 0.4)))
    times = (0.5, 1.0, 2.0, 5.0) if q.confined else (0.5, 1.0, 2.0)
    err = max(abs(propagate(q, w0, t).mass - 1) for t in times)
    return _result("mass conservation", err, 1e-6)


def check_entropy(p: ModelParams) -> list[CheckResult]:
    q = p.replace(dim=1)
    ss = steady_state(q)
    g = _confined_grid(q, 96)
    x, xi = g.mesh()
    w0 = WignerField(g, ss(x - 0.5, xi - 0.25))
    rep = verify_entropy_decay(q, w0, QUADRATIC, (0.5, 1.0, 2.0))
    return [CheckResult("entropy monotone", rep.monotone(), 0.0, 0.0),
            _result("entropy bound", float(-rep.margins().min()), 0.0)]


def check_unconfined(p: ModelParams) -> list[CheckResult]:
    q = p.replace(dim=1)
    cert = no_steady_state_certificate(q)
    ts = np.geomspace(0.05, 50, 12)
    ident = max(abs(rate_rw(q, t) / rate_rw_kernel(q, t) - 1) for t in ts)
    return [CheckResult(f"non-existence certificate ({cert.case})", cert.valid, cert.exponent, 0.0),
            _result("R_w identity", ident, 1e-10),
            CheckResult("asymptotic orders", verify_orders(q), 0.0, 0.0)]


def run_checks(p: ModelParams) -> list[CheckResult]:
    out = [check_lindblad(p), check_flow(p), check_jacobian(p)]
    out += check_kernel(p)
    out.append(check_mass(p))
    if p.confined:
        out += check_equilibrium(p)
        out += check_entropy(p)
    else:
        out += check_unconfined(p)
    return out

