"""Acceptance gate: one PASS/FAIL line per criterion, at the contract tolerances.

Run ``pytest tests/test_acceptance.py -v``; the lines are collected in LEDGER and
printed in the terminal summary (and immediately with ``-s``).
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qfp.characteristics import flow_forward, flow_matrix
from qfp.checks import principal_nodes
from qfp.dispersion import fitted_orders, rate_rn, rate_rw, rate_rw_kernel
from qfp.entropy import QUADRATIC, csiszar_kullback_bound, decay_rates, fit_log_slope, verify_entropy_decay
from qfp.equilibrium import (classical_steady_state, no_steady_state_certificate, stationarity_residual,
                             steady_state, steady_state_fourier)
from qfp.errors import LindbladViolation
from qfp.fd_oracle import default_config, fd_solve
from qfp.fields import PhaseGrid, WignerField, gaussian, gaussian_mixture, signed_mixture
from qfp.greens_kernel import covariance, kernel_f, kernel_f_hat, kernel_pde_residual, transition_density
from qfp.model import ModelParams, validate_params
from qfp.propagator import auto_grid, lp_norm, moments, propagate

LEDGER = {}

CONFINED = ModelParams(1.0, 1.0, 1.0, 1.0, 0.0)
REGIMES = {
    "underdamped": ModelParams(0.3, 1.5, 1.0, 0.5, 0.1),
    "critical": CONFINED,
    "overdamped": ModelParams(2.5, 1.0, 2.0, 1.6, 0.2),
}
UNCONFINED = {
    "oscillator": ModelParams(0.0, 1.0, 1.0, 1.0, 0.0),
    "friction": ModelParams(1.0, 0.0, 1.0, 0.25, 0.0),
    "free": ModelParams(0.0, 0.0, 1.0, 1.0, 0.0),
}


def report(num, title, ok, detail):
    line = f"C{num:02d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    LEDGER[num] = line
    print(line)
    assert ok, line


def mixture(grid):
    return gaussian_mixture(grid, [0.6, 0.4], [(-1.0, 0.5), (1.2, -0.5)],
                            [((0.5, 0.1), (0.1, 0.4)), ((0.4, 0.0), (0.0, 0.6))])


def test_c01_lindblad_gate(rng=np.random.default_rng(1)):
    rejected = [ModelParams(1, 1, 1, 0, 0), ModelParams(2, 1, 1, 0.99, 0), ModelParams(1, 1, 1, 1, 0.9)]
    boundary = [ModelParams(2, 1, 1, 1, 0), ModelParams(1, 1, 0.5, 0.5, 0), ModelParams(1, 0, 1, 0.5, 0.5)]
    ok = True
    for p in rejected:
        try:
            validate_params(p)
            ok = False
        except LindbladViolation:
            pass
    for p in boundary:
        ok &= p.lindblad_margin == 0
        validate_params(p)
    # dyadic rationals are exact in binary, so the gate must agree with Fraction arithmetic
    mismatches = 0
    for _ in range(500):
        g, dpp, dqq, dpq = (Fraction(int(v), 8) for v in rng.integers(0, 17, 4))
        p = ModelParams(float(g), 1.0, float(dpp) or 1.0, float(dqq), float(dpq))
        exact = Fraction(p.dpp) * dqq - dpq * dpq - g * g / 4 >= 0
        try:
            validate_params(p)
            got = True
        except LindbladViolation:
            got = False
        mismatches += got != exact
    ok &= mismatches == 0
    report(1, "Lindblad gate", ok, f"{len(rejected)} rejected, {len(boundary)} boundary sets accepted, "
           f"{mismatches} disagreements with exact arithmetic on 500 dyadic sets")


def test_c02_flow_correctness():
    start = time.perf_counter()
    ts = np.linspace(0, 10, 101)
    worst = 0.0
    for p in REGIMES.values():
        w2, g = p.omega0**2, p.gamma
        for y0 in ((1.0, 0.0), (0.0, 1.0)):
            sol = solve_ivp(lambda _, y: [y[1], -w2 * y[0] - 2 * g * y[1]], (0, 10), y0, t_eval=ts,
                            method="DOP853", rtol=1e-13, atol=1e-15)
            got = np.array([flow_forward(p, t, *y0) for t in ts]).T
            scale = np.maximum(np.abs(sol.y).max(axis=0), 1e-300)
            worst = max(worst, float((np.abs(got - sol.y).max(axis=0) / scale).max()))
    cont = 0.0
    for t in np.linspace(0.1, 10, 34):
        crit = flow_matrix(CONFINED, t)
        for eps in (1e-6, -1e-6):
            near = flow_matrix(CONFINED.replace(gamma=1 + eps), t)
            cont = max(cont, float(np.abs(near - crit).max() / np.abs(crit).max()))
    elapsed = time.perf_counter() - start
    report(2, "flow vs ODE", worst <= 1e-9 and cont <= 1e-4 and elapsed < 10,
           f"max rel err {worst:.2e} (tol 1e-9), continuity {cont:.2e} (tol 1e-4), {elapsed:.1f} s")


def test_c03_jacobian_identity():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        g, w, t = rng.uniform(0, 1.5), rng.uniform(0, 2), rng.uniform(0.05, 3)
        d = int(rng.integers(1, 4))
        p = ModelParams(g, w, 1.0, max(1.0, g * g / 4), 0.0, dim=d)
        h = 0.5  # the flow is linear, so a wide central difference is exact
        cols = [(np.array(flow_forward(p, t, *(np.array(e) * h))) - np.array(flow_forward(p, t, *(-np.array(e) * h))))
                / (2 * h) for e in ((1.0, 0.0), (0.0, 1.0))]
        det = np.linalg.det(np.array(cols).T) ** d
        worst = max(worst, abs(det / math.exp(-2 * d * g * t) - 1))
    report(3, "Jacobian identity", worst <= 1e-8, f"max rel err {worst:.2e} over 20 random draws (tol 1e-8)")


def _integral_over_y(p, t, y0):
    cov = covariance(p, t)
    centre = flow_matrix(p, t) @ np.asarray(y0)
    x, xi, cell = principal_nodes(cov.sigma, n=128)
    return transition_density(p, t, x + centre[0], xi + centre[1], *y0, cov).sum() * cell


def _integral_over_y0(p, t, y):
    cov = covariance(p, t)
    inv = flow_matrix(p, -t)
    centre = inv @ np.asarray(y)
    x, xi, cell = principal_nodes(inv @ cov.sigma @ inv.T, n=128)
    return transition_density(p, t, *y, x + centre[0], xi + centre[1], cov).sum() * cell


def test_c04_kernel_validity():
    rng = np.random.default_rng(4)
    cases = {"confined": CONFINED, "frictionless": UNCONFINED["oscillator"], "free": UNCONFINED["free"]}
    positive, mass_err, back_err, ratios, disc_ok = True, 0.0, 0.0, [], True
    for p in cases.values():
        for t in (0.1, 1.0, 5.0):
            cov = covariance(p, t)
            chol = np.linalg.cholesky(cov.sigma)
            y0 = rng.normal(size=(2, 1000))
            y = flow_matrix(p, t) @ y0 + 3 * chol @ rng.normal(size=(2, 1000))
            positive &= bool(np.all(transition_density(p, t, y[0], y[1], y0[0], y0[1], cov) > 0))
            mass_err = max(mass_err, abs(_integral_over_y(p, t, (0.4, -0.3)) - 1))
            expected = math.exp(2 * p.dim * p.gamma * t)
            back_err = max(back_err, abs(_integral_over_y0(p, t, (0.4, -0.3)) / expected - 1))
        pts = ((0.3, 0.1), (-0.5, 0.4), (0.9, -0.6))
        res = [sum(kernel_pde_residual(p, 0.7, y, (0.2, -0.1), h) for y in pts) for h in (0.04, 0.02, 0.01)]
        ratios += [res[0] / res[1], res[1] / res[2]]
        disc_ok &= all(covariance(p, t).disc > 0 for t in np.geomspace(1e-4, 1e2, 30))
    order_ok = all(3.6 <= r <= 4.4 for r in ratios)
    ok = positive and mass_err <= 1e-8 and back_err <= 1e-8 and order_ok and disc_ok
    report(4, "kernel validity", ok,
           f"G>0 {positive}; |int G dy - 1| {mass_err:.1e}; |int G dy0 / e^(2d gamma t) - 1| {back_err:.1e} "
           f"(tol 1e-8); PDE residual ratios {min(ratios):.3f}..{max(ratios):.3f}; disc>0 {disc_ok}")


def test_c05_fourier_pair():
    worst = 0.0
    for p in list(REGIMES.values()) + list(UNCONFINED.values()):
        for t in (0.1, 1.0, 3.0):
            cov = covariance(p, t)
            x, xi, cell = principal_nodes(cov.kernel_cov)
            f = kernel_f(p, t, x, xi, cov)
            sx, sv = math.sqrt(2 * cov.lam), math.sqrt(2 * cov.nu)
            for a, b in ((0, 0), (0.5, 0), (0, 0.5), (0.7, -0.4), (-1, 1), (1, 1)):
                k, eta = a / sx, b / sv
                dft = (f * np.exp(-1j * (x * k + xi * eta))).sum() * cell
                worst = max(worst, abs(dft - kernel_f_hat(p, t, k, eta, cov)))
    report(5, "Fourier pair", worst <= 1e-6, f"max |DFT - exp(-(lam k^2 + nu eta^2 - mu k eta))| = {worst:.1e} (tol 1e-6)")


@pytest.mark.slow
def test_c06_propagator_vs_oracle():
    errs = {}
    for n in (64, 128, 256):
        g = PhaseGrid(1, 8, 6, n, n)
        w0 = mixture(g)
        res = fd_solve(default_config(g, CONFINED), CONFINED, w0, 1.0)
        errs[n] = lp_norm(res.field.values - propagate(CONFINED, w0, 1.0).values, 1, g.cell_volume)
    r1, r2 = errs[64] / errs[128], errs[128] / errs[256]
    ok = errs[128] <= 1e-3 and r1 >= 3.5 and r2 >= 3.5
    report(6, "propagator vs oracle", ok,
           f"L1 at 128^2 {errs[128]:.2e} (tol 1e-3); refinement ratios {r1:.2f}, {r2:.2f} (min 3.5)")


def test_c07_mass_conservation():
    g = PhaseGrid(1, 12, 10, 128, 128)
    w0 = mixture(g)
    worst = 0.0
    for t in np.linspace(0, 5, 21):
        worst = max(worst, abs(propagate(CONFINED, w0, t).mass - 1))
    for p in UNCONFINED.values():
        for t in (1.0, 3.0, 5.0):
            worst = max(worst, abs(propagate(p, w0, t, auto_grid(p, w0, t)).mass - 1))
    report(7, "mass conservation", worst <= 1e-6, f"max |M(t) - 1| = {worst:.1e} on t in [0, 5] (tol 1e-6)")


def test_c08_equilibrium_suite():
    p = CONFINED
    ss = steady_state(p)
    g = PhaseGrid(1, 14, 9, 128, 128)
    w = ss.sample(g)
    stat = stationarity_residual(p, PhaseGrid(1, 6, 6, 32, 32))
    mass = abs(w.mass - 1)
    flux = float(np.abs(moments(ss.sample(PhaseGrid(1, 14, 8, 512, 64)), p.dqq, order=4).J).max())
    prop = max(lp_norm(propagate(p, w, t).values - w.values, 1, g.cell_volume) for t in (0.5, 1.0, 2.0))
    cl = ModelParams(0.7, 1.3, 0.9, 0.0, 0.0)
    x, xi = np.random.default_rng(8).normal(scale=2, size=(2, 500))
    ref = classical_steady_state(cl, x, xi)
    classical = float(np.abs(steady_state(cl)(x, xi) - ref).max() / ref.max())
    origin = steady_state_fourier(p, 0.0, 0.0)
    ok = stat <= 1e-10 and mass <= 1e-8 and flux <= 1e-6 and prop <= 1e-6 and classical <= 1e-12 and origin == 1.0
    report(8, "equilibrium suite", ok,
           f"stationarity {stat:.1e}; |mass-1| {mass:.1e}; J_inf {flux:.1e} (4th-order differences); "
           f"propagation drift {prop:.1e}; classical limit {classical:.1e}; w^(0,0) = {float(origin)!r}")


def test_c09_non_existence_certificates():
    expected = {
        "free": ("free_streaming", 1.0),  # Dpp |eta0|^2 s with eta0 = 1, s = 1
        "friction": ("friction_only", 0.5),  # theta(k0, k0 / 2 gamma) s
        "oscillator": ("oscillator_only", math.pi * (1.0 + 1.0)),  # pi (Dpp + Dqq)
    }
    parts, ok = [], True
    for name, (case, value) in expected.items():
        c = no_steady_state_certificate(UNCONFINED[name])
        good = (c.case == case and c.valid and c.exponent > 0 and math.isclose(c.exponent, value, rel_tol=1e-12)
                and math.isclose(c.exponent_quadrature, value, rel_tol=1e-9))
        ok &= good
        parts.append(f"{case} exponent {c.exponent:.6f} (quadrature {c.exponent_quadrature:.6f})")
    report(9, "non-existence certificates", ok, "; ".join(parts))


def test_c10_entropy_decay():
    start = time.perf_counter()
    p = CONFINED
    g = PhaseGrid(1, 14, 10, 128, 128)
    ss = steady_state(p)
    x, xi = g.mesh()
    w0 = WignerField(g, ss(x - 1.0, xi - 0.5))
    rep = verify_entropy_decay(p, w0, QUADRATIC, (0.5, 1.0, 2.0))
    kappa = decay_rates(p).kappa_product
    monotone = rep.monotone()
    margin = float(rep.margins(0.05).min())
    slope = fit_log_slope(rep.times, rep.l1_distance)
    rng = np.random.default_rng(10)
    ck_ok = True
    for _ in range(10):
        covs = []
        for _ in range(2):
            a = rng.uniform(0.3, 1.5, 2)
            r = rng.uniform(-0.6, 0.6) * math.sqrt(a[0] * a[1])
            covs.append(((a[0], r), (r, a[1])))
        f = gaussian(g, rng.uniform(-1, 1, 2), covs[0])
        h = gaussian(g, rng.uniform(-1, 1, 2), covs[1])
        bound, l1 = csiszar_kullback_bound(f, h)
        ck_ok &= l1 <= bound
    elapsed = time.perf_counter() - start
    ok = monotone and margin >= 0 and slope <= -kappa * 0.95 and ck_ok and elapsed < 120
    report(10, "entropy decay", ok,
           f"monotone {monotone}; min bound margin {margin:.3f}; L1 slope {slope:.3f} vs -kappa {-kappa:.3f}; "
           f"Csiszar-Kullback on 10 pairs {ck_ok}; {elapsed:.1f} s")


def test_c11_dispersion():
    start = time.perf_counter()
    ident = 0.0
    for p in UNCONFINED.values():
        for t in np.concatenate([np.geomspace(1e-3, 1, 7), np.linspace(2, 50, 9)]):
            ident = max(ident, abs(rate_rw(p, t) / rate_rw_kernel(p, t) - 1))
    marg = 0.0
    xi = np.linspace(-60, 60, 24001)
    for p in UNCONFINED.values():
        for t in (0.5, 2.0):
            xt, rn = flow_forward(p, t, 0.4, -0.3).x, rate_rn(p, t)
            for x in (xt - 1.0, xt, xt + 0.7):
                quad = transition_density(p, t, x, xi, 0.4, -0.3).sum() * (xi[1] - xi[0])
                marg = max(marg, abs(quad - math.exp(-(x - xt) ** 2 / (2 * rn)) / math.sqrt(2 * math.pi * rn)))
    w0 = gaussian(PhaseGrid(1, 8, 8, 128, 128), (0.3, 0.0), ((0.5, 0.1), (0.1, 0.4)))
    slopes = {}
    for name, p in UNCONFINED.items():
        ts = np.geomspace(4, 64, 7)
        ninf = [np.abs(moments(propagate(p, w0, t, auto_grid(p, w0, t)), p.dqq).n).max() for t in ts]
        slopes[name] = float(np.polyfit(np.log([rate_rn(p, t) for t in ts]), np.log(ninf), 1)[0])
    targets = {"oscillator": (2, 1), "friction": (1, 1), "free": (4, 3)}
    orders = {k: fitted_orders(UNCONFINED[k]) for k in targets}
    orders_ok = all(abs(orders[k][0] - v[0]) <= 0.05 and abs(orders[k][1] - v[1]) <= 0.05 for k, v in targets.items())
    slope_ok = all(abs(s + 0.5) <= 0.1 for s in slopes.values())
    elapsed = time.perf_counter() - start
    ok = ident <= 1e-10 and marg <= 1e-6 and slope_ok and orders_ok and elapsed < 60
    fmt = ", ".join(f"{k} {s:.3f}" for k, s in slopes.items())
    ofmt = ", ".join(f"{k} ({v[0]:.3f}, {v[1]:.3f})" for k, v in orders.items())
    report(11, "dispersion", ok, f"R_w identity {ident:.1e}; xi-marginal {marg:.1e}; ||n||_inf slopes {fmt}; "
           f"orders {ofmt}; {elapsed:.1f} s")


def test_c12_signed_recombination():
    g = PhaseGrid(1, 12, 9, 128, 128)
    w0 = signed_mixture(g, plus=1.5, minus=0.5)
    times = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0)
    rep = verify_entropy_decay(CONFINED, w0, QUADRATIC, times)
    holds = bool(np.all(rep.l1_distance <= rep.l1_split_bound * (1 + 1e-12)))
    slope = fit_log_slope(rep.times, rep.l1_split_bound)
    kappa = rep.kappa
    masses = abs(rep.mass_plus - 1.5) <= 1e-6 and abs(rep.mass_minus - 0.5) <= 1e-6
    ok = holds and masses and slope is not None and slope <= -0.95 * kappa
    report(12, "signed-data recombination", ok,
           f"M+ {rep.mass_plus:.6f}, M- {rep.mass_minus:.6f}; bound holds at {len(rep.times)} times {holds}; "
           f"split-bound decay slope {slope:.3f} vs -kappa {-kappa:.3f}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
