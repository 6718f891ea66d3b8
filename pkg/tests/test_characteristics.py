import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from qfp.characteristics import (flow_coefficients, flow_forward, flow_inverse, flow_matrix,
                                 flow_regime, jacobian_determinant)
from qfp.model import ModelParams

from conftest import REGIMES


def ode_flow(p, t, y0):
    sol = solve_ivp(lambda _, y: [y[1], -p.omega0**2 * y[0] - 2 * p.gamma * y[1]], (0, t), y0,
                    method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:, -1]


def test_identity_at_zero():
    assert np.array_equal(flow_matrix(ModelParams(1, 2, 1, 1, 0), 0.0), np.eye(2))


def test_quarter_period_rotation():
    p = ModelParams(0, 1, 1, 1, 0)
    x, v = flow_forward(p, math.pi / 2, 1.0, 0.0)
    assert (x, v) == pytest.approx((0.0, -1.0), abs=1e-15)
    x, v = flow_inverse(p, math.pi / 2, 0.0, -1.0)
    assert (x, v) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_critical_damping_sample():
    x, v = flow_forward(ModelParams(1, 1, 1, 1, 0), 1.0, 1.0, 0.0)
    assert (x, v) == pytest.approx((2 / math.e, -1 / math.e), rel=1e-15)


@pytest.mark.parametrize("name", list(REGIMES))
def test_matches_ode(name):
    p = REGIMES[name]
    for t in (0.1, 1.0, 4.0, 10.0):
        for y0 in ((1.0, 0.0), (0.0, 1.0), (0.3, -0.7)):
            ref = ode_flow(p, t, y0)
            got = np.array(flow_forward(p, t, *y0))
            assert np.abs(got - ref).max() <= 1e-9 * max(np.abs(ref).max(), 1e-300)


@pytest.mark.parametrize("name", list(REGIMES))
def test_inverse_roundtrip(name, rng):
    p = REGIMES[name]
    for t in (0.1, 1.0, 10.0):
        fwd, bwd = flow_matrix(p, t), flow_matrix(p, -t)
        # the overdamped map is ill-conditioned at large t, so scale by both norms
        scale = np.abs(fwd).max() * np.abs(bwd).max()
        assert np.abs(fwd @ bwd - np.eye(2)).max() <= 1e-13 * scale
    y = rng.normal(size=2)
    back = np.array(flow_inverse(p, 1.0, *flow_forward(p, 1.0, *y)))
    assert back == pytest.approx(y, rel=1e-12, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0, 3), w=st.floats(0, 3), t=st.floats(0, 5), s=st.floats(0, 5))
def test_semigroup(g, w, t, s):
    p = ModelParams(g, w, 1, max(1.0, g * g / 4), 0)
    lhs = flow_matrix(p, t) @ flow_matrix(p, s)
    rhs = flow_matrix(p, t + s)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(rhs).max(), 1.0)


@pytest.mark.parametrize("eps", [1e-6, -1e-6, 1e-9, 1e-3])
def test_continuous_across_critical(eps):
    crit = flow_matrix(ModelParams(1, 1, 1, 1, 0), 2.0)
    near = flow_matrix(ModelParams(1 + eps, 1, 1, 1, 0), 2.0)
    assert np.abs(near - crit).max() <= max(1e-4, 10 * abs(eps)) * 1e-0


def test_regime_tags():
    assert flow_regime(ModelParams(0.5, 1, 1, 1, 0)).tag == "underdamped"
    assert flow_regime(ModelParams(1, 1, 1, 1, 0)).tag == "critical"
    assert flow_regime(ModelParams(2, 1, 1, 1, 0)).tag == "overdamped"


def test_free_streaming_coefficients():
    c = flow_coefficients(ModelParams(0, 0, 1, 1, 0), np.array([0.0, 0.5, 2.0]))
    assert np.allclose(c.alpha, 1) and np.allclose(c.alpha_t, 1)
    assert np.allclose(c.beta, [0, -0.5, -2]) and np.allclose(c.beta_t, [0, 0.5, 2])


def test_oscillator_coefficients():
    t = np.linspace(0, 6, 13)
    c = flow_coefficients(ModelParams(0, 1, 1, 1, 0), t)
    assert np.allclose(c.alpha, np.cos(t), atol=1e-15)
    assert np.allclose(c.beta, -np.sin(t), atol=1e-15)


def test_coefficient_derivatives():
    p = ModelParams(0.4, 1.3, 1, 1, 0)
    h = 1e-5
    c, cp, cm = (flow_coefficients(p, 1.1 + s) for s in (0.0, h, -h))
    assert c.alpha_dot == pytest.approx((cp.alpha - cm.alpha) / (2 * h), rel=1e-8)
    assert c.beta_dot == pytest.approx((cp.beta - cm.beta) / (2 * h), rel=1e-8)


@pytest.mark.parametrize("g,d,t,expected", [(0, 1, 3.0, 1.0), (1, 1, 1.0, math.exp(-2)),
                                            (1, 2, 0.5, math.exp(-2))])
def test_jacobian_values(g, d, t, expected):
    p = ModelParams(g, 1, 1, 1, 0, dim=d)
    assert jacobian_determinant(p, t) == pytest.approx(expected, rel=1e-15)
    assert np.linalg.det(flow_matrix(p, t)) ** d == pytest.approx(expected, rel=1e-12)
