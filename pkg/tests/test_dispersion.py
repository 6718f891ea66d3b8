import math

import numpy as np
import pytest

from qfp.characteristics import flow_forward
from qfp.dispersion import (FREE, FRICTION, OSCILLATOR, asymptotic_orders, dispersion_case, fitted_orders,
                            lp_decay_envelope, rate_rn, rate_rn_definitional, rate_rw, rate_rw_kernel)
from qfp.errors import ConfinedCase
from qfp.fields import PhaseGrid, gaussian
from qfp.greens_kernel import transition_density
from qfp.model import ModelParams
from qfp.propagator import auto_grid, lp_norm, propagate

from conftest import CONFINED, UNCONFINED


def test_case_tags():
    assert dispersion_case(ModelParams(0, 1, 1, 1, 0)).tag == OSCILLATOR
    assert dispersion_case(ModelParams(1, 0, 1, 0.25, 0)).tag == FRICTION
    assert dispersion_case(ModelParams(0, 0, 1, 1, 0)).tag == FREE
    with pytest.raises(ConfinedCase):
        dispersion_case(CONFINED)


def test_free_streaming_closed_forms():
    p = ModelParams(0, 0, 1.3, 0.8, 0.25)
    for t in (0.5, 2.0, 7.0):
        rw = -4 * p.dpq**2 * t**2 + 4 * p.dpp * p.dqq * t**2 + p.dpp**2 * t**4 / 3
        rn = 2 * p.dqq * t + 2 * p.dpq * t**2 + 2 * p.dpp * t**3 / 3
        assert rate_rw(p, t) == pytest.approx(rw, rel=1e-13)
        assert rate_rn(p, t) == pytest.approx(rn, rel=1e-13)
    assert rate_rw(p, 0.0) == 0 and rate_rn(p, 0.0) == 0


def test_oscillator_example():
    assert rate_rw(ModelParams(0, 1, 1, 1, 0), math.pi) == pytest.approx(4 * math.pi**2, rel=1e-13)


def test_friction_example():
    p = ModelParams(1, 0, 1, 0, 0)
    assert rate_rn(p, 1.0) == pytest.approx((1 + 4 * math.exp(-2) - math.exp(-4)) / 8, rel=1e-13)


@pytest.mark.parametrize("name", list(UNCONFINED))
def test_rw_identity(name):
    p = UNCONFINED[name]
    for t in np.concatenate([np.geomspace(1e-4, 1, 9), np.linspace(1.5, 50, 12)]):
        assert rate_rw(p, t) == pytest.approx(rate_rw_kernel(p, t), rel=1e-10)


def test_friction_case_needs_dpp_on_dqq_term():
    # with Dpp != 1 the Dqq (t/gamma)(1 - chi^2) term must carry Dpp
    p = ModelParams(0.8, 0.0, 2.5, 0.3, 0.1)
    for t in (0.3, 2.0, 11.0):
        assert rate_rw(p, t) == pytest.approx(rate_rw_kernel(p, t), rel=1e-10)


@pytest.mark.parametrize("name", list(UNCONFINED))
def test_rn_cross_term_sign(name):
    p = UNCONFINED[name].replace(dpq=0.2)
    for t in (0.4, 3.0):
        assert rate_rn_definitional(p, t, -1) == pytest.approx(rate_rn(p, t), rel=1e-10)
    free = ModelParams(0, 0, 1, 1, 0.3)
    t = 2.0
    plus = 2 * free.dqq * t - 6 * free.dpq * t**2 + 14 / 3 * free.dpp * t**3
    assert rate_rn_definitional(free, t, +1) == pytest.approx(plus, rel=1e-12)
    assert abs(rate_rn_definitional(free, t, +1) - rate_rn(free, t)) > 1


@pytest.mark.parametrize("name", list(UNCONFINED))
def test_position_marginal(name):
    p = UNCONFINED[name]
    x0, xi0 = 0.4, -0.3
    xi = np.linspace(-60, 60, 24001)
    for t in (0.5, 2.0):
        xt = flow_forward(p, t, x0, xi0).x
        rn = rate_rn(p, t)
        for x in (xt - 1.0, xt, xt + 0.7):
            quad = transition_density(p, t, x, xi, x0, xi0).sum() * (xi[1] - xi[0])
            ref = math.exp(-(x - xt) ** 2 / (2 * rn)) / math.sqrt(2 * math.pi * rn)
            assert quad == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("p,orders", [(ModelParams(0, 1, 1, 1, 0), (2, 1)),
                                      (ModelParams(1, 0, 1, 0.25, 0), (1, 1)),
                                      (ModelParams(0, 0, 1, 1, 0), (4, 3))])
def test_orders(p, orders):
    assert asymptotic_orders(p) == orders
    fw, fn = fitted_orders(p)
    assert abs(fw - orders[0]) <= 0.05 and abs(fn - orders[1]) <= 0.05


def test_envelopes():
    p = ModelParams(0, 0, 1, 1, 0)
    assert lp_decay_envelope(p, 1.0, 1, 1.0) == lp_decay_envelope(p, 9.0, 1, 1.0) == 1.0
    t = 3.0
    assert lp_decay_envelope(p, t, math.inf, 1.0) == pytest.approx(rate_rw(p, t) ** -0.5 / (2 * math.pi))
    with pytest.raises(ValueError):
        lp_decay_envelope(p, t, 0.5, 1.0)


@pytest.mark.parametrize("name", list(UNCONFINED))
def test_measured_norms_below_envelope(name):
    p = UNCONFINED[name]
    w0 = gaussian(PhaseGrid(1, 8, 8, 96, 96), (0.3, 0.0), ((0.5, 0.1), (0.1, 0.4)))
    for t in (1.0, 2.0, 4.0):
        w = propagate(p, w0, t, auto_grid(p, w0, t))
        for q in (2.0, math.inf):
            assert lp_norm(w, q) <= lp_decay_envelope(p, t, q, lp_norm(w0, 1)) * (1 + 1e-9)
