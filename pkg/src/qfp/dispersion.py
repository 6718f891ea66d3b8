"""Dispersion rates R_w, R_n of the unconfined regimes and the L^p decay envelopes.

R_w(t) = det Sigma(t) and R_n(t) = Sigma_xx(t), with Sigma the per-pair forward
covariance of the Green's function.  Each regime has a closed form; the combinations
that cancel at small arguments are summed from exact power series there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .characteristics import flow_coefficients
from .errors import ConfinedCase
from .greens_kernel import covariance
from .model import ModelParams

OSCILLATOR = "OscillatorNoFriction"
FRICTION = "FrictionFree"
FREE = "FreeStreaming"
ORDERS = {OSCILLATOR: (2, 1), FRICTION: (1, 1), FREE: (4, 3)}
_SERIES_CUT = 1.0
_NTERMS = 40


def _series(coeff):
    return [float(coeff(n)) for n in range(_NTERMS)]


# phi^2 + 2 cos phi - 2
_A = _series(lambda n: Fraction(2 * (-1) ** (n // 2), factorial(n)) if n >= 4 and n % 2 == 0 else 0)
# phi - sin phi
_B = _series(lambda n: Fraction(-(-1) ** ((n - 1) // 2), factorial(n)) if n >= 3 and n % 2 else 0)
# (u/2)(1 - e^{-2u}) - (1 - e^{-u})^2
_C = _series(lambda n: 0 if n < 2 else
             Fraction(-(-2) ** (n - 1), 2 * factorial(n - 1))
             - Fraction(-2 * (-1) ** n + (-2) ** n, factorial(n)))
# 4 e^{-u} + 2u - 3 - e^{-2u}
_E = _series(lambda n: 0 if n < 2 else Fraction(4 * (-1) ** n - (-2) ** n, factorial(n)))
# e^{-u} + u - 1
_F = _series(lambda n: 0 if n < 2 else Fraction((-1) ** n, factorial(n)))


def _poly(coeffs, u):
    return sum(c * u**n for n, c in enumerate(coeffs) if c)


def _small(coeffs, exact, u):
    return _poly(coeffs, u) if abs(u) < _SERIES_CUT else exact(u)


@dataclass(frozen=True)
class DispersionCase:
    tag: str
    gamma: float
    omega0: float

    def phi(self, t: float) -> float:
        return 2 * t * self.omega0

    def chi(self, t: float) -> float:
        return math.exp(-2 * t * self.gamma)


def dispersion_case(p: ModelParams) -> DispersionCase:
    if p.confined:
        raise ConfinedCase("dispersion rates apply to unconfined parameters only")
    if p.gamma == 0 and p.omega0 > 0:
        tag = OSCILLATOR
    elif p.gamma > 0:
        tag = FRICTION
    else:
        tag = FREE
    return DispersionCase(tag, p.gamma, p.omega0)


def rate_rw(p: ModelParams, t: float) -> float:
    c = dispersion_case(p)
    if t < 0:
        raise ValueError("t must be >= 0")
    dpp, dqq, dpq = p.dpp, p.dqq, p.dpq
    if c.tag == OSCILLATOR:
        w = p.omega0
        f = c.phi(t)
        a = _small(_A, lambda z: z * z + 2 * math.cos(z) - 2, f)
        cm1 = -2 * math.sin(f / 2) ** 2
        return (0.25 * (dqq**2 + dpp**2 / w**4) * a + 2 / w**2 * dpq**2 * cm1
                + dpp * dqq / (2 * w**2) * (f * f - 2 * cm1))
    if c.tag == FRICTION:
        g = p.gamma
        u = 2 * g * t
        one_chi = -math.expm1(-u)
        one_chi2 = -math.expm1(-2 * u)
        mixed = _small(_C, lambda z: 0.5 * z * (-math.expm1(-2 * z)) - math.expm1(-z) ** 2, u)
        return ((dpp**2 + 4 * g * dpp * dpq) * mixed / (4 * g**4)
                - dpq**2 * one_chi**2 / g**2 + t / g * dpp * dqq * one_chi2)
    return -4 * dpq**2 * t**2 + 4 * dpp * dqq * t**2 + dpp**2 * t**4 / 3


def rate_rn(p: ModelParams, t: float) -> float:
    c = dispersion_case(p)
    if t < 0:
        raise ValueError("t must be >= 0")
    dpp, dqq, dpq = p.dpp, p.dqq, p.dpq
    if c.tag == OSCILLATOR:
        w = p.omega0
        f = c.phi(t)
        b = _small(_B, lambda z: z - math.sin(z), f)
        return (2 * w * dpq * 2 * math.sin(f / 2) ** 2 + dpp * b + w * w * dqq * (f + math.sin(f))) / (2 * w**3)
    if c.tag == FRICTION:
        g = p.gamma
        u = 2 * g * t
        e = _small(_E, lambda z: 4 * math.exp(-z) + 2 * z - 3 - math.exp(-2 * z), u)
        f = _small(_F, lambda z: math.expm1(-z) + z, u)
        return (dpp * e + 16 * g**3 * t * dqq + 8 * g * dpq * f) / (8 * g**3)
    return 2 * dqq * t + 2 * dpq * t**2 + 2 * dpp * t**3 / 3


def rate_rw_kernel(p: ModelParams, t: float) -> float:
    """exp(-4 gamma t)(4 lambda nu - mu^2) from the kernel covariance."""
    return covariance(p, t).rw if t > 0 else 0.0


def rate_rn_definitional(p: ModelParams, t: float, cross_sign: int = -1) -> float:
    """2(lambda a~^2 + s mu a~ b~ + nu b~^2) with s = ``cross_sign``.

    s = -1 is the x-marginal variance of the Green's function.  It is evaluated
    from lambda, nu, mu, so it loses accuracy once those grow like exp(4 gamma t).
    """
    if t == 0:
        return 0.0
    cov = covariance(p, t)
    fc = flow_coefficients(p, t)
    a, b = float(fc.alpha_t), float(fc.beta_t)
    return 2 * (cov.lam * a * a + cross_sign * cov.mu * a * b + cov.nu * b * b)


def lp_decay_envelope(p: ModelParams, t: float, p_norm: float, norm_w0_l1: float,
                      density: bool = False) -> float:
    """C_p R^{-d/(2q)} ||w0||_1 with C_p = C_inf^{1/q}; C_inf = (2 pi)^{-d} for w,
    (2 pi)^{-d/2} for n, the sup of the Gaussian kernel (marginal) at unit rate."""
    dispersion_case(p)
    if p_norm < 1:
        raise ValueError("p must be >= 1")
    if p_norm == 1:
        return float(norm_w0_l1)
    inv_q = 1.0 if math.isinf(p_norm) else 1.0 - 1.0 / p_norm
    d = p.dim
    if density:
        c_inf, rate = (2 * math.pi) ** (-d / 2), rate_rn(p, t)
    else:
        c_inf, rate = (2 * math.pi) ** (-d), rate_rw(p, t)
    if rate <= 0:
        return math.inf
    return c_inf**inv_q * rate ** (-d * inv_q / 2) * norm_w0_l1


def asymptotic_orders(p: ModelParams) -> tuple[int, int]:
    """Leading power of t in (R_w, R_n) for large t (Dpp > 0)."""
    return ORDERS[dispersion_case(p).tag]


def fitted_orders(p: ModelParams, t_min: float = 1e2, t_max: float = 1e4, n: int = 41
                  ) -> tuple[float, float]:
    """Least-squares log-log slopes of R_w and R_n over [t_min, t_max]."""
    ts = np.geomspace(t_min, t_max, n)
    lt = np.log(ts)
    rw = np.log([rate_rw(p, t) for t in ts])
    rn = np.log([rate_rn(p, t) for t in ts])
    return float(np.polyfit(lt, rw, 1)[0]), float(np.polyfit(lt, rn, 1)[0])


def verify_orders(p: ModelParams, tol: float = 0.05) -> bool:
    ow, on = asymptotic_orders(p)
    fw, fn = fitted_orders(p)
    return abs(fw - ow) <= tol and abs(fn - on) <= tol
