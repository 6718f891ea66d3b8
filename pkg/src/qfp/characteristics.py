"""Closed-form characteristic flow of the transport + friction part.

The flow solves  X' = xi,  xi' = -(w0^2 X + 2 gamma xi)  and is linear, so it is
stored as a 2x2 matrix acting on every (x_i, xi_i) pair.  All three damping
regimes are written with the pair of entire functions

    C(t) = cos(w t),   S(t) = sin(w t) / w,   w^2 = s = w0^2 - gamma^2,

(cosh/sinh for s < 0, C = 1 and S = t for s = 0), giving

    Phi_t = exp(-gamma t) [[C + gamma S, S], [-w0^2 S, C - gamma S]].

Close to critical damping (|s| t^2 small) C and S are summed from their power
series, which avoids the 0/0 in sin(w t)/w and is continuous across regimes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams

SERIES_SWITCH = 1e-2
_SERIES_TERMS = 12


class PhasePoint(NamedTuple):
    x: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class FlowRegime:
    tag: str  # "underdamped" | "overdamped" | "critical"
    omega: float


def flow_regime(p: ModelParams) -> FlowRegime:
    if p.gamma < p.omega0:
        tag = "underdamped"
    elif p.gamma > p.omega0:
        tag = "overdamped"
    else:
        tag = "critical"
    return FlowRegime(tag, math.sqrt(abs(p.omega0**2 - p.gamma**2)))


def cs_functions(s: float, t):
    """C(t) and S(t) for the signed squared frequency ``s``; ``t`` may be an array."""
    t = np.asarray(t, dtype=float)
    z = s * t * t
    small = np.abs(z) < SERIES_SWITCH
    C = np.empty_like(t)
    S = np.empty_like(t)
    if np.any(small):
        zs, ts = z[small], t[small]
        c_sum = np.zeros_like(zs)
        s_sum = np.zeros_like(zs)
        term_c = np.ones_like(zs)
        term_s = np.ones_like(zs)
        for k in range(_SERIES_TERMS):
            c_sum += term_c
            s_sum += term_s
            term_c = term_c * (-zs) / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * (-zs) / ((2 * k + 2) * (2 * k + 3))
        C[small] = c_sum
        S[small] = ts * s_sum
    big = ~small
    if np.any(big):
        tb = t[big]
        if s > 0:
            w = math.sqrt(s)
            C[big] = np.cos(w * tb)
            S[big] = np.sin(w * tb) / w
        else:
            w = math.sqrt(-s)
            C[big] = np.cosh(w * tb)
            S[big] = np.sinh(w * tb) / w
    return C, S


def flow_matrix(p: ModelParams, t) -> np.ndarray:
    """2x2 matrix of Phi_t (shape (..., 2, 2) for array ``t``); negative t gives the inverse."""
    t = np.asarray(t, dtype=float)
    g = p.gamma
    C, S = cs_functions(p.omega0**2 - g**2, t)
    e = np.exp(-g * t)
    out = np.empty(t.shape + (2, 2))
    out[..., 0, 0] = e * (C + g * S)
    out[..., 0, 1] = e * S
    out[..., 1, 0] = -e * p.omega0**2 * S
    out[..., 1, 1] = e * (C - g * S)
    return out


def apply_flow(mat: np.ndarray, x, xi) -> PhasePoint:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return PhasePoint(mat[0, 0] * x + mat[0, 1] * xi, mat[1, 0] * x + mat[1, 1] * xi)


def flow_forward(p: ModelParams, t: float, x0, xi0) -> PhasePoint:
    return apply_flow(flow_matrix(p, t), x0, xi0)


def flow_inverse(p: ModelParams, t: float, x, xi) -> PhasePoint:
    return apply_flow(flow_matrix(p, -t), x, xi)


@dataclass(frozen=True)
class FlowCoefficients:
    """Scalar coefficients of the flow.

    X_{-t}(x, xi) = alpha x + beta xi  and  X_t(x0, xi0) = alpha_t x0 + beta_t xi0.
    ``alpha_dot``/``beta_dot`` are time derivatives of alpha/beta.
    """

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_dot: np.ndarray
    beta_dot: np.ndarray
    alpha_t: np.ndarray
    beta_t: np.ndarray


def flow_coefficients(p: ModelParams, t) -> FlowCoefficients:
    t = np.asarray(t, dtype=float)
    g, w2 = p.gamma, p.omega0**2
    C, S = cs_functions(w2 - g**2, t)
    ep, em = np.exp(g * t), np.exp(-g * t)
    return FlowCoefficients(
        t=t,
        alpha=ep * (C - g * S),
        beta=-ep * S,
        alpha_dot=-w2 * ep * S,
        beta_dot=-ep * (C + g * S),
        alpha_t=em * (C + g * S),
        beta_t=em * S,
    )


def jacobian_determinant(p: ModelParams, t: float) -> float:
    """det dPhi_t/dy over the full 2d-dimensional phase space."""
    return math.exp(-2 * p.dim * p.gamma * t)
