"""Relative entropies, decay rates and entropy-decay verification toward w_inf."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .equilibrium import steady_state, SteadyState
from .errors import DomainViolation, InfiniteEntropy, MassMismatch
from .fields import WignerField
from .model import ModelParams, diffusion_symbol, equilibrium_potential, smallest_diffusion_eigenvalue
from .propagator import boundary_fraction, propagate, split_signed

G_FLOOR = 1e-300
EVOLVED_FLOOR_REL = 1e-20  # reference cutoff for propagated data, relative to max g
NEG_TOL = 1e-9  # negative roundoff tolerated (relative to max |f|) for positive-domain generators
TAIL_TOL = 1e-10
MASS_TOL = 1e-6
SLOPE_FLOOR = 1e-12
DEGENERATE_TOL = 1e-20


@dataclass(frozen=True)
class EntropyGenerator:
    """Convex phi with phi(1) = 0 and its first four derivatives (for admissibility checks)."""

    name: str
    phi: Callable
    d2: Callable
    d3: Callable
    d4: Callable
    positive_domain: bool

    def admissible(self, alphas=None) -> bool:
        a = np.geomspace(1e-3, 1e3, 601) if alphas is None else np.asarray(alphas, float)
        d2, d3, d4 = self.d2(a), self.d3(a), self.d4(a)
        ok = abs(float(self.phi(np.array(1.0)))) < 1e-15
        ok &= bool(np.all(d2 >= 0))
        return ok and bool(np.all(d3 * d3 <= 0.5 * d2 * d4 * (1 + 1e-12) + 1e-300))


def _zeros(a):
    return np.zeros_like(np.asarray(a, dtype=float))


LOG = EntropyGenerator(
    name="log",
    phi=lambda a: xlogy(a, a) - a + 1,
    d2=lambda a: 1.0 / a,
    d3=lambda a: -1.0 / a**2,
    d4=lambda a: 2.0 / a**3,
    positive_domain=True,
)


def quadratic(k: float = 1.0) -> EntropyGenerator:
    return EntropyGenerator(
        name="quadratic" if k == 1.0 else f"quadratic[k={k:g}]",
        phi=lambda a: k * (a - 1) ** 2,
        d2=lambda a: 2 * k + _zeros(a),
        d3=_zeros,
        d4=_zeros,
        positive_domain=False,
    )


QUADRATIC = quadratic()
GENERATORS = {"log": LOG, "quadratic": QUADRATIC}


def comparison_constants(gen: EntropyGenerator, alphas=None) -> tuple[float, float]:
    """Sampled K1, K2 with K1 phi_1 <= phi <= K2 phi_2 on ``alphas`` (alpha != 1)."""
    a = np.geomspace(0.01, 100, 801) if alphas is None else np.asarray(alphas, float)
    a = a[np.abs(a - 1) > 1e-6]
    f = gen.phi(a)
    return float(np.min(f / LOG.phi(a))), float(np.max(f / QUADRATIC.phi(a)))


def _reference(g, grid):
    if isinstance(g, SteadyState):
        return g.sample(grid).values
    if isinstance(g, WignerField):
        if g.grid != grid:
            raise MassMismatch("reference lives on a different grid")
        return g.values
    return np.asarray(g, dtype=float)


def relative_entropy(gen: EntropyGenerator, f: WignerField, g, g_floor: float = G_FLOOR) -> float:
    """e_phi(f | g) = int phi(f/g) g by grid quadrature.

    ``g`` is a SteadyState, a WignerField on the same grid, or an array of samples.
    Nodes with g <= ``g_floor`` are dropped; the |f| mass found there must stay below
    TAIL_TOL.  Propagated data carries a roundoff floor near 1e-17, which 1/g amplifies
    in the far tails, so evolved fields should use a floor well above 1e-300.
    """
    cell = f.grid.cell_volume
    fv = f.values
    gv = _reference(g, f.grid)
    mf, mg = fv.sum() * cell, gv.sum() * cell
    if abs(mf - mg) > MASS_TOL * max(1.0, abs(mg)):
        raise MassMismatch(f"masses differ: {mf:.12g} vs {mg:.12g}")
    if gen.positive_domain and fv.min() < 0:
        if fv.min() < -NEG_TOL * np.abs(fv).max():
            raise DomainViolation(f"{gen.name} entropy needs f >= 0 (min {fv.min():.3g})")
        fv = np.maximum(fv, 0.0)
    live = gv > g_floor
    tail = np.abs(fv[~live]).sum() * cell
    if tail > TAIL_TOL:
        raise InfiniteEntropy(f"mass {tail:.3g} where the reference underflows")
    a = np.divide(fv, gv, out=np.ones_like(fv), where=live)
    integrand = np.where(live, gen.phi(a) * gv, 0.0)
    e = float(integrand.sum() * cell)
    # a roundoff-level integrand (f == g) has no meaningful spatial profile
    if e > 1e-12 * max(abs(mg), 1e-300) and boundary_fraction(integrand, f.grid.dim) > 1e-3:
        raise InfiniteEntropy("entropy integrand does not decay inside the grid")
    return e


def weighted_l2(f: WignerField, g, g_floor: float = G_FLOOR) -> float:
    """||f - g||_{2, 1/g} over nodes with g > ``g_floor``."""
    gv = _reference(g, f.grid)
    live = gv > g_floor
    r = np.where(live, (f.values - gv) ** 2 / np.where(live, gv, 1.0), 0.0)
    return math.sqrt(float(r.sum() * f.grid.cell_volume))


def csiszar_kullback_bound(f: WignerField, g, g_floor: float = G_FLOOR) -> tuple[float, float]:
    """(sqrt(2 M e_log(f|g)), ||f - g||_1) for equal-mass nonnegative f, g."""
    gv = _reference(g, f.grid)
    e = relative_entropy(LOG, f, gv, g_floor)
    mass = float(gv.sum() * f.grid.cell_volume)
    l1 = float(np.abs(f.values - gv).sum() * f.grid.cell_volume)
    return math.sqrt(2 * mass * max(e, 0.0)), l1


@dataclass(frozen=True)
class DecayRate:
    kappa1: float
    delta: float
    kappa_optimal: float

    @property
    def kappa_product(self) -> float:
        return self.delta * self.kappa1

    def select(self, variant: str) -> float:
        if variant == "product":
            return self.kappa_product
        if variant == "optimal":
            return self.kappa_optimal
        raise ValueError(f"unknown kappa variant {variant!r}")


def _sqrt_spd(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def decay_rates(p: ModelParams) -> DecayRate:
    hess = equilibrium_potential(p).hess_symbol
    delta = smallest_diffusion_eigenvalue(p)
    r = _sqrt_spd(diffusion_symbol(p))
    k1 = float(np.linalg.eigvalsh(hess)[0])
    kopt = float(np.linalg.eigvalsh(r @ hess @ r)[0])
    return DecayRate(kappa1=k1, delta=delta, kappa_optimal=kopt)


def fit_log_slope(times, values, floor: float = SLOPE_FLOOR) -> float | None:
    """Least-squares slope of log(values) against time, using values > floor * values[0]."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    if v.size == 0 or v[0] <= 0:
        return None
    keep = v > floor * v[0]
    if keep.sum() < 2:
        return None
    return float(np.polyfit(t[keep], np.log(v[keep]), 1)[0])


@dataclass
class DecayReport:
    generator: str
    kappa_variant: str
    rates: DecayRate
    times: np.ndarray
    mass_plus: float
    mass_minus: float
    entropy_plus: np.ndarray
    entropy_minus: np.ndarray
    weighted_l2_plus: np.ndarray
    weighted_l2_minus: np.ndarray
    l1_distance: np.ndarray
    l1_split_bound: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def kappa(self) -> float:
        return self.rates.select(self.kappa_variant)

    @property
    def entropy_bound(self) -> np.ndarray:
        """e(0) exp(-2 kappa t) for the summed entropies of both parts."""
        e0 = self.entropy_plus[0] + self.entropy_minus[0]
        return e0 * np.exp(-2 * self.kappa * self.times)

    @property
    def degenerate(self) -> bool:
        """Initial entropy at roundoff level (w0 already equals M w_inf)."""
        return self.entropy_plus[0] + self.entropy_minus[0] <= DEGENERATE_TOL * (self.mass_plus + self.mass_minus)

    def margins(self, slack: float = 0.05) -> np.ndarray:
        """bound * (1 + slack) - e(t) per part, minimum over parts."""
        decay = np.exp(-2 * self.kappa * self.times)
        mp = self.entropy_plus[0] * decay * (1 + slack) - self.entropy_plus
        if self.mass_minus == 0:
            return mp
        mm = self.entropy_minus[0] * decay * (1 + slack) - self.entropy_minus
        return np.minimum(mp, mm)

    def monotone(self, slack: float = 1e-8) -> bool:
        return bool(np.all(np.diff(self.entropy_plus) <= slack)
                    and np.all(np.diff(self.entropy_minus) <= slack))

    @property
    def entropy_slope(self) -> float | None:
        return fit_log_slope(self.times, self.entropy_plus + self.entropy_minus)

    @property
    def l1_slope(self) -> float | None:
        return fit_log_slope(self.times, self.l1_distance)

    def rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.entropy_plus[i], self.entropy_minus[i], self.entropy_bound[i],
                   self.l1_distance[i])

    def summary(self) -> dict:
        r = self.rates
        return dict(
            generator=self.generator, kappa_variant=self.kappa_variant,
            kappa1=r.kappa1, delta=r.delta, kappa_product=r.kappa_product,
            kappa_optimal=r.kappa_optimal, mass_plus=self.mass_plus, mass_minus=self.mass_minus,
            entropy_slope=self.entropy_slope, l1_slope=self.l1_slope,
            monotone=self.monotone(), min_margin=float(self.margins().min()),
            degenerate=self.degenerate, notes=list(self.notes),
        )


def verify_entropy_decay(p: ModelParams, w0: WignerField, gen: EntropyGenerator, times,
                         kappa_variant: str = "product") -> DecayReport:
    """Split w0 into w0^+ - w0^-, evolve both parts and compare against M^+- w_inf.

    ``times`` are offsets from ``w0.time``; t = 0 is always included.
    """
    ss = steady_state(p)
    rates = decay_rates(p)
    times = np.unique(np.concatenate([[0.0], np.asarray(times, float)]))
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    winf = ss.sample(w0.grid).values
    plus0, minus0 = split_signed(w0)
    mp, mm = plus0.mass, minus0.mass
    ref_p, ref_m = mp * winf, mm * winf
    floor = EVOLVED_FLOOR_REL * winf.max()

    out = {k: np.zeros(times.size) for k in ("ep", "em", "lp", "lm", "l1", "l1s")}
    for i, t in enumerate(times):
        wp = propagate(p, plus0, t) if t > 0 else plus0
        out["ep"][i] = relative_entropy(gen, wp, ref_p, floor * mp)
        out["lp"][i] = weighted_l2(wp, ref_p, floor * mp)
        d_plus = np.abs(wp.values - ref_p).sum() * w0.grid.cell_volume
        if mm > 0:
            wm = propagate(p, minus0, t) if t > 0 else minus0
            out["em"][i] = relative_entropy(gen, wm, ref_m, floor * mm)
            out["lm"][i] = weighted_l2(wm, ref_m, floor * mm)
            d_minus = np.abs(wm.values - ref_m).sum() * w0.grid.cell_volume
            total = wp.values - wm.values
        else:
            d_minus = 0.0
            total = wp.values
        out["l1"][i] = np.abs(total - (mp - mm) * winf).sum() * w0.grid.cell_volume
        out["l1s"][i] = d_plus + d_minus

    report = DecayReport(gen.name, kappa_variant, rates, times, mp, mm, out["ep"], out["em"],
                         out["lp"], out["lm"], out["l1"], out["l1s"])
    if report.degenerate:
        report.notes.append("initial entropy is zero; slope undefined")
    if abs(mp - mm - 1) > 1e-6:
        report.notes.append(f"initial mass {mp - mm:.12g} differs from 1")
    return report
