"""``qfp`` command line: one scenario per invocation, CSV + manifest outputs."""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .characteristics import flow_coefficients, flow_matrix, flow_regime, jacobian_determinant
from .config import RunConfig, initial_field, load_config
from .errors import EXIT_CODES, ConfigError, QFPError, SchemaMismatch
from .io import (read_field, read_manifest, time_tag, write_density, write_field,
                 write_gnuplot_stub, write_manifest, write_table)

CONVENTIONS = {
    "fourier_transform": "w^(k, eta) = int w exp(-i(x.k + xi.eta))",
    "kernel_cross_term": "F^ = exp(-(lambda k^2 + nu eta^2 - mu k.eta))",
    "rn_cross_term": "R_n = 2(lambda a~^2 - mu a~ b~ + nu b~^2)",
    "steady_normalization": "(gamma w0 / (pi sqrt(Q)))^d",
    "density_matrix": "rho(x, y) = int w((x+y)/2, xi) exp(-i xi.(x-y)) dxi",
}


def _thread_limit():
    n = os.environ.get("QFP_THREADS")
    if not n:
        return nullcontext()
    try:
        limit = int(n)
    except ValueError as exc:
        raise ConfigError(f"QFP_THREADS={n!r} is not an integer") from exc
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, limit))


def _base_manifest(cfg: RunConfig) -> dict:
    p = cfg.params
    regime = {"flow": flow_regime(cfg.kinetic).tag, "confined": p.confined}
    if not p.confined:
        from .dispersion import dispersion_case

        regime["dispersion_case"] = dispersion_case(cfg.kinetic).tag
    m = {
        "scenario": cfg.scenario,
        "version": __version__,
        "config": cfg.source,
        "params": p.as_dict(),
        "kinetic_params": cfg.kinetic.as_dict(),
        "frame_shift": cfg.frame_shift,
        "regime": regime,
        "conventions": CONVENTIONS,
        "seed": cfg.seed,
        "times": list(cfg.times),
    }
    if cfg.grid is not None:
        m["grid"] = cfg.grid.as_dict()
    if p.confined:
        from .entropy import decay_rates
        from .errors import DegenerateDiffusion

        try:
            r = decay_rates(cfg.kinetic)
            m["rates"] = {"kappa1": r.kappa1, "delta": r.delta, "kappa_product": r.kappa_product,
                          "kappa_optimal": r.kappa_optimal}
        except DegenerateDiffusion:
            m["rates"] = {"note": "diffusion matrix is singular; no entropy decay rate"}
    return m


def _norms(values, cell):
    a = np.abs(values)
    return {"l1": float(a.sum() * cell), "l2": float(math.sqrt((a * a).sum() * cell)),
            "linf": float(a.max())}


def run_flow(cfg, args, manifest):
    p = cfg.kinetic
    rows = []
    for t in cfg.times:
        phi = flow_matrix(p, t)
        c = flow_coefficients(p, t)
        rows.append((t, phi[0, 0], phi[0, 1], phi[1, 0], phi[1, 1], c.alpha, c.beta,
                     c.alpha_t, c.beta_t, jacobian_determinant(p, t)))
    header = ["t", "phi_xx", "phi_xv", "phi_vx", "phi_vv", "alpha", "beta", "alpha_t", "beta_t",
              "jacobian"]
    write_table(cfg.output / "flow.csv", header, rows)
    if args.gnuplot_stub:
        write_gnuplot_stub(cfg.output, "flow", "flow.csv", [2, 3, 4, 5])
    return 0


def run_kernel(cfg, args, manifest):
    from .greens_kernel import covariance

    p = cfg.kinetic
    rows = []
    for t in cfg.times:
        c = covariance(p, t)
        s = c.sigma
        rows.append((t, c.lam, c.nu, c.mu, c.disc, c.rw, s[0, 0], s[0, 1], s[1, 1]))
    write_table(cfg.output / "kernel.csv",
                ["t", "lambda", "nu", "mu", "disc", "r_w", "sigma_xx", "sigma_xv", "sigma_vv"], rows)
    if args.gnuplot_stub:
        write_gnuplot_stub(cfg.output, "kernel", "kernel.csv", [2, 3, 4])
    return 0


def _snapshot(cfg, args, w, manifest, tag):
    from .propagator import moments

    name = f"w_t{tag}.csv"
    write_field(cfg.output / name, w)
    mom = moments(w, cfg.kinetic.dqq, cfg.option("order", 2))
    write_density(cfg.output / f"n_t{tag}.csv", w.grid, mom.n)
    entry = {"time": w.time, "file": name, "mass": w.mass, "grid": w.grid.as_dict()}
    entry.update(_norms(w.values, w.grid.cell_volume))
    manifest.setdefault("snapshots", []).append(entry)
    if args.gnuplot_stub and w.grid.dim == 1:
        write_gnuplot_stub(cfg.output, f"w_t{tag}", name, [3], surface=True)


def run_propagate(cfg, args, manifest):
    from .propagator import auto_grid, propagate

    w0 = initial_field(cfg)
    manifest["initial_mass"] = w0.mass
    _snapshot(cfg, args, w0, manifest, "0")
    for t in cfg.times:
        out = auto_grid(cfg.kinetic, w0, t) if cfg.auto_grid else None
        _snapshot(cfg, args, propagate(cfg.kinetic, w0, t, out), manifest, time_tag(t))
    return 0


def run_oracle(cfg, args, manifest):
    from .fd_oracle import FdConfig, fd_solve, stable_dt

    p = cfg.kinetic
    w0 = initial_field(cfg)
    c_stab = cfg.option("c_stab", 0.4)
    dt = cfg.option("dt", stable_dt(cfg.grid, p, c_stab))
    fd = FdConfig(cfg.grid, dt, cfg.option("band", 8), cfg.option("band_rate", 20.0), c_stab,
                  cfg.option("scheme", "strang-sl-heun"))
    res = fd_solve(fd, p, w0, cfg.times[-1], cfg.times)
    manifest["initial_mass"] = w0.mass
    manifest["oracle"] = {"dt": res.dt, "steps": res.steps, "scheme": fd.scheme, "band": fd.band,
                          "damping_loss": res.audit.damping_loss,
                          "boundary_flux": res.audit.boundary_flux,
                          "fixer_defect": res.audit.fixer_defect,
                          "mass_balance": res.audit.balance(res.field.mass),
                          "min_ratio": res.min_ratio}
    _snapshot(cfg, args, w0, manifest, "0")
    for t in cfg.times:
        _snapshot(cfg, args, res.snapshots[t], manifest, time_tag(t))
    return 0


def run_steady(cfg, args, manifest):
    from .equilibrium import stationarity_residual, steady_state
    from .propagator import moments

    p = cfg.kinetic
    ss = steady_state(p)
    w = ss.sample(cfg.grid)
    write_field(cfg.output / "w_inf.csv", w)
    mom = moments(w, p.dqq, cfg.option("order", 2))
    write_density(cfg.output / "n_inf.csv", cfg.grid, mom.n)
    q = ss.qc
    manifest["steady"] = {
        "Q11": q.Q11, "Q12": q.Q12, "Q22": q.Q22, "Q": q.Q, "normalization": ss.norm,
        "kappa1": ss.kappa1, "mass": w.mass, "flux_residual": float(np.abs(mom.J).max()),
        "stationarity_residual": stationarity_residual(p, cfg.grid),
    }
    if args.gnuplot_stub and cfg.grid.dim == 1:
        write_gnuplot_stub(cfg.output, "w_inf", "w_inf.csv", [3], surface=True)
    return 0


def run_entropy(cfg, args, manifest):
    from .entropy import GENERATORS, verify_entropy_decay

    gen_name = cfg.option("generator", "quadratic")
    if gen_name not in GENERATORS:
        raise ConfigError(f"unknown generator {gen_name!r}; choose from {sorted(GENERATORS)}")
    variant = cfg.option("kappa_variant", "product")
    if variant not in ("product", "optimal", "both"):
        raise ConfigError(f"unknown kappa variant {variant!r}")
    w0 = initial_field(cfg)
    rep = verify_entropy_decay(cfg.kinetic, w0, GENERATORS[gen_name], cfg.times,
                               "product" if variant == "both" else variant)
    header = ["time", "entropy_plus", "entropy_minus", "bound", "l1_distance"]
    rows = list(rep.rows())
    if variant == "both":
        header.append("bound_optimal")
        e0 = rep.entropy_plus[0] + rep.entropy_minus[0]
        rows = [r + (e0 * math.exp(-2 * rep.rates.kappa_optimal * r[0]),) for r in rows]
    write_table(cfg.output / "entropy.csv", header, rows)
    manifest["entropy"] = rep.summary()
    manifest["entropy"]["kappa_variant"] = variant
    if args.gnuplot_stub:
        write_gnuplot_stub(cfg.output, "entropy", "entropy.csv", [2, 3, 4, 5])
    return 0


def run_dispersion(cfg, args, manifest):
    from .dispersion import lp_decay_envelope, rate_rn, rate_rw
    from .propagator import auto_grid, lp_norm, moments, propagate

    p = cfg.kinetic
    p_norms = cfg.option("p_norms", (1.0, 2.0, math.inf))
    measure = cfg.option("measure", True)
    w0 = initial_field(cfg) if measure else None
    l1 = w0.mass if w0 is None else lp_norm(w0, 1)
    rows = []
    for t in cfg.times:
        rw, rn = rate_rw(p, t), rate_rn(p, t)
        w = propagate(p, w0, t, auto_grid(p, w0, t)) if measure else None
        for q in p_norms:
            measured = lp_norm(w, q) if measure else float("nan")
            rows.append((t, rw, rn, q, lp_decay_envelope(p, t, q, l1 if measure else 1.0),
                         measured))
        if measure:
            n = moments(w, p.dqq).n
            manifest.setdefault("density_sup", []).append(
                {"time": t, "n_inf_norm": float(np.abs(n).max()),
                 "envelope": lp_decay_envelope(p, t, math.inf, l1, density=True)})
    write_table(cfg.output / "dispersion.csv",
                ["t", "R_w", "R_n", "p", "envelope_p", "measured_norm_p"], rows)
    if args.gnuplot_stub:
        write_gnuplot_stub(cfg.output, "dispersion", "dispersion.csv", [2, 3])
    return 0


def run_verify(cfg, args, manifest):
    from .checks import run_checks

    results = run_checks(cfg.kinetic)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{status}  {r.name:<{width}}  value={r.value:.3e}  tol={r.tol:.1e}")
    write_table(cfg.output / "verify.csv", ["check", "passed", "value", "tol"],
                [(r.name, r.passed, r.value, r.tol) for r in results])
    manifest["verify"] = {"passed": len(results) - failed, "failed": failed}
    return 0 if not failed else EXIT_CODES["numerical"]


RUNNERS = {
    "flow": run_flow, "kernel": run_kernel, "propagate": run_propagate, "steady": run_steady,
    "entropy": run_entropy, "dispersion": run_dispersion, "oracle": run_oracle,
    "verify": run_verify,
}


def compare_runs(dir_a: Path, dir_b: Path) -> list[tuple]:
    """Per-time L1/L2/Linf differences between the snapshot CSVs of two runs."""
    ma, mb = read_manifest(dir_a), read_manifest(dir_b)
    sa, sb = ma.get("snapshots"), mb.get("snapshots")
    if not sa or not sb:
        raise SchemaMismatch("both runs need field snapshots")
    ta = [round(s["time"], 12) for s in sa]
    tb = [round(s["time"], 12) for s in sb]
    if ta != tb:
        raise SchemaMismatch(f"time lists differ: {ta} vs {tb}")
    rows = []
    for a, b in zip(sa, sb):
        if a["grid"] != b["grid"]:
            raise SchemaMismatch(f"grids differ at t={a['time']}")
        fa, fb = read_field(Path(dir_a) / a["file"]), read_field(Path(dir_b) / b["file"])
        diff = fa.values - fb.values
        cell = fa.grid.cell_volume
        n = _norms(diff, cell)
        rows.append((a["time"], n["l1"], n["l2"], n["linf"]))
    return rows


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfp", description="Quantum Fokker-Planck phase-space runs.")
    ap.add_argument("--version", action="version", version=f"qfp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("config", help="configuration file")
        sp.add_argument("-o", "--output", help="output directory (overrides [run] output)")
        sp.add_argument("--times", help="comma separated output times")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--gnuplot-stub", action="store_true", help="emit companion gnuplot scripts")
        if name == "entropy":
            sp.add_argument("--generator", choices=["log", "quadratic"])
            sp.add_argument("--kappa-variant", choices=["product", "optimal", "both"])
    cp = sub.add_parser("compare", help="diff the snapshots of two runs")
    cp.add_argument("run_a")
    cp.add_argument("run_b")
    cp.add_argument("-o", "--output", help="write compare.csv here")
    return ap


def _compare(args) -> int:
    rows = compare_runs(Path(args.run_a), Path(args.run_b))
    print("time,l1,l2,linf")
    for r in rows:
        print(",".join("%.17g" % v for v in r))
    if args.output:
        Path(args.output).mkdir(parents=True, exist_ok=True)
        write_table(Path(args.output) / "compare.csv", ["time", "l1", "l2", "linf"], rows)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        with _thread_limit():
            if args.command == "compare":
                return _compare(args)
            out = str(Path(args.output).resolve()) if args.output else None
            overrides = {"output": out, "times": args.times,
                         "seed": None if args.seed is None else str(args.seed),
                         "generator": getattr(args, "generator", None),
                         "kappa_variant": getattr(args, "kappa_variant", None)}
            cfg = load_config(args.config, args.command, overrides)
            manifest = _base_manifest(cfg)
            start = time.perf_counter()
            status = RUNNERS[args.command](cfg, args, manifest)
            manifest["runtime_s"] = time.perf_counter() - start
            manifest["exit_status"] = status
            write_manifest(cfg.output, manifest)
            return status
    except QFPError as exc:
        print(f"qfp: {exc.category} error: {exc}", file=sys.stderr)
        print(f"category={exc.category} type={type(exc).__name__}", file=sys.stderr)
        return EXIT_CODES[exc.category]


if __name__ == "__main__":
    sys.exit(main())
