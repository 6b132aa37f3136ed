"""Command-line front end: build densities, sample, estimate, compare.

Subcommands: density, sample, estimate, ensemble, compare, zeros, selftest.
Every output carries the configuration hash; identical hash and seed give
identical files.  Report paths render matplotlib figures next to the
delimited data files.  Exit codes: 0 ok, 1 runtime failure, 2 usage/config.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .classical import classical_ensemble
from .config import ExperimentConfig
from .detector import DetectionModel, detection_window
from .errors import ConfigError, GqsimError
from .gridio import (
    load_events_csv,
    save_density_binary,
    save_density_csv,
    save_events_csv,
    save_report_json,
)
from .inference import (
    EnsembleResult,
    ModelCache,
    _dispersion,
    _gaussian_fit_histogram,
    ensemble_run,
    estimate_g,
)
from .basis import momentum_density
from .plots import (
    plot_ensemble_histogram,
    plot_likelihood_scan,
    plot_momentum_density,
    plot_plate_columns,
)
from .sampling import sample_events
from .special import airy_zeros

SCHEMA_VERSION = 1


def _coerce(field_type, raw):
    if field_type is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean from {raw!r}")
    try:
        return field_type(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse {raw!r} as {field_type.__name__}") from exc


def load_config(args):
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        cfg = ExperimentConfig.from_yaml(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    typemap = {"float": float, "int": int, "str": str, "bool": bool}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        if key not in types:
            raise ConfigError(f"unknown configuration key {key!r}")
        t = types[key]
        t = typemap.get(t, t) if isinstance(t, str) else t
        overrides[key] = _coerce(t, raw)
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def _meta(cfg, extra=None):
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
    }
    if extra:
        meta.update(extra)
    return meta


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# -- subcommands -----------------------------------------------------------


def cmd_density(args):
    cfg = load_config(args)
    out = _outdir(args)
    model = DetectionModel(cfg)
    ctx = model.ctx

    # momentum density at the mirror end on a (t, p_z) grid
    t_grid = np.linspace(0.0, cfg.d / cfg.v0 if cfg.v0 > 0 else 0.2, 400)[1:]
    md = momentum_density(model.basis, ctx, t_grid, q_window=cfg.q_window)
    save_density_csv(
        f"{out}/momentum_density.csv", md.t_grid, md.p_grid, md.values,
        labels=("t_s", "pz_kg_m_s", "density"), force=args.force,
    )
    save_density_binary(
        f"{out}/momentum_density.bin", md.t_grid, md.p_grid, md.values, force=args.force
    )
    plot_momentum_density(md, f"{out}/momentum_density.png")

    # plate density in the sheared chart (X, q0): the only raster that
    # resolves every fringe without millions of T rows
    X, q0, vals = model.pdf_columns()
    save_density_csv(
        f"{out}/detection_density.csv", X, q0, vals,
        labels=("X_m", "q0", "density"), force=args.force,
    )
    save_density_binary(f"{out}/detection_density.bin", X, q0, vals, force=args.force)
    plot_plate_columns(X, q0, vals, f"{out}/detection_density.png")

    report = _meta(cfg, {
        "survival": model.basis.survival,
        "window": list(model.window),
        "tau_bar": model.tau,
        "t_g": model.ctx.t_g,
        "chart_note": "detection grid columns X, rows q0 = (T - t(X) - tau_bar)/t_g",
        "files": ["momentum_density.csv", "momentum_density.bin",
                  "detection_density.csv", "detection_density.bin"],
    })
    if args.grid_refine:
        x_fine = model.x_nodes(2 * cfg.n_x)
        rows_fine = model.column_rows(x_fine, q0)
        from .detector import horizontal_weight

        p_x = cfg.m * (x_fine - cfg.d) / model.tau
        w = horizontal_weight(p_x, model.wp, model.ctx)
        jac = model.g * cfg.m ** 2 / (model.tau * model.ctx.p_g)
        fine = jac * w[:, None] * rows_fine / model.norm
        coarse_on_fine = np.empty_like(fine)
        for j in range(fine.shape[1]):
            coarse_on_fine[:, j] = np.interp(x_fine, X, vals[:, j])
        l1 = float(np.trapezoid(
            np.trapezoid(np.abs(fine - coarse_on_fine), q0 * model.ctx.t_g, axis=1),
            x_fine,
        ))
        report["grid_refine_l1"] = l1
        print(f"grid refinement L1 difference: {l1:.3e}")
    save_report_json(f"{out}/density_meta.json", report, force=args.force)
    print(f"densities written to {out} (config {cfg.config_hash()})")
    return 0


def cmd_sample(args):
    cfg = load_config(args)
    out = _outdir(args)
    model = DetectionModel(cfg)
    ev = sample_events(model, args.n or cfg.N, args.seed if args.seed is not None else cfg.seed)
    save_events_csv(f"{out}/events.csv", ev, config_hash=cfg.config_hash(), force=args.force)
    print(f"{ev.n} events written to {out}/events.csv (config {cfg.config_hash()})")
    return 0


def cmd_estimate(args):
    cfg = load_config(args)
    out = _outdir(args)
    cache = ModelCache(cfg)
    if args.events:
        ev = load_events_csv(args.events)
    else:
        ev = sample_events(
            cache.model(cfg.g0), args.n or cfg.N,
            args.seed if args.seed is not None else cfg.seed,
        )
        save_events_csv(f"{out}/events.csv", ev, config_hash=cfg.config_hash(), force=args.force)
    rep = estimate_g(ev, cfg, cache=cache, with_fisher=args.fisher)
    report = _meta(cfg, {
        "g_hat": rep.g_hat,
        "sigma_hat": rep.sigma_hat,
        "n_events": rep.n_events,
        "n_floored": rep.n_floored,
        "fisher_info": rep.fisher_info,
        "cr_bound": rep.cr_bound,
        "scan_g": rep.scan.g_values,
        "scan_loglik": rep.scan.loglik,
    })
    save_report_json(f"{out}/estimate.json", report, force=args.force)
    plot_likelihood_scan(rep.scan, f"{out}/likelihood_scan.png", g0=cfg.g0)
    print(f"g_hat = {rep.g_hat:.8f} m/s^2, sigma_hat/g = {rep.sigma_hat / cfg.g0:.3e} "
          f"({rep.n_events} events, config {cfg.config_hash()})")
    return 0


def _ensemble_with_resume(cfg, M, seed, n_events, cache_path):
    """Ensemble run with per-draw checkpointing keyed by the config hash."""
    from .sampling import sample_events as draw

    cache = ModelCache(cfg)
    sampler = cache.model(cfg.g0)
    seeds = np.random.SeedSequence(seed).generate_state(M)
    done = {}
    if cache_path and os.path.exists(cache_path):
        try:
            with open(cache_path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    if rec["seed"] == int(seeds[rec["draw"]]):
                        done[rec["draw"]] = rec
        except (json.JSONDecodeError, KeyError, IndexError, ValueError):
            print("warning: corrupted ensemble cache, rebuilding", file=sys.stderr)
            done = {}
    fh = open(cache_path, "w") if cache_path else None
    try:
        if fh:
            for rec in done.values():
                fh.write(json.dumps(rec) + "\n")
            fh.flush()
        g_hats, sigma_hats, failures = [], [], []
        for i in range(M):
            if i in done:
                rec = done[i]
            else:
                rec = {"draw": i, "seed": int(seeds[i])}
                try:
                    ev = draw(sampler, n_events, int(seeds[i]))
                    est = estimate_g(ev, cfg, cache=cache)
                    rec["g_hat"] = est.g_hat
                    rec["sigma_hat"] = est.sigma_hat
                except GqsimError as exc:
                    rec["error"] = str(exc)
                if fh:
                    fh.write(json.dumps(rec) + "\n")
                    fh.flush()
            if "error" in rec:
                failures.append(rec)
            else:
                g_hats.append(rec["g_hat"])
                sigma_hats.append(rec["sigma_hat"])
            if (i + 1) % 25 == 0 or i + 1 == M:
                print(f"  draw {i + 1}/{M}", file=sys.stderr)
    finally:
        if fh:
            fh.close()
    g_hats = np.array(g_hats)
    sigma_hats = np.array(sigma_hats)
    rel = (g_hats - cfg.g0) / cfg.g0
    counts, edges = np.histogram(rel, bins="fd")
    sigma_rel = _gaussian_fit_histogram(rel, edges, counts)
    return EnsembleResult(
        g_hats=g_hats, sigma_hats=sigma_hats, g0=cfg.g0,
        sigma_g=float(sigma_rel * cfg.g0),
        sigma_g_raw=float(np.std(g_hats, ddof=1)),
        mean_sigma_hat=float(np.mean(sigma_hats)),
        sigma_hat_dispersion=float(_dispersion(sigma_hats / np.median(sigma_hats))),
        hist_edges=edges, hist_counts=counts,
        n_events=n_events, n_draws=M, failures=failures,
    )


def cmd_ensemble(args):
    cfg = load_config(args)
    out = _outdir(args)
    M = args.draws or cfg.M
    seed = args.seed if args.seed is not None else cfg.seed
    n_events = args.n or cfg.N
    cache_dir = args.cache_dir or os.path.join(out, ".cache")
    cache_path = None
    if not args.no_cache:
        os.makedirs(cache_dir, exist_ok=True)
        cache_path = os.path.join(cache_dir, f"ensemble-{cfg.config_hash()}-{seed}-{n_events}.jsonl")
    res = _ensemble_with_resume(cfg, M, seed, n_events, cache_path)
    report = _meta(cfg, {
        "sigma_g": res.sigma_g,
        "sigma_g_rel": res.sigma_g / cfg.g0,
        "sigma_g_raw": res.sigma_g_raw,
        "mean_sigma_hat": res.mean_sigma_hat,
        "sigma_hat_rel_dispersion": res.sigma_hat_dispersion,
        "n_draws": res.n_draws,
        "n_events": res.n_events,
        "n_failures": len(res.failures),
        "failures": res.failures,
        "g_hats": res.g_hats,
        "sigma_hats": res.sigma_hats,
    })
    save_report_json(f"{out}/ensemble.json", report, force=args.force)
    plot_ensemble_histogram(res, f"{out}/ensemble_hist.png")
    np.savetxt(
        f"{out}/ensemble_draws.csv",
        np.column_stack([res.g_hats, res.sigma_hats]),
        delimiter=",", header="g_hat,sigma_hat", comments="", fmt="%.12e",
    )
    print(f"Sigma_g/g = {res.sigma_g / cfg.g0:.3e} over {res.n_draws} draws "
          f"of {res.n_events} events (config {cfg.config_hash()})")
    return 0


def cmd_compare(args):
    cfg = load_config(args)
    out = _outdir(args)
    M = args.draws or min(cfg.M, 200)
    seed = args.seed if args.seed is not None else cfg.seed
    n_events = args.n or cfg.N
    print("running quantum ensemble...", file=sys.stderr)
    q = ensemble_run(cfg, M=M, seed=seed, n_events=n_events)
    rows = [("quantum", cfg.zeta, q.sigma_g / cfg.g0)]
    for zeta in (cfg.classical_zeta, 0.07e-6):
        print(f"running classical ensemble (zeta = {zeta:.2e} m)...", file=sys.stderr)
        c = classical_ensemble(cfg, M=M, seed=seed, n_events=n_events, zeta=zeta)
        rows.append((f"classical", zeta, c.sigma_g / cfg.g0))
    ratio = rows[1][2] / rows[0][2]
    with open(f"{out}/compare.csv", "w") as fh:
        fh.write("method,zeta_m,sigma_g_rel\n")
        for name, zeta, s in rows:
            fh.write(f"{name},{zeta:.6e},{s:.6e}\n")
    report = _meta(cfg, {
        "rows": [{"method": n, "zeta": z, "sigma_g_rel": s} for n, z, s in rows],
        "classical_to_quantum_ratio": ratio,
        "n_draws": M,
        "n_events": n_events,
    })
    save_report_json(f"{out}/compare.json", report, force=args.force)
    for name, zeta, s in rows:
        print(f"  {name:9s} zeta={zeta * 1e6:5.2f} um  Sigma_g/g = {s:.3e}")
    print(f"classical/quantum dispersion ratio: {ratio:.0f}x "
          f"({'>= 2' if ratio >= 100 else '< 2'} orders of magnitude)")
    return 0


def cmd_zeros(args):
    table = airy_zeros(args.n)
    for i, lam in enumerate(table.zeros, start=1):
        print(f"{i:4d} {lam:.12f}")
    return 0


def cmd_selftest(args):
    cfg = ExperimentConfig()
    checks = []
    ctx = cfg.context()
    checks.append(("t_g ~ 1.09 ms", abs(ctx.t_g - 1.09e-3) < 0.01e-3))
    checks.append(("l_g ~ 5.87 um", abs(ctx.l_g - 5.87e-6) < 0.05e-6))
    lam = airy_zeros(5)
    checks.append(("lambda_1 = 2.33811", abs(lam[0] - 2.33810741) < 1e-6))
    model = DetectionModel(cfg)
    s = model.basis.survival
    checks.append(("survival ~ 0.79", abs(s - 0.79) < 0.05))
    t_grid = np.array([0.05, 0.1, 0.15, 0.2])
    md = momentum_density(model.basis, ctx, t_grid, q_window=cfg.q_window)
    totals = md.total_per_t()
    checks.append(("momentum norm constant", float(np.ptp(totals) / totals.mean()) < 1e-3))
    lo, hi = detection_window(cfg)
    checks.append(("detection window sane", cfg.d < lo < hi))
    ok = True
    for name, passed in checks:
        print(f"  [{'ok' if passed else 'FAIL'}] {name}")
        ok = ok and passed
    print("selftest " + ("passed" if ok else "FAILED"))
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="gqsim",
        description="Quantum-interference measurement of g with bouncing atoms",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="YAML configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration field")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--force", action="store_true",
                        help="overwrite existing output files")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker cap for numerical backends")
        if seed:
            sp.add_argument("--seed", type=int, help="override the configured seed")

    sp = sub.add_parser("density", help="export momentum and plate density grids")
    common(sp, seed=False)
    sp.add_argument("--grid-refine", action="store_true",
                    help="report the L1 difference against a refined grid")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("sample", help="draw synthetic detection events")
    common(sp)
    sp.add_argument("--n", type=int, help="number of events")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("estimate", help="maximum-likelihood estimate of g")
    common(sp)
    sp.add_argument("--n", type=int, help="events to draw when none supplied")
    sp.add_argument("--events", help="existing events CSV to analyze")
    sp.add_argument("--fisher", action="store_true",
                    help="also compute the information bound")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("ensemble", help="repeated-experiment dispersion of the estimate")
    common(sp)
    sp.add_argument("--n", type=int, help="events per draw")
    sp.add_argument("--draws", type=int, help="number of draws M")
    sp.add_argument("--cache-dir", help="checkpoint directory (default OUT/.cache)")
    sp.add_argument("--no-cache", action="store_true", help="disable checkpointing")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("compare", help="quantum vs classical timing dispersion")
    common(sp)
    sp.add_argument("--n", type=int, help="events per draw")
    sp.add_argument("--draws", type=int, help="number of draws M")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("zeros", help="print negated Airy zeros (debug)")
    sp.add_argument("--n", type=int, default=10)
    sp.set_defaults(func=cmd_zeros)

    sp = sub.add_parser("selftest", help="quick internal consistency checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except GqsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
