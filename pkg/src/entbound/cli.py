"""Command-line front end: parameter scans, ramps and bounds from measured data.

    entbound scan              ground-state sweep (exact, overlap, witness, sdp)
    entbound witness-scan      witness bounds under perturbed couplings
    entbound ramp              Lindblad ramp with per-sample diagnostics
    entbound bound-from-data   certificate from a measured-expectations file
    entbound validate-appendix positivity checks for algebraic couplings

Configuration is JSON; command-line flags override the file, which overrides
the built-in defaults. Outputs are CSV (17 significant digits) and JSON.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .dynamics import (DEFAULT_RATE, FIG3_T0, DiagnosticOptions, DynamicsError, NoiseRates, RampSchedule,
                       integrate_ramp)
from .io import load_config, load_snapshot, merge, save_snapshot, set_path, write_csv, write_json
from .model import (ModelError, SpinModel, cross_block, ground_state, model_from_config,
                    validate_appendix_positivity)
from .observables import (ObservableError, ObservableSet, load_measurements,
                          measure_expectations)
from .sdp import SdpOptions, sdp_lower_bound
from .states import pure_log_negativity
from .witness import bell_overlap, optimize_w1, witness_inputs

log = logging.getLogger("entbound")

DEFAULTS = {
    "seed": 20150101,
    "threads": 1,
    "model": {
        "n_sites": 8,
        "coupling": {"kind": "algebraic", "p": 1.0, "amplitude": -1.0},
        "field_b": 1.0,
        "normalize": True,
    },
    "witness": {"interval": [-1000.0, 1000.0], "budget": 60},
    "scan": {
        "axes": {"field_b": [0.2, 0.6, 1.0, 1.4, 2.0]},
        "outputs": ["exact", "overlap"],
        "sdp": {},
    },
    "witness_scan": {
        "model": {"n_sites": 16, "coupling": {"kind": "ion_trap", "detuning_offset": 2 * math.pi * 117.6e3}},
        "b_grid": [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
        "pct": 2.0,
        "trials": 1,
    },
    "ramp": {
        "model": {"n_sites": 8, "coupling": {"kind": "algebraic", "p": 0.3, "amplitude": -1.0}},
        "b_final": 1.1,
        "rate": DEFAULT_RATE,
        "t0": FIG3_T0,
        "steps": 4000,
        "samples": 41,
        "noise_grid": [[0.0, 0.0], [0.005, 0.005], [0.02, 0.02]],
        "jump": "minus",
        "bond_dims": [1, 2, 3, 4],
        "witness": True,
        "sdp": True,
        "sdp_observables": ["I", "H", "PARITY_X"],
        "snapshot": True,
    },
    "bound": {"method": "both", "weight_bound": 1e3, "branch": None},
    "appendix": {"n_half_max": 20, "p_grid": [0.25 * k for k in range(13)], "tol": 1e-10},
}


class CliError(RuntimeError):
    pass


def _model_cfg(cfg, section):
    """Top-level model overridden by the section's model; a section coupling replaces the whole block."""
    sub = cfg.get(section, {}).get("model", {})
    base = dict(cfg["model"])
    if "coupling" in sub:
        base.pop("coupling", None)
    return merge(base, sub)


def _pool_map(fn, items, threads):
    """Map in a thread pool; results come back in input order."""
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _witness_kw(cfg):
    wc = cfg["witness"]
    interval = wc.get("interval")
    return {"interval": None if interval is None else tuple(map(float, interval)), "budget": int(wc.get("budget", 40))}


def _branch_for(model):
    try:
        return cross_block(model.couplings).branch or "ferro"
    except ValueError:
        return "ferro"


# -- scan -----------------------------------------------------------------------


def cmd_scan(cfg, out_dir):
    sc = cfg["scan"]
    axes = list(sc.get("axes", {}).items())
    outputs = set(sc.get("outputs", ["exact", "overlap"]))
    base = {"model": _model_cfg(cfg, "scan")}
    names = [a for a, _ in axes]
    grid = list(itertools.product(*[list(v) for _, v in axes])) if axes else []
    if axes and any(len(v) == 0 for _, v in axes):
        grid = []

    def point(values):
        c = base
        for name, val in zip(names, values):
            c = set_path(c, "model." + name, val)
        model = model_from_config(c["model"])
        gs = ground_state(model)
        branch = _branch_for(model)
        row = dict(zip(names, values))
        row.update(n_sites=model.n_sites, energy=gs.energy, gap=gs.gap, degenerate=gs.degenerate, branch=branch)
        exact = pure_log_negativity(gs.state)
        if "exact" in outputs:
            row["E_ln"] = exact
        if "overlap" in outputs:
            ov = bell_overlap(gs.state, branch=branch).bound_bits
            row["bound_overlap"] = ov
            row["corollary_equal"] = None if gs.degenerate else abs(ov - exact) < 1e-8
        if "witness" in outputs:
            _, rep = optimize_w1(model, witness_inputs(gs.state, model), True, branch=branch, **_witness_kw(cfg))
            row["bound_witness"] = rep.bound_bits
        if "sdp" in outputs:
            obs = ObservableSet.from_names(["I", "H", "PARITY_X"], model.n_sites, model)
            opts = SdpOptions(**{**sc.get("sdp", {}), "branch": branch})
            row["bound_sdp"] = sdp_lower_bound(obs, measure_expectations(gs.state, obs), opts).bound_bits
        return row

    rows = _pool_map(point, grid, cfg["threads"])
    columns = names + ["n_sites", "energy", "gap", "degenerate", "branch"]
    columns += [c for key, c in (("exact", "E_ln"), ("overlap", "bound_overlap"), ("overlap", "corollary_equal"),
                                 ("witness", "bound_witness"), ("sdp", "bound_sdp")) if key in outputs]
    path = os.path.join(out_dir, "scan.csv")
    write_csv(path, columns, rows)
    return path


# -- witness scan -----------------------------------------------------------------


def cmd_witness_scan(cfg, out_dir):
    ws = cfg["witness_scan"]
    pct = float(ws.get("pct", 0.0))
    trials = int(ws.get("trials", 1))
    if pct < 0:
        raise CliError("perturbation percentage must be >= 0")
    if trials < 1:
        raise CliError("trials must be >= 1")
    mcfg = _model_cfg(cfg, "witness_scan")
    nominal = model_from_config(mcfg)
    seed = int(cfg["seed"])
    branch = _branch_for(nominal)
    tasks = [(bi, float(b), k) for bi, b in enumerate(ws.get("b_grid", [])) for k in range(trials)]

    def point(task):
        bi, b, k = task
        rng = np.random.default_rng([seed, bi, k])
        J = np.asarray(nominal.couplings)
        u = rng.uniform(-pct / 100, pct / 100, size=J.shape)
        u = np.triu(u, 1)
        u = u + u.T
        true_model = SpinModel(J * (1 + u), b)
        guess = nominal.with_field(b)
        gs = ground_state(true_model)
        meas = witness_inputs(gs.state, guess)
        _, with_p = optimize_w1(guess, meas, True, branch=branch, **_witness_kw(cfg))
        _, without_p = optimize_w1(guess, meas, False, branch=branch, **_witness_kw(cfg))
        return {"field_b": b, "trial": k, "seed": f"{seed}-{bi}-{k}", "pct": pct,
                "bound_parity": with_p.bound_bits, "bound_no_parity": without_p.bound_bits,
                "E_ln": pure_log_negativity(gs.state)}

    rows = _pool_map(point, tasks, cfg["threads"])
    path = os.path.join(out_dir, "witness_scan.csv")
    write_csv(path, ["field_b", "trial", "seed", "pct", "bound_parity", "bound_no_parity", "E_ln"], rows)
    return path


# -- ramp -------------------------------------------------------------------------

RAMP_COLUMNS = ["t", "B", "trace_drift", "E_ln", "S_block", "bound_overlap", "bound_witness", "bound_sdp"]


def _ramp_tag(gse, gdph):
    return f"ramp_gse{gse:g}_gdph{gdph:g}"


def _ramp_rows(points, dims):
    rows = []
    for p in points:
        d = p.diagnostics
        row = {"t": p.time, "B": p.field, "trace_drift": p.trace_drift, "E_ln": d.get("log_negativity"),
               "S_block": d.get("block_entropy"), "bound_overlap": d.get("overlap_bound"),
               "bound_witness": d.get("witness_bound"), "bound_sdp": d.get("sdp_bound")}
        for D in dims:
            row[f"eps_lower_{D}"] = d.get(f"eps_lower_{D}")
            row[f"eps_upper_{D}"] = d.get(f"eps_upper_{D}")
        rows.append(row)
    return rows


def cmd_ramp(cfg, out_dir, resume=None, max_samples=None):
    rc = cfg["ramp"]
    model = model_from_config(_model_cfg(cfg, "ramp"))
    n_samples = int(rc.get("samples", 41))
    schedule = RampSchedule.uniform(n_samples, float(rc["b_final"]), float(rc["rate"]), float(rc["t0"]))
    steps = int(rc.get("steps", 4000))
    dims = [int(D) for D in rc.get("bond_dims", [1, 2, 3, 4])]
    wkw = _witness_kw(cfg)
    diag = DiagnosticOptions(bond_dims=tuple(dims), witness=bool(rc.get("witness", True)),
                             witness_interval=wkw["interval"], witness_budget=wkw["budget"],
                             sdp=bool(rc.get("sdp", True)), sdp_observables=tuple(rc.get("sdp_observables")))
    columns = RAMP_COLUMNS + [f"eps_lower_{D}" for D in dims] + [f"eps_upper_{D}" for D in dims]
    grid = [tuple(map(float, g)) for g in rc.get("noise_grid", [[0.0, 0.0]])]
    start = None
    if resume is not None:
        step, rho, meta = load_snapshot(resume)
        grid = [(float(meta["gamma_se"]), float(meta["gamma_dph"]))]
        start = (step, rho)
    inner_threads = cfg["threads"] if len(grid) == 1 else 1

    def run(g):
        gse, gdph = g
        tag = _ramp_tag(gse, gdph)
        snap = os.path.join(out_dir, tag + "_snapshot.txt") if rc.get("snapshot", True) else None

        def on_sample(k, r):
            if snap is not None:
                save_snapshot(snap, k, r, {"gamma_se": gse, "gamma_dph": gdph})

        pts = integrate_ramp(model, schedule, NoiseRates(gse, gdph, rc.get("jump", "minus")), schedule.t0 / steps,
                             diagnostics=diag, start=start, threads=inner_threads,
                             on_sample=None if resume is not None else on_sample, max_samples=max_samples)
        path = os.path.join(out_dir, tag + (".resumed.csv" if resume is not None else ".csv"))
        write_csv(path, columns, _ramp_rows(pts, dims))
        return path

    return _pool_map(run, grid, cfg["threads"] if len(grid) > 1 else 1)


# -- bound from data ------------------------------------------------------------


def cmd_bound_from_data(cfg, out_dir, measurements):
    if measurements is None:
        raise CliError("bound-from-data needs --measurements FILE")
    bc = cfg["bound"]
    model = model_from_config(_model_cfg(cfg, "bound"))
    obs_set, records = load_measurements(measurements, model.n_sites, model)
    branch = bc.get("branch") or _branch_for(model)
    method = bc.get("method", "both")
    if method not in ("witness", "sdp", "both"):
        raise CliError(f"unknown method {method!r}")
    values = {r.name: r.value for r in records}
    result = {"n_sites": model.n_sites, "branch": branch, "measurements": os.path.basename(str(measurements))}
    best = 0.0
    if method in ("witness", "both") and "H" in values:
        meas = {"H": values["H"], "PARITY_X": values.get("PARITY_X", 0.0), "provenance": "measured"}
        w1, rep = optimize_w1(model, meas, "PARITY_X" in values, branch=branch, **_witness_kw(cfg))
        p = rep.certificate
        result["witness"] = {"bound_bits": rep.bound_bits, "raw_value": rep.raw_value, "w0": p.w0, "w1": p.w1,
                             "include_parity": p.include_parity, "budget_exhausted": rep.extra["budget_exhausted"]}
        best = max(best, rep.bound_bits)
    elif method == "witness":
        raise CliError("witness method needs a measured 'H' record")
    if method in ("sdp", "both"):
        opts = SdpOptions(weight_bound=float(bc.get("weight_bound", 1e3)), branch=branch)
        rep = sdp_lower_bound(obs_set, records, opts)
        result["sdp"] = {**rep.certificate.to_json(), "converged": rep.extra["converged"],
                         "iterations": rep.extra["iterations"], "raw_value": rep.raw_value}
        best = max(best, rep.bound_bits)
    result["bound_bits"] = best
    path = os.path.join(out_dir, "bound.json")
    write_json(path, result)
    return path


# -- appendix ---------------------------------------------------------------------


def cmd_validate_appendix(cfg, out_dir):
    ac = cfg["appendix"]
    tasks = [(nh, float(p)) for nh in range(1, int(ac["n_half_max"]) + 1) for p in ac["p_grid"]]
    tol = float(ac.get("tol", 1e-10))

    def point(task):
        r = validate_appendix_positivity(task[0], task[1], tol)
        return {"n_half": r.n_half, "n_sites": 2 * r.n_half, "p": r.p, "d_min_eigenvalue": r.d_min_eigenvalue,
                "d_pivots_positive": r.d_pivots_positive, "cross_max_eigenvalue": r.cross_max_eigenvalue,
                "cross_norm": r.cross_norm, "cross_negative_semidefinite": r.cross_negative_semidefinite,
                "tau": r.tau, "ok": r.ok}

    rows = _pool_map(point, tasks, cfg["threads"])
    path = os.path.join(out_dir, "appendix.csv")
    write_csv(path, list(rows[0]) if rows else ["n_half", "n_sites", "p"], rows)
    return path


# -- entry point ------------------------------------------------------------------

COMMANDS = ("scan", "witness-scan", "ramp", "bound-from-data", "validate-appendix")


def build_parser():
    ap = argparse.ArgumentParser(prog="entbound", description="Certified entanglement bounds for Ising models.")
    ap.add_argument("--version", action="version", version=f"entbound {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("scan", parents=[common], help="ground-state parameter sweep")
    sub.add_parser("witness-scan", parents=[common], help="witness bounds with perturbed couplings")
    p = sub.add_parser("ramp", parents=[common], help="noisy quasi-adiabatic ramp")
    p.add_argument("--resume", help="continue from a snapshot file")
    p.add_argument("--max-samples", type=int, help="stop after this many samples (resumable)")
    p = sub.add_parser("bound-from-data", parents=[common], help="bound from measured expectations")
    p.add_argument("--measurements", help="measured-expectations JSON")
    p.add_argument("--method", choices=["witness", "sdp", "both"])
    sub.add_parser("validate-appendix", parents=[common], help="positivity checks of the coupling criterion")
    return ap


def resolve_config(args):
    cfg = merge(DEFAULTS, load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    if getattr(args, "method", None):
        cfg["bound"]["method"] = args.method
    cfg["threads"] = max(1, int(cfg["threads"]))
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        log.info("command %s, seed %d, threads %d", args.command, cfg["seed"], cfg["threads"])
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, f"run_{args.command.replace('-', '_')}.json"),
                   {"command": args.command, "config": cfg})
        if args.command == "scan":
            result = cmd_scan(cfg, args.out)
        elif args.command == "witness-scan":
            result = cmd_witness_scan(cfg, args.out)
        elif args.command == "ramp":
            result = cmd_ramp(cfg, args.out, args.resume, args.max_samples)
        elif args.command == "bound-from-data":
            result = cmd_bound_from_data(cfg, args.out, args.measurements)
        else:
            result = cmd_validate_appendix(cfg, args.out)
    except (CliError, ModelError, ObservableError, DynamicsError, OSError, ValueError, KeyError) as exc:
        print(f"entbound {args.command}: error: {exc}", file=sys.stderr)
        return 2
    for path in result if isinstance(result, list) else [result]:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
