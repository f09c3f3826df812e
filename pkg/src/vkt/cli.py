"""Command-line entry point.

    vkt run CONFIG [--out DIR]
    vkt init-check CONFIG
    vkt trace RUN_DIR [--t T] [--point X1 X2 ...]
    vkt scan-norms PATH [--ks 2 4 8 ...] [--config CONFIG]
    vkt check-inequalities [--n N] [--count C] [--seed S] [--kmax K]

Every subcommand prints one JSON document on stdout. On failure the document
has ``"status": "error"`` and the exit code is nonzero.
"""
from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import logging
import math
import os
import sys

import numpy as np

from . import analysis, config, fileio, initdata, lagrangian
from .dynamics import run
from .errors import BlowUp, ConfigError, VKTError
from .model import State, pressure

log = logging.getLogger("vkt")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2

SNAP_DIR = "snapshots"
HEAT_DIR = "heatmaps"


def _emit(doc, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(doc, sort_keys=True, allow_nan=True) + "\n")
    stream.flush()


def _failure(exc, **extra):
    doc = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    doc.update(extra)
    return doc


def build_initial_state(spec: config.RunSpec) -> State:
    p = spec.run.params
    return initdata.initial_state(spec.preset, spec.run.n, p, delta=spec.delta, **spec.preset_args)


def snapshot_path(out_dir, k):
    return os.path.join(out_dir, SNAP_DIR, f"snap_{k:08d}.vkt")


def list_snapshots(run_dir):
    return sorted(glob.glob(os.path.join(run_dir, SNAP_DIR, "snap_*.vkt")))


# subcommands ----------------------------------------------------------------

def cmd_run(args) -> int:
    spec = config.load_config(args.config)
    out_dir = args.out or spec.out_dir
    os.makedirs(os.path.join(out_dir, SNAP_DIR), exist_ok=True)
    if spec.heatmaps:
        os.makedirs(os.path.join(out_dir, HEAT_DIR), exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(config.dump_document(spec))
    for note in spec.warnings:
        log.warning("%s", note)
    init = build_initial_state(spec)
    cfg = spec.run
    # the CLI persists frames as snapshots; keeping them in memory is not needed
    cfg = dataclasses.replace(cfg, keep_history=False)

    def on_snapshot(state, k):
        fileio.write_snapshot(state, snapshot_path(out_dir, k))
        if spec.heatmaps:
            fileio.emit_heatmap(state.rho, os.path.join(out_dir, HEAT_DIR, f"rho_{k:08d}.pgm"))

    csv_path = os.path.join(out_dir, "diagnostics.csv")
    with fileio.DiagnosticsWriter(csv_path) as writer:
        try:
            record = run(cfg, init, on_row=writer.write, on_snapshot=on_snapshot)
        except BlowUp as exc:
            last = getattr(exc, "last_state", None)
            saved = None
            if last is not None:
                saved = os.path.join(out_dir, "last_good.vkt")
                fileio.write_snapshot(last, saved)
            doc = _failure(exc, step=exc.step, t=exc.t, last_good=saved,
                           warnings=list(spec.warnings))
            with open(os.path.join(out_dir, "failure.json"), "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True)
            _emit(doc)
            return EXIT_BLOWUP
    last = record.rows[-1]
    _emit({"status": "ok", "out_dir": out_dir, "steps": record.steps, "t": record.final.t,
           "rows": len(record.rows), "energy_balance": last.energy_balance,
           "warnings": list(spec.warnings)})
    return EXIT_OK


def cmd_init_check(args) -> int:
    spec = config.load_config(args.config)
    p = spec.run.params
    pre = initdata.preset(spec.preset, spec.run.n, p, **spec.preset_args)
    doc = {"status": "ok", "preset": spec.preset, "delta": spec.delta,
           "warnings": list(spec.warnings)}
    if pre.u0 is not None:
        # velocity presets carry no g: report the acceleration g would have to absorb
        rho = pre.rho0 + spec.delta
        doc["residual_g0"] = initdata.compat_residual(rho, pre.u0, pressure(rho, p), None, p)
    else:
        rho_d, P_d = initdata.regularize(pre.rho0, spec.delta, p)
        res = initdata.velocity_from_compat(rho_d, P_d, pre.rho0, pre.g, pre.mean_u0, p,
                                            info=True)
        doc["iterations"] = res.iterations
        doc["solver_residual"] = res.residual
        doc["compat_residual"] = initdata.compat_residual(rho_d, res.u, P_d, pre.g, p)
        doc["compat_residual_relative"] = initdata.compat_residual(
            rho_d, res.u, P_d, pre.g, p, relative=True)
    doc["mass"] = analysis.conserved(State(0.0, pre.rho0, np.zeros((2,) + pre.rho0.shape)))[0]
    _emit(doc)
    return EXIT_OK


def load_run(run_dir):
    spec = config.load_config(os.path.join(run_dir, "config.json"))
    frames = [fileio.read_snapshot(p) for p in list_snapshots(run_dir)]
    return spec, frames


def cmd_trace(args) -> int:
    spec, frames = load_run(args.run_dir)
    if not frames:
        _emit({"status": "error", "error": "HistoryGap", "message": "run has no snapshots"})
        return EXIT_ERROR
    params = spec.run.params
    hist = lagrangian.FrameHistory(frames, params, spec.run.policy)
    t = frames[-1].t if args.t is None else args.t
    pts = np.array(args.point if args.point else [[0.5, 0.5]], dtype=float)
    det = lagrangian.log_density_residual(hist, t, pts, params, substeps=args.substeps,
                                          detail=True)
    res = np.atleast_1d(det["residual"])
    th = np.atleast_1d(det["theta"])
    scaled = np.abs(res) / (1.0 + np.abs(th))
    _emit({"status": "ok", "t": t, "frames": len(frames),
           "points": [{"x": list(map(float, x)), "residual": float(r), "theta": float(c),
                       "scaled": float(s)} for x, r, c, s in zip(pts, res, th, scaled)],
           "max_scaled": float(scaled.max())})
    return EXIT_OK


def cmd_scan_norms(args) -> int:
    if os.path.isdir(args.path):
        spec, frames = load_run(args.path)
        params = spec.run.params
    else:
        frames = [fileio.read_snapshot(args.path)]
        params = (config.load_config(args.config) if args.config
                  else config.parse_config("")).run.params
    ks = args.ks or [2, 4, 8, 16, 32, 64]
    scans = []
    for st in frames:
        rows = analysis.density_norm_scan(st.rho, params, ks)
        scans.append({"t": st.t, "norms": {str(k): nk for k, nk, _ in rows},
                      "ratios": {str(k): r for k, _, r in rows}})
    first = scans[0]["ratios"]
    growth = max(s["ratios"][k] / first[k] for s in scans for k in first if first[k] > 0)
    _emit({"status": "ok", "beta": params.beta, "scans": scans, "max_ratio_growth": growth})
    return EXIT_OK


def inequality_suite(n=64, count=100, seed=0, kmax=8, l23_ms=(2, 4, 8, 16)):
    """Evaluate GN, Poincare and L23 ratios on a seeded random ensemble."""
    rng = np.random.default_rng(seed)
    fields = [analysis.random_zero_mean_field(n, kmax, rng) for _ in range(count)]
    gn_cases = [dict(q=4, m=2, r=2), dict(q=8, m=2, r=2), dict(q=6, m=4, r=3),
                dict(q=3, m=1.5, r=2)]
    poincare_cases = [dict(m=1.0), dict(m=1.5)]
    out = {"GN": [], "Poincare": [], "L23": {}}
    for case in gn_cases:
        r = [analysis.inequality_check("GN", h, **case)[2] for h in fields]
        out["GN"].append({"exponents": case, "max_ratio": max(r), "min_ratio": min(r)})
    for case in poincare_cases:
        r = [analysis.inequality_check("Poincare", h, **case)[2] for h in fields]
        out["Poincare"].append({"exponents": case, "max_ratio": max(r), "min_ratio": min(r)})
    for m in l23_ms:
        r = [analysis.inequality_check("L23", h, m=m)[2] for h in fields]
        out["L23"][str(m)] = max(r)
    ratios = ([c["max_ratio"] for c in out["GN"] + out["Poincare"]]
              + [c["min_ratio"] for c in out["GN"] + out["Poincare"]]
              + list(out["L23"].values()))
    out["all_finite"] = bool(all(math.isfinite(v) and v > 0 for v in ratios))
    l23 = list(out["L23"].values())
    out["L23_spread"] = max(l23) / min(l23)
    return out


def cmd_check_inequalities(args) -> int:
    doc = inequality_suite(args.n, args.count, args.seed, args.kmax)
    doc["status"] = "ok" if doc["all_finite"] else "error"
    _emit(doc)
    return EXIT_OK if doc["all_finite"] else EXIT_ERROR


# wiring ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vkt", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configured run and write its outputs")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("init-check", help="compatibility residual of the initial data")
    p.add_argument("config")
    p.set_defaults(func=cmd_init_check)

    p = sub.add_parser("trace", help="log-density identity residual along particle paths")
    p.add_argument("run_dir")
    p.add_argument("--t", type=float, default=None, help="end time (default: last snapshot)")
    p.add_argument("--point", type=float, nargs=2, action="append", metavar=("X1", "X2"))
    p.add_argument("--substeps", type=int, default=1)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("scan-norms", help="density L^k norms and their scaled ratios")
    p.add_argument("path", help="run directory or snapshot file")
    p.add_argument("--ks", type=float, nargs="+")
    p.add_argument("--config", help="config supplying beta when PATH is a snapshot")
    p.set_defaults(func=cmd_scan_norms)

    p = sub.add_parser("check-inequalities", help="functional inequality ratios on random fields")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmax", type=int, default=8)
    p.set_defaults(func=cmd_check_inequalities)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (VKTError, OSError, ValueError) as exc:
        extra = {"path": exc.path} if isinstance(exc, ConfigError) else {}
        _emit(_failure(exc, **extra))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
