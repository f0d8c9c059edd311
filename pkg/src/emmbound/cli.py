"""Command-line front end.

Exit codes: 0 feasible / success, 1 infeasible / comparison failure,
2 undecided, 64 invalid arguments, 65 singular normalization,
66 no feasible region, 67 reference eigenvalue not converged.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import NoBifurcationInWindow, NotConverged, NoUsableRoot, SingularNormalization
from .model import EnergyPoint, ModelParams
from .oracle import SpectralConfig, critical_alpha, reference_energies, scaling_check
from .positivity import FeasibilityConfig, Verdict, emm_feasible
from .recursion import DEFAULT_PREC, build_moment_map
from .reference import PRESETS, rows_for, seed_window_bounds
from .report import BoundsReport, compare_row, format_row
from .scanner import LadderConfig, ScanWindow, bound_ladder, default_workers, order_ladder

EXIT_OK, EXIT_INFEASIBLE, EXIT_UNDECIDED = 0, 1, 2
EXIT_USAGE, EXIT_SINGULAR, EXIT_NO_REGION, EXIT_NOT_CONVERGED = 64, 65, 66, 67
CONFIG_ENV = "EMMBOUND_CONFIG"
GENERIC_WINDOW = ((0.2, 3.0), (-1.5, 1.5))

CONFIG_KEYS = {
    "tol_psd": float, "tol_margin": float, "max_iter": int, "prec": int,
    "n_er": int, "n_ei": int, "pad": float, "probes": int, "workers": int,
    "start_order": int, "basis_dim": int, "newton_tol": float, "strict": bool,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path: str | None) -> dict:
    """Key-value settings from `path`, or from the file named by EMMBOUND_CONFIG."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    text = Path(path).read_text()
    parser = configparser.ConfigParser()
    parser.read_string("[run]\n" + text)
    out = {}
    for key, raw in parser["run"].items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        kind = CONFIG_KEYS[key]
        out[key] = parser["run"].getboolean(key) if kind is bool else kind(raw)
    return out


def _setting(args, conf, key, default):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return conf.get(key, default)


def _feasibility_cfg(args, conf) -> FeasibilityConfig:
    return FeasibilityConfig(tol_psd=_setting(args, conf, "tol_psd", 1e-10),
                             tol_margin=_setting(args, conf, "tol_margin", 1e-12),
                             max_iter=_setting(args, conf, "max_iter", 500))


def _ladder_cfg(args, conf, pipeline: str) -> LadderConfig:
    return LadderConfig(n_er=_setting(args, conf, "n_er", 16), n_ei=_setting(args, conf, "n_ei", 16),
                        pad=_setting(args, conf, "pad", 0.3), probes=_setting(args, conf, "probes", 9),
                        workers=_setting(args, conf, "workers", default_workers()),
                        pipeline=pipeline, feasibility=_feasibility_cfg(args, conf),
                        prec=_setting(args, conf, "prec", DEFAULT_PREC),
                        strict=bool(args.strict or conf.get("strict", False)))


def _emit(obj, as_json: bool, text: str):
    if as_json:
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_feasible(args, conf) -> int:
    if not args.er > 0:
        raise UsageError(f"--er must be positive, got {args.er}")
    params = ModelParams(args.alpha, args.epsilon)
    energy = EnergyPoint(args.er, args.ei)
    cfg = replace(_feasibility_cfg(args, conf), trace=bool(args.trace))
    prec = _setting(args, conf, "prec", DEFAULT_PREC)
    try:
        if args.pipeline == "appendix":
            from .appendix import appendix_map_for_energy
            mp = appendix_map_for_energy(params, energy, args.pmax, prec=prec)
        else:
            mp = build_moment_map(params, energy, args.pmax, prec=prec,
                                  strict=bool(args.strict or conf.get("strict", False)))
    except (SingularNormalization, NoUsableRoot) as exc:
        _emit({"status": Verdict.MAP_SINGULAR.value, "error": str(exc)}, args.json,
              f"MapSingular: {exc}")
        return EXIT_SINGULAR
    res = emm_feasible(mp, cfg)
    if args.trace:
        res.write_trace(args.trace)
    out = {"alpha": args.alpha, "epsilon": args.epsilon, "p_max": args.pmax, "e_r": args.er,
           "e_i": args.ei, "pipeline": args.pipeline, "status": res.status.value,
           "lambda_min": res.min_eig, "iterations": res.iterations,
           "witness": None if res.witness is None else res.witness.tolist(),
           "condition": mp.condition}
    _emit(out, args.json, f"{res.status.value}  lambda_min={res.min_eig:.3e}  "
                          f"iterations={res.iterations}")
    return {Verdict.FEASIBLE: EXIT_OK, Verdict.INFEASIBLE: EXIT_INFEASIBLE}.get(res.status, EXIT_UNDECIDED)


def _window(args, conf) -> ScanWindow:
    seeded = seed_window_bounds(args.alpha) or GENERIC_WINDOW
    er = tuple(args.er_range) if args.er_range else seeded[0]
    ei = tuple(args.ei_range) if args.ei_range else seeded[1]
    try:
        return ScanWindow(er, ei, _setting(args, conf, "n_er", 16), _setting(args, conf, "n_ei", 16))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_outputs(report: BoundsReport, results_masks, out_dir, tag, include_meta=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{tag}.json").write_text(report.dumps(include_meta) + "\n")
    for k, mask in enumerate(results_masks):
        mask.write_csv(out / f"{tag}_mask{k}.csv")


def cmd_bound(args, conf, pipeline="main") -> int:
    pipeline = getattr(args, "pipeline", None) or pipeline
    window = _window(args, conf)
    cfg = _ladder_cfg(args, conf, pipeline)
    start = _setting(args, conf, "start_order", 20)
    if pipeline == "appendix" and min(start, args.pmax) < 12:
        raise UsageError("the translated route needs orders of at least 12")
    t0 = time.time()
    orders = order_ladder(args.pmax, start) if not args.no_ladder else [args.pmax]
    results = bound_ladder(ModelParams(args.alpha), orders, window, cfg)
    meta = {"wall_time_s": round(time.time() - t0, 3),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"), "version": __version__}
    report = BoundsReport.from_ladder(args.alpha, results, pipeline, meta)
    reached = report.p_max == args.pmax
    if args.out:
        tag = f"bounds_{pipeline}_a{args.alpha:g}_p{args.pmax}"
        masks = results[max(results)].masks if results else []
        _write_outputs(report, masks, args.out, tag, not args.no_meta)
    if args.json:
        print(report.dumps(not args.no_meta))
    else:
        for rect in report.rectangles:
            print(format_row(rect))
        if not reached or not report.rectangles:
            print("no feasible region in window")
    return EXIT_OK if reached and report.rectangles else EXIT_NO_REGION


def run_table(preset: str, cfg: LadderConfig, progress=None) -> dict:
    rows = PRESETS[preset]
    alphas = sorted({r.alpha for r in rows}, reverse=True)
    comparisons, reports = [], {}
    for alpha in alphas:
        arows = rows_for(alpha, rows)
        er, ei = seed_window_bounds(alpha)
        orders = sorted({r.p_max for r in arows})
        results = bound_ladder(ModelParams(alpha), orders, ScanWindow(er, ei, cfg.n_er, cfg.n_ei),
                               cfg, progress)
        reports[alpha] = BoundsReport.from_ladder(alpha, results, cfg.pipeline)
        for row in arows:
            rects = results[row.p_max].rectangles if row.p_max in results else []
            comparisons.append(compare_row(row, rects))
    return {"comparisons": comparisons, "reports": reports}


def cmd_table(args, conf) -> int:
    cfg = _ladder_cfg(args, conf, "main")
    t0 = time.time()
    out = run_table(args.preset, cfg)
    cells = out["comparisons"]
    ok = all(c.passed for c in cells)
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        for alpha, rep in out["reports"].items():
            (path / f"{args.preset}_a{alpha:g}.json").write_text(rep.dumps(not args.no_meta) + "\n")
    if args.json:
        doc = {"preset": args.preset, "cells": [c.to_json() for c in cells], "passed": ok}
        if not args.no_meta:
            doc["meta"] = {"wall_time_s": round(time.time() - t0, 3), "version": __version__}
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"{'alpha':>7} {'P':>3}  {'published E_R':>21}  {'ours E_R':>21}  "
              f"{'published E_I':>21}  {'ours E_I':>21}  ref  result")
        for c in cells:
            r, o = c.row, c.ours
            ours_er = "-" if o is None else f"{o.er_lo:.6f}-{o.er_hi:.6f}"
            ours_ei = "-" if o is None else f"{o.ei_lo:+.5f}-{o.ei_hi:+.5f}"
            ref = {True: "in", False: "OUT", None: " - "}[c.reference_inside]
            print(f"{r.alpha:>7g} {r.p_max:>3}  {r.er_lo:>10.5f}-{r.er_hi:<10.5f}  {ours_er:>21}  "
                  f"{r.ei_lo:>+10.5f}-{r.ei_hi:<+10.5f}  {ours_ei:>21}  {ref:>3}  "
                  f"{'pass' if c.passed else 'FAIL'}")
        print("all cells pass" if ok else "some cells FAIL")
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_oracle(args, conf) -> int:
    cfg = SpectralConfig(basis_dim=_setting(args, conf, "basis_dim", 64),
                         newton_tol=_setting(args, conf, "newton_tol", 1e-10))
    doc: dict = {}
    try:
        if args.critical:
            lo, hi = sorted(args.window)
            bracket = critical_alpha((lo, hi), replace(cfg, auto_tune=False))
            doc["critical_alpha"] = {"lo": bracket[0], "hi": bracket[1]}
        if args.alpha:
            states = []
            for a in args.alpha:
                if args.scaling is not None:
                    doc.setdefault("scaling", []).append(
                        {"alpha": a, "epsilon": args.scaling,
                         "residual": scaling_check(a, args.scaling, cfg)})
                states.extend(r.to_json() for r in reference_energies(a, args.states, cfg))
            doc["energies"] = states
    except NotConverged as exc:
        print(json.dumps({"error": "NotConverged", "detail": str(exc)}, sort_keys=True))
        return EXIT_NOT_CONVERGED
    except NoBifurcationInWindow as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"key-value settings file (default: ${CONFIG_ENV})")
    p.add_argument("--json", action="store_true", help="machine-readable output only")
    p.add_argument("--strict", action="store_true", help="escalate precision until residual checks pass")
    p.add_argument("--prec", type=int, help="working precision in bits")
    p.add_argument("--tol-psd", dest="tol_psd", type=float)
    p.add_argument("--tol-margin", dest="tol_margin", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)


def _scan_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--er-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--ei-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--grid", nargs=2, type=int, metavar=("N_ER", "N_EI"))
    p.add_argument("--start-order", dest="start_order", type=int)
    p.add_argument("--no-ladder", action="store_true", help="scan the window at --pmax only")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="directory for rectangle JSON and mask CSV files")
    p.add_argument("--no-meta", action="store_true", help="omit timing metadata (comparison mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emmbound", description="Moment-method eigenvalue bounds for "
                     "H = p^2 + i x^3 + i alpha x")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("feasible", help="feasibility verdict at one energy")
    _common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--er", type=float, required=True)
    p.add_argument("--ei", type=float, required=True)
    p.add_argument("--pipeline", choices=("main", "appendix"), default="main")
    p.add_argument("--trace", help="write per-iteration JSON lines here")

    p = sub.add_parser("bound", help="bounding rectangles of the feasible regions")
    _common(p)
    _scan_flags(p)
    p.add_argument("--pipeline", choices=("main", "appendix"), default="main")

    p = sub.add_parser("appendix-bound", help="bounding rectangles via the translated moments")
    _common(p)
    _scan_flags(p)

    p = sub.add_parser("table", help="reproduce a published table of bounds")
    _common(p)
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--no-meta", action="store_true")

    p = sub.add_parser("oracle", help="reference eigenvalues and the critical coupling")
    p.add_argument("--config")
    p.add_argument("--alpha", type=float, nargs="+")
    p.add_argument("--states", type=int, default=2)
    p.add_argument("--critical", action="store_true")
    p.add_argument("--window", nargs=2, type=float, default=(-2.62, -2.60), metavar=("LO", "HI"))
    p.add_argument("--scaling", type=float, metavar="EPS")
    p.add_argument("--basis-dim", dest="basis_dim", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        conf = load_config(getattr(args, "config", None))
        if getattr(args, "grid", None):
            args.n_er, args.n_ei = args.grid
        if args.command == "feasible":
            return cmd_feasible(args, conf)
        if args.command == "bound":
            return cmd_bound(args, conf)
        if args.command == "appendix-bound":
            return cmd_bound(args, conf, pipeline="appendix")
        if args.command == "table":
            return cmd_table(args, conf)
        if args.command == "oracle":
            if not args.critical and not args.alpha:
                raise UsageError("give --alpha and/or --critical")
            return cmd_oracle(args, conf)
    except (UsageError, ValueError, OSError) as exc:
        print(f"emmbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
