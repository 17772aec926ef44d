"""Command-line entry point.

Usage::

    gchlab {simulate,iterate,lagrange,norms,experiment,crosscheck} --config PATH
           [--out DIR] [--seed INT] [--quiet]

Exit codes: 0 success, 2 failed or inconclusive verdict, 1 usage or config error.
Each run writes ``report.json``, one CSV per measured series and a gnuplot
script per series into the output directory.
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import friedrichs as fr
from .. import lagrange as lg
from ..core import make_initial_data
from ..euler import IncipientBlowUp, simulate
from ..spectral import BesovParams, besov_norm, make_filter_bank
from .config import ConfigError, RunConfig, load_config
from .experiments import EXPERIMENTS, TOLERANCES, ExperimentReport, _new_report, _verdict
from .io import write_csv, write_gnuplot, write_json

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


def _final_fields(fields) -> dict:
    g = fields.u.grid
    return {"x": g.nodes, "u": fields.u.values, "u_x": fields.u_x.values,
            "u_xx": fields.u_xx.values, "m": fields.m.values}


def run_simulate(cfg: RunConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    rep = _new_report("simulate", cfg)
    bank = make_filter_bank(cfg.grid)
    pair = make_initial_data(cfg.initial, cfg.grid, bank)
    form = cfg.params["form"]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            traj = simulate(pair.m, cfg.controls, form, p=cfg.p, bank=bank, u0=pair.u)
        rep.measured["warnings"] = [str(w.message) for w in caught]
    except IncipientBlowUp as exc:
        traj = exc.trajectory
        rep.inconclusive = f"aborted at t = {exc.t:.6g}: {exc.reason}"
        rep.measured["abort"] = {"reason": exc.reason, "t": exc.t, "abort_time": traj.abort_time, "norms": exc.norms}
    rep.series["trajectory"] = traj.series()
    rep.series["jacobian"] = {"t": np.asarray(traj.times), "min_jacobian": np.asarray(traj.min_jacobian)}
    rep.series["final"] = _final_fields(traj.final.fields)
    if cfg.controls.output_dt is not None:
        for k, state in enumerate(traj.states):
            rep.series[f"snapshot_{k:04d}"] = _final_fields(state.fields)
    rep.measured["form"] = form
    rep.runtime_s = time.perf_counter() - t0
    return rep


def run_iterate(cfg: RunConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    rep = _new_report("iterate", cfg)
    bank = make_filter_bank(cfg.grid)
    m0 = make_initial_data(cfg.initial, cfg.grid, bank).m
    try:
        trace = fr.iterate(m0, int(cfg.params["n_max"]), cfg.controls, bank, p=cfg.p)
    except fr.CFLViolation as exc:
        rep.inconclusive = str(exc)
        rep.runtime_s = time.perf_counter() - t0
        return rep
    rep.series["iterates"] = {
        "n": np.arange(1, len(trace.diffs) + 1),
        "sup_norm": np.array(trace.norms[1:]),
        "diff": np.array(trace.diffs),
        "contraction_ratio": np.array([float("nan")] + trace.contraction_ratios),
    }
    rep.measured["source_form_gap"] = trace.source_form_gap
    if trace.stopped:
        rep.inconclusive = trace.stopped
    else:
        rho, _ = fr.contraction_verdict(trace)
        rep.verdicts.append(_verdict("max_contraction_ratio_n>=3", rho, "contraction_ratio", "<"))
        if len(trace.diffs) >= 5:
            b = fr.apriori_bound_check(trace)
            rep.fitted["C"] = b.fitted_C
            rep.fitted["premise_T_bound"] = b.premise_T_bound
            rep.measured["bound"] = b.as_dict()
            rep.verdicts.append(_verdict("bound_premise_holds", float(b.passed), 1.0, ">="))
    rep.runtime_s = time.perf_counter() - t0
    return rep


def run_lagrange(cfg: RunConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    rep = _new_report("lagrange", cfg)
    bank = make_filter_bank(cfg.grid)
    m0 = make_initial_data(cfg.initial, cfg.grid, bank).m
    hist = lg.evolve(lg.init_particles(m0, cfg.params["n_particles"]), cfg.controls)
    brk = lg.breaking_monitor(hist, TOLERANCES["jacobian_floor"])
    ens = hist.final
    rep.series["jacobian"] = {"t": np.array(hist.times), "min_yxi": np.array(hist.min_yxi)}
    rep.series["particles"] = {"xi": ens.xi, "y": ens.y, "yxi": ens.yxi, "M": ens.M, "U": ens.U, "Uxi": ens.Uxi}
    rep.measured["breaking"] = brk.as_dict()
    if hist.aborted:
        rep.inconclusive = hist.aborted
    else:
        rep.verdicts.append(_verdict("min_yxi", brk.min_yxi, "jacobian_floor", ">="))
    rep.runtime_s = time.perf_counter() - t0
    return rep


def run_norms(cfg: RunConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    rep = _new_report("norms", cfg)
    bank = make_filter_bank(cfg.grid)
    pair = make_initial_data(cfg.initial, cfg.grid, bank)
    params = BesovParams.critical(cfg.p)
    rep.measured["besov_norm_m0"] = besov_norm(pair.m, params, bank)
    rep.measured["besov_params"] = {"s": params.s, "p": params.p, "r": params.r}
    rep.measured["j_max"] = bank.j_max
    rep.series["initial"] = _final_fields(pair)
    rep.runtime_s = time.perf_counter() - t0
    return rep


def run_experiment(cfg: RunConfig) -> ExperimentReport:
    if cfg.name not in EXPERIMENTS:
        raise ConfigError(f"[run] name = {cfg.name!r} is not an experiment; choose one of {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[cfg.name](cfg)


COMMANDS = {
    "simulate": run_simulate,
    "iterate": run_iterate,
    "lagrange": run_lagrange,
    "norms": run_norms,
    "experiment": run_experiment,
    "crosscheck": EXPERIMENTS["crosscheck"],
}


def _wants_log(col: np.ndarray) -> bool:
    col = np.asarray(col, dtype=float)
    col = col[np.isfinite(col)]
    return col.size > 1 and bool(np.all(col > 0)) and col.max() / col.min() > 1e3


def save_report(rep: ExperimentReport, out_dir) -> list:
    """Write series CSVs, plot scripts and ``report.json``; return the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    series_files = []
    for key in sorted(rep.series):
        cols = rep.series[key]
        stem = f"{rep.name}_{key}"
        written.append(write_csv(out / f"{stem}.csv", cols))
        series_files.append(f"{stem}.csv")
        names = list(cols)
        ys = names[1:]
        if ys:
            log = all(_wants_log(cols[y]) for y in ys)
            written.append(write_gnuplot(out / f"{stem}.gp", f"{stem}.csv", names[0], ys, f"{rep.name}: {key}", log))
    payload = {
        "name": rep.name,
        "config": rep.config,
        "config_hash": rep.config_hash,
        "status": "pass" if rep.passed else ("inconclusive" if rep.inconclusive else "fail"),
        "inconclusive": rep.inconclusive,
        "verdicts": [v.as_dict() for v in rep.verdicts],
        "series_files": series_files,
        "fitted": rep.fitted,
        "measured": rep.measured,
        "tolerances": {k: TOLERANCES[k] for k in sorted(TOLERANCES)},
        "runtime_s": rep.runtime_s,
    }
    written.append(write_json(out / "report.json", payload))
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gchlab", description="Well-posedness lab for the generalized Camassa-Holm equation.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides [run] output_dir)")
    ap.add_argument("--seed", type=int, default=None, help="override [run] seed")
    ap.add_argument("--quiet", action="store_true", help="suppress the verdict summary")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.out is not None:
            cfg = cfg.with_output_dir(args.out)
        rep = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    save_report(rep, cfg.output_dir)
    if args.command == "norms":
        print(repr(rep.measured["besov_norm_m0"]))
    if not args.quiet:
        for line in rep.summary_lines():
            print(line)
        status = "PASS" if rep.passed else ("INCONCLUSIVE" if rep.inconclusive else "FAIL")
        print(f"{rep.name}: {status} ({len(rep.verdicts)} verdicts, {rep.runtime_s:.2f} s) -> {cfg.output_dir}")
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
