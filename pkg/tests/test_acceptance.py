"""Acceptance criteria, each run at its stated tolerance.

A one-line PASS/FAIL summary per criterion is printed at the end of the
pytest session (and by running this file directly).
"""

import json
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from gchlab import lagrange as lg
from gchlab.euler import TimeControls, mass_balance_check, simulate
from gchlab.harness import cli
from gchlab.harness.config import load_config
from gchlab.harness.experiments import EXPERIMENTS
from gchlab.spectral import GridFunction, GridSpec, band_limited_random

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"


def _record(log, k, ok, text):
    log[k] = (bool(ok), text)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {text}")


def _run(name):
    cfg = load_config(CONFIGS / f"{name}.cfg")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return EXPERIMENTS[cfg.name](cfg)


def _verdicts(rep):
    return "; ".join(f"{v.criterion}={v.value:.4g}" for v in rep.verdicts)


def test_c01_spectral_suite(acceptance_log):
    cfg = load_config(CONFIGS / "spectral.cfg")
    assert cfg.grid.n_points == 1024 and cfg.params["trials"] == 100
    rep = EXPERIMENTS["spectral_suite"](cfg)
    ok = rep.passed and rep.runtime_s < 30.0
    _record(acceptance_log, 1, ok, f"{_verdicts(rep)}; runtime {rep.runtime_s:.1f} s (< 30 s)")
    assert ok, rep.summary_lines()


def _ensemble(seed, n=512):
    rng = np.random.default_rng(seed)
    grid = GridSpec(20.0, n)
    disp = band_limited_random(grid, rng, 3.0)
    disp *= 0.5 / np.max(np.abs(np.gradient(disp, grid.spacing)))
    base = lg.init_particles(GridFunction(grid, band_limited_random(grid, rng, 5.0)))
    yxi = 1.0 + np.gradient(disp, grid.spacing)
    return lg.ParticleEnsemble(base.xi, base.xi + disp, yxi, base.M, base.U, base.Uxi * yxi, 0.0, base.period)


def test_c02_nonlocal_oracle(acceptance_log):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        ens = _ensemble(seed)
        a, b = lg.nonlocal_integrals(ens)
        a0, b0 = lg.nonlocal_integrals_direct(ens)
        worst = max(worst, np.max(np.abs(a - a0)) / np.max(np.abs(a0)), np.max(np.abs(b - b0)) / np.max(np.abs(b0)))
    runtime = time.perf_counter() - t0
    ok = worst < 1e-12 and runtime < 60.0
    _record(acceptance_log, 2, ok, f"max rel error {worst:.3g} (< 1e-12) over 20 ensembles, N = 512; runtime {runtime:.1f} s")
    assert ok


def test_c03_crosscheck(acceptance_log):
    rep = _run("crosscheck")
    ok = rep.passed and rep.runtime_s < 300.0
    d = rep.series["distances"]
    _record(acceptance_log, 3, ok, f"{_verdicts(rep)}; worst pair at N = 1024: "
            f"{max(d['m_vs_u'][-1], d['m_vs_lagrange'][-1], d['u_vs_lagrange'][-1]):.3g}; runtime {rep.runtime_s:.1f} s")
    assert ok, rep.summary_lines()


def test_c04_iteration(acceptance_log):
    rep = _run("iteration")
    ok = rep.passed and rep.runtime_s < 300.0
    _record(acceptance_log, 4, ok, f"{_verdicts(rep)}; C = {rep.fitted.get('C', float('nan')):.4g} "
            f"(unclamped {[round(v, 4) for k, v in rep.measured.items() if k.startswith('raw_C')]}); runtime {rep.runtime_s:.1f} s")
    assert ok, rep.summary_lines()


def test_c05_jacobian(acceptance_log):
    rep = _run("jacobian")
    ok = rep.passed
    _record(acceptance_log, 5, ok, _verdicts(rep))
    assert ok, rep.summary_lines()


def test_c06_stability(acceptance_log):
    rep = _run("stability")
    ok = rep.passed and len(rep.verdicts) == 3
    _record(acceptance_log, 6, ok, _verdicts(rep))
    assert ok, rep.summary_lines()


def test_c07_continuous_dependence(acceptance_log):
    gauss = _run("continuous")
    rand = _run("continuous_random")
    n_seeds = len(load_config(CONFIGS / "continuous_random.cfg").params["seeds"])
    ok = gauss.passed and rand.passed and n_seeds == 5
    _record(acceptance_log, 7, ok, f"gaussian target: {'pass' if gauss.passed else 'fail'}; "
            f"random targets: {rand.measured.get('seeds_passed')} seeds")
    assert ok, gauss.summary_lines() + rand.summary_lines()


def test_c08_mass_balance(acceptance_log):
    rep = _run("mass_balance")
    grid = GridSpec(20.0, 256)
    trivial = []
    for value in (0.0, 1.3):
        traj = simulate(GridFunction(grid, np.full(256, value)), TimeControls(dt=1e-3, t_end=0.05))
        trivial.append(mass_balance_check(traj).relative_residual)
    ok = rep.passed and all(r == 0.0 for r in trivial)
    _record(acceptance_log, 8, ok, f"{_verdicts(rep)} (< 1e-5); zero/constant residuals {trivial}")
    assert ok, rep.summary_lines()


def test_c09_order(acceptance_log):
    rep = _run("order")
    ok = rep.passed
    _record(acceptance_log, 9, ok, _verdicts(rep) + " (>= 3.8)")
    assert ok, rep.summary_lines()


def test_c10_determinism(acceptance_log, tmp_path):
    runs = [("norms", "gaussian"), ("simulate", "gaussian"), ("lagrange", "gaussian"),
            ("experiment", "stability"), ("experiment", "spectral"), ("crosscheck", "crosscheck")]
    mismatched = []
    compared = 0
    for command, cfg_name in runs:
        outs = [tmp_path / f"{command}_{cfg_name}_{i}" for i in range(2)]
        for out in outs:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cli.main([command, "--config", str(CONFIGS / f"{cfg_name}.cfg"), "--out", str(out), "--quiet", "--seed", "7"])
        names = sorted(p.name for p in outs[0].iterdir())
        if names != sorted(p.name for p in outs[1].iterdir()):
            mismatched.append(f"{command}:file list")
            continue
        for name in names:
            a, b = (outs[0] / name).read_bytes(), (outs[1] / name).read_bytes()
            compared += 1
            if name == "report.json":
                # wall-clock time is the one field that cannot repeat
                ja, jb = json.loads(a), json.loads(b)
                ja.pop("runtime_s")
                jb.pop("runtime_s")
                a, b = json.dumps(ja, sort_keys=True).encode(), json.dumps(jb, sort_keys=True).encode()
            if a != b:
                mismatched.append(f"{command}:{name}")
    ok = not mismatched
    _record(acceptance_log, 10, ok, f"{compared} output files compared, mismatches: {mismatched or 'none'}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
