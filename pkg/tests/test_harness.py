import json
import math

import numpy as np
import pytest

from gchlab.core import make_initial_data
from gchlab.harness import cli
from gchlab.harness.config import ConfigError, load_config, parse_config, schema_reference
from gchlab.harness.experiments import (
    EXPERIMENTS,
    TOLERANCES,
    crosscheck_distances,
    exp_continuous_dependence,
    exp_crosscheck,
    exp_spectral_suite,
    exp_uniqueness_stability,
    fit_slope,
)
from gchlab.harness.io import read_csv, write_csv, write_gnuplot, write_json
from gchlab.euler import TimeControls
from gchlab.spectral import BesovParams, GridFunction, GridSpec, besov_norm, make_filter_bank

SMALL = """
[run]
name = {name}
seed = 3
output_dir = {out}

[grid]
half_length = 20
n_points = 256

[time]
dt = 1e-2
t_end = 0.2

[initial_data]
kind = gaussian
width = 1.0
norm_target = 0.1
{extra}
"""


def small(name="spectral_suite", out="out", extra=""):
    return parse_config(SMALL.format(name=name, out=out, extra=extra))


class TestConfig:
    def test_defaults_and_echo(self):
        cfg = small()
        assert cfg.grid == GridSpec(20.0, 256)
        assert cfg.controls.cfl_cap == 0.3 and cfg.p == 2.0
        assert cfg.initial.seed == 3
        assert cfg.echo["grid"]["n_points"] == "256"
        assert cfg.params["deltas"] == [1e-2, 1e-3, 1e-4]

    def test_hash_tracks_content(self):
        a, b = small(), small()
        assert a.config_hash == b.config_hash and len(a.config_hash) == 64
        assert small(out="elsewhere").config_hash != a.config_hash
        c = a.with_seed(9)
        assert c.seed == 9 and c.initial.seed == 9 and c.config_hash != a.config_hash

    @pytest.mark.parametrize("text,fragment", [
        ("[grid]\nn_points = 256\nbogus = 1\n", "line 3: unknown key grid.bogus"),
        ("[nope]\na = 1\n", "line 1: unknown section [nope]"),
        ("[grid]\nn_points = many\n", "line 2: bad value for grid.n_points"),
        ("[grid]\nn_points = 100\n", "invalid [grid]"),
        ("[besov]\np = 0.5\n", "besov.p"),
        ("[experiment]\nform = z\n", "experiment.form"),
        ("[initial_data]\nkind = sawtooth\n", "invalid [initial_data]"),
        ("no section header\n", "parse error"),
    ])
    def test_errors_name_line_and_field(self, text, fragment):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert fragment in str(info.value)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.cfg")

    def test_schema_reference_lists_everything(self):
        ref = schema_reference()
        for section in ("[run]", "[grid]", "[time]", "[besov]", "[initial_data]", "[experiment]"):
            assert section in ref


class TestIO:
    def test_csv_round_trip_is_exact(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(50)
        path = write_csv(tmp_path / "a.csv", {"i": np.arange(50), "x": x, "ok": x > 0})
        back = read_csv(path)
        np.testing.assert_array_equal(back["x"], x)
        assert back["ok"][0] in ("true", "false")
        with pytest.raises(ValueError):
            write_csv(tmp_path / "b.csv", {"a": [1, 2], "b": [1]})

    def test_json_special_values(self, tmp_path):
        path = write_json(tmp_path / "r.json", {"b": math.nan, "a": [math.inf, np.float64(1.5)], "c": np.int64(3)})
        data = json.loads(path.read_text())
        assert data == {"a": ["inf", 1.5], "b": "nan", "c": 3}
        assert path.read_text().index('"a"') < path.read_text().index('"b"')

    def test_gnuplot(self, tmp_path):
        text = write_gnuplot(tmp_path / "p.gp", "d.csv", "t", ["y1", "y2"], "demo", True).read_text()
        assert "set logscale y" in text and "'d.csv' using 't':'y2'" in text


class TestExperiments:
    def test_every_verdict_has_a_known_tolerance(self):
        rep = exp_spectral_suite(small(extra="[experiment]\ntrials = 5\n"))
        assert rep.passed
        known = set(TOLERANCES.values()) | {0.0, 1.0}
        assert all(v.tolerance in known for v in rep.verdicts)
        assert rep.runtime_s > 0
        assert rep.config_hash == parse_config(SMALL.format(name="spectral_suite", out="out",
                                                            extra="[experiment]\ntrials = 5\n")).config_hash

    def test_spectral_empty_is_vacuous(self):
        rep = exp_spectral_suite(small(extra="[experiment]\ntrials = 0\n"))
        assert rep.passed and "vacuous" in rep.measured["note"]

    def test_stability_zero_delta(self):
        cfg = small("stability", extra="[experiment]\ndeltas = 0, 1e-3, 1e-4\np_values = 2\n")
        rep = exp_uniqueness_stability(cfg)
        assert rep.passed
        r = rep.series["R"]["R_p2"]
        assert r[0] == 0.0 and r[1] > 0 and r[1] / r[2] == pytest.approx(1.0, rel=0.1)

    def test_stability_precondition(self):
        text = SMALL.format(name="stability", out="o", extra="").replace("norm_target = 0.1", "norm_target = 0.6")
        rep = exp_uniqueness_stability(parse_config(text))
        assert rep.inconclusive and not rep.passed

    def test_continuous_dependence_identical_data(self):
        # levels past j_max leave the data untouched, so E = 0
        cfg = small("continuous_dependence", extra="[experiment]\nlevels = 6, 7\n")
        rep = exp_continuous_dependence(cfg)
        assert rep.passed
        np.testing.assert_array_equal(rep.series["seed3"]["E_n"], [0.0, 0.0])

    @pytest.mark.parametrize("value", [0.0, 0.5])
    def test_crosscheck_trivial_data(self, grid256, value):
        m0 = GridFunction(grid256, np.full(256, value))
        d = crosscheck_distances(m0, m0, TimeControls(dt=1e-2, t_end=0.1))
        assert max(d["m_vs_u"], d["m_vs_lagrange"], d["u_vs_lagrange"]) < 1e-12

    def test_crosscheck_small(self):
        cfg = small("crosscheck", extra="[experiment]\nrefinements = 64, 128, 256\n")
        rep = exp_crosscheck(cfg)
        assert rep.passed, rep.summary_lines()
        assert list(rep.series["distances"]["N"]) == [64, 128, 256]

    def test_fit_slope(self):
        assert fit_slope([64, 128, 256], [4.0, 1.0, 0.25]) == pytest.approx(2.0)

    def test_registry(self):
        assert set(EXPERIMENTS) == {"spectral_suite", "stability", "continuous_dependence", "crosscheck",
                                    "iteration", "jacobian", "mass_balance", "order"}


def _write_cfg(tmp_path, name, extra=""):
    path = tmp_path / f"{name}.cfg"
    path.write_text(SMALL.format(name=name, out=tmp_path / "default_out", extra=extra))
    return path


class TestCli:
    def test_missing_config(self, capsys):
        assert cli.main(["experiment"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self):
        assert cli.main(["explode", "--config", "x.cfg"]) == 1

    def test_bad_config_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[grid]\nn_points = 256\nwidth = 3\n")
        assert cli.main(["norms", "--config", str(bad)]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_norms_matches_library(self, tmp_path, capsys):
        cfg_path = _write_cfg(tmp_path, "norms")
        assert cli.main(["norms", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--quiet"]) == 0
        printed = float(capsys.readouterr().out.strip())
        cfg = load_config(cfg_path)
        bank = make_filter_bank(cfg.grid)
        expected = besov_norm(make_initial_data(cfg.initial, cfg.grid, bank).m, BesovParams.critical(2.0), bank)
        assert abs(printed - expected) <= 1e-14 * expected

    @pytest.mark.parametrize("command", ["simulate", "iterate", "lagrange"])
    def test_commands_write_outputs(self, tmp_path, command):
        cfg_path = _write_cfg(tmp_path, command, "[experiment]\nn_max = 6\n")
        out = tmp_path / "o"
        assert cli.main([command, "--config", str(cfg_path), "--out", str(out), "--quiet"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert {"name", "config", "verdicts", "series_files", "fitted", "runtime_s", "config_hash"} <= set(report)
        for name in report["series_files"]:
            assert (out / name).exists()
            assert (out / name.replace(".csv", ".gp")).exists()

    def test_experiment_exit_codes(self, tmp_path):
        ok = _write_cfg(tmp_path, "spectral_suite", "[experiment]\ntrials = 3\n")
        assert cli.main(["experiment", "--config", str(ok), "--out", str(tmp_path / "a"), "--quiet"]) == 0
        not_experiment = _write_cfg(tmp_path, "simulate")
        assert cli.main(["experiment", "--config", str(not_experiment), "--quiet"]) == 1
        text = SMALL.format(name="stability", out=tmp_path / "b", extra="").replace("norm_target = 0.1", "norm_target = 0.6")
        bad = tmp_path / "stab.cfg"
        bad.write_text(text)
        assert cli.main(["experiment", "--config", str(bad), "--quiet"]) == 2
        report = json.loads((tmp_path / "b" / "report.json").read_text())
        assert report["status"] == "inconclusive"

    def test_seed_override_is_echoed(self, tmp_path):
        cfg_path = _write_cfg(tmp_path, "norms")
        out = tmp_path / "o"
        cli.main(["norms", "--config", str(cfg_path), "--out", str(out), "--seed", "11", "--quiet"])
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["run"]["seed"] == "11"

    def test_repeat_runs_are_identical(self, tmp_path):
        cfg_path = _write_cfg(tmp_path, "simulate")
        outs = [tmp_path / "r1", tmp_path / "r2"]
        for out in outs:
            assert cli.main(["simulate", "--config", str(cfg_path), "--out", str(out), "--quiet"]) == 0
        files = sorted(p.name for p in outs[0].iterdir())
        assert files == sorted(p.name for p in outs[1].iterdir())
        for name in files:
            a, b = (outs[0] / name).read_bytes(), (outs[1] / name).read_bytes()
            if name == "report.json":
                ja, jb = json.loads(a), json.loads(b)
                ja.pop("runtime_s"), jb.pop("runtime_s")
                assert ja == jb
            else:
                assert a == b


class TestCsvSchemas:
    def test_simulate_and_snapshots(self, tmp_path):
        cfg_path = _write_cfg(tmp_path, "simulate").read_text().replace("t_end = 0.2", "t_end = 0.2\noutput_dt = 0.1")
        path = tmp_path / "snap.cfg"
        path.write_text(cfg_path)
        out = tmp_path / "o"
        assert cli.main(["simulate", "--config", str(path), "--out", str(out), "--quiet"]) == 0
        assert (out / "simulate_trajectory.csv").read_text().splitlines()[0] == "t,besov_m,linf_u,linf_ux,mass_m"
        snaps = sorted(out.glob("simulate_snapshot_*.csv"))
        assert len(snaps) == 3
        assert snaps[0].read_text().splitlines()[0] == "x,u,u_x,u_xx,m"

    def test_iterate_and_lagrange(self, tmp_path):
        cfg_path = _write_cfg(tmp_path, "x", "[experiment]\nn_max = 6\n")
        cli.main(["iterate", "--config", str(cfg_path), "--out", str(tmp_path / "i"), "--quiet"])
        assert (tmp_path / "i" / "iterate_iterates.csv").read_text().splitlines()[0] == "n,sup_norm,diff,contraction_ratio"
        report = json.loads((tmp_path / "i" / "report.json").read_text())
        assert {"C", "premise_T_bound"} <= set(report["fitted"])
        cli.main(["lagrange", "--config", str(cfg_path), "--out", str(tmp_path / "l"), "--quiet"])
        assert (tmp_path / "l" / "lagrange_particles.csv").read_text().splitlines()[0] == "xi,y,yxi,M,U,Uxi"
        report = json.loads((tmp_path / "l" / "report.json").read_text())
        assert set(report["measured"]["breaking"]) == {"min_yxi", "t_of_min", "breached", "threshold", "t_breach"}
