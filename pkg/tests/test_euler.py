import warnings

import numpy as np
import pytest

from gchlab.core import InitialDataSpec, make_initial_data
from gchlab.euler import (
    EulerState,
    IncipientBlowUp,
    TimeControls,
    mass_balance_check,
    mass_production,
    richardson_order,
    simulate,
    step_m_form,
    step_u_form,
)
from gchlab.spectral import GridFunction


class TestControls:
    def test_validation(self):
        with pytest.raises(ValueError):
            TimeControls(dt=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            TimeControls(dt=1e-3, t_end=-1.0)
        with pytest.raises(ValueError):
            TimeControls(dt=1e-3, t_end=1.0, cfl_cap=0.0)
        with pytest.raises(ValueError):
            TimeControls(dt=1e-3, t_end=1.0, output_dt=0.0)

    def test_effective_dt(self):
        c = TimeControls(dt=1e-2, t_end=1.0, cfl_cap=0.5)
        assert c.effective_dt(0.1, 1.0) == 1e-2
        assert c.effective_dt(0.1, 100.0) == pytest.approx(5e-4)


class TestTrivialData:
    @pytest.mark.parametrize("value", [0.0, 0.7])
    @pytest.mark.parametrize("form", ["m", "u"])
    def test_constant_is_stationary(self, grid256, value, form):
        m0 = GridFunction(grid256, np.full(256, value))
        traj = simulate(m0, TimeControls(dt=5e-3, t_end=0.1), form)
        np.testing.assert_allclose(traj.final.fields.u.values, value, atol=1e-14)
        rep = mass_balance_check(traj)
        assert rep.verdict == "pass" and rep.relative_residual == 0.0

    def test_zero_length_run(self, small_pair):
        traj = simulate(small_pair.m, TimeControls(dt=1e-3, t_end=0.0))
        assert traj.times == [0.0]


class TestSolvers:
    def test_forms_agree(self, small_pair):
        c = TimeControls(dt=2e-3, t_end=0.3)
        tm = simulate(small_pair.m, c, "m")
        tu = simulate(small_pair.m, c, "u", u0=small_pair.u)
        assert np.max(np.abs(tm.final.fields.u.values - tu.final.fields.u.values)) < 1e-12

    def test_single_steps_match_simulate(self, small_pair):
        c = TimeControls(dt=1e-2, t_end=0.02)
        traj = simulate(small_pair.m, c, "m")
        s = EulerState(0.0, small_pair)
        s = step_m_form(step_m_form(s, c), c)
        np.testing.assert_allclose(s.fields.m.values, traj.final.fields.m.values, atol=1e-14)
        su = step_u_form(step_u_form(EulerState(0.0, small_pair), c), c)
        np.testing.assert_allclose(su.fields.u.values, traj.final.fields.u.values, atol=1e-12)

    def test_output_cadence(self, small_pair):
        traj = simulate(small_pair.m, TimeControls(dt=1e-2, t_end=0.5, output_dt=0.1))
        np.testing.assert_allclose(traj.times, [0, 0.1, 0.2, 0.3, 0.4, 0.5], atol=1e-12)
        assert len(traj.states) == len(traj.besov_m) == 6
        assert set(traj.series()) == {"t", "besov_m", "linf_u", "linf_ux", "mass_m"}

    def test_bad_form(self, small_pair):
        with pytest.raises(ValueError):
            simulate(small_pair.m, TimeControls(1e-3, 0.1), "x")

    def test_existence_window_warning(self, small_pair):
        with pytest.warns(RuntimeWarning, match="existence-window"):
            simulate(small_pair.m, TimeControls(dt=0.05, t_end=2.5, theta=0.5))

    def test_deterministic(self, small_pair):
        c = TimeControls(dt=1e-2, t_end=0.2)
        a = simulate(small_pair.m, c).final.fields.m.values
        b = simulate(small_pair.m, c).final.fields.m.values
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("form", ["m", "u"])
    def test_temporal_order(self, small_pair, form):
        def run(dt):
            c = TimeControls(dt=dt, t_end=0.8, cfl_cap=1e9, jacobian_floor=None)
            return simulate(small_pair.m, c, form, u0=small_pair.u).final.fields.u.values

        assert richardson_order(run, 0.05) >= 3.8


class TestMassBalance:
    def test_reference_run(self, small_pair):
        traj = simulate(small_pair.m, TimeControls(dt=1e-3, t_end=0.2))
        rep = mass_balance_check(traj)
        assert rep.verdict == "pass"
        assert rep.relative_residual < 1e-8
        assert rep.lhs.shape == rep.rhs.shape == (len(traj.times) - 2,)

    def test_coarse_cadence_is_inconclusive(self, small_pair):
        traj = simulate(small_pair.m, TimeControls(dt=1e-2, t_end=0.2, output_dt=0.05))
        assert mass_balance_check(traj).verdict == "inconclusive"

    def test_production_of_a_mode(self, grid256):
        from gchlab.core import FieldPair

        k = np.pi * 3 / 20.0
        pair = FieldPair.from_u(GridFunction(grid256, np.sin(k * grid256.nodes)))
        # ||sin||^2 = 20 on a period of length 40
        assert mass_production(pair) == pytest.approx(20.0 * (1.5 * k**2 + 0.5 * k**4), rel=1e-12)


class TestBlowUp:
    def test_steep_peakon_aborts(self, grid1024, bank1024):
        pair = make_initial_data(InitialDataSpec("smoothed_peakon", amplitude=3.0), grid1024, bank1024)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(IncipientBlowUp) as info:
                simulate(pair.m, TimeControls(dt=1e-3, t_end=2.0), bank=bank1024)
        exc = info.value
        traj = exc.trajectory
        assert "Jacobian" in exc.reason
        assert traj.abort_time <= exc.t
        assert traj.times[-1] <= traj.abort_time
        # frozen from the reference implementation
        assert traj.abort_time == pytest.approx(0.5635, abs=5e-4)

    def test_safety_cap(self, small_pair):
        with pytest.raises(IncipientBlowUp, match="safety"):
            simulate(small_pair.m, TimeControls(dt=1e-2, t_end=0.1, safety=1e-6))
