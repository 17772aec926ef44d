"""Method-of-lines Eulerian solvers for the momentum and velocity forms.

Both forms are advanced with classical RK4. Quadratic products are
dealiased with the 2/3 rule. The characteristic speed is ``-u_x``.

Alongside the physical field the solvers carry the Eulerian Jacobian ``J``
solving ``J_t - u_x J_x = (m - u) J``, ``J(0) = 1``. Along characteristics
``J`` equals the Lagrangian stretching ``y_xi``, which gives the Eulerian
run a breaking monitor comparable with the particle solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import FieldPair, _helmholtz, _momentum, rhs_m_form
from .spectral import (
    BesovParams,
    DyadicFilterBank,
    GridFunction,
    GridSpec,
    besov_norm_array,
    diff_matrix_symbol,
    make_filter_bank,
)


class IncipientBlowUp(RuntimeError):
    """Stepping stopped because the solution left the admissible regime.

    ``trajectory`` holds everything recorded up to the abort.
    """

    def __init__(self, reason: str, t: float, norms: dict, trajectory=None):
        self.reason = reason
        self.t = t
        self.norms = norms
        self.trajectory = trajectory
        detail = ", ".join(f"{k}={v:.4g}" for k, v in norms.items())
        super().__init__(f"incipient blow-up at t={t:.6g}: {reason} ({detail})")


@dataclass(frozen=True)
class TimeControls:
    dt: float
    t_end: float
    cfl_cap: float = 0.3
    safety: float = 1e3          # largest admissible ||u_x||_inf
    jacobian_floor: Optional[float] = 0.5
    output_dt: Optional[float] = None   # None: record every step
    theta: float = 0.5           # existence-window heuristic T_est = theta / ||m0||

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if not self.cfl_cap > 0:
            raise ValueError("cfl_cap must be positive")
        if self.output_dt is not None and not self.output_dt > 0:
            raise ValueError("output_dt must be positive")

    def effective_dt(self, h: float, ux_max: float) -> float:
        return min(self.dt, self.cfl_cap * h / max(ux_max, 1e-12))


@dataclass(frozen=True, eq=False)
class EulerState:
    t: float
    fields: FieldPair
    step_count: int = 0
    jacobian: Optional[np.ndarray] = None

    @property
    def grid(self) -> GridSpec:
        return self.fields.grid


@dataclass(eq=False)
class Trajectory:
    """Timestamped states plus monitored norms at each output time."""

    form: str
    p: float
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    besov_m: list = field(default_factory=list)
    linf_u: list = field(default_factory=list)
    linf_ux: list = field(default_factory=list)
    mass_m: list = field(default_factory=list)
    min_jacobian: list = field(default_factory=list)
    abort_reason: Optional[str] = None
    abort_time: Optional[float] = None

    def u_array(self) -> np.ndarray:
        return np.array([s.fields.u.values for s in self.states])

    def m_array(self) -> np.ndarray:
        return np.array([s.fields.m.values for s in self.states])

    @property
    def final(self) -> EulerState:
        return self.states[-1]

    def series(self) -> dict:
        return {
            "t": np.asarray(self.times),
            "besov_m": np.asarray(self.besov_m),
            "linf_u": np.asarray(self.linf_u),
            "linf_ux": np.asarray(self.linf_ux),
            "mass_m": np.asarray(self.mass_m),
        }


class _Spectral:
    """Cached symbols for one grid."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.n = grid.n_points
        self.d1 = diff_matrix_symbol(grid, 1)
        self.d2 = diff_matrix_symbol(grid, 2)
        self.helm = 1.0 / (1.0 + grid.wavenumbers**2)
        k = np.arange(self.n // 2 + 1)
        self.dealias = (k <= self.n // 3).astype(float)

    def irfft(self, spec):
        return np.fft.irfft(spec, n=self.n)

    def filt(self, values):
        return self.irfft(np.fft.rfft(values) * self.dealias)


_CACHE: dict = {}


def _spectral(grid: GridSpec) -> _Spectral:
    sp = _CACHE.get(grid)
    if sp is None:
        sp = _CACHE[grid] = _Spectral(grid)
    return sp


def m_form_rate(m: np.ndarray, sp: _Spectral, jac: Optional[np.ndarray] = None):
    """Time derivative of ``m`` (and of ``J`` if given)."""
    mh = np.fft.rfft(m)
    uh = mh * sp.helm
    u = sp.irfft(uh)
    ux = sp.irfft(uh * sp.d1)
    mx = sp.irfft(mh * sp.d1)
    dm = sp.filt(ux * mx + rhs_m_form(m, u, ux))
    if jac is None:
        return dm, None
    jx = sp.irfft(np.fft.rfft(jac) * sp.d1)
    return dm, sp.filt(ux * jx + (m - u) * jac)


def u_form_rate(u: np.ndarray, sp: _Spectral, jac: Optional[np.ndarray] = None):
    """Time derivative of ``u`` from ``u_t = u_x^2 + G*(u_x^2 + u_xx^2/2) - u_x^2/2``."""
    uh = np.fft.rfft(u)
    ux = sp.irfft(uh * sp.d1)
    uxx = sp.irfft(uh * sp.d2)
    ux2 = sp.filt(ux * ux)
    nonlocal_part = sp.irfft(np.fft.rfft(ux * ux + 0.5 * uxx * uxx) * sp.dealias * sp.helm)
    du = 0.5 * ux2 + nonlocal_part
    if jac is None:
        return du, None
    jx = sp.irfft(np.fft.rfft(jac) * sp.d1)
    # m - u = -u_xx
    return du, sp.filt(ux * jx - uxx * jac)


def _rk4(rate, y, jac, dt, sp):
    k1, j1 = rate(y, sp, jac)
    if jac is None:
        k2, _ = rate(y + 0.5 * dt * k1, sp)
        k3, _ = rate(y + 0.5 * dt * k2, sp)
        k4, _ = rate(y + dt * k3, sp)
        return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), None
    k2, j2 = rate(y + 0.5 * dt * k1, sp, jac + 0.5 * dt * j1)
    k3, j3 = rate(y + 0.5 * dt * k2, sp, jac + 0.5 * dt * j2)
    k4, j4 = rate(y + dt * k3, sp, jac + dt * j3)
    return (y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4),
            jac + dt / 6.0 * (j1 + 2 * j2 + 2 * j3 + j4))


def _initial_jacobian(state: EulerState, controls: TimeControls):
    if controls.jacobian_floor is None:
        return None
    if state.jacobian is not None:
        return state.jacobian
    return np.ones(state.grid.n_points)


def _check(t, u, ux, m, jac, controls):
    norms = {
        "linf_u": float(np.max(np.abs(u))) if np.all(np.isfinite(u)) else math.inf,
        "linf_ux": float(np.max(np.abs(ux))) if np.all(np.isfinite(ux)) else math.inf,
        "linf_m": float(np.max(np.abs(m))) if np.all(np.isfinite(m)) else math.inf,
    }
    if jac is not None:
        norms["min_jacobian"] = float(np.min(jac)) if np.all(np.isfinite(jac)) else -math.inf
    if not all(math.isfinite(v) for v in norms.values()):
        return "non-finite values", norms
    if norms["linf_ux"] > controls.safety:
        return f"||u_x||_inf exceeds safety {controls.safety}", norms
    if jac is not None and norms["min_jacobian"] < controls.jacobian_floor:
        return f"min Jacobian below {controls.jacobian_floor}", norms
    return None, norms


def step_m_form(state: EulerState, controls: TimeControls, dt: Optional[float] = None) -> EulerState:
    """One RK4 step of the momentum form; ``u`` is refreshed at every stage."""
    sp = _spectral(state.grid)
    if dt is None:
        dt = controls.effective_dt(state.grid.spacing, state.fields.u_x.sup())
    jac = _initial_jacobian(state, controls)
    m, jac = _rk4(m_form_rate, state.fields.m.values, jac, dt, sp)
    return _finish(state, dt, m_to_pair(m, sp), jac, controls)


def step_u_form(state: EulerState, controls: TimeControls, dt: Optional[float] = None) -> EulerState:
    """One RK4 step of the velocity form."""
    sp = _spectral(state.grid)
    if dt is None:
        dt = controls.effective_dt(state.grid.spacing, state.fields.u_x.sup())
    jac = _initial_jacobian(state, controls)
    u, jac = _rk4(u_form_rate, state.fields.u.values, jac, dt, sp)
    return _finish(state, dt, u_to_pair(u, sp), jac, controls)


def _finish(state, dt, arrays, jac, controls):
    u, m, ux, uxx = arrays
    t = state.t + dt
    reason, norms = _check(t, u, ux, m, jac, controls)
    if reason is not None:
        raise IncipientBlowUp(reason, t, norms)
    g = state.grid
    pair = FieldPair(GridFunction(g, u), GridFunction(g, m), GridFunction(g, ux), GridFunction(g, uxx))
    return EulerState(t, pair, state.step_count + 1, jac)


def m_to_pair(m, sp):
    uh = np.fft.rfft(m) * sp.helm
    u = sp.irfft(uh)
    return u, m, sp.irfft(uh * sp.d1), u - m


def u_to_pair(u, sp):
    uh = np.fft.rfft(u)
    uxx = sp.irfft(uh * sp.d2)
    return u, u - uxx, sp.irfft(uh * sp.d1), uxx


def _reproject(state: EulerState, form: str) -> EulerState:
    g = state.grid
    if form == "m":
        pair = FieldPair.from_m(GridFunction(g, _momentum(_helmholtz(state.fields.m.values, g), g)))
    else:
        pair = FieldPair.from_u(state.fields.u)
    return replace(state, fields=pair)


def _record(traj: Trajectory, state: EulerState, bank, params):
    f = state.fields
    traj.times.append(state.t)
    traj.states.append(state)
    traj.besov_m.append(float(besov_norm_array(f.m.values, params.s, params.p, params.r, bank)))
    traj.linf_u.append(f.u.sup())
    traj.linf_ux.append(f.u_x.sup())
    traj.mass_m.append(float(state.grid.spacing * np.sum(f.m.values)))
    traj.min_jacobian.append(float(np.min(state.jacobian)) if state.jacobian is not None else 1.0)


def simulate(m0: GridFunction, controls: TimeControls, form: str = "m", p: float = 2.0,
             bank: Optional[DyadicFilterBank] = None, u0: Optional[GridFunction] = None) -> Trajectory:
    """Integrate from ``m0`` to ``controls.t_end``.

    ``form`` selects the momentum (``"m"``) or velocity (``"u"``) equation.
    For the velocity form ``u0`` may be passed directly; otherwise it is
    recovered from ``m0``. Raises :class:`IncipientBlowUp` on abort with the
    partial trajectory attached.
    """
    if form not in ("m", "u"):
        raise ValueError("form must be 'm' or 'u'")
    grid = m0.grid
    bank = bank or make_filter_bank(grid)
    params = BesovParams.critical(p)
    norm0 = float(besov_norm_array(m0.values, params.s, p, 1.0, bank))
    if norm0 > 0:
        t_est = controls.theta / norm0
        if controls.t_end > t_est:
            warnings.warn(
                f"t_end={controls.t_end} exceeds the existence-window estimate {t_est:.3g}",
                RuntimeWarning,
                stacklevel=2,
            )
    if form == "u" and u0 is not None:
        fields = FieldPair.from_u(u0)
    else:
        fields = FieldPair.from_m(m0)
    state = EulerState(0.0, fields, 0, _initial_jacobian(EulerState(0.0, fields), controls))
    stepper = step_m_form if form == "m" else step_u_form
    traj = Trajectory(form=form, p=p)
    _record(traj, state, bank, params)

    out_dt = controls.output_dt
    n_out = 1
    next_out = out_dt if out_dt is not None else None
    t_end = controls.t_end
    tiny = 1e-12 * max(1.0, t_end)
    while state.t < t_end - tiny:
        dt = controls.effective_dt(grid.spacing, state.fields.u_x.sup())
        target = t_end if next_out is None else min(next_out, t_end)
        if state.t + dt > target - tiny:
            dt = target - state.t
        prev = state
        try:
            state = stepper(state, controls, dt)
        except IncipientBlowUp as exc:
            traj.abort_reason = exc.reason
            traj.abort_time = _crossing_time(prev, exc, dt, controls)
            exc.trajectory = traj
            raise
        if next_out is None:
            state = _reproject(state, form)
            _record(traj, state, bank, params)
        elif abs(state.t - target) <= tiny:
            n_out += 1
            next_out = n_out * out_dt
            state = _reproject(state, form)
            _record(traj, state, bank, params)
    if next_out is not None and traj.times[-1] < state.t:
        _record(traj, state, bank, params)
    return traj


def _crossing_time(prev: EulerState, exc: IncipientBlowUp, dt: float, controls: TimeControls) -> float:
    """Linear-in-time estimate of when the Jacobian floor was crossed."""
    if "min_jacobian" in exc.norms and controls.jacobian_floor is not None and prev.jacobian is not None:
        j0 = float(np.min(prev.jacobian))
        j1 = exc.norms["min_jacobian"]
        floor = controls.jacobian_floor
        if math.isfinite(j1) and j0 > floor > j1:
            return prev.t + dt * (j0 - floor) / (j0 - j1)
    return exc.t


@dataclass(frozen=True)
class MassBalanceReport:
    verdict: str            # "pass", "fail" or "inconclusive"
    max_residual: float
    relative_residual: float
    lhs: np.ndarray         # centred d/dt of the mass
    rhs: np.ndarray         # 3/2 ||u_x||^2 + 1/2 ||u_xx||^2
    tolerance: float


def mass_production(fields: FieldPair) -> float:
    """``(3/2) ||u_x||_2^2 + (1/2) ||u_xx||_2^2`` by the rectangle rule."""
    h = fields.grid.spacing
    ux = fields.u_x.values
    uxx = fields.u_xx.values
    return float(h * (1.5 * np.dot(ux, ux) + 0.5 * np.dot(uxx, uxx)))


def mass_balance_check(traj: Trajectory, tolerance: float = 1e-5, max_cadence: float = 1e-2) -> MassBalanceReport:
    """Compare centred differences of ``int m`` with the production integral.

    Integrating the momentum equation over a period and integrating by parts
    gives ``d/dt int m = int (3/2 u_x^2 + 1/2 u_xx^2)``.
    """
    t = np.asarray(traj.times)
    mass = np.asarray(traj.mass_m)
    if t.size < 3:
        return MassBalanceReport("inconclusive", math.nan, math.nan, np.array([]), np.array([]), tolerance)
    gaps = np.diff(t)
    if gaps.max() > max_cadence:
        return MassBalanceReport("inconclusive", math.nan, math.nan, np.array([]), np.array([]), tolerance)
    # nonuniform centred difference (second order)
    h0, h1 = gaps[:-1], gaps[1:]
    lhs = (h0**2 * mass[2:] - h1**2 * mass[:-2] + (h1**2 - h0**2) * mass[1:-1]) / (h0 * h1 * (h0 + h1))
    rhs = np.array([mass_production(s.fields) for s in traj.states[1:-1]])
    resid = np.abs(lhs - rhs)
    scale = np.max(np.abs(rhs))
    max_res = float(resid.max())
    # a difference quotient of the mass cannot resolve less than this
    noise = 16.0 * np.finfo(float).eps * float(np.max(np.abs(mass))) / float(gaps.min())
    if max_res <= noise:
        rel = 0.0
    elif scale == 0:
        rel = 0.0 if max_res == 0 else math.inf
    else:
        rel = max_res / scale
    verdict = "pass" if rel < tolerance else "fail"
    return MassBalanceReport(verdict, max_res, float(rel), lhs, rhs, tolerance)


def richardson_order(run, dt: float) -> float:
    """Observed temporal order from solutions at ``dt``, ``dt/2``, ``dt/4``.

    ``run(dt)`` must return the final solution array.
    """
    a, b, c = run(dt), run(dt / 2), run(dt / 4)
    e1 = np.max(np.abs(a - b))
    e2 = np.max(np.abs(b - c))
    return float(np.log2(e1 / e2))
