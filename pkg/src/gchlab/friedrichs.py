"""The frozen-coefficient iteration behind the existence argument.

Starting from ``m_0(t) = m0``, each iterate solves the linear transport
problem::

    d_t m_{n+1} - (d_x u_n) d_x m_{n+1} = F(m_n, u_n),   m_{n+1}(0) = S_{n+1} m0

with ``u_n = (1 - d_x^2)^{-1} m_n``. All iterates share one uniform time
grid; coefficients at RK4 half steps come from cubic interpolation in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import rhs_m_form, rhs_m_form_factored
from .euler import TimeControls, _spectral
from .spectral import (
    BesovParams,
    DyadicFilterBank,
    GridFunction,
    GridSpec,
    besov_norm_array,
    low_cutoff,
    make_filter_bank,
)


class CFLViolation(ValueError):
    pass


class TimeSeriesField:
    """Samples of a field on a uniform time grid ``t_k = k dt``.

    Values between samples are obtained by four-point (cubic) Lagrange
    interpolation; a static field is a series with a single sample.
    """

    def __init__(self, grid: GridSpec, values: np.ndarray, dt: Optional[float] = None):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.shape[1] != grid.n_points:
            raise ValueError("sample width does not match the grid")
        if values.shape[0] > 1 and not (dt and dt > 0):
            raise ValueError("a time-dependent series needs a positive dt")
        self.grid = grid
        self.values = values
        self.dt = dt

    @classmethod
    def static(cls, f) -> "TimeSeriesField":
        if isinstance(f, GridFunction):
            return cls(f.grid, f.values)
        raise TypeError("static() expects a GridFunction")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def at(self, t: float) -> np.ndarray:
        if self.n_samples == 1:
            return self.values[0]
        s = t / self.dt
        k = int(round(s))
        if abs(s - k) < 1e-9:
            return self.values[min(max(k, 0), self.n_samples - 1)]
        base = int(math.floor(s)) - 1
        base = min(max(base, 0), self.n_samples - 4)
        nodes = np.arange(base, base + 4)
        w = np.ones(4)
        for i in range(4):
            for j in range(4):
                if i != j:
                    w[i] *= (s - nodes[j]) / (nodes[i] - nodes[j])
        return w @ self.values[base: base + 4]


def linear_transport_solve(velocity: TimeSeriesField, source: TimeSeriesField, init: GridFunction,
                           controls: TimeControls) -> np.ndarray:
    """Solve ``f_t + v f_x = g`` with RK4 on the uniform grid ``k * dt``.

    Returns the samples ``f(t_k)``, shape ``(n_steps + 1, N)``.
    """
    grid = init.grid
    sp = _spectral(grid)
    dt = controls.dt
    n_steps = int(round(controls.t_end / dt))
    if abs(n_steps * dt - controls.t_end) > 1e-9 * max(1.0, controls.t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    vmax = float(np.max(np.abs(velocity.values)))
    if dt * vmax > controls.cfl_cap * grid.spacing:
        raise CFLViolation(
            f"dt * max|v| = {dt * vmax:.3g} exceeds cfl_cap * h = {controls.cfl_cap * grid.spacing:.3g}"
        )

    def rate(f, t):
        fx = sp.irfft(np.fft.rfft(f) * sp.d1)
        return sp.filt(-velocity.at(t) * fx) + source.at(t)

    out = np.empty((n_steps + 1, grid.n_points))
    f = init.values.copy()
    out[0] = f
    for k in range(n_steps):
        t = k * dt
        k1 = rate(f, t)
        k2 = rate(f + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rate(f + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rate(f + dt * k3, t + dt)
        f = f + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = f
    return out


@dataclass(eq=False)
class IterationTrace:
    grid: GridSpec
    dt: float
    p: float
    m0_norm: float
    iterates: list = field(default_factory=list)   # arrays (n_times, N); iterates[0] is m_0
    norms: list = field(default_factory=list)      # sup_t ||m_n||_B per iterate
    norm_series: list = field(default_factory=list)  # ||m_n(t)||_B per iterate
    diffs: list = field(default_factory=list)      # sup_t ||m_{n+1} - m_n||_B, n = 0, 1, ...
    stopped: Optional[str] = None
    source_form_gap: float = 0.0

    @property
    def times(self) -> np.ndarray:
        n = self.iterates[-1].shape[0]
        return self.dt * np.arange(n)

    @property
    def contraction_ratios(self) -> list:
        d = self.diffs
        return [d[i + 1] / d[i] if d[i] > 0 else math.nan for i in range(len(d) - 1)]

    def U(self, n: int) -> np.ndarray:
        """``int_0^t ||m_n||_B`` by the trapezoid rule."""
        s = self.norm_series[n]
        out = np.zeros_like(s)
        out[1:] = np.cumsum(0.5 * self.dt * (s[1:] + s[:-1]))
        return out


def _norm_series(values: np.ndarray, params: BesovParams, bank: DyadicFilterBank) -> np.ndarray:
    return np.asarray(besov_norm_array(values, params.s, params.p, params.r, bank))


def iterate(m0: GridFunction, n_max: int, controls: TimeControls, bank: Optional[DyadicFilterBank] = None,
            p: float = 2.0, divergence_factor: float = 10.0) -> IterationTrace:
    """Run ``n_max`` iterations of the frozen-coefficient scheme."""
    grid = m0.grid
    bank = bank or make_filter_bank(grid)
    params = BesovParams.critical(p)
    sp = _spectral(grid)
    dt = controls.dt
    n_times = int(round(controls.t_end / dt)) + 1
    a = float(besov_norm_array(m0.values, params.s, p, 1.0, bank))
    bound = a / (1.0 - 2.0 * a * controls.t_end) if 2.0 * a * controls.t_end < 1 else math.inf

    trace = IterationTrace(grid=grid, dt=dt, p=p, m0_norm=a)
    current = np.broadcast_to(m0.values, (n_times, grid.n_points)).copy()
    trace.iterates.append(current)
    series = _norm_series(current, params, bank)
    trace.norm_series.append(series)
    trace.norms.append(float(series.max()))

    for n in range(n_max):
        uh = np.fft.rfft(current, axis=-1) * sp.helm
        u = np.fft.irfft(uh, n=grid.n_points, axis=-1)
        ux = np.fft.irfft(uh * sp.d1, n=grid.n_points, axis=-1)
        src = rhs_m_form(current, u, ux)
        if n == 0:
            alt = rhs_m_form_factored(current[0], u[0], ux[0])
            scale = max(1.0, float(np.max(np.abs(src[0]))))
            trace.source_form_gap = float(np.max(np.abs(alt - src[0]))) / scale
            if trace.source_form_gap > 1e-12:
                raise AssertionError(f"source forms disagree by {trace.source_form_gap:.3g}")
        velocity = TimeSeriesField(grid, -ux, dt)
        source = TimeSeriesField(grid, src, dt)
        init = low_cutoff(m0, n + 1, bank)
        nxt = linear_transport_solve(velocity, source, init, controls)
        series = _norm_series(nxt, params, bank)
        trace.diffs.append(float(_norm_series(nxt - current, params, bank).max()))
        trace.iterates.append(nxt)
        trace.norm_series.append(series)
        trace.norms.append(float(series.max()))
        current = nxt
        if not np.all(np.isfinite(nxt)) or trace.norms[-1] > divergence_factor * bound:
            trace.stopped = (
                f"iterate {n + 1}: sup_t norm {trace.norms[-1]:.4g} exceeds "
                f"{divergence_factor} x bound estimate {bound:.4g}"
            )
            break
    return trace


def contraction_verdict(trace: IterationTrace, start: int = 3, floor: float = 1e-12):
    """Largest contraction ratio ``diffs[n+1] / diffs[n]`` over ``n >= start``.

    Ratios are only formed while both differences exceed ``floor`` times the
    iterate norm; below that the sequence has converged to rounding level.
    """
    scale = max(max(trace.norms), 1e-300)
    ratios = []
    for n in range(start, len(trace.diffs) - 1):
        d0, d1 = trace.diffs[n], trace.diffs[n + 1]
        if d0 > floor * scale and d1 > floor * scale:
            ratios.append(d1 / d0)
    rho = max(ratios) if ratios else 0.0
    return rho, ratios


@dataclass(frozen=True)
class BoundReport:
    fitted_C: float
    premise_T_bound: float    # largest T with 2 C^2 T ||m0|| < 1
    t_end: float
    passed: bool
    violation: Optional[tuple] = None  # (n, t) that defeats the premise
    m0_norm: float = 0.0
    raw_C: float = 1.0        # smallest C before the C >= 1 floor

    def as_dict(self) -> dict:
        return {
            "fitted_C": self.fitted_C,
            "premise_T_bound": self.premise_T_bound,
            "t_end": self.t_end,
            "passed": self.passed,
            "violation": self.violation,
            "m0_norm": self.m0_norm,
            "raw_C": self.raw_C,
        }


def _required_C(norm: np.ndarray, a: float, t: np.ndarray) -> np.ndarray:
    """Smallest C with ``norm <= C a / (1 - 2 C^2 a t)`` (positive root)."""
    out = norm / a
    pos = t > 0
    q = 2.0 * norm[pos] * a * t[pos]
    out[pos] = (-a + np.sqrt(a * a + 4.0 * q * norm[pos])) / (2.0 * q)
    return out


def apriori_bound_check(trace: IterationTrace, min_iterates: int = 5) -> BoundReport:
    """Fit the smallest ``C >= 1`` satisfying the a priori bound for all ``(n, t)``."""
    if len(trace.iterates) - 1 < min_iterates:
        raise ValueError(f"need at least {min_iterates} iterates, got {len(trace.iterates) - 1}")
    t = trace.times
    t_end = float(t[-1])
    a = trace.m0_norm
    if a == 0:
        return BoundReport(1.0, math.inf, t_end, True, None, 0.0, 0.0)
    raw = 0.0
    arg = None
    for n, series in enumerate(trace.norm_series[1:], start=1):
        c = _required_C(np.asarray(series, dtype=float), a, t)
        k = int(np.argmax(c))
        if c[k] > raw:
            raw, arg = float(c[k]), (n, float(t[k]))
    best = max(raw, 1.0)
    t_bound = 1.0 / (2.0 * best * best * a)
    passed = 2.0 * best * best * t_end * a < 1.0
    return BoundReport(best, t_bound, t_end, passed, None if passed else arg, a, raw)


def bound_stability(reports: Sequence[BoundReport], max_drift: float = 0.2):
    """Drift of fitted constants across runs and whether the largest covers all."""
    cs = [r.fitted_C for r in reports]
    c = max(cs)
    drift = (c - min(cs)) / c
    # the bound is increasing in C while the premise holds, so max(C) covers every run
    covers = all(2.0 * c * c * r.t_end * r.m0_norm < 1.0 for r in reports)
    return drift, drift <= max_drift and covers, c
