"""Particle solver for the characteristic system.

Each particle carries its label ``xi``, position ``y``, stretching ``yxi``,
momentum ``M = m(y)``, velocity ``U = u(y)`` and ``Uxi = u_x(y) yxi``::

    dy/dt   = -Uxi / yxi
    dyxi/dt = (M - U) yxi
    dM/dt   = -M^2/2 + U M + (Uxi/yxi)^2 / 2 - U^2 / 2
    dU/dt   = A - (Uxi/yxi)^2 / 2
    dUxi/dt = -B yxi - Uxi (U - M)

with the kernel integrals over labels ``eta``::

    A(xi) = 1/2 int exp(-|y(xi) - y(eta)|) w(eta) d eta
    B(xi) = 1/2 int sign(xi - eta) exp(-|y(xi) - y(eta)|) w(eta) d eta
    w     = ((Uxi/yxi)^2 + (U - M)^2 / 2) yxi

``(dG/dx) * f`` evaluated at ``y`` equals ``-B``, hence the minus sign in
the ``Uxi`` equation. While ``y`` is increasing, ``sign(y(xi) - y(eta))``
equals ``sign(xi - eta)`` and both integrals reduce to one forward and one
backward sweep with local factors ``exp(-(y[i+1] - y[i]))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numba
import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .core import FieldPair, _green_deriv, _helmholtz
from .euler import TimeControls
from .spectral import GridFunction, GridSpec


class BreakingError(RuntimeError):
    """The ensemble left the regime where the particle system is valid."""

    def __init__(self, message: str, report: "BreakingReport | None" = None, history=None):
        super().__init__(message)
        self.report = report
        self.history = history


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    xi: np.ndarray
    y: np.ndarray
    yxi: np.ndarray
    M: np.ndarray
    U: np.ndarray
    Uxi: np.ndarray
    t: float = 0.0
    period: float = 0.0
    log_yxi: Optional[np.ndarray] = None  # int_0^t (M - U), integrated alongside

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def dxi(self) -> float:
        return self.period / self.n

    def is_monotone(self) -> bool:
        gaps = np.diff(self.y)
        wrap = self.y[0] + self.period - self.y[-1]
        return bool(np.all(gaps > 0) and wrap > 0)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["xi", "y", "yxi", "M", "U", "Uxi"])
            for row in zip(self.xi, self.y, self.yxi, self.M, self.U, self.Uxi):
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class BreakingReport:
    min_yxi: float
    t_of_min: float
    breached: bool
    threshold: float = 0.5
    t_breach: Optional[float] = None   # first crossing of the threshold, if any

    def as_dict(self) -> dict:
        return {
            "min_yxi": self.min_yxi,
            "t_of_min": self.t_of_min,
            "breached": self.breached,
            "threshold": self.threshold,
            "t_breach": self.t_breach,
        }


def resample(values: np.ndarray, n_new: int) -> np.ndarray:
    """Trigonometric resampling of periodic samples onto ``n_new`` nodes."""
    n = values.size
    if n_new == n:
        return values.copy()
    spec = np.fft.rfft(values)
    out = np.zeros(n_new // 2 + 1, dtype=complex)
    k = min(spec.size, out.size)
    out[:k] = spec[:k]
    # a shared Nyquist mode is kept only when it exists on both grids
    if n_new < n:
        out[-1] = out[-1].real
    elif n % 2 == 0:
        out[n // 2] *= 0.5
    return np.fft.irfft(out, n=n_new) * (n_new / n)


def init_particles(m0: GridFunction, n_particles: Optional[int] = None) -> ParticleEnsemble:
    """Particles at the grid nodes with ``y = xi``, ``yxi = 1``."""
    grid = m0.grid
    values = m0.values
    if n_particles is not None and n_particles != grid.n_points:
        grid = GridSpec(grid.half_length, n_particles)
        values = resample(values, n_particles)
    xi = grid.nodes
    n = grid.n_points
    return ParticleEnsemble(
        xi=xi,
        y=xi.copy(),
        yxi=np.ones(n),
        M=values.copy(),
        U=_helmholtz(values, grid),
        Uxi=_green_deriv(values, grid),
        t=0.0,
        period=2.0 * grid.half_length,
        log_yxi=np.zeros(n),
    )


@numba.njit(cache=True)
def _sweeps(y, w, period):
    """Forward and backward sums over three periodic copies.

    fwd[i] = sum_{j <= i} exp(-(y_i - y_j)) w_j, bwd[i] = sum_{j >= i} exp(-(y_j - y_i)) w_j,
    where j runs over the images j - N, j, j + N; only the middle copy is returned.
    """
    n = y.size
    ext_y = np.empty(3 * n)
    ext_w = np.empty(3 * n)
    for c in range(3):
        for i in range(n):
            ext_y[c * n + i] = y[i] + (c - 1) * period
            ext_w[c * n + i] = w[i]
    fwd = np.empty(3 * n)
    bwd = np.empty(3 * n)
    fwd[0] = ext_w[0]
    for i in range(1, 3 * n):
        fwd[i] = math.exp(-(ext_y[i] - ext_y[i - 1])) * fwd[i - 1] + ext_w[i]
    bwd[3 * n - 1] = ext_w[3 * n - 1]
    for i in range(3 * n - 2, -1, -1):
        bwd[i] = math.exp(-(ext_y[i + 1] - ext_y[i])) * bwd[i + 1] + ext_w[i]
    return fwd[n:2 * n].copy(), bwd[n:2 * n].copy()


def kernel_weight(ens: ParticleEnsemble) -> np.ndarray:
    ux = ens.Uxi / ens.yxi
    d = ens.U - ens.M
    return (ux * ux + 0.5 * d * d) * ens.yxi


def nonlocal_integrals(ens: ParticleEnsemble, w: Optional[np.ndarray] = None):
    """Even and odd kernel integrals ``(A, B)`` in O(N) by two sweeps."""
    if not ens.is_monotone():
        raise BreakingError("particle positions are not strictly increasing")
    if w is None:
        w = kernel_weight(ens)
    fwd, bwd = _sweeps(np.ascontiguousarray(ens.y), np.ascontiguousarray(w), ens.period)
    c = 0.5 * ens.dxi
    return c * (fwd + bwd - w), c * (fwd - bwd)


def nonlocal_integrals_direct(ens: ParticleEnsemble, w: Optional[np.ndarray] = None, use_label_sign: bool = True):
    """O(N^2) reference evaluation of ``(A, B)`` with images ``|k| <= 1``.

    ``use_label_sign=False`` uses ``sign(y_i - y_j)`` instead of
    ``sign(xi_i - xi_j)``.
    """
    if w is None:
        w = kernel_weight(ens)
    n = ens.n
    a = np.zeros(n)
    b = np.zeros(n)
    for k in (-1, 0, 1):
        dy = ens.y[:, None] - (ens.y[None, :] + k * ens.period)
        kern = np.exp(-np.abs(dy)) * w[None, :]
        if use_label_sign:
            dl = ens.xi[:, None] - (ens.xi[None, :] + k * ens.period)
            sgn = np.sign(dl)
        else:
            sgn = np.sign(dy)
        a += kern.sum(axis=1)
        b += (sgn * kern).sum(axis=1)
    c = 0.5 * ens.dxi
    return c * a, c * b


@dataclass(frozen=True, eq=False)
class LagrangeRates:
    y: np.ndarray
    yxi: np.ndarray
    M: np.ndarray
    U: np.ndarray
    Uxi: np.ndarray
    log_yxi: np.ndarray


def rhs_lagrange(ens: ParticleEnsemble) -> LagrangeRates:
    if np.min(ens.yxi) < 1e-8:
        raise BreakingError(f"y_xi fell to {np.min(ens.yxi):.3g}")
    a, b = nonlocal_integrals(ens)
    ux = ens.Uxi / ens.yxi
    mu = ens.M - ens.U
    return LagrangeRates(
        y=-ux,
        yxi=mu * ens.yxi,
        M=-0.5 * ens.M**2 + ens.U * ens.M + 0.5 * ux * ux - 0.5 * ens.U**2,
        U=a - 0.5 * ux * ux,
        Uxi=-b * ens.yxi + ens.Uxi * mu,
        log_yxi=mu,
    )


_FIELDS = ("y", "yxi", "M", "U", "Uxi", "log_yxi")


def _advance(ens: ParticleEnsemble, rates: LagrangeRates, dt: float) -> ParticleEnsemble:
    kw = {f: getattr(ens, f) + dt * getattr(rates, f) for f in _FIELDS}
    return replace(ens, **kw)


def stable_dt(ens: ParticleEnsemble, controls: TimeControls) -> float:
    speed = np.max(np.abs(ens.Uxi / ens.yxi))
    cap = controls.cfl_cap * ens.dxi * np.min(ens.yxi) / max(speed, 1e-12)
    return min(controls.dt, cap)


def step(ens: ParticleEnsemble, controls: TimeControls, dt: Optional[float] = None) -> ParticleEnsemble:
    """One classical RK4 step; monotonicity and positivity are re-checked."""
    if dt is None:
        dt = stable_dt(ens, controls)
    k1 = rhs_lagrange(ens)
    k2 = rhs_lagrange(_advance(ens, k1, 0.5 * dt))
    k3 = rhs_lagrange(_advance(ens, k2, 0.5 * dt))
    k4 = rhs_lagrange(_advance(ens, k3, dt))
    kw = {}
    for f in _FIELDS:
        kw[f] = getattr(ens, f) + dt / 6.0 * (
            getattr(k1, f) + 2 * getattr(k2, f) + 2 * getattr(k3, f) + getattr(k4, f)
        )
    new = replace(ens, t=ens.t + dt, **kw)
    if not all(np.all(np.isfinite(getattr(new, f))) for f in _FIELDS):
        raise BreakingError(f"non-finite particle state at t={new.t:.6g}")
    if np.min(new.yxi) <= 0 or not new.is_monotone():
        raise BreakingError(f"lost monotonicity at t={new.t:.6g}")
    return new


@dataclass(eq=False)
class LagrangeHistory:
    times: list = field(default_factory=list)
    min_yxi: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    aborted: Optional[str] = None

    @property
    def final(self) -> ParticleEnsemble:
        return self.snapshots[-1]


def evolve(ens: ParticleEnsemble, controls: TimeControls, stop_below: Optional[float] = None,
           record_every: int = 1) -> LagrangeHistory:
    """Step to ``controls.t_end``.

    ``stop_below`` stops the run once ``min y_xi`` drops below it. A
    :class:`BreakingError` inside a step ends the run with ``aborted`` set.
    """
    hist = LagrangeHistory()
    hist.times.append(ens.t)
    hist.min_yxi.append(float(np.min(ens.yxi)))
    hist.snapshots.append(ens)
    t_end = controls.t_end
    tiny = 1e-12 * max(1.0, t_end)
    k = 0
    while ens.t < t_end - tiny:
        dt = stable_dt(ens, controls)
        if ens.t + dt > t_end - tiny:
            dt = t_end - ens.t
        try:
            ens = step(ens, controls, dt)
        except BreakingError as exc:
            hist.aborted = str(exc)
            break
        k += 1
        hist.times.append(ens.t)
        hist.min_yxi.append(float(np.min(ens.yxi)))
        if k % record_every == 0 or ens.t >= t_end - tiny:
            hist.snapshots.append(ens)
        if stop_below is not None and hist.min_yxi[-1] < stop_below:
            if hist.snapshots[-1] is not ens:
                hist.snapshots.append(ens)
            break
    return hist


def breaking_monitor(history: LagrangeHistory, threshold: float = 0.5) -> BreakingReport:
    mins = np.asarray(history.min_yxi)
    times = np.asarray(history.times)
    i = int(np.argmin(mins))
    below = np.nonzero(mins < threshold)[0]
    t_breach = None
    if below.size:
        k = int(below[0])
        if k == 0:
            t_breach = float(times[0])
        else:
            j0, j1 = mins[k - 1], mins[k]
            t_breach = float(times[k - 1] + (times[k] - times[k - 1]) * (j0 - threshold) / (j0 - j1))
    return BreakingReport(float(mins[i]), float(times[i]), bool(below.size), threshold, t_breach)


def _periodic_extend(x, period, *arrays, pad=3):
    xs = np.concatenate([x[-pad:] - period, x, x[:pad] + period])
    out = [np.concatenate([a[-pad:], a, a[:pad]]) for a in arrays]
    return xs, out


def to_eulerian(ens: ParticleEnsemble, grid: GridSpec) -> FieldPair:
    """Interpolate particle data back to grid nodes.

    ``u`` uses cubic Hermite interpolation with the carried slopes
    ``Uxi / yxi``; ``m`` uses monotone (PCHIP) interpolation. ``u_xx`` is
    set to ``u - m``.
    """
    if not ens.is_monotone():
        raise BreakingError("cannot invert a non-monotone particle map")
    x = grid.nodes
    if ens.n == grid.n_points and np.array_equal(ens.y, x):
        u, m, ux = ens.U.copy(), ens.M.copy(), ens.Uxi / ens.yxi
    else:
        period = ens.period
        # fold nodes into the window covered by the extended particle set
        xq = ens.y[0] + np.mod(x - ens.y[0], period)
        ys, (us, ms, uxs) = _periodic_extend(ens.y, period, ens.U, ens.M, ens.Uxi / ens.yxi)
        hs = CubicHermiteSpline(ys, us, uxs)
        u = hs(xq)
        ux = hs(xq, 1)
        m = PchipInterpolator(ys, ms)(xq)
    return FieldPair(GridFunction(grid, u), GridFunction(grid, m), GridFunction(grid, ux), GridFunction(grid, u - m))


def eulerian_at_particles(values: np.ndarray, grid: GridSpec, ens: ParticleEnsemble) -> np.ndarray:
    """Evaluate a grid field's trigonometric interpolant at the particle positions."""
    from .spectral import evaluate_trig

    return evaluate_trig(values, grid, ens.y)
