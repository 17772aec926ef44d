"""The generalized Camassa-Holm model on a periodic grid.

Velocity ``u`` and momentum ``m = u - u_xx`` are linked through the Green's
kernel ``G(x) = exp(-|x|) / 2`` of ``1 - d^2/dx^2``. The kernel is applied
through its exact periodic symbol ``1 / (1 + xi^2)``.

Momentum form::

    m_t - u_x m_x = -m^2/2 + u m + u_x^2/2 - u^2/2

Velocity (transport) form, along characteristics ``dy/dt = -u_x``::

    u_t - u_x u_x = G * (u_x^2 + u_xx^2 / 2) - u_x^2 / 2
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import (
    BesovParams,
    DyadicFilterBank,
    GridFunction,
    GridSpec,
    band_limited_random,
    besov_norm,
    diff_array,
    diff_matrix_symbol,
    make_filter_bank,
)


def helmholtz_symbol(grid: GridSpec) -> np.ndarray:
    xi = grid.wavenumbers
    return 1.0 / (1.0 + xi * xi)


def _helmholtz(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = np.fft.rfft(values, axis=-1)
    return np.fft.irfft(spec * helmholtz_symbol(grid), n=grid.n_points, axis=-1)


def _green_deriv(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = np.fft.rfft(values, axis=-1)
    sym = diff_matrix_symbol(grid, 1) * helmholtz_symbol(grid)
    return np.fft.irfft(spec * sym, n=grid.n_points, axis=-1)


def _momentum(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = np.fft.rfft(values, axis=-1)
    xi = grid.wavenumbers
    return np.fft.irfft(spec * (1.0 + xi * xi), n=grid.n_points, axis=-1)


def helmholtz_inverse(m: GridFunction) -> GridFunction:
    """Solve ``(1 - d^2/dx^2) u = m``."""
    return GridFunction(m.grid, _helmholtz(m.values, m.grid))


def green_convolve(f: GridFunction) -> GridFunction:
    """``G * f`` with the periodized kernel ``exp(-|x|)/2``."""
    return helmholtz_inverse(f)


def green_deriv_convolve(f: GridFunction) -> GridFunction:
    """``(dG/dx) * f``, i.e. the derivative of ``G * f``."""
    return GridFunction(f.grid, _green_deriv(f.values, f.grid))


def momentum(u: GridFunction) -> GridFunction:
    """``m = u - u_xx``."""
    return GridFunction(u.grid, _momentum(u.values, u.grid))


def rhs_m_form(m, u, u_x):
    """Pointwise ``-m^2/2 + u m + u_x^2/2 - u^2/2``.

    Accepts GridFunctions or raw arrays (returns the same kind).
    """
    if isinstance(m, GridFunction):
        return GridFunction(m.grid, rhs_m_form(m.values, u.values, u_x.values))
    return -0.5 * m * m + u * m + 0.5 * u_x * u_x - 0.5 * u * u


def rhs_m_form_factored(m, u, u_x):
    """Same source written as ``u_x^2/2 - (u - m)^2/2``."""
    d = u - m
    return 0.5 * u_x * u_x - 0.5 * d * d


def _rhs_u_form(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = np.fft.rfft(u)
    ux = np.fft.irfft(spec * diff_matrix_symbol(grid, 1), n=grid.n_points)
    uxx = np.fft.irfft(spec * diff_matrix_symbol(grid, 2), n=grid.n_points)
    return _helmholtz(ux * ux + 0.5 * uxx * uxx, grid) - 0.5 * ux * ux


def rhs_u_form(u: GridFunction) -> GridFunction:
    """``G * (u_x^2 + u_xx^2/2) - u_x^2/2``."""
    return GridFunction(u.grid, _rhs_u_form(u.values, u.grid))


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Velocity, momentum and the cached first two velocity derivatives."""

    u: GridFunction
    m: GridFunction
    u_x: GridFunction
    u_xx: GridFunction

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def from_u(cls, u: GridFunction) -> "FieldPair":
        g = u.grid
        ux = diff_array(u.values, g, 1)
        uxx = diff_array(u.values, g, 2)
        return cls(u, GridFunction(g, u.values - uxx), GridFunction(g, ux), GridFunction(g, uxx))

    @classmethod
    def from_m(cls, m: GridFunction) -> "FieldPair":
        g = m.grid
        u = _helmholtz(m.values, g)
        spec = np.fft.rfft(u)
        ux = np.fft.irfft(spec * diff_matrix_symbol(g, 1), n=g.n_points)
        # u_xx = u - m holds exactly for the Helmholtz inverse
        return cls(GridFunction(g, u), m, GridFunction(g, ux), GridFunction(g, u - m.values))

    def consistency_error(self) -> float:
        """Relative sup-norm defect of ``m = u - u_xx``."""
        mm = _momentum(self.u.values, self.grid)
        scale = max(np.max(np.abs(self.m.values)), 1e-300)
        return float(np.max(np.abs(mm - self.m.values)) / scale)

    def to_csv(self, path) -> None:
        x = self.grid.nodes
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u", "u_x", "u_xx", "m"])
            for row in zip(x, self.u.values, self.u_x.values, self.u_xx.values, self.m.values):
                w.writerow([repr(float(v)) for v in row])


KINDS = ("gaussian", "smoothed_peakon", "band_limited_random", "constant")


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial velocity profile.

    ``amplitude``, ``width``, ``center`` and ``smoothing`` are in model
    units; ``smoothing=None`` for a peakon means eight grid cells. For
    ``band_limited_random`` the amplitude is the target
    ``||m0||_{B^{1/p}_{p,1}}``. Setting ``norm_target`` rescales any kind
    so that ``||m0||_{B^{1/p}_{p,1}}`` equals it.
    """

    kind: str
    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0
    smoothing: Optional[float] = None
    seed: int = 0
    max_block: int = 4
    norm_target: Optional[float] = None
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}; expected one of {KINDS}")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.smoothing is not None and self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if self.norm_target is not None and self.norm_target < 0:
            raise ValueError("norm_target must be nonnegative")

    def scaled(self, factor: float) -> "InitialDataSpec":
        from dataclasses import replace

        if self.norm_target is not None:
            return replace(self, norm_target=self.norm_target * factor)
        return replace(self, amplitude=self.amplitude * factor)


def make_initial_data(spec: InitialDataSpec, grid: GridSpec,
                      bank: Optional[DyadicFilterBank] = None) -> FieldPair:
    x = grid.nodes
    h = grid.spacing
    target = spec.norm_target
    if spec.kind == "constant":
        u = np.full(grid.n_points, float(spec.amplitude))
        return FieldPair(GridFunction(grid, u), GridFunction(grid, u),
                         GridFunction.zeros(grid), GridFunction.zeros(grid))
    if spec.kind == "gaussian":
        u = spec.amplitude * np.exp(-(((x - spec.center) / spec.width) ** 2))
    elif spec.kind == "smoothed_peakon":
        eps = 8.0 * h if spec.smoothing is None else spec.smoothing
        if eps < 4.0 * h:
            raise ValueError(f"smoothing {eps:.3g} is below 4 grid cells ({4 * h:.3g}); not resolvable")
        u = spec.amplitude * np.exp(-np.sqrt((x - spec.center) ** 2 + eps**2))
    else:
        bank = bank or make_filter_bank(grid)
        if not 0 <= spec.max_block <= bank.j_max:
            raise ValueError(f"max_block must lie in [0, {bank.j_max}]")
        rng = np.random.default_rng(spec.seed)
        # blocks above max_block vanish below 2^(max_block+1) * 3/4
        fmax = 2.0 ** (spec.max_block + 1) * 0.75
        m0 = band_limited_random(grid, rng, fmax, decay=1.0)
        u = _helmholtz(m0, grid)
        if target is None:
            target = spec.amplitude
    pair = FieldPair.from_u(GridFunction(grid, u))
    if target is not None:
        bank = bank or make_filter_bank(grid)
        norm = besov_norm(pair.m, BesovParams.critical(spec.p), bank)
        if norm == 0:
            if target != 0:
                raise ValueError("cannot rescale zero data to a nonzero norm")
        else:
            pair = FieldPair.from_u(GridFunction(grid, u * (target / norm)))
    return pair
