"""Discrete Littlewood-Paley calculus on a periodic grid.

The real line is replaced by the periodic box ``[-L, L)`` sampled at ``N``
uniform nodes. Frequencies are angular, ``xi_k = pi k / L``. The dyadic
blocks use a fixed C-infinity profile pair (``chi``, ``phi``); any other
admissible pair gives equivalent Besov norms, so numbers produced here are
only comparable between runs that use the same ``BANK_VERSION``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

BANK_VERSION = "tau-exp-v1"

# supports of the low-pass profile and the annulus profile
CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0
PHI_OUTER = 8.0 / 3.0


class GridMismatchError(ValueError):
    """Raised when fields living on different grids are combined."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-half_length, half_length)``."""

    half_length: float
    n_points: int

    def __post_init__(self):
        if not (self.half_length > 0 and math.isfinite(self.half_length)):
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        n = int(self.n_points)
        if n != self.n_points or n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Nonnegative angular frequencies of the real FFT, ``pi k / L``."""
        return np.pi / self.half_length * np.arange(self.n_points // 2 + 1)

    @property
    def nyquist(self) -> float:
        return np.pi * self.n_points / (2.0 * self.half_length)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.half_length, self.n_points * factor)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real periodic function on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: GridSpec, fn) -> "GridFunction":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_points))

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatchError(f"{self.grid} vs {other.grid}")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def shift(self, cells: int) -> "GridFunction":
        """Translate by an integer number of grid cells (periodic)."""
        return GridFunction(self.grid, np.roll(self.values, cells))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _require_same_grid(*fields: GridFunction) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"{grid} vs {f.grid}")
    return grid


# ---------------------------------------------------------------------------
# profiles


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 1 for t <= 1, 0 for t >= 2."""
    a = _psi(2.0 - np.asarray(t, dtype=float))
    b = _psi(np.asarray(t, dtype=float) - 1.0)
    return a / (a + b)


def chi(xi):
    """Low-pass profile: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3."""
    scale = 1.0 / (CHI_OUTER - CHI_INNER)
    return smooth_step(1.0 + scale * (np.abs(xi) - CHI_INNER))


def phi(xi):
    """Annulus profile ``chi(xi/2) - chi(xi)``, supported in 3/4 <= |xi| <= 8/3."""
    return chi(np.asarray(xi) / 2.0) - chi(xi)


@dataclass(frozen=True, eq=False)
class DyadicFilterBank:
    """Frequency multipliers for the blocks ``j = -1, ..., j_max``.

    ``multipliers[j + 1]`` holds block ``j`` sampled on the real-FFT
    frequencies of ``grid``. The top block is flattened to ``1 - chi(2^-j xi)``
    so the blocks sum to one up to the Nyquist frequency.
    """

    grid: GridSpec
    j_max: int
    multipliers: np.ndarray = field(repr=False)
    version: str = BANK_VERSION

    @property
    def j_min(self) -> int:
        return -1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-1, self.j_max + 1)

    def multiplier(self, j: int) -> np.ndarray:
        if j < -1 or j > self.j_max:
            return np.zeros(self.grid.n_points // 2 + 1)
        return self.multipliers[j + 1]

    def cutoff_multiplier(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j``: the sum of blocks strictly below ``j``."""
        if j <= -1:
            return np.zeros(self.grid.n_points // 2 + 1)
        j = min(j, self.j_max + 1)
        return self.multipliers[: j + 1].sum(axis=0)

    def to_csv(self, path) -> None:
        """Write ``xi_k, chi, phi_0, ..., phi_jmax`` columns."""
        xi = self.grid.wavenumbers
        header = ["xi_k", "chi"] + [f"phi_{j}" for j in range(self.j_max + 1)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(xi.size):
                w.writerow([repr(float(xi[k]))] + [repr(float(v)) for v in self.multipliers[:, k]])


def make_filter_bank(grid: GridSpec) -> DyadicFilterBank:
    """Build the dyadic filter bank for ``grid``."""
    nyq = grid.nyquist
    j_max = math.ceil(math.log2(grid.n_points * math.pi / (grid.half_length * PHI_OUTER)))
    # the top annulus must start below Nyquist or it would be empty
    while j_max >= 0 and (2.0**j_max) * CHI_INNER >= nyq:
        j_max -= 1
    if j_max < 0:
        raise ValueError(
            f"grid {grid} resolves frequencies only up to {nyq:.3g}; "
            f"at least blocks -1 and 0 (|xi| > {CHI_INNER}) are required"
        )
    xi = grid.wavenumbers
    # cumulative low-pass profiles chi(2^-j xi) for j = 0..j_max
    lows = np.stack([chi(xi / 2.0**j) for j in range(j_max + 1)])
    mult = np.empty((j_max + 2, xi.size))
    mult[0] = lows[0]
    mult[1:-1] = lows[1:] - lows[:-1]
    mult[-1] = 1.0 - lows[-1]
    mult.flags.writeable = False
    return DyadicFilterBank(grid=grid, j_max=j_max, multipliers=mult)


# ---------------------------------------------------------------------------
# operations on raw arrays (last axis is space); public wrappers follow


def _blocks(values: np.ndarray, bank: DyadicFilterBank) -> np.ndarray:
    """All dyadic blocks of ``values``, shape ``(..., j_max + 2, N)``."""
    n = bank.grid.n_points
    spec = np.fft.rfft(values, axis=-1)
    return np.fft.irfft(spec[..., None, :] * bank.multipliers, n=n, axis=-1)


def _lp(values: np.ndarray, p: float, h: float) -> np.ndarray:
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=-1)
    if p == 1:
        return h * a.sum(axis=-1)
    if p == 2:
        return np.sqrt(h * np.sum(a * a, axis=-1))
    return (h * np.sum(a**p, axis=-1)) ** (1.0 / p)


def _lr(seq: np.ndarray, r: float) -> np.ndarray:
    if math.isinf(r):
        return seq.max(axis=-1)
    if r == 1:
        return seq.sum(axis=-1)
    return np.sum(seq**r, axis=-1) ** (1.0 / r)


def block_lp_norms(values: np.ndarray, p: float, bank: DyadicFilterBank) -> np.ndarray:
    """``||Delta_j u||_{L^p}`` for every block; works on stacked samples."""
    return _lp(_blocks(np.asarray(values, dtype=float), bank), p, bank.grid.spacing)


def besov_norm_array(values: np.ndarray, s: float, p: float, r: float, bank: DyadicFilterBank):
    """Besov norm of raw samples; leading axes are treated as a batch."""
    weights = 2.0 ** (s * bank.indices)
    return _lr(weights * block_lp_norms(values, p, bank), r)


def diff_matrix_symbol(grid: GridSpec, order: int) -> np.ndarray:
    """Real-FFT symbol of ``d^order/dx^order``; Nyquist zeroed for odd orders."""
    xi = grid.wavenumbers
    sym = (1j * xi) ** order
    if order % 2 == 1:
        sym[-1] = 0.0
    return sym


def diff_array(values: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    spec = np.fft.rfft(values, axis=-1)
    return np.fft.irfft(spec * diff_matrix_symbol(grid, order), n=grid.n_points, axis=-1)


def evaluate_trig(values: np.ndarray, grid: GridSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``values`` at arbitrary points."""
    n = grid.n_points
    spec = np.fft.rfft(values) / n
    weights = np.full(spec.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    phase = np.outer(np.asarray(points, dtype=float) + grid.half_length, grid.wavenumbers)
    return (np.cos(phase) @ (weights * spec.real) - np.sin(phase) @ (weights * spec.imag))


# ---------------------------------------------------------------------------
# public operations


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise ValueError("s must be finite")
        for name in ("p", "r"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")

    @classmethod
    def critical(cls, p: float) -> "BesovParams":
        """The critical space B^{1/p}_{p,1}."""
        return cls(s=1.0 / p, p=p, r=1.0)


def dyadic_block(u: GridFunction, j: int, bank: DyadicFilterBank) -> GridFunction:
    _require_same_grid(u, GridFunction.zeros(bank.grid))
    if j < -1:
        return GridFunction.zeros(u.grid)
    if j > bank.j_max:
        raise ValueError(f"block {j} exceeds j_max = {bank.j_max}")
    spec = np.fft.rfft(u.values) * bank.multiplier(j)
    return GridFunction(u.grid, np.fft.irfft(spec, n=u.grid.n_points))


def low_cutoff(u: GridFunction, j: int, bank: DyadicFilterBank) -> GridFunction:
    """``S_j u``: sum of the blocks with index below ``j``."""
    _require_same_grid(u, GridFunction.zeros(bank.grid))
    if j <= -1:
        return GridFunction.zeros(u.grid)
    if j > bank.j_max:
        return u
    spec = np.fft.rfft(u.values) * bank.cutoff_multiplier(j)
    return GridFunction(u.grid, np.fft.irfft(spec, n=u.grid.n_points))


def lp_norm(u: GridFunction, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return float(_lp(u.values, p, u.grid.spacing))


def besov_norm(u: GridFunction, params: BesovParams, bank: DyadicFilterBank) -> float:
    _require_same_grid(u, GridFunction.zeros(bank.grid))
    return float(besov_norm_array(u.values, params.s, params.p, params.r, bank))


@dataclass(frozen=True)
class InterpolationReport:
    lhs: float
    rhs: float
    s_mid: float
    passed: bool
    vacuous: bool = False


def interpolation_check(u: GridFunction, s1: float, s2: float, lam: float, p: float, r: float,
                        bank: DyadicFilterBank, rtol: float = 1e-12) -> InterpolationReport:
    """Check ``||u||_{B^{lam s1 + (1-lam) s2}} <= ||u||_{B^s1}^lam ||u||_{B^s2}^(1-lam)``."""
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    if not 0 < lam < 1:
        raise ValueError("need 0 < lambda < 1")
    s_mid = lam * s1 + (1 - lam) * s2
    norms = block_lp_norms(u.values, p, bank)
    if not np.any(norms):
        return InterpolationReport(0.0, 0.0, s_mid, True, vacuous=True)
    idx = bank.indices
    lhs = float(_lr(2.0 ** (s_mid * idx) * norms, r))
    b1 = float(_lr(2.0 ** (s1 * idx) * norms, r))
    b2 = float(_lr(2.0 ** (s2 * idx) * norms, r))
    rhs = b1**lam * b2 ** (1 - lam)
    return InterpolationReport(lhs, rhs, s_mid, lhs <= rhs * (1 + rtol))


@dataclass(frozen=True, eq=False)
class BonyParts:
    paraproduct_uv: GridFunction  # T_u v
    paraproduct_vu: GridFunction  # T_v u
    remainder: GridFunction       # R(u, v)
    residual: float               # sup |T_u v + T_v u + R - uv|


def bony_decompose(u: GridFunction, v: GridFunction, bank: DyadicFilterBank) -> BonyParts:
    grid = _require_same_grid(u, v, GridFunction.zeros(bank.grid))
    bu = _blocks(u.values, bank)
    bv = _blocks(v.values, bank)
    # low parts S_{j-1} for block j (row j+1): partial sums of blocks < j-1
    su = np.cumsum(bu, axis=0)
    sv = np.cumsum(bv, axis=0)
    nb = bu.shape[0]
    t_uv = np.zeros(grid.n_points)
    t_vu = np.zeros(grid.n_points)
    rem = np.zeros(grid.n_points)
    for row in range(nb):
        # S_{j-1} with j = row - 1 sums rows 0..row-2
        if row >= 2:
            t_uv += su[row - 2] * bv[row]
            t_vu += sv[row - 2] * bu[row]
        near = bv[max(row - 1, 0): min(row + 2, nb)].sum(axis=0)
        rem += bu[row] * near
    residual = float(np.max(np.abs(t_uv + t_vu + rem - u.values * v.values)))
    return BonyParts(GridFunction(grid, t_uv), GridFunction(grid, t_vu), GridFunction(grid, rem), residual)


def derivative(u: GridFunction, order: int = 1) -> GridFunction:
    """Spectral derivative of the trigonometric interpolant."""
    if order < 1:
        raise ValueError("order must be a positive integer")
    return GridFunction(u.grid, diff_array(u.values, u.grid, order))


def band_limited_random(grid: GridSpec, rng: np.random.Generator, max_freq: float,
                        decay: float = 0.0) -> np.ndarray:
    """Random real field whose spectrum vanishes above ``max_freq``.

    Mode amplitudes are Gaussian, scaled by ``(1 + xi^2)^(-decay/2)``.
    """
    xi = grid.wavenumbers
    coef = rng.standard_normal(xi.size) + 1j * rng.standard_normal(xi.size)
    coef *= (1.0 + xi**2) ** (-decay / 2.0)
    coef[xi > max_freq] = 0.0
    coef[0] = coef[0].real
    coef[-1] = 0.0
    return np.fft.irfft(coef, n=grid.n_points)


def block_supports(bank: DyadicFilterBank) -> Iterable[tuple[int, np.ndarray]]:
    for j in bank.indices:
        yield int(j), np.nonzero(bank.multiplier(int(j)))[0]
