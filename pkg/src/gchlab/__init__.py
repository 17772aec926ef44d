"""Numerical lab for a generalized Camassa-Holm equation on a periodic box.

Modules: ``spectral`` (dyadic blocks and Besov norms), ``core`` (the
nonlocal operator and right-hand sides), ``euler`` (pseudo-spectral
solvers), ``lagrange`` (particle solver), ``friedrichs`` (the
frozen-coefficient iteration) and ``harness`` (configs, experiments, CLI).
"""

from .core import FieldPair, InitialDataSpec, make_initial_data, momentum, helmholtz_inverse
from .euler import IncipientBlowUp, TimeControls, Trajectory, simulate
from .spectral import (
    BesovParams,
    DyadicFilterBank,
    GridFunction,
    GridMismatchError,
    GridSpec,
    besov_norm,
    make_filter_bank,
)

__version__ = "0.1.0"

__all__ = [
    "BesovParams",
    "DyadicFilterBank",
    "FieldPair",
    "GridFunction",
    "GridMismatchError",
    "GridSpec",
    "IncipientBlowUp",
    "InitialDataSpec",
    "TimeControls",
    "Trajectory",
    "besov_norm",
    "helmholtz_inverse",
    "make_filter_bank",
    "make_initial_data",
    "momentum",
    "simulate",
]
