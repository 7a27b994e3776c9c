"""Numerics for the time-fractional wave equation ``D_t^alpha u = a^{ij} D_ij u + f``.

Submodules:

``mlfunc``
    Mittag-Leffler functions and the resolvent kernel ``H``.
``fraccalc``
    Riemann-Liouville integrals, Caputo derivatives, cutoff commutators.
``spectral``
    Sine-series solvers on boxes, reflections, field IO.
``weights``
    A_p weights, weighted mixed norms, Besov seminorms.
``oscillation``
    Mean oscillations, dyadic sharp and strong maximal functions.
``verify``
    Named reproducible experiments.
``cli``
    The ``fracwave`` command.
"""

from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    FracwaveError,
    GridError,
    PreconditionError,
)
from .fraccalc import (
    Cutoff,
    TimeGrid,
    TimeSeries,
    caputo,
    caputo_low,
    cutoff_commutator,
    rl_integral,
    truncated_laplace,
)
from .mlfunc import KernelSpec, MLAccuracy, kernel_H, kernel_H_mass, ml_one, ml_two
from .spectral import (
    BoxDomain,
    InitialData,
    SpaceTimeField,
    sine_analyze,
    solve_div_rhs,
    solve_with_ic,
    solve_zero_ic,
)
from .weights import Weight, ap_estimate, besov_seminorm, mixed_norm

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConfigError",
    "DomainError",
    "FracwaveError",
    "GridError",
    "PreconditionError",
    "Cutoff",
    "TimeGrid",
    "TimeSeries",
    "caputo",
    "caputo_low",
    "cutoff_commutator",
    "rl_integral",
    "truncated_laplace",
    "KernelSpec",
    "MLAccuracy",
    "kernel_H",
    "kernel_H_mass",
    "ml_one",
    "ml_two",
    "BoxDomain",
    "InitialData",
    "SpaceTimeField",
    "sine_analyze",
    "solve_div_rhs",
    "solve_with_ic",
    "solve_zero_ic",
    "Weight",
    "ap_estimate",
    "besov_seminorm",
    "mixed_norm",
]
