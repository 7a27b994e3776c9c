"""Named, reproducible experiments binding the solvers to the analysis tools.

Each check returns :class:`ExperimentReport` objects whose pass flag is a
pure function of the recorded value, tolerance and relation.  Inequalities
whose constants are not explicit are checked for finiteness and stability
under one grid refinement, never against a numeric constant.
"""

from __future__ import annotations

import csv
import json
import math
import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, PreconditionError
from .fraccalc import (
    Cutoff,
    TimeGrid,
    TimeSeries,
    caputo,
    caputo_array,
    caputo_low,
    cutoff_commutator,
    derivative_interp_check,
    lp_norm,
    rl_integral,
    rl_integral_array,
    truncated_laplace,
)
from .mlfunc import KernelSpec, kernel_H, kernel_H_mass, ml_one
from .oscillation import CoefficientField, elongated_oscillation, fit_decay_exponent, oscillation_decay_experiment
from .spectral import (
    BoxDomain,
    InitialData,
    SpaceTimeField,
    gradient,
    hessian,
    solve_with_ic,
    solve_zero_ic,
)
from .weights import (
    Ball,
    NormParams,
    Weight,
    ap_estimate,
    dyadic_plan,
    even_extension_check,
    mixed_norm,
    plain_lp_norm,
)

__all__ = [
    "ExperimentReport",
    "SuiteSettings",
    "EXPERIMENTS",
    "experiment_rng",
    "random_forcing",
    "check_laplace_identity",
    "check_kernel_mass",
    "check_ml_range",
    "check_manufactured",
    "check_eigen_forcing",
    "check_power_rules",
    "check_inversion",
    "check_cutoff_formula",
    "check_elongated",
    "check_halfspace_reflection",
    "check_apriori_ratio",
    "check_decay",
    "check_weights",
    "check_scaling_bound",
    "check_interpolation",
    "check_derivative_interp",
    "run_suite",
    "write_reports_csv",
    "write_timings_csv",
]

STABILITY = math.log(1.25)
_RELATIONS = {
    "<=": lambda v, t: v <= t,
    "<": lambda v, t: v < t,
    ">=": lambda v, t: v >= t,
    ">": lambda v, t: v > t,
}


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one check: ``passed`` is ``value <relation> tolerance``.

    ``passed`` is ``None`` when the check is inconclusive (for instance a
    quadrature tail larger than the tolerance) and ``False`` for non-finite
    values.
    """

    id: str
    params: dict
    value: float
    tolerance: float
    relation: str = "<="
    inconclusive: bool = False
    seconds: float = 0.0
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool | None:
        if self.inconclusive:
            return None
        if not math.isfinite(self.value):
            return False
        return bool(_RELATIONS[self.relation](self.value, self.tolerance))

    def param_json(self) -> str:
        return json.dumps(self.params, sort_keys=True, separators=(",", ":"))


def _timed(func: Callable) -> Callable:
    """Stamp every report produced by ``func`` with the wall-clock time of the call."""
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        out = func(*args, **kwargs)
        elapsed = time.perf_counter() - start
        reports = out if isinstance(out, list) else [out]
        stamped = [replace(r, seconds=elapsed) for r in reports]
        return stamped if isinstance(out, list) else stamped[0]
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    wrapper.__wrapped__ = func
    return wrapper


def experiment_rng(seed: int, name: str) -> np.random.Generator:
    """PCG64 stream keyed by the suite seed and the experiment name."""
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), zlib.crc32(name.encode())]))


def _max_ratio(errors: Sequence[float]) -> float:
    errs = np.asarray(errors, dtype=float)
    return float(np.max(errs[1:] / errs[:-1]))


def _stability(a: float, b: float) -> float:
    """``|log(b / a)|``; the ratio lies in ``[0.8, 1.25]`` iff this is at most ``log 1.25``."""
    if a == b:
        return 0.0
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return abs(math.log(b / a))


def _bump(t: np.ndarray, a: float, b: float) -> np.ndarray:
    """Smooth bump supported on ``[a, b]`` with peak 1; all derivatives vanish at the ends."""
    s = (2.0 * np.asarray(t, dtype=float) - a - b) / (b - a)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def random_forcing(rng: np.random.Generator, max_modes: int = 8, T: float = 1.0):
    """Sine polynomial (1..max_modes modes) times a smooth bump with zero initial jet.

    Returns a callable ``f(t, x)`` on the unit interval and its parameters.
    """
    n_modes = int(rng.integers(1, max_modes + 1))
    coef = rng.normal(size=n_modes)
    a = float(rng.uniform(0.05, 0.5)) * T
    b = float(rng.uniform(a / T + 0.3, 1.0)) * T
    b = min(b, T)

    def f(t, x):
        n = np.arange(1, n_modes + 1)
        space = np.sin(np.pi * np.multiply.outer(x, n)) @ coef
        return _bump(t, a, b) * space

    return f, {"modes": n_modes, "a": a, "b": b}


# ------------------------------------------------------------- kernel identities


@_timed
def check_laplace_identity(alpha: float, lam: float, s_values: Sequence[float], T: float = 40.0,
                           dt: float = 1e-3, tol: float = 1e-4) -> ExperimentReport:
    """``max_s |L(H)(s) (s^alpha + lam) - 1|`` plus the tail bound."""
    s = np.asarray(s_values, dtype=float)
    if T * s.min() < 20:
        raise PreconditionError("T * min(s) must be at least 20 for tail control")
    grid = TimeGrid.from_step(T, dt)
    samples = TimeSeries(grid, kernel_H(KernelSpec(alpha, lam), grid.nodes))
    res = truncated_laplace(samples, s, leading=(1.0 / math.gamma(alpha), alpha - 1.0))
    scale = s**alpha + lam
    err = np.abs(res.value * scale - 1.0)
    tail = res.tail_bound * scale
    return ExperimentReport(
        "laplace_identity", {"alpha": alpha, "lambda": lam, "T": T, "dt": dt, "n_s": int(s.size)},
        float(np.max(err + tail)), tol, inconclusive=bool(np.max(tail) > tol),
        details={"max_tail": float(np.max(tail))})


@_timed
def check_kernel_mass(alpha: float, lam: float, T: float = 40.0, tol: float = 1e-6) -> ExperimentReport:
    """Adaptive quadrature of the kernel over ``(0, T)`` against the closed-form mass."""
    spec = KernelSpec(alpha, lam)
    pieces = np.linspace(0.0, T, int(math.ceil(T)) + 1)
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        total += quad(lambda t: kernel_H(spec, t), lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    exact = kernel_H_mass(spec, T)
    return ExperimentReport("kernel_mass", {"alpha": alpha, "lambda": lam, "T": T},
                            abs(total - exact) / abs(exact), tol, details={"mass": exact})


@_timed
def check_ml_range(alpha: float, n_points: int = 10_000) -> ExperimentReport:
    """Count of ``E_alpha(z)`` outside ``(0, 1)`` over log-spaced ``z`` in ``[-1e4, -1e-4]``."""
    z = -np.logspace(-4, 4, n_points)
    vals = ml_one(alpha, z)
    bad = (vals <= 0) | (vals >= 1)
    idx = int(np.argmin(vals))
    return ExperimentReport("ml_range", {"alpha": alpha, "n": n_points}, float(bad.sum()), 0.0,
                            details={"min_value": float(vals[idx]), "argmin_z": float(z[idx])})


# ------------------------------------------------------------- solver accuracy


def _unit_domain_error(alpha: float, dt: float, forcing: Callable, exact: Callable, n_points: int = 64,
                       relative: bool = True) -> float:
    grid = TimeGrid.from_step(1.0, dt)
    u = solve_zero_ic(alpha, forcing, BoxDomain.unit(1), 1, grid, n_points=n_points)
    tt, xx = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
    ref = exact(tt, xx)
    err = float(np.abs(u.values - ref).max())
    return err / float(np.abs(ref).max()) if relative else err


@_timed
def check_manufactured(alpha: float, dt: float = 1e-3, tol: float = 1e-3,
                       min_gain: float = 1.8) -> list[ExperimentReport]:
    """Solver error for ``u = t^2 sin(pi x)`` and its reduction when ``dt`` halves."""
    c = 2.0 / math.gamma(3.0 - alpha)

    def forcing(t, x):
        return (c * t ** (2.0 - alpha) + math.pi**2 * t**2) * np.sin(math.pi * x)

    def exact(t, x):
        return t**2 * np.sin(math.pi * x)

    e1 = _unit_domain_error(alpha, dt, forcing, exact)
    e2 = _unit_domain_error(alpha, dt / 2, forcing, exact)
    params = {"alpha": alpha, "dt": dt}
    return [ExperimentReport("manufactured.error", params, e1, tol),
            ExperimentReport("manufactured.gain", params, e1 / e2, min_gain, ">=")]


@_timed
def check_eigen_forcing(alpha: float, dt: float = 1e-3, tol: float = 1e-5) -> ExperimentReport:
    """``f = sin(pi x)`` against ``pi^-2 (1 - E_alpha(-pi^2 t^alpha)) sin(pi x)``."""
    lam = math.pi**2

    def exact(t, x):
        return (1.0 - ml_one(alpha, -lam * t**alpha)) / lam * np.sin(math.pi * x)

    err = _unit_domain_error(alpha, dt, lambda t, x: np.sin(math.pi * x) + 0.0 * t, exact, relative=False)
    return ExperimentReport("eigen_forcing", {"alpha": alpha, "dt": dt}, err, tol)


def _power_errors(alpha: float, dt: float) -> tuple[float, float]:
    grid = TimeGrid.from_step(1.0, dt)
    t = grid.nodes
    sel = t >= 0.1 - 1e-12
    u = TimeSeries(grid, t**2)
    d = caputo(u, alpha).values
    ref = 2.0 * t ** (2.0 - alpha) / math.gamma(3.0 - alpha)
    e_cap = float(np.max(np.abs(d[sel] - ref[sel]) / ref[sel]))
    i = rl_integral(u, 0.5).values
    ref_i = 2.0 / math.gamma(3.5) * t**2.5
    e_rl = float(np.max(np.abs(i[sel] - ref_i[sel]) / ref_i[sel]))
    return e_cap, e_rl


@_timed
def check_power_rules(alpha: float, dt: float = 1e-3, tol: float = 1e-2) -> list[ExperimentReport]:
    """Caputo of ``t^2`` and the half-order integral of ``t^2`` on ``[0.1, 1]``, with observed orders."""
    c1, r1 = _power_errors(alpha, dt)
    c2, r2 = _power_errors(alpha, dt / 2)
    params = {"alpha": alpha, "dt": dt}
    return [ExperimentReport("power.caputo.error", params, c1, tol),
            ExperimentReport("power.caputo.order", params, math.log2(c1 / c2), 1.0, ">="),
            ExperimentReport("power.rl.error", params, r1, tol),
            ExperimentReport("power.rl.order", params, math.log2(r1 / r2), 1.0, ">=")]


INVERSION_FAMILY = {
    "t^2": lambda t: t**2,
    "t^2.5": lambda t: t**2.5,
    "t^2 sin t": lambda t: t**2 * np.sin(t),
}


@_timed
def check_inversion(alpha: float, n_base: int = 100, refinements: int = 3,
                    family: dict | None = None) -> ExperimentReport:
    """``max|I^alpha D^alpha u - u|`` over the family on ``refinements + 1`` dyadic grids.

    Passes when the error decreases at every refinement (largest successive
    ratio below 1); the ratios are kept in ``details``.
    """
    family = family or INVERSION_FAMILY
    errors = []
    for level in range(refinements + 1):
        grid = TimeGrid(0.0, 1.0, n_base * 2**level)
        worst = 0.0
        for func in family.values():
            u = func(grid.nodes)
            back = rl_integral_array(caputo_array(u, alpha, grid.dt, check=False), alpha, grid.dt)
            worst = max(worst, float(np.max(np.abs(back - u))))
        errors.append(worst)
    return ExperimentReport("inversion", {"alpha": alpha, "n_base": n_base, "refinements": refinements},
                            _max_ratio(errors), 1.0, "<", details={"errors": errors})


CUTOFF_PAIRS = [
    (lambda t: t**3, 0.2, 0.6),
    (lambda t: t**2 * np.sin(3 * t), 0.1, 0.5),
    (lambda t: t**2.5, 0.3, 0.9),
    (lambda t: np.expm1(t) - t, 0.25, 0.45),
    (lambda t: t**2 * np.cos(t), 0.05, 0.95),
]


@_timed
def check_cutoff_formula(alpha: float, n_base: int = 100, refinements: int = 3) -> ExperimentReport:
    """Interior residual of ``D(eta v) - eta D v - g`` over five (v, eta) pairs and refinements."""
    errors = []
    for level in range(refinements + 1):
        grid = TimeGrid(0.0, 1.0, n_base * 2**level)
        worst = 0.0
        for func, t0, t1 in CUTOFF_PAIRS:
            v = TimeSeries(grid, func(grid.nodes))
            eta = Cutoff.ramp(grid, t0, t1)
            lhs = caputo_array(v.values * eta.eta, alpha, grid.dt, check=False) \
                - eta.eta * caputo_array(v.values, alpha, grid.dt, check=False)
            g = cutoff_commutator(v, eta, alpha).values
            worst = max(worst, float(np.max(np.abs(lhs - g)[2:-2])))
        errors.append(worst)
    return ExperimentReport("cutoff_formula", {"alpha": alpha, "n_base": n_base, "refinements": refinements},
                            _max_ratio(errors), 1.0, "<", details={"errors": errors})


# ------------------------------------------------------------- oscillation


def random_coefficient(rng: np.random.Generator, d: int, n_waves: int = 4) -> CoefficientField:
    """Smooth scalar coefficient ``1 + sum A_k sin(omega_k . x + nu_k t + phi_k)`` in ``[0.7, 1.3]``."""
    amp = rng.uniform(0.0, 0.3, n_waves) / n_waves
    omega = rng.normal(0.0, 6.0, (n_waves, d))
    nu = rng.normal(0.0, 6.0, n_waves)
    phase = rng.uniform(0.0, 2 * math.pi, n_waves)

    def sampler(t, x):
        return 1.0 + np.sum(amp * np.sin(x @ omega.T + np.outer(t, nu) + phase), axis=-1)

    return CoefficientField(sampler, 0.5, d)


@_timed
def check_elongated(rng: np.random.Generator, n_fields: int = 100,
                    alphas: Sequence[float] = (1.25, 1.5, 1.75)) -> ExperimentReport:
    """Largest ``lhs / bound`` of the elongated-cylinder estimate over random fields."""
    worst = 0.0
    cases = 0
    for i in range(n_fields):
        d = 1 + i % 2
        alpha = alphas[i % len(alphas)]
        a = random_coefficient(rng, d)
        r = float(rng.uniform(0.05, 0.3))
        x0 = rng.uniform(-1, 1, d)
        for mult in (1, 2, 4, 8):
            res = elongated_oscillation(a, 1.0, x0, r, mult * r ** (2.0 / alpha), alpha,
                                        n_space=32 if d == 1 else 16)
            worst = max(worst, res.lhs / res.bound if res.bound > 0 else 0.0)
            cases += 1
    return ExperimentReport("elongated", {"n_fields": n_fields, "alphas": list(alphas)}, worst, 1.0,
                            details={"cases": cases})


@_timed
def check_halfspace_reflection(alpha: float, modes: Sequence[tuple[int, float]] = ((1, 1.0),),
                               n_modes: int = 4, n_cells: int = 64, dt: float = 1e-2,
                               tol: float = 1e-8) -> ExperimentReport:
    """Half-line solve against the restriction of the whole-line solve of the odd extension.

    The forcing is ``sum_k c_k sin(n_k pi x) g(t)`` on ``[0, 1]``; the whole line
    is the strip ``[-1, 1]`` with twice the modes and cells.
    """
    grid = TimeGrid.from_step(1.0, dt)

    def g(t):
        return t**2 * np.exp(-t)

    def half(t, x):
        return g(t) * sum(c * np.sin(n * math.pi * x) for n, c in modes)

    def whole(t, x):
        return np.sign(x) * half(t, np.abs(x))

    u_half = solve_zero_ic(alpha, half, BoxDomain((0.0,), (1.0,)), n_modes, grid, n_points=n_cells)
    u_whole = solve_zero_ic(alpha, whole, BoxDomain((-1.0,), (1.0,)), 2 * n_modes, grid, n_points=2 * n_cells)
    restricted = u_whole.values[:, n_cells:]
    diff = float(np.abs(restricted - u_half.values).max())
    return ExperimentReport("halfspace_reflection",
                            {"alpha": alpha, "modes": [list(m) for m in modes], "n_modes": n_modes},
                            diff, tol)


def _apriori_ratio(alpha: float, f: Callable, nt: int, nx: int, params: NormParams) -> float:
    grid = TimeGrid(0.0, 1.0, nt)
    u = solve_zero_ic(alpha, f, BoxDomain.unit(1), 8, grid, n_points=nx)
    dtu = caputo_array(u.values, alpha, grid.dt, check=False)
    du = gradient(u)[0]
    d2u = hessian(u)[0][0]
    tt, xx = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
    fv = f(tt, xx)
    axes = u.axes
    t = grid.nodes
    top = sum(mixed_norm(v, params, t, axes) for v in (dtu, u.values, du, d2u))
    bottom = mixed_norm(fv, params, t, axes)
    return top / bottom


@_timed
def check_apriori_ratio(rng: np.random.Generator, alpha: float = 1.5, p: float = 2.0, q: float = 2.0,
                        mu: float = 0.0, n_samples: int = 100, nt: int = 200, nx: int = 48) -> ExperimentReport:
    """Max over random forcings of ``(|D_t u| + |u| + |Du| + |D^2u|) / |f|`` in ``L_{p,q,w}``.

    ``w = t^mu``.  The value is ``|log|`` of the ratio of the maxima on the
    base grid and on the grid refined once in time and space.
    """
    weight = Weight.product(time=Weight.power(mu) if mu else None)
    params = NormParams(p, q, weight, skip=2)
    coarse = fine = 0.0
    for _ in range(n_samples):
        f, _info = random_forcing(rng)
        coarse = max(coarse, _apriori_ratio(alpha, f, nt, nx, params))
        fine = max(fine, _apriori_ratio(alpha, f, 2 * nt, 2 * nx, params))
    return ExperimentReport("apriori_ratio",
                            {"alpha": alpha, "p": p, "q": q, "mu": mu, "n_samples": n_samples, "nt": nt, "nx": nx},
                            _stability(coarse, fine), STABILITY,
                            details={"max_ratio_coarse": coarse, "max_ratio_fine": fine})


def _decay_field(alpha: float, dt: float = 5e-4, n_cells: int = 512) -> SpaceTimeField:
    data = InitialData(u0=lambda x: (1 - x**2) ** 2 * np.exp(x), u1=lambda x: (1 - x**2) * np.sin(2 * x))
    return solve_with_ic(alpha, data, BoxDomain((-1.0,), (1.0,)), 32, TimeGrid.from_step(1.0, dt),
                         n_points=n_cells)


@_timed
def check_decay(alpha: float, kappas: Sequence[float] = (0.25, 0.125, 0.0625), r: float = 0.5,
                points: Sequence[float] = (0.0, 0.1, -0.2)) -> ExperimentReport:
    """Smallest fitted decay exponent of the kappa-cylinder oscillation of ``D^2 u``."""
    u = _decay_field(alpha)
    sigmas = []
    for x0 in points:
        lhs = [oscillation_decay_experiment(u, None, k, r, (1.0, [x0])).lhs for k in kappas]
        sigmas.append(fit_decay_exponent(kappas, lhs))
    return ExperimentReport("decay", {"alpha": alpha, "kappas": list(kappas), "r": r, "points": list(points)},
                            min(sigmas), 0.0, ">", details={"sigmas": sigmas})


# ------------------------------------------------------------- weights


@_timed
def check_weights() -> list[ExperimentReport]:
    """Unit-weight A_p value, ball-by-ball even-extension bound, mixed norm vs plain norm."""
    plan = dyadic_plan(-1.0, 1.0, 9)
    unit = ap_estimate(Weight.constant(), 2.0, plan, method="midpoint")
    reports = [ExperimentReport("weights.unit_ap", {"p": 2.0, "balls": len(plan)}, abs(unit.value - 1.0), 1e-8)]
    worst = 0.0
    for q, mu, d in ((2.0, 0.5, 1), (3.0, -0.5, 1), (2.0, 0.7, 2)):
        balls = [Ball((c,) + (0.1,) * (d - 1), r) for c in np.linspace(0.0, 1.0, 6) for r in (0.05, 0.3, 1.0)]
        full, part = even_extension_check(Weight.power(mu, axis=0), q, balls, cells=64 if d == 2 else 256)
        worst = max(worst, float(np.max(full / (2.0**q * part))))
    reports.append(ExperimentReport("weights.even_extension", {"cases": 3}, worst, 1.0))
    rng = np.random.default_rng(0)
    t = np.linspace(0.0, 1.0, 41)
    x = np.linspace(0.0, 1.0, 33)
    worst = 0.0
    for p in (2.0, 3.0, 1.5):
        vals = rng.normal(size=(t.size, x.size))
        mixed = mixed_norm(vals, NormParams(p, p), t, (x,))
        plain = plain_lp_norm(vals, p, t, (x,))
        worst = max(worst, abs(mixed / plain - 1.0))
    reports.append(ExperimentReport("weights.mixed_vs_plain", {"p": [2.0, 3.0, 1.5]}, worst, 1e-10))
    return reports


# ------------------------------------------------------------- time-only inequalities


SCALING_FAMILY = {
    "s^2": lambda s: s**2,
    "s^alpha": None,
    "s^2.5 sin s": lambda s: s**2.5 * np.sin(s),
    "s^3 - s^4": lambda s: s**3 - s**4,
}


@_timed
def check_scaling_bound(alpha: float, Ts: Sequence[float] = (0.5, 1.0, 2.0), n_steps: int = 1000,
                        p: float = 2.0) -> ExperimentReport:
    """``sup |u| / (T^alpha |D^alpha u|)`` over ``u(t) = U(t / T)`` for each ``T``; stability across ``T``."""
    sups = []
    for T in Ts:
        grid = TimeGrid(0.0, T, n_steps)
        s = grid.nodes / T
        best = 0.0
        for name, func in SCALING_FAMILY.items():
            u = s**alpha if func is None else func(s)
            d = caputo_array(u, alpha, grid.dt, check=False)
            ratio = lp_norm(u, grid.dt, p, skip=2) / (T**alpha * lp_norm(d, grid.dt, p, skip=2))
            best = max(best, ratio)
        sups.append(best)
    value = _stability(min(sups), max(sups))
    return ExperimentReport("scaling_bound", {"alpha": alpha, "T": list(Ts), "p": p}, value, STABILITY,
                            details={"sups": sups})


INTERP_FAMILY = [
    lambda t: t**2,
    lambda t: t**2 * np.exp(-t),
    lambda t: t**3 * np.cos(2 * t),
    lambda t: t**2.5,
    lambda t: t**2 * np.sin(5 * t),
]


def _interp_constant(alpha: float, eps: float, n: int, T: float, p: float) -> float:
    grid = TimeGrid(0.0, T, n)
    best = 0.0
    for func in INTERP_FAMILY:
        v = TimeSeries(grid, func(grid.nodes))
        low = lp_norm(caputo_low(v, alpha - 1.0).values, grid.dt, p, skip=2)
        high = lp_norm(caputo_array(v.values, alpha, grid.dt, check=False), grid.dt, p, skip=2)
        best = max(best, (low - eps * high) / lp_norm(v.values, grid.dt, p, skip=2))
    return max(best, 0.0)


@_timed
def check_interpolation(alpha: float, eps: float = 1.0 / 16, T: float = 1.0, n: int = 400,
                        p: float = 2.0) -> ExperimentReport:
    """Fitted ``C`` in ``|D^{alpha-1} v| <= eps |D^alpha v| + C |v|`` and its refinement stability."""
    c1 = _interp_constant(alpha, eps, n, T, p)
    c2 = _interp_constant(alpha, eps, 2 * n, T, p)
    return ExperimentReport("interpolation", {"alpha": alpha, "eps": eps, "T": T, "n": n, "p": p},
                            _stability(c1, c2), STABILITY, details={"C_coarse": c1, "C_fine": c2})


def _derivative_interp_sup(coefs: np.ndarray, n: int, p: float) -> float:
    grid = TimeGrid(0.0, 1.0, n)
    t = grid.nodes
    best = 0.0
    for c in coefs:
        u = TimeSeries(grid, sum(ck * t ** (k + 2) for k, ck in enumerate(c)))
        for j in range(-6, 3):
            lhs, rhs = derivative_interp_check(u, 2.0**j, p)
            if rhs > 0:
                best = max(best, lhs / rhs)
    return best


@_timed
def check_derivative_interp(rng: np.random.Generator, n_family: int = 20, n: int = 400,
                            p: float = 2.0) -> ExperimentReport:
    """``sup |u'| / (|u| / eps + eps |u''|)`` over eps in ``2^-6..2^2`` and random polynomials."""
    coefs = rng.normal(size=(n_family, 5))
    s1 = _derivative_interp_sup(coefs, n, p)
    s2 = _derivative_interp_sup(coefs, 2 * n, p)
    return ExperimentReport("derivative_interp", {"n_family": n_family, "n": n, "p": p},
                            _stability(s1, s2), STABILITY, details={"sup_coarse": s1, "sup_fine": s2})


# ------------------------------------------------------------- suite


@dataclass(frozen=True)
class SuiteSettings:
    """Parameters of the default suite; the defaults reproduce the acceptance grid."""

    alphas: tuple[float, ...] = (1.25, 1.5, 1.75)
    alpha: float = 1.5
    p: float = 2.0
    q: float = 2.0
    mu: float = 0.5
    dt: float = 1e-3
    n_samples: int = 100
    n_fields: int = 100
    seed: int = 0


def _laplace_suite(cfg: SuiteSettings, rng):
    s = np.linspace(0.5, 10.0, 20)
    return [check_laplace_identity(a, lam, s, 40.0, cfg.dt) for a in cfg.alphas for lam in (1.0, math.pi**2)]


def _mass_suite(cfg, rng):
    return [check_kernel_mass(a, lam, 40.0) for a in cfg.alphas for lam in (1.0, math.pi**2)]


def _apriori_suite(cfg, rng):
    return [check_apriori_ratio(rng, cfg.alpha, cfg.p, cfg.q, 0.0, cfg.n_samples),
            check_apriori_ratio(rng, cfg.alpha, cfg.p, cfg.q, cfg.mu, cfg.n_samples)]


def _flatten(items):
    out = []
    for item in items:
        out.extend(item if isinstance(item, list) else [item])
    return out


EXPERIMENTS: dict[str, Callable[[SuiteSettings, np.random.Generator], list]] = {
    "laplace_identity": _laplace_suite,
    "kernel_mass": _mass_suite,
    "ml_range": lambda cfg, rng: [check_ml_range(a) for a in cfg.alphas],
    "manufactured": lambda cfg, rng: _flatten(check_manufactured(a, cfg.dt) for a in cfg.alphas),
    "eigen_forcing": lambda cfg, rng: [check_eigen_forcing(a, cfg.dt) for a in cfg.alphas],
    "power_rules": lambda cfg, rng: _flatten(check_power_rules(a, cfg.dt) for a in cfg.alphas),
    "inversion": lambda cfg, rng: [check_inversion(a) for a in cfg.alphas],
    "cutoff_formula": lambda cfg, rng: [check_cutoff_formula(a) for a in cfg.alphas],
    "elongated": lambda cfg, rng: [check_elongated(rng, cfg.n_fields, cfg.alphas)],
    "halfspace_reflection": lambda cfg, rng: [
        check_halfspace_reflection(a, m) for a in cfg.alphas for m in (((1, 1.0),), ((1, 1.0), (3, -0.5)))],
    "apriori_ratio": _apriori_suite,
    "decay": lambda cfg, rng: [check_decay(a) for a in cfg.alphas],
    "weights": lambda cfg, rng: check_weights(),
    "scaling_bound": lambda cfg, rng: [check_scaling_bound(a) for a in cfg.alphas],
    "interpolation": lambda cfg, rng: [check_interpolation(a) for a in cfg.alphas],
    "derivative_interp": lambda cfg, rng: [check_derivative_interp(rng)],
}


def run_suite(experiments: Sequence[str] | None, settings: SuiteSettings | None = None) -> list[ExperimentReport]:
    """Run the named experiments (all when ``None``) in order; deterministic given the seed."""
    settings = settings or SuiteSettings()
    names = list(EXPERIMENTS) if experiments is None else list(experiments)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        raise ConfigError([f"unknown experiment id '{n}'" for n in unknown])
    reports: list[ExperimentReport] = []
    for name in names:
        reports.extend(EXPERIMENTS[name](settings, experiment_rng(settings.seed, name)))
    return reports


def _format_pass(flag: bool | None) -> str:
    return "inconclusive" if flag is None else ("true" if flag else "false")


def write_reports_csv(reports: Sequence[ExperimentReport], path, config_hash: str) -> Path:
    """Report table ``id,param-json,value,tolerance,pass,seconds``.

    The seconds column is left empty so that reruns are byte-identical;
    wall-clock times go to :func:`write_timings_csv`.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "param-json", "value", "tolerance", "pass", "seconds"])
        for r in reports:
            writer.writerow([r.id, r.param_json(), repr(float(r.value)), repr(float(r.tolerance)),
                             _format_pass(r.passed), ""])
    return path


def write_timings_csv(reports: Sequence[ExperimentReport], path, config_hash: str) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "param-json", "seconds"])
        for r in reports:
            writer.writerow([r.id, r.param_json(), f"{r.seconds:.3f}"])
    return path
