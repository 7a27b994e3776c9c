"""Discrete fractional calculus on uniform time grids.

Riemann-Liouville integrals use product integration: the piecewise-linear
interpolant of the samples is integrated exactly against ``(t - s)**(mu - 1)``.
Caputo derivatives of order ``alpha`` in (1, 2) are second differences of the
``(2 - alpha)``-order integral, valid for data with zero initial value and
velocity.

The ``*_array`` functions work along axis 0 of arrays of any rank; the
:class:`TimeSeries` wrappers are the public 1-d interface.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammainc

from .errors import DomainError, GridError, PreconditionError

__all__ = [
    "TimeGrid",
    "TimeSeries",
    "Cutoff",
    "LaplaceResult",
    "ZeroInitialDataWarning",
    "rl_weights",
    "rl_integral_array",
    "caputo_array",
    "first_derivative_array",
    "second_derivative_array",
    "rl_integral",
    "caputo",
    "caputo_low",
    "cutoff_commutator",
    "truncated_laplace",
    "derivative_interp_check",
    "lp_norm",
    "ZERO_IC_TOL",
    "ZERO_SLOPE_TOL",
]

ZERO_IC_TOL = 1e-8
ZERO_SLOPE_TOL = 1e-4
_DIRECT_LIMIT = 256


class ZeroInitialDataWarning(UserWarning):
    """Data handed to a Caputo routine does not vanish to first order at the start."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t_start + k dt`` for ``k = 0..n_steps``."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise GridError(f"empty time interval [{self.t_start}, {self.t_end}]")
        if self.n_steps < 2:
            raise GridError(f"a time grid needs at least 2 steps, got {self.n_steps}")

    @classmethod
    def from_step(cls, t_end: float, dt: float, t_start: float = 0.0) -> "TimeGrid":
        n = round((t_end - t_start) / dt)
        if not math.isclose(n * dt, t_end - t_start, rel_tol=1e-9):
            raise GridError(f"dt={dt} does not divide [{t_start}, {t_end}]")
        return cls(t_start, t_end, int(n))

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def size(self) -> int:
        return self.n_steps + 1

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, self.n_steps * factor)


@dataclass(frozen=True)
class TimeSeries:
    """Samples of a real function at the nodes of a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise GridError(f"expected {self.grid.size} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("time series contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: TimeGrid, func: Callable[[np.ndarray], np.ndarray]) -> "TimeSeries":
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.size,)))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __add__(self, other):
        return TimeSeries(self.grid, self.values + _values_of(other))

    def __sub__(self, other):
        return TimeSeries(self.grid, self.values - _values_of(other))

    def __mul__(self, other):
        return TimeSeries(self.grid, self.values * _values_of(other))

    __rmul__ = __mul__


def _values_of(other):
    return other.values if isinstance(other, TimeSeries) else other


@dataclass(frozen=True)
class Cutoff:
    """Time cutoff sampled with its first two derivatives on a grid.

    ``eta`` vanishes for ``t <= t_zero`` and equals 1 for ``t >= t_one``.
    """

    grid: TimeGrid
    eta: np.ndarray
    d_eta: np.ndarray
    d2_eta: np.ndarray
    t_zero: float
    t_one: float
    func: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("eta", "d_eta", "d2_eta"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.size,):
                raise GridError(f"cutoff samples '{name}' have shape {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.eta < -1e-12) or np.any(self.eta > 1 + 1e-12):
            raise DomainError("cutoff values must lie in [0, 1]")

    @classmethod
    def ramp(cls, grid: TimeGrid, t_zero: float, t_one: float) -> "Cutoff":
        """C^3 septic ramp from 0 at ``t_zero`` to 1 at ``t_one``."""
        if not t_one > t_zero:
            raise DomainError("ramp needs t_one > t_zero")
        width = t_one - t_zero

        def parts(t):
            s = np.clip((np.asarray(t, dtype=float) - t_zero) / width, 0.0, 1.0)
            e = s**4 * (35 - 84 * s + 70 * s**2 - 20 * s**3)
            de = 140 * s**3 * (1 - s) ** 3 / width
            d2e = 420 * s**2 * (1 - s) ** 2 * (1 - 2 * s) / width**2
            return e, de, d2e

        e, de, d2e = parts(grid.nodes)
        return cls(grid, e, de, d2e, t_zero, t_one, func=parts)

    @classmethod
    def constant_one(cls, grid: TimeGrid) -> "Cutoff":
        ones = np.ones(grid.size)
        zeros = np.zeros(grid.size)
        return cls(grid, ones, zeros, zeros, -math.inf, grid.t_start)


@dataclass(frozen=True)
class LaplaceResult:
    value: np.ndarray | float
    tail_bound: np.ndarray | float


# ---------------------------------------------------------------- kernels


def _second_difference_of_power(p: float, m: np.ndarray) -> np.ndarray:
    """``(m+1)**p - 2 m**p + (m-1)**p`` for integers ``m >= 1``, without cancellation."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    one = m == 1
    out[one] = 2.0**p - 2.0
    mm = m[~one]
    inv = 1.0 / mm
    out[~one] = mm**p * (np.expm1(p * np.log1p(inv)) + np.expm1(p * np.log1p(-inv)))
    return out


def rl_weights(order: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Convolution weights ``c`` and start-node weights ``b`` for the order-``order`` integral.

    ``I[k] = dt**order / Gamma(order + 2) * (sum_{j=1..k} c[k-j] u[j] + b[k] u[0])``.
    """
    p = order + 1.0
    c = np.empty(n + 1)
    c[0] = 1.0
    if n >= 1:
        c[1:] = _second_difference_of_power(p, np.arange(1, n + 1))
    b = np.zeros(n + 1)
    if n >= 1:
        b[1] = order
        k = np.arange(2, n + 1, dtype=float)
        # (k-1)**p - (k-1-order) k**order = k**order ((k-1)((1-1/k)**order - 1) + order)
        b[2:] = k**order * ((k - 1.0) * np.expm1(order * np.log1p(-1.0 / k)) + order)
    return c, b


def _causal_convolve(kernel: np.ndarray, values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    if n <= _DIRECT_LIMIT:
        flat = values.reshape(n, -1)
        out = np.empty_like(flat)
        for col in range(flat.shape[1]):
            out[:, col] = np.convolve(kernel[:n], flat[:, col])[:n]
        return out.reshape(values.shape)
    kern = kernel[:n].reshape((n,) + (1,) * (values.ndim - 1))
    return fftconvolve(kern, values, axes=0)[:n]


def rl_integral_array(values: np.ndarray, order: float, dt: float) -> np.ndarray:
    """Product-trapezoid Riemann-Liouville integral of order ``order`` along axis 0."""
    if not order > 0:
        raise DomainError(f"integration order must be positive, got {order}")
    vals = np.asarray(values, dtype=float)
    n = vals.shape[0] - 1
    c, b = rl_weights(order, n)
    conv = _causal_convolve(c, vals)
    shape = (n + 1,) + (1,) * (vals.ndim - 1)
    conv = conv + (b - c).reshape(shape) * vals[0]
    out = dt**order / math.gamma(order + 2.0) * conv
    out[0] = 0.0
    return out


def first_derivative_array(y: np.ndarray, dt: float) -> np.ndarray:
    """Central first difference, second-order one-sided at the two ends."""
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (2 * dt)
    out[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * dt)
    out[-1] = (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * dt)
    return out


def second_derivative_array(y: np.ndarray, dt: float) -> np.ndarray:
    """Central second difference, second-order one-sided at the two ends."""
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / dt**2
    out[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / dt**2
    out[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / dt**2
    return out


def _initial_slope(vals: np.ndarray) -> np.ndarray:
    """``dt * u'(S)`` from the cubic through the first four nodes."""
    return (-11 * vals[0] + 18 * vals[1] - 9 * vals[2] + 2 * vals[3]) / 6


def _warn_initial_data(vals: np.ndarray, first_order: bool, tol: float = ZERO_IC_TOL,
                       slope_tol: float = ZERO_SLOPE_TOL):
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0.0:
        return
    start = float(np.max(np.abs(vals[0])))
    # |u'(S)| * (T - S), so the test does not depend on the step size
    slope = (float(np.max(np.abs(_initial_slope(vals)))) * (vals.shape[0] - 1)
             if first_order else 0.0)
    if start > tol * scale or slope > slope_tol * scale:
        warnings.warn(
            f"initial data not negligible (|u(S)|={start:.3g}, |u'(S)|(T-S)={slope:.3g}, "
            f"max|u|={scale:.3g})",
            ZeroInitialDataWarning,
            stacklevel=3,
        )


def caputo_array(values: np.ndarray, alpha: float, dt: float, check: bool = True) -> np.ndarray:
    """Caputo derivative of order ``alpha`` in (1, 2) along axis 0.

    The affine part ``u(S) + u'(S)(t - S)`` is removed before applying
    ``d^2/dt^2 I^{2-alpha}``, so the result is the Caputo derivative for any
    smooth data and coincides with ``d^2/dt^2 I^{2-alpha} u`` when the initial
    data vanish. The two end nodes use one-sided stencils and are only
    first-order reliable; convergence measurements should skip them.
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"Caputo order must lie in (1, 2), got {alpha}")
    vals = np.asarray(values, dtype=float)
    if vals.shape[0] < 5:
        raise GridError("Caputo derivative needs at least 4 time steps")
    if check:
        _warn_initial_data(vals, first_order=True)
    steps = np.arange(vals.shape[0], dtype=float).reshape((-1,) + (1,) * (vals.ndim - 1))
    vals = vals - vals[0] - steps * _initial_slope(vals)
    return second_derivative_array(rl_integral_array(vals, 2.0 - alpha, dt), dt)


# ---------------------------------------------------------------- public 1-d API


def rl_integral(u: TimeSeries, order: float) -> TimeSeries:
    """Riemann-Liouville integral ``I^order_S u`` sampled on the grid of ``u``."""
    return TimeSeries(u.grid, rl_integral_array(u.values, order, u.grid.dt))


def caputo(u: TimeSeries, alpha: float) -> TimeSeries:
    """Caputo derivative of order ``alpha`` in (1, 2); see :func:`caputo_array`."""
    return TimeSeries(u.grid, caputo_array(u.values, alpha, u.grid.dt))


def caputo_low(u: TimeSeries, beta: float) -> TimeSeries:
    """Caputo derivative of order ``beta`` in (0, 1): ``d/dt I^{1-beta} (u - u(S))``."""
    if not 0.0 < beta < 1.0:
        raise DomainError(f"low Caputo order must lie in (0, 1), got {beta}")
    if u.grid.n_steps < 4:
        raise GridError("Caputo derivative needs at least 4 time steps")
    _warn_initial_data(u.values, first_order=False)
    y = rl_integral_array(u.values - u.values[0], 1.0 - beta, u.grid.dt)
    return TimeSeries(u.grid, first_derivative_array(y, u.grid.dt))


def cutoff_commutator(v: TimeSeries, eta: Cutoff, alpha: float) -> TimeSeries:
    """Remainder ``g`` in ``D^alpha(eta v) = eta D^alpha v + g`` for a time cutoff ``eta``.

    ``g(t) = a(a-1)/Gamma(2-a) int_S^t (t-s)**(-a-1) [eta(s) - eta(t) - eta'(t)(s-t)] v(s) ds
    + a/Gamma(2-a) eta'(t) d/dt int_S^t (t-s)**(1-a) v(s) ds``.

    The bracket is divided by ``(t-s)**2`` and integrated against
    ``(t-s)**(1-a)`` by product integration; at ``s = t`` the quotient takes its
    Taylor limit ``eta''(t) v(t) / 2``.
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"Caputo order must lie in (1, 2), got {alpha}")
    if eta.grid != v.grid:
        raise GridError("cutoff and series live on different grids")
    grid = v.grid
    if not np.any(eta.d_eta) and not np.any(eta.d2_eta) and np.ptp(eta.eta) == 0.0:
        # constant cutoff: the bracket and eta' vanish identically
        return TimeSeries(grid, np.zeros(grid.size))
    if eta.eta[0] != 0.0 or eta.eta[1] != 0.0:
        raise PreconditionError("cutoff must vanish on the first grid cells")
    dt = grid.dt
    n = grid.n_steps
    t = grid.nodes
    vals = v.values
    mu = 2.0 - alpha
    c, b = rl_weights(mu, n)
    scale = dt**mu / math.gamma(mu + 2.0)

    first = np.zeros(n + 1)
    e, de, d2e = eta.eta, eta.d_eta, eta.d2_eta
    for k in range(1, n + 1):
        lag = t[k] - t[:k]
        quot = np.empty(k + 1)
        quot[:k] = (e[:k] - e[k] + de[k] * lag) * vals[:k] / lag**2
        quot[k] = 0.5 * d2e[k] * vals[k]
        acc = np.dot(c[k - np.arange(1, k + 1)], quot[1:]) + b[k] * quot[0]
        first[k] = scale * acc
    # int (t-s)**(1-a) G ds = Gamma(2-a) I^{2-a} G, so the Gamma factors cancel
    first *= alpha * (alpha - 1.0)

    y = rl_integral_array(vals, mu, dt)
    second = alpha * de * first_derivative_array(y, dt)
    return TimeSeries(grid, first + second)


def _filon_weights(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^1 exp(-x th) (1 - th) dth`` and ``int_0^1 exp(-x th) th dth``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, 1.0, x)
    e = np.exp(-xs)
    w0 = (xs + np.expm1(-xs)) / xs**2
    w1 = (1.0 - (1.0 + xs) * e) / xs**2
    # Taylor series where the closed forms cancel
    w0s = 0.5 - x / 6 + x**2 / 24 - x**3 / 120 + x**4 / 720
    w1s = 0.5 - x / 3 + x**2 / 8 - x**3 / 30 + x**4 / 144
    return np.where(small, w0s, w0), np.where(small, w1s, w1)


def truncated_laplace(u: TimeSeries, s, leading: tuple[float, float] | None = None) -> LaplaceResult:
    """Approximation of ``int_S^T exp(-s t) u(t) dt``.

    The exponential is integrated exactly against the piecewise-linear
    interpolant of ``u`` (exact for linear data), and the interpolation error
    is corrected by ``-dt**2 / 12 int exp(-s t) u''``, which makes the rule
    fourth order for smooth ``u``.

    ``leading = (coef, power)`` declares ``u(t) ~ coef (t - S)**power`` near
    ``S``; that part is integrated exactly (incomplete gamma) and only the
    smoother remainder goes through the rule.  The returned ``tail_bound`` is
    ``exp(-s T) max|u| / s``, a bound on the neglected ``int_T^inf`` when
    ``|u|`` stays below its sampled maximum.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr <= 0):
        raise DomainError("Laplace variable must be positive")
    grid = u.grid
    t = grid.nodes
    h = grid.dt
    tau = t - grid.t_start
    vals = u.values
    exact = np.zeros_like(s_arr)
    if leading is not None:
        coef, power = leading
        if not power > -1:
            raise DomainError("leading power must exceed -1")
        vals = vals - coef * tau**power
        span = grid.t_end - grid.t_start
        exact = (coef * np.exp(-s_arr * grid.t_start) * math.gamma(power + 1.0)
                 * gammainc(power + 1.0, s_arr * span) / s_arr ** (power + 1.0))
    decay = np.exp(-np.outer(s_arr, t))
    w0, w1 = _filon_weights(s_arr * h)
    linear = h * (w0 * (decay[:, :-1] @ vals[:-1]) + w1 * (decay[:, :-1] @ vals[1:]))
    trap = np.full(t.size, h)
    trap[0] = trap[-1] = 0.5 * h
    correction = -(h**2 / 12.0) * (decay @ (trap * second_derivative_array(vals, h)))
    value = linear + correction + exact
    tail = np.exp(-s_arr * grid.t_end) * float(np.max(np.abs(u.values))) / s_arr
    if np.ndim(s) == 0:
        return LaplaceResult(float(value[0]), float(tail[0]))
    return LaplaceResult(value, tail)


def lp_norm(values: np.ndarray, dt: float, p: float = 2.0, skip: int = 0,
            weight: np.ndarray | None = None) -> float:
    """Trapezoid ``L_p`` norm along axis 0, optionally dropping ``skip`` nodes at each end."""
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.ndim > 1:
        vals = vals.reshape(vals.shape[0], -1).max(axis=1)
    if skip:
        vals = vals[skip:-skip]
    w = np.full(vals.size, dt)
    w[0] = w[-1] = 0.5 * dt
    if weight is not None:
        wt = np.asarray(weight, dtype=float)
        w = w * (wt[skip:-skip] if skip else wt)
    return float(np.sum(w * vals**p) ** (1.0 / p))


def derivative_interp_check(u: TimeSeries, eps: float, p: float = 2.0) -> tuple[float, float]:
    """Both sides of ``|u'|_p <= N (eps^-1 |u|_p + eps |u''|_p)`` with ``N = 1``.

    Returns ``(|u'|_p, |u|_p / eps + eps |u''|_p)`` on the grid interval.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    dt = u.grid.dt
    du = first_derivative_array(u.values, dt)
    d2u = second_derivative_array(u.values, dt)
    lhs = lp_norm(du, dt, p)
    rhs = lp_norm(u.values, dt, p) / eps + eps * lp_norm(d2u, dt, p)
    return lhs, rhs
