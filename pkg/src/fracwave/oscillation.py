"""Parabolic cylinders, dyadic cubes, mean oscillation and maximal functions.

Suprema over uncountable families (all cylinders, all radii) are maxima over
explicit sampling plans, so every reported constant is a lower bound.
Averages are midpoint rules: either over the grid nodes of a field lying in
a region, or over a lattice of cell centers when the integrand is a
callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import DomainError, GridError, PreconditionError
from .spectral import SpaceTimeField, hessian

__all__ = [
    "ParabolicCylinder",
    "DyadicCube",
    "CoefficientField",
    "ElongatedResult",
    "DecayResult",
    "time_extent",
    "dyadic_level",
    "mean_oscillation",
    "gamma0_estimate",
    "chain_constant",
    "elongated_oscillation",
    "dyadic_partition",
    "dyadic_sharp",
    "strong_maximal",
    "oscillation_decay_experiment",
    "fit_decay_exponent",
]

_EDGE = 1e-12


def time_extent(r: float, alpha: float) -> float:
    """Time length ``r**(2/alpha)`` of a cylinder of spatial radius ``r``."""
    return r ** (2.0 / alpha)


@dataclass(frozen=True)
class ParabolicCylinder:
    """``Q_{r1,r2}(t0, x0) = (t0 - r1**(2/alpha), t0) x B_{r2}(x0)``."""

    t0: float
    x0: tuple[float, ...]
    r1: float
    r2: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(c) for c in np.atleast_1d(self.x0)))
        if not (self.r1 > 0 and self.r2 > 0):
            raise DomainError("cylinder radii must be positive")

    @classmethod
    def square(cls, t0, x0, r, alpha) -> "ParabolicCylinder":
        return cls(t0, x0, r, r, alpha)

    @property
    def dim(self) -> int:
        return len(self.x0)

    @property
    def t_low(self) -> float:
        return self.t0 - time_extent(self.r1, self.alpha)

    def time_mask(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return (t > self.t_low + _EDGE) & (t <= self.t0 + _EDGE)

    def space_mask(self, x: np.ndarray) -> np.ndarray:
        dist = np.linalg.norm(np.asarray(x) - np.asarray(self.x0), axis=-1)
        return dist < self.r2 * (1 + _EDGE)

    def contains(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.time_mask(t) & self.space_mask(x)

    def lattice(self, n_time: int = 16, n_space: int = 16) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center times and spatial points (inside the ball) for midpoint averages."""
        ext = time_extent(self.r1, self.alpha)
        times = self.t0 - (np.arange(n_time) + 0.5) * ext / n_time
        return times, _ball_lattice(self.x0, self.r2, n_space)


def _ball_lattice(x0: Sequence[float], radius: float, n_space: int) -> np.ndarray:
    """Centers ``x0 + (k + 1/2) h`` of the cells of width ``h = 2 r / n`` inside the ball."""
    h = 2.0 * radius / n_space
    offs = (np.arange(n_space) - n_space / 2 + 0.5) * h
    grids = np.meshgrid(*([offs] * len(x0)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    pts = pts[np.linalg.norm(pts, axis=1) < radius]
    return pts + np.asarray(x0)


def dyadic_level(n: int, alpha: float) -> int:
    """Time level ``k(n)`` with ``k(n) <= 2n/alpha < k(n) + 1``."""
    ratio = 2.0 * n / alpha
    k = math.floor(ratio)
    if ratio - k > 1 - 1e-12:
        k += 1
    return int(k)


@dataclass(frozen=True)
class DyadicCube:
    """``[T + i0 2^-k, T + (i0+1) 2^-k) x prod_j [i_j 2^-n, (i_j+1) 2^-n)`` with ``i0 <= -1``."""

    n: int
    k: int
    index: tuple[int, ...]
    anchor: float

    @property
    def time_side(self) -> float:
        return 2.0 ** (-self.k)

    @property
    def space_side(self) -> float:
        return 2.0 ** (-self.n)

    @property
    def t_low(self) -> float:
        return self.anchor + self.index[0] * self.time_side

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.index[1:], dtype=float) * self.space_side

    def time_mask(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return (t >= self.t_low) & (t < self.t_low + self.time_side)

    def space_mask(self, x: np.ndarray) -> np.ndarray:
        rel = (np.asarray(x) - self.lower) / self.space_side
        return np.all((rel >= 0) & (rel < 1), axis=-1)

    def contains(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.time_mask(t) & self.space_mask(x)

    def lattice(self, n_time: int = 16, n_space: int = 16) -> tuple[np.ndarray, np.ndarray]:
        times = self.t_low + (np.arange(n_time) + 0.5) * self.time_side / n_time
        offs = (np.arange(n_space) + 0.5) * self.space_side / n_space
        d = len(self.index) - 1
        grids = np.meshgrid(*([offs] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1) + self.lower
        return times, pts

    def at_level(self, n: int, alpha: float) -> "DyadicCube":
        """The level-``n`` cube containing this cube's lower corner."""
        k = dyadic_level(n, alpha)
        t_idx = math.floor((self.t_low - self.anchor) * 2.0**k + 1e-9)
        sp = tuple(math.floor(c * 2.0**n + 1e-9) for c in self.lower)
        return DyadicCube(n, k, (t_idx,) + sp, self.anchor)


# ------------------------------------------------------------- averages


def _field_points(f: SpaceTimeField) -> tuple[np.ndarray, np.ndarray]:
    mesh = np.meshgrid(*f.axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return f.grid.nodes, pts


def _region_samples(f, region, n_time: int, n_space: int) -> np.ndarray:
    """Samples of ``f`` (field or callable) at the midpoint nodes of ``region``.

    Returns an array of shape ``(n_points, ...)`` where trailing axes are
    components (e.g. matrix entries) of vector-valued integrands.
    """
    if isinstance(f, SpaceTimeField):
        times, pts = _field_points(f)
        vals = f.values.reshape(f.grid.size, -1)[np.ix_(region.time_mask(times), region.space_mask(pts))]
        if vals.size < 4:
            raise GridError("region meets fewer than 4 grid nodes")
        return vals.ravel()
    times, pts = region.lattice(n_time, n_space)
    if pts.shape[0] == 0:
        raise GridError("region lattice is empty")
    tt = np.repeat(times, pts.shape[0])
    xx = np.tile(pts, (times.size, 1))
    return np.asarray(f(tt, xx), dtype=float)


def _oscillation_of_samples(vals: np.ndarray) -> float:
    mean = vals.mean(axis=0)
    dev = vals - mean
    if dev.ndim > 1:
        dev = np.sqrt(np.sum(dev.reshape(dev.shape[0], -1) ** 2, axis=1))
    return float(np.mean(np.abs(dev)))


def mean_oscillation(f, region, n_time: int = 16, n_space: int = 16) -> float:
    """``avg_R |f - avg_R f|`` by midpoint quadrature.

    ``f`` is a :class:`SpaceTimeField` (nodes inside ``region`` are averaged)
    or a callable ``f(t, x)`` with ``t`` of shape ``(m,)`` and ``x`` of shape
    ``(m, d)``, sampled on the region's cell-center lattice.  Matrix-valued
    callables use the Frobenius norm of the deviation.
    """
    return _oscillation_of_samples(_region_samples(f, region, n_time, n_space))


# ------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class CoefficientField:
    """Coefficient sampler ``a(t, x) -> (m, d, d)`` with ellipticity ``delta``.

    Scalar samplers (returning shape ``(m,)``) stand for ``a I``.
    """

    sampler: Callable
    delta: float
    dim: int

    def __call__(self, t, x) -> np.ndarray:
        vals = np.asarray(self.sampler(np.asarray(t, dtype=float), np.asarray(x, dtype=float)), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None, None] * np.eye(self.dim)
        return vals

    def check_ellipticity(self, t, x) -> bool:
        """Sampled check of ``delta |xi|^2 <= a xi.xi`` and ``|a_ij| <= 1/delta``."""
        a = self(t, x)
        sym = 0.5 * (a + np.swapaxes(a, -1, -2))
        low = np.linalg.eigvalsh(sym).min()
        return bool(low >= self.delta * (1 - 1e-12) and np.abs(a).max() <= (1 + 1e-12) / self.delta)


def _component_oscillation(a: CoefficientField, times: np.ndarray, pts: np.ndarray) -> float:
    """Largest entrywise mean oscillation over the product lattice ``times x pts``."""
    tt = np.repeat(times, pts.shape[0])
    xx = np.tile(pts, (times.size, 1))
    vals = a(tt, xx)
    dev = np.abs(vals - vals.mean(axis=0))
    return float(dev.mean(axis=0).max())


def gamma0_estimate(a: CoefficientField, R0: float, plan: Iterable[tuple[float, Sequence[float], float]],
                    alpha: float, n_time: int = 16, n_space: int = 16) -> float:
    """``max_{plan, i, j} avg_{Q_r(t0,x0)} |a_ij - avg a_ij|`` for plan entries ``(t0, x0, r)``."""
    best = 0.0
    for t0, x0, r in plan:
        if r > R0 * (1 + 1e-12):
            raise PreconditionError(f"plan radius {r} exceeds R0={R0}")
        cyl = ParabolicCylinder.square(t0, x0, r, alpha)
        times, pts = cyl.lattice(n_time, n_space)
        best = max(best, _component_oscillation(a, times, pts))
    return best


def chain_constant(alpha: float, d: int) -> float:
    """Explicit ``N(alpha, d)`` from the telescoping argument.

    With ``(k-1) rt <= h < k rt`` the chain gives
    ``(1/(k-1)) sum_{j<k} (1 + 4 2^{d alpha/2} j) gamma0
    = k/(k-1) (1 + 2 2^{d alpha/2} (k-1)) gamma0`` and ``h/rt >= k-1``;
    the ratio to ``h/rt`` is largest at ``k = 2``.
    """
    return 2.0 * (1.0 + 2.0 * 2.0 ** (d * alpha / 2.0))


@dataclass(frozen=True)
class ElongatedResult:
    """Left side, bound ``N h r^{-2/alpha} gamma0`` and the pieces behind them."""

    lhs: float
    bound: float
    gamma0: float
    chain: float
    constant: float
    holds: bool


def elongated_oscillation(a: CoefficientField, t0: float, x0: Sequence[float], r: float, h: float,
                          alpha: float, R0: float | None = None, cells_per_step: int = 8,
                          n_space: int = 24) -> ElongatedResult:
    """Oscillation over ``(t0 - h, t0) x B_r`` against the Q_r average, versus the chain bound.

    ``gamma0`` is measured over the cylinders the argument actually uses:
    ``Q_r(t0 - j rt, x0)`` for ``j < k`` and ``Q_{2^{alpha/2} r}(t0 - i rt, x0)``
    for ``i < k - 1``, with ``rt = r**(2/alpha)``.  All windows are unions of
    time cells of width ``rt / cells_per_step`` and of spatial cells from one
    lattice, so nested averages are consistent.
    """
    rt = time_extent(r, alpha)
    if h < rt * (1 - 1e-12):
        raise PreconditionError(f"h={h} is shorter than r^(2/alpha)={rt}")
    if R0 is not None and r > 2.0 ** (-alpha / 2.0) * R0 * (1 + 1e-12):
        raise PreconditionError("r must not exceed 2^(-alpha/2) R0")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    k = max(2, math.floor(h / rt * (1 + 1e-12)) + 1)
    m = cells_per_step
    dt = rt / m
    n_h = int(round(h / dt))
    if not math.isclose(n_h * dt, h, rel_tol=1e-9):
        raise GridError("h must be a multiple of r^(2/alpha) / cells_per_step")
    n_cells = max(k * m, n_h)
    times = t0 - (np.arange(n_cells) + 0.5) * dt  # index 0 is the latest cell
    big = 2.0 ** (alpha / 2.0) * r
    cell = 2.0 * r / n_space
    half = math.ceil(big / cell)
    offs = (np.arange(-half, half) + 0.5) * cell
    grids = np.meshgrid(*([offs] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    dist = np.linalg.norm(pts, axis=1)
    pts = pts[dist < big]
    in_small = np.linalg.norm(pts, axis=1) < r
    pts = pts + x0
    tt = np.repeat(times, pts.shape[0])
    xx = np.tile(pts, (times.size, 1))
    vals = a(tt, xx).reshape(times.size, pts.shape[0], -1)

    def osc(t_slice, mask):
        block = vals[t_slice][:, mask]
        return float(np.abs(block - block.mean(axis=(0, 1))).mean(axis=(0, 1)).max())

    abar = vals[:m][:, in_small].mean(axis=(0, 1))
    lhs = float(np.abs(vals[:n_h][:, in_small] - abar).mean(axis=(0, 1)).max())
    gamma0 = 0.0
    for j in range(k):
        gamma0 = max(gamma0, osc(slice(j * m, (j + 1) * m), in_small))
    for i in range(k - 1):
        gamma0 = max(gamma0, osc(slice(i * m, (i + 2) * m), np.ones(pts.shape[0], bool)))
    const = chain_constant(alpha, d)
    chain = k / (k - 1) * (1.0 + 2.0 * 2.0 ** (d * alpha / 2.0) * (k - 1)) * gamma0
    bound = const * (h / rt) * gamma0
    return ElongatedResult(lhs, bound, gamma0, chain, const, bool(lhs <= bound * (1 + 1e-12)))


# ------------------------------------------------------------- dyadic


def dyadic_partition(n: int, alpha: float, anchor: float, t_range: tuple[float, float],
                     lower: Sequence[float], upper: Sequence[float]) -> list[DyadicCube]:
    """Level-``n`` cubes meeting ``[t_range) x prod [lower, upper)``; only cubes with ``i0 <= -1``."""
    k = dyadic_level(n, alpha)
    t_lo, t_hi = t_range
    if t_hi > anchor + 1e-12:
        raise DomainError("dyadic cubes live below the anchor time")
    i0_lo = math.floor((t_lo - anchor) * 2.0**k + 1e-9)
    i0_hi = min(-1, math.ceil((t_hi - anchor) * 2.0**k - 1e-9) - 1)
    ranges = [range(i0_lo, i0_hi + 1)]
    for lo, hi in zip(lower, upper):
        ranges.append(range(math.floor(lo * 2.0**n + 1e-9), math.ceil(hi * 2.0**n - 1e-9)))
    idx = np.stack(np.meshgrid(*[np.arange(r.start, r.stop) for r in ranges], indexing="ij"), axis=-1)
    return [DyadicCube(n, k, tuple(int(v) for v in row), anchor) for row in idx.reshape(-1, len(ranges))]


def _cube_ids(times: np.ndarray, pts: np.ndarray, n: int, k: int, anchor: float) -> np.ndarray:
    ti = np.floor((times - anchor) * 2.0**k).astype(np.int64)
    xi = np.floor(pts * 2.0**n).astype(np.int64)
    keys = np.concatenate([np.repeat(ti, pts.shape[0])[:, None], np.tile(xi, (times.size, 1))], axis=1)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    return inverse.ravel()


def dyadic_sharp(g: SpaceTimeField, levels: Sequence[int], anchor: float) -> np.ndarray:
    """Pointwise maximum over ``levels`` of the containing cube's mean oscillation of ``g``.

    Cube averages run over the grid nodes in each cube.  Returns an array
    shaped like ``g.values``.
    """
    times, pts = _field_points(g)
    if np.any(times >= anchor):
        raise DomainError("grid points at or after the anchor time lie outside all cubes")
    flat = g.values.reshape(-1)
    out = np.zeros_like(flat)
    for n in sorted(levels):
        ids = _cube_ids(times, pts, n, dyadic_level(n, g.alpha), anchor)
        counts = np.bincount(ids)
        means = np.bincount(ids, flat) / counts
        dev = np.abs(flat - means[ids])
        osc = np.bincount(ids, dev) / counts
        out = np.maximum(out, osc[ids])
    return out.reshape(g.values.shape)


# ------------------------------------------------------------- maximal


def _ball_footprint(radius: float, spacing: Sequence[float]) -> np.ndarray:
    half = [int(math.floor(radius / h + 1e-9)) for h in spacing]
    axes = [np.arange(-m, m + 1) * h for m, h in zip(half, spacing)]
    grids = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum(gr**2 for gr in grids))
    return dist <= radius * (1 + 1e-9)


def _causal_window_mean(vals: np.ndarray, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Sums over the last ``length`` time nodes ending at each node, and node counts."""
    csum = np.cumsum(vals, axis=0)
    shifted = np.zeros_like(csum)
    shifted[length:] = csum[:-length]
    counts = np.minimum(np.arange(1, vals.shape[0] + 1), length).astype(float)
    return csum - shifted, counts


def strong_maximal(f: SpaceTimeField, plan: Iterable[tuple[float, float]]) -> np.ndarray:
    """Sampled strong maximal function ``sup_{Q_{r1,r2} ∋ (t,x)} avg_Q |f|``.

    ``plan`` lists ``(r1, r2)`` pairs; cylinders are anchored at every grid
    node and averaged over their intersection with the grid.  A cylinder
    covers ``max(1, round(r1**(2/alpha) / dt))`` time nodes ending at its
    anchor and the spatial nodes within ``r2``.
    """
    plan = list(plan)
    if not plan:
        raise DomainError("radius plan is empty")
    absf = np.abs(f.values)
    out = np.zeros_like(absf)
    dt = f.grid.dt
    for r1, r2 in plan:
        n_t = max(1, int(round(time_extent(r1, f.alpha) / dt)))
        sums, counts = _causal_window_mean(absf, n_t)
        foot = _ball_footprint(r2, f.spacing)
        ball_sum = ndimage.correlate(sums, foot[None].astype(float), mode="constant", cval=0.0)
        ball_cnt = ndimage.correlate(np.ones(absf.shape[1:]), foot.astype(float), mode="constant", cval=0.0)
        means = ball_sum / (counts.reshape((-1,) + (1,) * f.dim) * ball_cnt[None])
        # spread each anchor's mean to every node its cylinder covers
        spread = ndimage.maximum_filter(means, footprint=foot[None], mode="constant", cval=0.0)
        later = np.zeros_like(spread)
        for lag in range(n_t):
            later[: spread.shape[0] - lag] = np.maximum(later[: spread.shape[0] - lag], spread[lag:])
        out = np.maximum(out, later)
    return out


# ------------------------------------------------------------- decay experiment


@dataclass(frozen=True)
class DecayResult:
    """Left side and the two right-hand sums of the mean-oscillation estimate."""

    lhs: float
    hessian_sum: float
    forcing_sum: float
    ratio: float
    truncated: bool


def _window_average(vals: np.ndarray, f: SpaceTimeField, t0: float, tau: float,
                    x0: np.ndarray, radius: float, power: float | None) -> tuple[np.ndarray | float, bool]:
    """Average over ``(t0 - tau, t0] x B_radius(x0)``; times below 0 count as zeros.

    With ``power`` set returns ``(avg |v|^power)^(1/power)`` of the pointwise
    Frobenius norm; otherwise the per-node values inside the window.
    """
    times = f.grid.nodes
    t_in = (times > t0 - tau + _EDGE) & (times <= t0 + _EDGE)
    _, pts = _field_points(f)
    x_in = np.linalg.norm(pts - x0, axis=1) < radius * (1 + _EDGE)
    lo = np.asarray([ax[0] for ax in f.axes])
    hi = np.asarray([ax[-1] for ax in f.axes])
    truncated = bool(np.any(x0 - radius < lo - _EDGE) or np.any(x0 + radius > hi + _EDGE))
    block = vals.reshape(f.grid.size, pts.shape[0], -1)[np.ix_(t_in, x_in)]
    if power is None:
        return block, truncated
    norms = np.sqrt(np.sum(block**2, axis=-1))
    covered = t_in.sum() * f.grid.dt
    span = max(tau, covered)
    mean = np.sum(norms**power) * f.grid.dt / (span * x_in.sum())
    return mean ** (1.0 / power), truncated


def oscillation_decay_experiment(u: SpaceTimeField, f: SpaceTimeField | None, kappa: float, r: float,
                                 point: tuple[float, Sequence[float]], p0: float = 1.5,
                                 delta: float = 1.0, cutoff: float = 1e-6) -> DecayResult:
    """Both sides of the mean-oscillation decay estimate for ``D^2 u`` at one (kappa, r, point).

    Left: ``avg |D^2u - avg D^2u|`` over ``(t0 - (kappa r)^{2/alpha}, t0) x B_{delta kappa r}``.
    Right: ``S1 = sum_k 2^{-k alpha} (|D^2u|^{p0})^{1/p0}`` over
    ``(t0 - 2^k (r/2)^{2/alpha}, t0) x B_{r/(2 delta)}`` and
    ``S2 = sum_k 2^{-k alpha} (|f|^{p0})^{1/p0}`` over
    ``(t0 - 2^k r^{2/alpha}, t0) x B_{sqrt(d) r/delta}``; the sums stop once
    ``2^{-k alpha} <= cutoff``.  ``ratio`` is ``lhs / (S1 + kappa^{-(d+2/alpha)/p0} S2)``
    with unit constants.
    """
    if not 0 < kappa <= 0.25:
        raise DomainError("kappa must lie in (0, 1/4]")
    if not 1 < p0 < 2:
        raise DomainError("p0 must lie in (1, 2)")
    t0, x0 = point
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    alpha = u.alpha
    d = u.dim
    hess = hessian(u)
    stack = np.stack([hess[i][j] for i in range(d) for j in range(d)], axis=-1)
    inner, trunc = _window_average(stack, u, t0, time_extent(kappa * r, alpha), x0, delta * kappa * r, None)
    if inner.shape[0] * inner.shape[1] < 4:
        raise GridError("the kappa-cylinder meets fewer than 4 grid nodes")
    lhs = _oscillation_of_samples(inner.reshape(-1, inner.shape[-1]))
    n_terms = int(math.ceil(-math.log2(cutoff) / alpha)) + 1
    s1 = 0.0
    s2 = 0.0
    for k in range(n_terms):
        wk = 2.0 ** (-k * alpha)
        avg, tr = _window_average(stack, u, t0, 2.0**k * time_extent(r / 2.0, alpha), x0, r / (2 * delta), p0)
        s1 += wk * avg
        trunc |= tr
        if f is not None:
            favg, tr = _window_average(f.values[..., None], f, t0, 2.0**k * time_extent(r, alpha), x0,
                                       math.sqrt(d) * r / delta, p0)
            s2 += wk * favg
            trunc |= tr
    rhs = s1 + kappa ** (-(d + 2.0 / alpha) / p0) * s2
    ratio = lhs / rhs if rhs > 0 else 0.0
    return DecayResult(float(lhs), float(s1), float(s2), float(ratio), bool(trunc))


def fit_decay_exponent(kappas: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log value`` against ``log kappa``."""
    lk = np.log(np.asarray(kappas, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(lk, lv, 1)[0])
