"""Muckenhoupt weights, weighted mixed norms and Besov seminorms.

A_p constants are suprema over all balls; here they are maxima over a
declared sampling plan of balls, hence lower bounds.  Ball averages use
midpoint quadrature on a cell lattice anchored at the origin (cell centers at
``(k + 1/2) h``), which keeps reflected cells aligned; one-dimensional power
weights can instead be averaged in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, GridError

__all__ = [
    "Weight",
    "Ball",
    "ApResult",
    "NormParams",
    "BesovResult",
    "dyadic_plan",
    "ap_estimate",
    "ap_products",
    "power_admissible",
    "mixed_norm",
    "plain_lp_norm",
    "besov_seminorm",
    "even_extend_weight",
    "even_extension_check",
]


@dataclass(frozen=True)
class Weight:
    """Positive weight on R^d.

    ``kind`` is ``"constant"``, ``"power"`` (``|x|**mu``, or ``|x_axis|**mu``
    when ``axis`` is set), ``"tabulated"`` (1-d, linear interpolation),
    ``"product"`` (``w1(t) w2(x)``, used by mixed norms) or ``"function"``.
    """

    kind: str
    mu: float = 0.0
    value: float = 1.0
    axis: int | None = None
    table: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)
    func: Callable | None = field(default=None, compare=False)
    time: "Weight | None" = None
    space: "Weight | None" = None

    @classmethod
    def constant(cls, value: float = 1.0) -> "Weight":
        if not value > 0:
            raise DomainError("constant weight must be positive")
        return cls("constant", value=float(value))

    @classmethod
    def power(cls, mu: float, axis: int | None = None) -> "Weight":
        return cls("power", mu=float(mu), axis=axis)

    @classmethod
    def tabulated(cls, nodes, values) -> "Weight":
        x = np.asarray(nodes, dtype=float)
        v = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or np.any(np.diff(x) <= 0):
            raise DomainError("tabulated weight needs increasing nodes and matching values")
        if np.any(v <= 0):
            raise DomainError("tabulated weight must be positive")
        return cls("tabulated", table=(x, v))

    @classmethod
    def from_function(cls, func: Callable) -> "Weight":
        return cls("function", func=func)

    @classmethod
    def product(cls, time: "Weight | None" = None, space: "Weight | None" = None) -> "Weight":
        return cls("product", time=time or cls.constant(), space=space or cls.constant())

    @property
    def is_unit(self) -> bool:
        return self.kind == "constant" and self.value == 1.0

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(...,)`` (1-d) or ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape if x.ndim <= 1 else x.shape[:-1], self.value)
        if self.kind == "power":
            if x.ndim <= 1:
                r = np.abs(x)
            elif self.axis is not None:
                r = np.abs(x[..., self.axis])
            else:
                r = np.linalg.norm(x, axis=-1)
            with np.errstate(divide="ignore"):
                return r**self.mu
        if self.kind == "tabulated":
            nodes, vals = self.table
            return np.interp(x, nodes, vals)
        if self.kind == "function":
            return np.asarray(self.func(x), dtype=float)
        raise DomainError("product weights are evaluated through their time and space factors")


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class ApResult:
    """Largest sampled A_p product (a lower bound for ``[w]_{A_p}``) and the per-ball values."""

    value: float
    products: np.ndarray
    balls: tuple[Ball, ...]


def dyadic_plan(lower: float, upper: float, n_centers: int = 17,
                radii: Sequence[float] | None = None, dim: int = 1) -> list[Ball]:
    """Grid centers in ``[lower, upper]^dim`` times dyadic radii ``2^-8 .. 2^3``."""
    if radii is None:
        radii = [2.0**k for k in range(-8, 4)]
    axis = np.linspace(lower, upper, n_centers)
    centers = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return [Ball(tuple(c), r) for c in centers for r in radii]


def power_admissible(mu: float, p: float) -> bool:
    """Whether ``|t|**mu`` is an A_p weight on the line: ``-1 < mu < p - 1``."""
    if not p > 1:
        raise DomainError("p must exceed 1")
    return -1.0 < mu < p - 1.0


def _power_interval_mean(mu: float, a: float, b: float) -> float:
    """Exact mean of ``|t|**mu`` over ``[a, b]``; ``inf`` when it diverges."""
    if mu <= -1 and a <= 0 <= b:
        return math.inf
    if mu == -1.0:
        return abs(math.log(abs(b)) - math.log(abs(a))) / (b - a)

    def prim(t):
        return math.copysign(abs(t) ** (mu + 1.0), t) / (mu + 1.0)

    return (prim(b) - prim(a)) / (b - a)


def _lattice(ball: Ball, h: float) -> np.ndarray:
    """Cell centers ``(k + 1/2) h`` of the origin-anchored lattice lying in ``ball``."""
    axes = []
    for c in ball.center:
        lo = math.floor((c - ball.radius) / h)
        hi = math.ceil((c + ball.radius) / h)
        axes.append((np.arange(lo, hi) + 0.5) * h)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ball.dim)
    inside = np.linalg.norm(pts - np.asarray(ball.center), axis=1) <= ball.radius
    return pts[inside] if ball.dim > 1 else pts[inside][:, 0]


def _ball_means(w: Weight, ball: Ball, p: float, cells: int, method: str,
                mask: Callable | None = None) -> tuple[float, float]:
    """Means of ``w`` and ``w**(-1/(p-1))`` over ``ball`` (optionally intersected with ``mask``)."""
    expo = -1.0 / (p - 1.0)
    if method == "exact":
        a = ball.center[0] - ball.radius
        b = ball.center[0] + ball.radius
        return _power_interval_mean(w.mu, a, b), _power_interval_mean(w.mu * expo, a, b)
    h = 2.0 * ball.radius / cells
    pts = _lattice(ball, h)
    if mask is not None:
        pts = pts[mask(pts)]
    if pts.shape[0] == 0:
        raise GridError("ball contains no quadrature cells")
    vals = w(pts)
    if np.any(~(vals > 0)):
        raise DomainError("weight is not positive at a sampled point")
    return float(vals.mean()), float(np.mean(vals**expo))


def ap_products(w: Weight, p: float, plan: Iterable[Ball], cells: int = 256, method: str = "auto",
                mask: Callable | None = None) -> np.ndarray:
    """Per-ball products ``(avg w)(avg w**(-1/(p-1)))**(p-1)``."""
    if not p > 1:
        raise DomainError("p must exceed 1")
    plan = list(plan)
    if not plan:
        raise DomainError("sampling plan is empty")
    if method == "auto":
        method = "exact" if (w.kind == "power" and plan[0].dim == 1 and mask is None) else "midpoint"
    out = np.empty(len(plan))
    for i, ball in enumerate(plan):
        m1, m2 = _ball_means(w, ball, p, cells, method, mask)
        out[i] = m1 * m2 ** (p - 1.0)
    return out


def ap_estimate(w: Weight, p: float, plan: Iterable[Ball], cells: int = 256, method: str = "auto") -> ApResult:
    """Sampled A_p constant: the maximum product over the plan.

    ``method="exact"`` (automatic for 1-d power weights) uses closed-form
    interval means and returns ``inf`` for non-integrable balls;
    ``"midpoint"`` averages over ``cells`` lattice cells per diameter.
    """
    plan = tuple(plan)
    prods = ap_products(w, p, plan, cells, method)
    return ApResult(float(np.max(prods)), prods, plan)


def even_extend_weight(w: Weight, axis: int = 0) -> Weight:
    """Even extension ``w(|x1|, x')`` of a weight given on the half space ``x1 > 0``."""
    if w.kind == "constant":
        return w

    def extended(x):
        y = np.array(x, dtype=float, copy=True)
        if y.ndim <= 1:
            y = np.abs(y)
        else:
            y[..., axis] = np.abs(y[..., axis])
        return w(y)

    return Weight.from_function(extended)


def even_extension_check(w: Weight, q: float, plan: Iterable[Ball], cells: int = 128,
                         axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-ball products of the even extension on ``B`` and of ``w`` on ``B`` ∩ half space.

    Ball centers must satisfy ``x1 >= 0``.  The extension side should not
    exceed ``2**q`` times the half-space side for any ball.
    """
    plan = list(plan)
    if any(b.center[axis] < 0 for b in plan):
        raise DomainError("even-extension checks use centers in the closed half space")
    ext = even_extend_weight(w, axis)

    def half(pts):
        return (pts > 0) if pts.ndim == 1 else (pts[:, axis] > 0)

    full = ap_products(ext, q, plan, cells, method="midpoint")
    part = ap_products(w, q, plan, cells, method="midpoint", mask=half)
    return full, part


# ------------------------------------------------------------- mixed norms


@dataclass(frozen=True)
class NormParams:
    """Exponents and weight of ``L_{p,q,w}``: ``L_q(w2 dx)`` inside, ``L_p(w1 dt)`` outside.

    ``region`` optionally pins ``(t_start, t_end, lower, upper)``; norms of
    fields on a different region are rejected.  ``skip`` drops that many time
    nodes at each end.
    """

    p: float = 2.0
    q: float = 2.0
    weight: Weight = field(default_factory=lambda: Weight.product())
    region: tuple | None = None
    skip: int = 0

    def __post_init__(self):
        if not (self.p > 1 and self.q > 1):
            raise DomainError("mixed-norm exponents must exceed 1")
        if self.weight.kind != "product":
            object.__setattr__(self, "weight", Weight.product(time=self.weight))


def _trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    d = np.diff(axis)
    w = np.zeros(axis.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _dual_cell_weights(axis: np.ndarray, w: Weight) -> np.ndarray:
    """Trapezoid weights with ``w`` averaged exactly over each dual cell when possible."""
    edges = np.concatenate([[axis[0]], 0.5 * (axis[1:] + axis[:-1]), [axis[-1]]])
    if w.is_unit:
        return np.diff(edges)
    if w.kind == "constant":
        return w.value * np.diff(edges)
    if w.kind == "power" and (w.mu > -1 or edges[0] > 0 or edges[-1] < 0):
        mu = w.mu
        prim = np.sign(edges) * np.abs(edges) ** (mu + 1.0) / (mu + 1.0)
        return np.diff(prim)
    return w(axis) * np.diff(edges)


def _spatial_weights(axes, w2: Weight) -> np.ndarray:
    cell = np.ones(())
    for ax in axes:
        cell = np.multiply.outer(cell, _trapezoid_weights(ax))
    if w2.is_unit:
        return cell
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pts = mesh[..., 0] if len(axes) == 1 else mesh
    return cell * w2(pts)


def _unpack_field(u, t=None, axes=None):
    if hasattr(u, "values") and hasattr(u, "axes"):
        return np.asarray(u.values, dtype=float), u.grid.nodes, u.axes
    if t is None or axes is None:
        raise DomainError("plain arrays need explicit time nodes and spatial axes")
    return np.asarray(u, dtype=float), np.asarray(t, dtype=float), tuple(np.asarray(a) for a in axes)


def _check_region(params: NormParams, t, axes):
    if params.region is None:
        return
    t0, t1, lower, upper = params.region
    ok = math.isclose(t[0], t0, abs_tol=1e-12) and math.isclose(t[-1], t1, abs_tol=1e-12)
    for ax, lo, hi in zip(axes, np.atleast_1d(lower), np.atleast_1d(upper)):
        ok &= math.isclose(ax[0], lo, abs_tol=1e-12) and math.isclose(ax[-1], hi, abs_tol=1e-12)
    if not ok:
        raise GridError("field region does not match the norm region")


def mixed_norm(u, params: NormParams, t=None, axes=None) -> float:
    """``(int (int |u|^q w2 dx)^{p/q} w1 dt)^{1/p}`` by nested trapezoid quadrature.

    ``u`` is a :class:`~fracwave.spectral.SpaceTimeField` or an array of shape
    ``(nt, n_1, ..., n_d)`` with explicit ``t`` and ``axes``.
    """
    vals, t, axes = _unpack_field(u, t, axes)
    _check_region(params, t, axes)
    if vals.shape != (t.size,) + tuple(ax.size for ax in axes):
        raise GridError("field shape does not match its grids")
    wt = _dual_cell_weights(t, params.weight.time)
    if params.skip:
        s = params.skip
        vals, wt = vals[s:-s], wt[s:-s]
    wx = _spatial_weights(axes, params.weight.space)
    absu = np.abs(vals)
    inner = np.tensordot(absu**params.q, wx, axes=len(axes)) ** (1.0 / params.q)
    return float(np.sum(wt * inner**params.p) ** (1.0 / params.p))


def plain_lp_norm(u, p: float, t=None, axes=None) -> float:
    """Unweighted space-time ``L_p`` norm via a single tensor trapezoid rule."""
    vals, t, axes = _unpack_field(u, t, axes)
    cell = _trapezoid_weights(t)
    for ax in axes:
        cell = np.multiply.outer(cell, _trapezoid_weights(ax))
    return float(np.sum(cell * np.abs(vals) ** p) ** (1.0 / p))


# ------------------------------------------------------------- Besov


@dataclass(frozen=True)
class BesovResult:
    """Truncated seminorm over ``dx <= |y| <= y_max`` plus the two tail estimates.

    ``estimate`` adds both tails (in the ``p``-th power) to the truncated value.
    """

    value: float
    small_tail: float
    large_tail: float
    estimate: float


def _shift_difference_norms(v: np.ndarray, dx: float, shifts: np.ndarray, q: float,
                            w2: Weight, x0: float, extension: str = "zero") -> np.ndarray:
    """``||v(. + m dx) - v||_{L_q(w2)}``.

    With ``extension="zero"`` the norm runs over the real line with ``v`` zero
    outside its window; with ``"window"`` only points where both ``x`` and
    ``x + m dx`` lie in the window count.
    """
    n = v.size
    out = np.empty(shifts.size)
    for i, m in enumerate(shifts):
        m = int(m)
        if extension == "window":
            lo = max(0, -m)
            hi = min(n, n - m)
            diff = np.abs(v[lo + m:hi + m] - v[lo:hi]) ** q if hi > lo else np.zeros(0)
            if not w2.is_unit and diff.size:
                diff = diff * w2(x0 + dx * np.arange(lo, hi))
            out[i] = (dx * np.sum(diff)) ** (1.0 / q)
            continue
        ext = np.zeros(n + abs(m))
        if m >= 0:
            ext[m:] = v  # ext[j] = v(x_j) on nodes x_j = x0 + (j - m) dx
            shifted = np.zeros_like(ext)
            shifted[: n] = v  # v(x + m dx) at the same nodes
            start = x0 - m * dx
        else:
            ext[:n] = v
            shifted = np.zeros_like(ext)
            shifted[-m:] = v
            start = x0
        diff = np.abs(shifted - ext) ** q
        if not w2.is_unit:
            diff = diff * w2(start + dx * np.arange(ext.size))
        out[i] = (dx * np.sum(diff)) ** (1.0 / q)
    return out


def besov_seminorm(u, dx: float, theta: float, p: float = 2.0, q: float = 2.0,
                   w2: Weight | None = None, y_max: float | None = None, n_y: int = 96,
                   x0: float = 0.0, extension: str = "zero") -> BesovResult:
    """Besov seminorm ``[u]_{B^theta_{p,q,w2}}`` of 1-d grid data, zero-extended.

    The ``y``-integral of ``||D^k u(.+y) - D^k u||^p |y|^{-1-p(theta-k)}``,
    ``k = floor(theta)``, runs over integer shifts ``m dx`` graded
    geometrically between ``dx`` and ``y_max`` (default: window width), with
    the trapezoid rule in ``log y`` and both signs of ``y``.  The tails below
    ``dx`` (linear growth of the difference) and above ``y_max`` (difference
    frozen at its last value) are estimated separately.  ``extension``
    selects zero extension outside the window (``"zero"``) or differences
    restricted to the window (``"window"``).
    """
    if not theta > 0 or float(theta).is_integer():
        raise DomainError("theta must be a positive non-integer")
    if extension not in ("zero", "window"):
        raise DomainError(f"unknown extension '{extension}'")
    w2 = w2 or Weight.constant()
    v = np.asarray(u, dtype=float)
    k = int(math.floor(theta))
    for _ in range(k):
        v = np.gradient(v, dx, edge_order=2)
    s = theta - k
    width = dx * (v.size - 1)
    y_max = width if y_max is None else y_max
    m_max = max(1, int(round(y_max / dx)))
    shifts = np.unique(np.round(np.geomspace(1, m_max, n_y)).astype(int))
    y = shifts * dx
    total = 0.0
    small = 0.0
    large = 0.0
    for sign in (1, -1):
        g = _shift_difference_norms(v, dx, sign * shifts, q, w2, x0, extension) ** p
        integrand = g * y ** (-p * s)
        total += float(np.trapezoid(integrand, np.log(y))) if y.size > 1 else 0.0
        small += float(g[0] * y[0] ** (-p * s) / (p * (1.0 - s)))
        large += float(g[-1] * y[-1] ** (-p * s) / (p * s))
    value = total ** (1.0 / p)
    estimate = (total + small + large) ** (1.0 / p)
    return BesovResult(value, small, large, estimate)
