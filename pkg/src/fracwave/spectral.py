"""Sine-spectral Dirichlet solver for ``D_t^alpha u - a Lap u = f`` on boxes.

Every sine mode ``prod_i sin(n_i pi (x_i - l_i) / L_i)`` decouples into the
scalar relaxation problem ``D^alpha phi + lam phi = f_n`` whose zero-jet
solution is the convolution of ``f_n`` with the resolvent kernel.  The
convolution uses product integration: the forcing is interpolated linearly
and integrated against the kernel cell by cell.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError, GridError, PreconditionError
from .fraccalc import TimeGrid, TimeSeries, caputo_array, second_derivative_array
from .mlfunc import KernelSpec, kernel_H, kernel_H_primitive, ml_two

__all__ = [
    "BoxDomain",
    "SpaceTimeField",
    "SineSpectrum",
    "InitialData",
    "CoordinateChange",
    "space_axes",
    "sine_analyze",
    "mode_weights",
    "mode_solve",
    "mode_residual",
    "solve_zero_ic",
    "solve_with_ic",
    "solve_div_rhs",
    "odd_reflection",
    "periodic_odd_extension",
    "change_of_variables",
    "gradient",
    "hessian",
    "laplacian",
    "write_field_csv",
    "read_field_csv",
    "write_field_binary",
    "read_field_binary",
]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)
_BC_CODES = {"dirichlet": 0, "reflected": 1, "none": 2}
_BINARY_MAGIC = b"FWFIELD1"


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``prod_i [lower_i, upper_i]`` with diffusivity.

    ``a`` is a scalar diffusivity; ``matrix`` optionally replaces it by a
    constant SPD matrix.  Only diagonal matrices can be solved directly;
    rotate general ones with :func:`change_of_variables` first.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    a: float = 1.0
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or not 1 <= len(lo) <= 3:
            raise DomainError("box needs matching lower/upper bounds in 1 to 3 dimensions")
        if any(h <= l for l, h in zip(lo, hi)):
            raise DomainError(f"degenerate box {lo} x {hi}")
        if not self.a > 0:
            raise DomainError(f"diffusivity must be positive, got {self.a}")
        if self.matrix is not None:
            mat = np.array(self.matrix, dtype=float)
            if mat.shape != (len(lo), len(lo)):
                raise DomainError(f"diffusion matrix shape {mat.shape} does not match dimension {len(lo)}")
            _check_spd(mat)
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)

    @classmethod
    def unit(cls, dim: int = 1, a: float = 1.0) -> "BoxDomain":
        return cls((0.0,) * dim, (1.0,) * dim, a)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    def axis_diffusivity(self) -> np.ndarray:
        if self.matrix is None:
            return np.full(self.dim, self.a)
        off = self.matrix - np.diag(np.diag(self.matrix))
        if np.any(np.abs(off) > 1e-14 * np.abs(self.matrix).max()):
            raise DomainError("non-diagonal diffusion matrix: apply change_of_variables first")
        return np.diag(self.matrix).copy()

    def eigenvalues(self, n_modes: int) -> np.ndarray:
        """``lam_n = sum_i a_ii (n_i pi / L_i)**2`` on the mode grid ``{1..N}^d``."""
        diff = self.axis_diffusivity()
        n = np.arange(1, n_modes + 1, dtype=float)
        total = np.zeros((n_modes,) * self.dim)
        for i, (ai, li) in enumerate(zip(diff, self.lengths)):
            shape = [1] * self.dim
            shape[i] = n_modes
            total = total + (ai * (n * math.pi / li) ** 2).reshape(shape)
        return total


def _check_spd(mat: np.ndarray) -> np.ndarray:
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-12 * max(1.0, np.abs(mat).max())):
        raise DomainError("diffusion matrix is not symmetric")
    evals = np.linalg.eigvalsh(mat)
    if evals.min() <= 0:
        raise DomainError(f"diffusion matrix is not positive definite (min eigenvalue {evals.min():.3g})")
    return evals


@dataclass(frozen=True)
class SpaceTimeField:
    """Samples ``u(t_i, x_j)`` on a time grid times a tensor spatial grid.

    ``values`` has shape ``(nt, n_1, ..., n_d)``; ``axes`` holds the spatial
    node coordinates per axis including boundary nodes.
    """

    grid: TimeGrid
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    alpha: float
    bc: str = "dirichlet"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axes = tuple(np.array(ax, dtype=float) for ax in self.axes)
        vals = np.array(self.values, dtype=float)
        expected = (self.grid.size,) + tuple(ax.size for ax in axes)
        if vals.shape != expected:
            raise GridError(f"field values have shape {vals.shape}, expected {expected}")
        if self.bc not in _BC_CODES:
            raise DomainError(f"unknown boundary tag '{self.bc}'")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field contains non-finite values")
        for ax in axes:
            if ax.size < 2 or np.any(np.diff(ax) <= 0):
                raise GridError("spatial axes must be strictly increasing with at least 2 nodes")
            ax.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(ax[1] - ax[0]) for ax in self.axes)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij")

    def boundary_max(self) -> float:
        """Largest absolute value on the spatial boundary over all times."""
        worst = 0.0
        for i in range(self.dim):
            lo = np.take(self.values, 0, axis=i + 1)
            hi = np.take(self.values, -1, axis=i + 1)
            worst = max(worst, float(np.abs(lo).max()), float(np.abs(hi).max()))
        return worst

    def with_values(self, values: np.ndarray, bc: str | None = None) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.axes, values, self.alpha, bc or self.bc)


@dataclass(frozen=True)
class SineSpectrum:
    """Per-mode time series ``w_n(t)`` with eigenvalues on the mode grid ``{1..N}^d``.

    ``coefficients`` has shape ``(nt, N, ..., N)``.
    """

    domain: BoxDomain
    grid: TimeGrid
    n_modes: int
    coefficients: np.ndarray
    eigenvalues: np.ndarray

    def mode(self, *index: int) -> TimeSeries:
        """Time series of the mode with 1-based indices ``index``."""
        sl = (slice(None),) + tuple(i - 1 for i in index)
        return TimeSeries(self.grid, self.coefficients[sl])


@dataclass(frozen=True)
class InitialData:
    """Initial value and velocity, as callables of the spatial mesh or grid arrays."""

    u0: Callable | np.ndarray | None = None
    u1: Callable | np.ndarray | None = None


def space_axes(domain: BoxDomain, n_points: int | Sequence[int]) -> tuple[np.ndarray, ...]:
    """Uniform spatial axes with ``n_points`` cells per axis (``n_points + 1`` nodes)."""
    counts = np.broadcast_to(np.asarray(n_points, dtype=int), (domain.dim,))
    return tuple(np.linspace(l, h, int(m) + 1) for l, h, m in zip(domain.lower, domain.upper, counts))


def _sine_basis(axis: np.ndarray, lower: float, length: float, n_modes: int, deriv: bool = False) -> np.ndarray:
    """``B[j, n-1] = sin(n pi (x_j - l) / L)`` (or its x-derivative); exact zeros at the ends."""
    n = np.arange(1, n_modes + 1)
    arg = np.outer((axis - lower) / length, n * math.pi)
    if deriv:
        return np.cos(arg) * (n * math.pi / length)
    basis = np.sin(arg)
    on_edge = np.isclose(axis, lower) | np.isclose(axis, lower + length)
    basis[on_edge] = 0.0
    return basis


def _sample(f, t: np.ndarray, axes: tuple[np.ndarray, ...]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    tt = t.reshape((-1,) + (1,) * len(axes))
    vals = f(tt, *[m[None] for m in mesh])
    return np.broadcast_to(np.asarray(vals, dtype=float), (t.size,) + mesh[0].shape)


def _analyze_array(values: np.ndarray, axes, domain: BoxDomain, n_modes: int) -> np.ndarray:
    """Trapezoid sine coefficients of ``values`` (leading time axis) on ``axes``."""
    out = values
    for i, ax in enumerate(axes):
        m = ax.size - 1
        if n_modes >= m:
            raise GridError(f"mode cap {n_modes} aliases on an axis with {m} cells")
        basis = _sine_basis(ax, domain.lower[i], domain.lengths[i], n_modes)
        # sine vanishes at both ends, so trapezoid end weights do not matter
        out = _contract(out, basis * (2.0 / m), i + 1)
    return out


def _contract(arr: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Contract ``arr`` along ``axis`` with the rows of ``mat`` and put the result back in place."""
    moved = np.moveaxis(arr, axis, -1)
    return np.moveaxis(moved @ mat, -1, axis)


def sine_analyze(f, domain: BoxDomain, n_modes: int, grid: TimeGrid,
                 n_points: int | Sequence[int] | None = None) -> SineSpectrum:
    """Tensor sine coefficients ``f_n(t)`` of a forcing at every time node.

    ``f`` is a callable ``f(t, x1, ..., xd)`` (broadcasting) sampled on a
    uniform spatial grid, or a :class:`SpaceTimeField`.  On uniform grids the
    trapezoid rule reproduces every resolved sine mode exactly, so mode caps at
    or above the number of cells are rejected as aliasing.
    """
    if n_modes < 1:
        raise DomainError("need at least one mode")
    if isinstance(f, SpaceTimeField):
        if f.grid != grid:
            raise GridError("field and requested time grid differ")
        axes = f.axes
        values = f.values
    else:
        axes = space_axes(domain, n_points if n_points is not None else max(4 * n_modes, 16))
        values = _sample(f, grid.nodes, axes)
    if not np.all(np.isfinite(values)):
        raise DomainError("forcing has non-finite samples")
    coeffs = _analyze_array(values, axes, domain, n_modes)
    return SineSpectrum(domain, grid, n_modes, coeffs, domain.eigenvalues(n_modes))


# ------------------------------------------------------------- mode solver


@lru_cache(maxsize=4096)
def _mode_weights_cached(alpha: float, lam: float, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    spec = KernelSpec(alpha, lam)
    h = dt
    # cell 0 from the exact primitives (kernel derivative is singular at 0)
    h1 = kernel_H_primitive(spec, h, order=1)
    h2 = kernel_H_primitive(spec, h, order=2)
    falling = np.empty(n + 1)
    rising = np.empty(n + 1)
    falling[0] = h2 / h
    rising[0] = h1 - h2 / h
    if n >= 1:
        c = np.arange(1, n + 1, dtype=float)
        xi = 0.5 * (_GAUSS_NODES + 1.0)
        sigma = (c[:, None] + xi[None, :]) * h
        vals = kernel_H(spec, sigma.ravel()).reshape(sigma.shape)
        wq = 0.5 * h * _GAUSS_WEIGHTS
        rising[1:] = vals @ (wq * xi)
        falling[1:] = vals @ (wq * (1.0 - xi))
    conv = np.empty(n + 1)
    conv[0] = falling[0]
    conv[1:] = rising[:-1] + falling[1:]
    conv.setflags(write=False)
    falling.setflags(write=False)
    return conv, falling


def mode_weights(alpha: float, lam: float, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product-integration weights for ``phi_k = sum_m W[m] f[k-m] - M[k] f[0]``.

    ``M[c]`` integrates the kernel against the falling hat on cell
    ``[c dt, (c+1) dt]``; ``W[m] = P[m-1] + M[m]`` adds the rising hat of the
    previous cell.
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    if lam < 0:
        raise DomainError("eigenvalue must be nonnegative")
    return _mode_weights_cached(float(alpha), float(lam), float(dt), int(n))


def _mode_solve_array(alpha: float, lams: np.ndarray, forcing: np.ndarray, dt: float) -> np.ndarray:
    """Solve every mode column of ``forcing`` (shape ``(nt, K)``) for eigenvalues ``lams``."""
    nt = forcing.shape[0]
    out = np.zeros_like(forcing)
    for k, lam in enumerate(lams):
        col = forcing[:, k]
        if not np.any(col):
            continue
        conv, falling = mode_weights(alpha, lam, dt, nt - 1)
        phi = fftconvolve(conv, col)[:nt] if nt > 256 else np.convolve(conv, col)[:nt]
        out[:, k] = phi - falling * col[0]
        out[0, k] = 0.0
    return out


def mode_solve(alpha: float, lam: float, f_n: TimeSeries) -> TimeSeries:
    """Zero-jet solution of ``D^alpha phi + lam phi = f_n`` by kernel convolution."""
    if f_n.grid.t_start != 0.0:
        raise GridError("mode solves start at t = 0")
    phi = _mode_solve_array(alpha, np.array([lam]), f_n.values[:, None], f_n.grid.dt)
    return TimeSeries(f_n.grid, phi[:, 0])


def mode_residual(alpha: float, lam: float, phi: TimeSeries, f_n: TimeSeries, skip: int = 2) -> float:
    """Max interior residual ``|caputo(phi) + lam phi - f_n|``."""
    res = caputo_array(phi.values, alpha, phi.grid.dt, check=False) + lam * phi.values - f_n.values
    return float(np.max(np.abs(res[skip:-skip])))


# ------------------------------------------------------------- synthesis


def _synthesize(coeffs: np.ndarray, domain: BoxDomain, axes, deriv_axis: int | None = None) -> np.ndarray:
    out = coeffs
    n_modes = coeffs.shape[1]
    for i, ax in enumerate(axes):
        basis = _sine_basis(ax, domain.lower[i], domain.lengths[i], n_modes, deriv=(i == deriv_axis))
        out = _contract(out, basis.T, i + 1)
    return out


def _solve_spectrum(alpha: float, spectrum: SineSpectrum) -> np.ndarray:
    nt = spectrum.grid.size
    flat = spectrum.coefficients.reshape(nt, -1)
    lams = spectrum.eigenvalues.ravel()
    return _mode_solve_array(alpha, lams, flat, spectrum.grid.dt).reshape(spectrum.coefficients.shape)


def _truncation_estimate(coeffs: np.ndarray) -> float:
    """Relative size of the outermost mode shell, a proxy for the neglected tail."""
    total = float(np.abs(coeffs).max())
    if total == 0.0:
        return 0.0
    n = coeffs.shape[1]
    shell = 0.0
    for i in range(1, coeffs.ndim):
        shell = max(shell, float(np.abs(np.take(coeffs, n - 1, axis=i)).max()))
    return shell / total


def _check_alpha(alpha: float):
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")


def solve_zero_ic(alpha: float, f, domain: BoxDomain, n_modes: int, grid: TimeGrid,
                  n_points: int | Sequence[int] | None = None) -> SpaceTimeField:
    """Solve ``D_t^alpha u - a Lap u = f`` with zero initial value, velocity and boundary data.

    ``f`` may be a callable, a :class:`SpaceTimeField` or a precomputed
    :class:`SineSpectrum`.  The returned field carries the solved spectrum in
    ``meta["spectrum"]`` and a mode-tail estimate in ``meta["truncation"]``.
    """
    _check_alpha(alpha)
    if grid.t_start != 0.0:
        raise GridError("solves start at t = 0")
    if isinstance(f, SineSpectrum):
        spectrum = f
        axes = space_axes(domain, n_points if n_points is not None else max(4 * n_modes, 16))
    else:
        spectrum = sine_analyze(f, domain, n_modes, grid, n_points)
        axes = f.axes if isinstance(f, SpaceTimeField) else space_axes(
            domain, n_points if n_points is not None else max(4 * n_modes, 16))
    solved = _solve_spectrum(alpha, spectrum)
    values = _synthesize(solved, domain, axes)
    meta = {"spectrum": solved, "truncation": _truncation_estimate(spectrum.coefficients)}
    return SpaceTimeField(grid, axes, values, alpha, "dirichlet", meta)


def _initial_coefficients(data, domain, axes, n_modes, name):
    if data is None:
        return np.zeros((n_modes,) * domain.dim)
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.asarray(data(*mesh) if callable(data) else data, dtype=float)
    vals = np.broadcast_to(vals, mesh[0].shape)
    scale = max(float(np.abs(vals).max()), 1.0)
    for i in range(domain.dim):
        edge = max(np.abs(np.take(vals, 0, axis=i)).max(), np.abs(np.take(vals, -1, axis=i)).max())
        if edge > 1e-10 * scale:
            raise PreconditionError(f"{name} does not vanish on the boundary (max {edge:.3g})")
    return _analyze_array(vals[None], axes, domain, n_modes)[0]


def solve_with_ic(alpha: float, data: InitialData, domain: BoxDomain, n_modes: int, grid: TimeGrid,
                  f=None, n_points: int | Sequence[int] | None = None) -> SpaceTimeField:
    """Solve with initial value ``u0`` and velocity ``u1`` (Dirichlet compatible).

    Per mode ``phi_n = u0_n E_alpha(-lam t^alpha) + u1_n t E_{alpha,2}(-lam t^alpha)``
    plus the zero-jet response to ``f``.
    """
    _check_alpha(alpha)
    if grid.t_start != 0.0:
        raise GridError("solves start at t = 0")
    axes = space_axes(domain, n_points if n_points is not None else max(4 * n_modes, 16))
    c0 = _initial_coefficients(data.u0, domain, axes, n_modes, "u0")
    c1 = _initial_coefficients(data.u1, domain, axes, n_modes, "u1")
    lams = domain.eigenvalues(n_modes)
    t = grid.nodes
    z = -np.multiply.outer(t**alpha, lams)
    free = c0 * ml_two(alpha, 1.0, z) + c1 * t.reshape((-1,) + (1,) * domain.dim) * ml_two(alpha, 2.0, z)
    if f is not None:
        forced = _solve_spectrum(alpha, sine_analyze(f, domain, n_modes, grid, n_points))
    else:
        forced = 0.0
    solved = free + forced
    values = _synthesize(solved, domain, axes)
    return SpaceTimeField(grid, axes, values, alpha, "dirichlet", {"spectrum": solved})


def solve_div_rhs(alpha: float, g: Sequence, domain: BoxDomain, n_modes: int, grid: TimeGrid,
                  n_points: int | Sequence[int] | None = None) -> SpaceTimeField:
    """Solve ``D_t^alpha u - a Lap u = sum_i D_i g_i`` as ``u = sum_i D_i v_i``.

    Each ``v_i`` solves the zero-IC problem with forcing ``g_i``; its spatial
    derivative is taken spectrally (cosine factors), so ``u`` need not vanish
    on the boundary and the field is tagged ``bc="none"``.
    """
    _check_alpha(alpha)
    if len(g) != domain.dim:
        raise DomainError(f"need {domain.dim} components, got {len(g)}")
    axes = space_axes(domain, n_points if n_points is not None else max(4 * n_modes, 16))
    total = np.zeros((grid.size,) + tuple(ax.size for ax in axes))
    for i, gi in enumerate(g):
        if gi is None:
            continue
        spectrum = sine_analyze(gi, domain, n_modes, grid, n_points)
        solved = _solve_spectrum(alpha, spectrum)
        total += _synthesize(solved, domain, axes, deriv_axis=i)
    return SpaceTimeField(grid, axes, total, alpha, "none")


# ------------------------------------------------------------- extensions


def odd_reflection(u: SpaceTimeField, tol: float = 1e-10) -> SpaceTimeField:
    """Odd extension across ``x1 = 0``: ``u(t, |x1|, x') sgn x1``.

    The first spatial axis must start at 0 where ``u`` vanishes.
    """
    ax = u.axes[0]
    if ax[0] != 0.0:
        raise PreconditionError("first spatial axis must start at x1 = 0")
    trace = np.abs(np.take(u.values, 0, axis=1)).max()
    if trace > tol * max(1.0, float(np.abs(u.values).max())):
        raise PreconditionError(f"field does not vanish at x1 = 0 (max {trace:.3g})")
    mirrored = -np.flip(np.take(u.values, np.arange(1, ax.size), axis=1), axis=1)
    values = np.concatenate([mirrored, u.values], axis=1)
    new_axis = np.concatenate([-ax[:0:-1], ax])
    return SpaceTimeField(u.grid, (new_axis,) + u.axes[1:], values, u.alpha, "reflected")


def periodic_odd_extension(w: SpaceTimeField, periods: int = 2, tol: float = 1e-10) -> SpaceTimeField:
    """Odd reflection about every face followed by periodic repetition.

    Each axis ``[l, r]`` becomes ``[l, l + 2 (r - l) periods]``; the extension
    obeys ``f(x) = -f(2r - x)`` and has period ``2 (r - l)`` (4 on ``(-1, 1)``).
    """
    if periods < 1:
        raise DomainError("periods must be positive")
    if w.boundary_max() > tol * max(1.0, float(np.abs(w.values).max())):
        raise PreconditionError("field has a nonzero boundary trace")
    values = w.values
    axes = []
    for i, ax in enumerate(w.axes):
        n = ax.size - 1
        length = ax[-1] - ax[0]
        interior = np.take(values, np.arange(n), axis=i + 1)
        reflected = -np.flip(np.take(values, np.arange(1, n + 1), axis=i + 1), axis=i + 1)
        cell = np.concatenate([interior, reflected], axis=i + 1)
        reps = [1] * values.ndim
        reps[i + 1] = periods
        tiled = np.tile(cell, reps)
        last = np.take(tiled, [0], axis=i + 1)
        values = np.concatenate([tiled, last], axis=i + 1)
        axes.append(ax[0] + (length / n) * np.arange(2 * n * periods + 1))
    return SpaceTimeField(w.grid, tuple(axes), values, w.alpha, "reflected")


@dataclass(frozen=True)
class CoordinateChange:
    """``x = A^{1/2} y`` turning ``tr(A D^2 u)`` into a Laplacian in ``y``."""

    matrix: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    delta: float

    def to_x(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y) @ self.sqrt.T

    def to_y(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.inv_sqrt.T

    def pull_back(self, func: Callable) -> Callable:
        """``(t, y1..yd) -> func(t, x(y))`` for callables of broadcasting coordinates."""
        def wrapped(t, *ys):
            xs = [sum(self.sqrt[i, j] * ys[j] for j in range(len(ys))) for i in range(len(ys))]
            return func(t, *xs)
        return wrapped

    def ball_inclusion(self, radii: Sequence[float], n_dirs: int = 64, seed: int = 0) -> bool:
        """Sampled check of ``B_{delta r} ⊂ A^{1/2}(B_r) ⊂ B_{r/delta}``."""
        rng = np.random.default_rng(seed)
        dirs = rng.normal(size=(n_dirs, self.matrix.shape[0]))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        ok = True
        for r in radii:
            image = np.linalg.norm(self.to_x(r * dirs), axis=1)
            # boundary of A^{1/2}(B_r) must sit between the two balls
            ok &= bool(np.all(image >= self.delta * r * (1 - 1e-12)))
            ok &= bool(np.all(image <= r / self.delta * (1 + 1e-12)))
        return ok


def change_of_variables(matrix, delta: float | None = None) -> CoordinateChange:
    """Symmetric square root and inverse square root of an SPD diffusion matrix.

    ``delta`` defaults to the largest value with eigenvalues in ``[delta, 1/delta]``.
    """
    mat = np.array(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError("diffusion matrix must be square")
    evals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    _check_spd(mat)
    best = min(evals.min(), 1.0 / evals.max())
    if delta is None:
        delta = float(min(best, 1.0))
    elif evals.min() < delta * (1 - 1e-12) or evals.max() > (1 + 1e-12) / delta:
        raise DomainError(f"eigenvalues {evals} leave [{delta}, {1 / delta}]")
    root = (vecs * np.sqrt(evals)) @ vecs.T
    inv_root = (vecs / np.sqrt(evals)) @ vecs.T
    return CoordinateChange(mat, root, inv_root, float(delta))


# ------------------------------------------------------------- derivatives


def gradient(u: SpaceTimeField) -> list[np.ndarray]:
    """Central-difference spatial gradient (second-order one-sided at the faces)."""
    return [np.gradient(u.values, h, axis=i + 1, edge_order=2) for i, h in enumerate(u.spacing)]


def hessian(u: SpaceTimeField) -> list[list[np.ndarray]]:
    """Second-order finite-difference spatial Hessian; mixed terms via nested gradients."""
    d = u.dim
    out: list[list[np.ndarray]] = [[None] * d for _ in range(d)]
    grads = gradient(u)
    for i, hi in enumerate(u.spacing):
        moved = np.moveaxis(u.values, i + 1, 0)
        out[i][i] = np.moveaxis(second_derivative_array(moved, hi), 0, i + 1)
        for j in range(i + 1, d):
            mixed = np.gradient(grads[i], u.spacing[j], axis=j + 1, edge_order=2)
            out[i][j] = out[j][i] = mixed
    return out


def laplacian(u: SpaceTimeField) -> np.ndarray:
    hess = hessian(u)
    return sum(hess[i][i] for i in range(u.dim))


# ------------------------------------------------------------- field I/O


def write_field_csv(u: SpaceTimeField, path, header_comment: str | None = None) -> Path:
    """One row per ``(t, x1..xd, value)``, time slowest, row-major space."""
    path = Path(path)
    cols = np.meshgrid(u.grid.nodes, *u.axes, indexing="ij")
    table = np.column_stack([c.ravel() for c in cols] + [u.values.ravel()])
    names = ["t"] + [f"x{i + 1}" for i in range(u.dim)] + ["value"]
    with path.open("w", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(",".join(names) + "\n")
        for row in table:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return path


def read_field_csv(path, alpha: float, bc: str = "dirichlet") -> SpaceTimeField:
    """Inverse of :func:`write_field_csv` for tensor-grid files."""
    rows = np.loadtxt(path, delimiter=",", comments="#", skiprows=_header_lines(path), ndmin=2)
    t = np.unique(rows[:, 0])
    axes = tuple(np.unique(rows[:, i]) for i in range(1, rows.shape[1] - 1))
    shape = (t.size,) + tuple(ax.size for ax in axes)
    grid = TimeGrid(float(t[0]), float(t[-1]), t.size - 1)
    return SpaceTimeField(grid, axes, rows[:, -1].reshape(shape), alpha, bc)


def _header_lines(path) -> int:
    count = 0
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                count += 1
                continue
            return count + 1
    return count


def write_field_binary(u: SpaceTimeField, path) -> Path:
    """Little-endian dump.

    Layout: 8-byte magic ``FWFIELD1``; uint32 ``d``; uint32 ``nt``; ``d`` x uint32
    axis sizes; float64 ``t_start``, ``t_end``, ``alpha``; uint32 boundary code
    (0 dirichlet, 1 reflected, 2 none); the ``d`` axes as float64; then the
    values as row-major float64 of shape ``(nt, n_1, ..., n_d)``.
    """
    path = Path(path)
    header = _BINARY_MAGIC + struct.pack("<II", u.dim, u.grid.size)
    header += struct.pack(f"<{u.dim}I", *(ax.size for ax in u.axes))
    header += struct.pack("<dddI", u.grid.t_start, u.grid.t_end, u.alpha, _BC_CODES[u.bc])
    with path.open("wb") as fh:
        fh.write(header)
        for ax in u.axes:
            fh.write(ax.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
    return path


def read_field_binary(path) -> SpaceTimeField:
    data = Path(path).read_bytes()
    if data[:8] != _BINARY_MAGIC:
        raise GridError(f"{path}: not a field dump")
    pos = 8
    dim, nt = struct.unpack_from("<II", data, pos)
    pos += 8
    sizes = struct.unpack_from(f"<{dim}I", data, pos)
    pos += 4 * dim
    t0, t1, alpha, code = struct.unpack_from("<dddI", data, pos)
    pos += 28
    axes = []
    for n in sizes:
        axes.append(np.frombuffer(data, "<f8", n, pos).copy())
        pos += 8 * n
    count = nt * int(np.prod(sizes))
    values = np.frombuffer(data, "<f8", count, pos).reshape((nt,) + tuple(sizes))
    bc = {v: k for k, v in _BC_CODES.items()}[code]
    return SpaceTimeField(TimeGrid(t0, t1, nt - 1), tuple(axes), values, alpha, bc)
