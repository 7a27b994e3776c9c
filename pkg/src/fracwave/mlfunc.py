"""Mittag-Leffler functions and the fractional resolvent kernel on the real line.

Evaluation strategy for ``E_{a,b}(z)``:

* ``|z| <= switch_radius`` (and every positive ``z``): Taylor series summed
  with vectorized Neumaier compensation.  For ``a < 1`` the radius shrinks
  to ``9**a`` because cancellation grows like ``exp(|z|**(1/a))``.
* ``z < -switch_radius``: exact contour representation.  With
  ``t = (-z)**(1/a)`` and ``s* = exp(i*pi/a)`` (a pole of ``s**(a-b)/(s**a+1)``
  for ``1 < a <= 2``)::

      E_{a,b}(-t**a) = t**(1-b) * [ (2/a) Re(exp(s* t) s***(1-b))
                                   + int_0^inf exp(-r t) K_{a,b}(r) dr ]

      K_{a,b}(r) = r**(a-b) (r**a sin(pi b) - sin(pi (a-b)))
                   / (pi (r**(2a) + 2 r**a cos(pi a) + 1))

  The Laplace-type integral is taken from its algebraic asymptotic series
  ``-sum_k z**(-k)/Gamma(b-a k)`` when the optimally truncated series meets
  ``rel_tol``, otherwise from an exp-sinh quadrature rule.  For ``a < 1`` the
  residue term is absent.  ``b > a + 1/2`` is first reduced with
  ``E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, rgamma

from .errors import AccuracyError, DomainError

__all__ = [
    "MLAccuracy",
    "KernelSpec",
    "DEFAULT_ACCURACY",
    "ml_one",
    "ml_two",
    "kernel_H",
    "kernel_H_mass",
    "kernel_H_primitive",
]


@dataclass(frozen=True)
class MLAccuracy:
    """Accuracy controls for Mittag-Leffler evaluation."""

    rel_tol: float = 1e-10
    max_terms: int = 600
    switch_radius: float = 8.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 8:
            raise DomainError(f"max_terms must be >= 8, got {self.max_terms}")
        if not self.switch_radius > 0:
            raise DomainError(f"switch_radius must be positive, got {self.switch_radius}")


DEFAULT_ACCURACY = MLAccuracy()


@dataclass(frozen=True)
class KernelSpec:
    """Order ``alpha`` in (1, 2) and eigenvalue ``lam >= 0`` of the relaxation ODE."""

    alpha: float
    lam: float

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"kernel order must lie in (1, 2), got {self.alpha}")
        if not self.lam >= 0:
            raise DomainError(f"eigenvalue must be nonnegative, got {self.lam}")


_ASYMPTOTIC_TERMS = 80
_CHUNK = 2048


def _series(alpha, beta, z, acc):
    """Compensated Taylor series; ``z`` is a 1-d float array."""
    out = np.empty_like(z)
    zero = z == 0.0
    out[zero] = rgamma(beta)
    if zero.all():
        return out
    zz = z[~zero]
    zmax = float(np.max(np.abs(zz)))
    n = np.arange(acc.max_terms + 1, dtype=float)
    logc = -gammaln(alpha * n + beta)
    logmag = n * math.log(zmax) + logc
    peak = int(np.argmax(logmag))
    # stop once every remaining term is below 1e-18 of the larger of 1 and the peak term
    floor = math.log(1e-18) + max(0.0, logmag[peak])
    below = np.nonzero(logmag[peak:] < floor)[0]
    if below.size == 0:
        raise AccuracyError(
            f"Mittag-Leffler series did not converge within {acc.max_terms} terms "
            f"(alpha={alpha}, beta={beta}, |z|={zmax:g})"
        )
    nterms = peak + int(below[0]) + 1
    logz = np.log(np.abs(zz))
    neg = zz < 0
    total = np.zeros_like(zz)
    comp = np.zeros_like(zz)
    for k in range(nterms):
        term = np.exp(k * logz + logc[k])
        if k % 2 == 1:
            term = np.where(neg, -term, term)
        s = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - s) + term, (term - s) + total)
        total = s
    out[~zero] = total + comp
    return out


def _kernel_integrand(alpha, beta, r):
    d = r ** (2 * alpha) + 2 * r**alpha * math.cos(math.pi * alpha) + 1.0
    num = r**alpha * math.sin(math.pi * beta) - math.sin(math.pi * (alpha - beta))
    return r ** (alpha - beta) * num / (math.pi * d)


@lru_cache(maxsize=8)
def _exp_sinh_rule(step: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid in ``tau`` for ``r = exp(pi/2 sinh(tau))``, ``tau in [-5, 5]``; end nodes half weight."""
    tau = np.arange(-5.0, 5.0 + step / 2, step)
    r = np.exp(0.5 * np.pi * np.sinh(tau))
    w = r * 0.5 * np.pi * np.cosh(tau) * step
    w[[0, -1]] *= 0.5
    return r, w


def _laplace_part_quadrature(alpha, beta, t):
    # the poles r**a = -exp(+-i pi a) approach r = 1 as a -> 1; shrink the step to resolve the peak
    step = min(1.0 / 32.0, max(abs(alpha - 1.0), 1e-3) / 4.0)
    r, w = _exp_sinh_rule(2.0 ** math.floor(math.log2(step)))
    k = _kernel_integrand(alpha, beta, r) * w
    # below r[0] the integrand is -sin(pi (a-b))/pi r**(a-b) to relative O(r**a); integrate exactly
    gam = alpha - beta + 1.0
    k[0] += -math.sin(math.pi * (alpha - beta)) / math.pi * r[0] ** gam / gam
    out = np.empty_like(t)
    for start in range(0, t.size, _CHUNK):
        tt = t[start:start + _CHUNK]
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(-np.outer(tt, r))
        out[start:start + _CHUNK] = e @ k
    return out


def _residue_part(alpha, beta, t):
    if alpha <= 1.0:
        return np.zeros_like(t)
    s = complex(math.cos(math.pi / alpha), math.sin(math.pi / alpha))
    return (2.0 / alpha) * np.real(np.exp(s * t) * s ** (1.0 - beta))


def _negative_far(alpha, beta, z, acc):
    """``E_{a,b}(z)`` for ``z < -switch_radius`` with ``beta <= alpha + 1/2``."""
    x = -z
    t = x ** (1.0 / alpha)
    pref = t ** (1.0 - beta)
    res = _residue_part(alpha, beta, t)

    k = np.arange(1, _ASYMPTOTIC_TERMS + 1, dtype=float)
    arg = beta - alpha * k
    pole = (arg <= 0) & (np.abs(arg - np.round(arg)) < 1e-9)
    coef = np.where(pole, 0.0, rgamma(arg))
    # algebraic expansion of pref * lap: -sum_k z**-k / Gamma(b - a k)
    with np.errstate(over="ignore", under="ignore"):
        logmag = -np.outer(np.log(x), k)
        mags = np.exp(logmag) * np.abs(coef)
        signs = np.sign(coef) * np.where(k % 2 == 1, -1.0, 1.0)
    eff = np.where(coef == 0.0, np.inf, mags)
    cut = np.argmin(eff, axis=1)
    est = eff[np.arange(x.size), cut]
    est = np.where(np.isinf(est), 0.0, est)
    keep = np.arange(k.size)[None, :] < cut[:, None]
    asym = -np.sum(np.where(keep, signs * mags, 0.0), axis=1)
    value = pref * res + asym
    ok = est <= acc.rel_tol * np.maximum(np.abs(value), 1e-300)

    out = value
    if not ok.all():
        idx = ~ok
        lap = _laplace_part_quadrature(alpha, beta, t[idx])
        out = value.copy()
        out[idx] = pref[idx] * (res[idx] + lap)
    return out


def _evaluate(alpha, beta, z, acc):
    # the series loses about exp(|z|**(1/alpha)) ulps; for alpha < 1 shrink the radius
    radius = min(acc.switch_radius, 9.0**alpha)
    far = z < -radius
    out = np.empty_like(z)
    if (~far).any():
        out[~far] = _series(alpha, beta, z[~far], acc)
    if far.any():
        zf = z[far]
        if alpha == 1.0:
            out[far] = _alpha_one_far(beta, zf)
        elif beta <= alpha + 0.5:
            out[far] = _negative_far(alpha, beta, zf, acc)
        else:
            # near b = a + 1 the integrand r**(a-b) is barely integrable at 0; step b down:
            # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
            lower = _evaluate(alpha, beta - alpha, zf, acc)
            out[far] = (lower - rgamma(beta - alpha)) / zf
    return out


def _alpha_one_far(beta, z):
    if beta != round(beta):
        raise DomainError("alpha = 1 with non-integer beta is unsupported for large |z|")
    val = np.exp(z)
    for b in range(1, int(round(beta))):
        val = (val - rgamma(b)) / z
    return val


def _check_alpha(alpha):
    if not alpha > 0:
        raise DomainError(f"Mittag-Leffler order must be positive, got {alpha}")
    if alpha > 2:
        raise DomainError(f"orders above 2 are unsupported, got {alpha}")


def ml_two(alpha, beta, z, acc: MLAccuracy = DEFAULT_ACCURACY):
    """Two-parameter Mittag-Leffler function ``sum z**n / Gamma(alpha n + beta)``.

    Parameters
    ----------
    alpha : float
        Order in (0, 2].
    beta : float
        Second parameter, positive.
    z : float or array_like
        Real arguments.
    acc : MLAccuracy, optional

    Returns
    -------
    float or ndarray
        Same shape as ``z``.
    """
    _check_alpha(alpha)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Mittag-Leffler argument must be finite")
    flat = arr.ravel()
    out = _evaluate(float(alpha), float(beta), flat, acc).reshape(arr.shape)
    if np.ndim(z) == 0:
        return float(out)
    return out


def ml_one(alpha, z, acc: MLAccuracy = DEFAULT_ACCURACY):
    """One-parameter Mittag-Leffler function ``E_alpha(z) = E_{alpha,1}(z)``."""
    return ml_two(alpha, 1.0, z, acc)


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("kernel time argument must be nonnegative")
    return arr


def kernel_H(spec: KernelSpec, t, acc: MLAccuracy = DEFAULT_ACCURACY):
    """Resolvent kernel ``t**(alpha-1) E_{alpha,alpha}(-lam t**alpha)``.

    Convolving a forcing with this kernel solves the relaxation equation
    ``D^alpha phi + lam phi = f`` with zero initial value and velocity.
    """
    return kernel_H_primitive(spec, t, order=0, acc=acc)


def kernel_H_primitive(spec: KernelSpec, t, order: int = 1, acc: MLAccuracy = DEFAULT_ACCURACY):
    """``order``-fold integral of the kernel from 0:
    ``t**(alpha-1+order) E_{alpha,alpha+order}(-lam t**alpha)``."""
    arr = _check_time(t)
    a = spec.alpha
    b = a + order
    val = np.zeros_like(arr)
    pos = arr > 0
    if pos.any():
        tp = arr[pos]
        val[pos] = tp ** (b - 1.0) * ml_two(a, b, -spec.lam * tp**a, acc)
    if np.ndim(t) == 0:
        return float(val)
    return val


def kernel_H_mass(spec: KernelSpec, T, acc: MLAccuracy = DEFAULT_ACCURACY):
    """Closed-form integral of the kernel over (0, T): ``(1 - E_alpha(-lam T**alpha)) / lam``.

    For ``lam = 0`` this is the limit ``T**alpha / Gamma(alpha + 1)``.  Small
    ``lam T**alpha`` is evaluated as ``T**alpha E_{alpha,alpha+1}(-lam T**alpha)``
    to avoid cancellation.
    """
    arr = np.asarray(T, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("mass horizon T must be positive")
    a, lam = spec.alpha, spec.lam
    if lam == 0:
        out = arr**a / math.gamma(a + 1.0)
    else:
        z = -lam * arr**a
        out = np.empty_like(arr)
        small = np.abs(z) <= 1.0
        if small.any():
            out[small] = arr[small] ** a * ml_two(a, a + 1.0, z[small], acc)
        if (~small).any():
            out[~small] = (1.0 - ml_one(a, z[~small], acc)) / lam
    if np.ndim(T) == 0:
        return float(out)
    return out
