"""Evaluate the Mittag-Leffler function and look at its sign on the negative axis.

For 0 < alpha <= 1 the function E_alpha(-x) is completely monotone, so it
stays in (0, 1).  Past alpha = 1 it oscillates before settling into the
algebraic tail -x**-1 / Gamma(1 - alpha), and this script shows where the
first dip below zero happens.
"""

import math

import numpy as np
from scipy.special import rgamma

from fracwave.mlfunc import ml_one, ml_two

# series region against a hand-summed partial sum
alpha = 1.5
z = -2.0
partial = sum(z**k / math.gamma(alpha * k + 1) for k in range(60))
print(f"E_1.5(-2): library {float(ml_one(alpha, z)):.15f}  series {partial:.15f}")

# alpha = 2 reduces to a cosine
x = np.linspace(0.0, 6.0, 7)
print("E_2(-x^2) - cos(x):", np.max(np.abs(ml_two(2.0, 1.0, -(x**2)) - np.cos(x))))

# sign changes on the negative axis
grid = -np.logspace(-4, 4, 10_000)
for a in (0.75, 1.0, 1.25, 1.5, 1.75):
    vals = ml_one(a, grid)
    i = int(np.argmin(vals))
    negative = int(np.sum(vals < 0))
    underflow = int(np.sum(vals == 0))
    print(f"alpha={a:4.2f}  min E = {vals[i]: .4f} at z = {grid[i]:9.3f}  "
          f"negative values: {negative}  exact zeros from underflow: {underflow}")

# far tail: E_alpha(-x) ~ -sum_k (-x)^-k / Gamma(1 - alpha k)
x = 1e4
tail = -sum((-x) ** -k * rgamma(1 - 1.5 * k) for k in range(1, 4))
print(f"E_1.5(-1e4): library {float(ml_one(1.5, -x)):.6e}  asymptotic {tail:.6e}")
