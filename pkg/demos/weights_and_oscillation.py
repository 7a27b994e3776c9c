"""Muckenhoupt constants of power weights and mean oscillation of coefficients.

|t|**mu is an A_p weight exactly when -1 < mu < p - 1.  Sampled A_2
constants stay bounded inside that range and blow up outside it once the
sampling plan contains intervals around the origin.  The second part
measures how the oscillation of a rough coefficient over a long time window
compares with the chain bound built from cylinder oscillations.
"""

import numpy as np

from fracwave.oscillation import CoefficientField, elongated_oscillation
from fracwave.weights import Weight, ap_estimate, dyadic_plan, power_admissible

coarse = dyadic_plan(0.5, 1.0, 3, radii=[0.25])
fine = coarse + dyadic_plan(-1.0, 1.0, 17)
for mu in (-1.2, -0.5, 0.0, 0.5, 0.99, 1.5):
    w = Weight.power(mu)
    a, b = ap_estimate(w, 2.0, coarse).value, ap_estimate(w, 2.0, fine).value
    print(f"mu={mu:5.2f}  admissible={power_admissible(mu, 2.0)!s:5}  coarse plan {a:8.4f}  fine plan {b:10.4g}")

rng = np.random.default_rng(3)
k = rng.normal(0, 6, size=(4, 2))
nu = rng.normal(0, 6, size=4)


def sampler(t, x):
    return 1 + 0.05 * np.sum(np.sin(x @ k.T + np.outer(t, nu)), axis=-1)


a = CoefficientField(sampler, 0.5, 2)
alpha, r = 1.5, 0.2
for mult in (1, 2, 4, 8):
    res = elongated_oscillation(a, 1.0, (0.0, 0.0), r, mult * r ** (2 / alpha), alpha, n_space=16)
    print(f"h = {mult} r^(2/alpha): lhs {res.lhs:.4f}  bound {res.bound:.4f}  gamma0 {res.gamma0:.4f}")
