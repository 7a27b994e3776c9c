"""Check the resolvent kernel against its Laplace transform and its mass.

H(t) = t**(alpha-1) E_{alpha,alpha}(-lam t**alpha) has Laplace transform
1 / (s**alpha + lam), and its signed integral over (0, T) equals
(1 - E_alpha(-lam T**alpha)) / lam.  The transform is computed from samples
on a uniform grid after splitting off the t**(alpha-1) singularity.
"""

import math

import numpy as np
from scipy.integrate import quad

from fracwave.fraccalc import TimeGrid, TimeSeries, truncated_laplace
from fracwave.mlfunc import KernelSpec, kernel_H, kernel_H_mass

T, dt = 40.0, 1e-3
s = np.linspace(0.5, 10.0, 20)
grid = TimeGrid.from_step(T, dt)

for alpha in (1.25, 1.5, 1.75):
    for lam in (1.0, math.pi**2):
        spec = KernelSpec(alpha, lam)
        samples = TimeSeries(grid, kernel_H(spec, grid.nodes))
        lap = truncated_laplace(samples, s, leading=(1 / math.gamma(alpha), alpha - 1))
        laplace_err = np.max(np.abs(lap.value * (s**alpha + lam) - 1))
        mass = sum(quad(lambda t: kernel_H(spec, t), a, a + 1, epsrel=1e-12, limit=200)[0] for a in range(40))
        mass_err = abs(mass / kernel_H_mass(spec, T) - 1)
        print(f"alpha={alpha} lam={lam:6.3f}  Laplace identity {laplace_err:.1e}  mass identity {mass_err:.1e}")

# H is not a positive kernel once alpha > 1
spec = KernelSpec(1.5, 1.0)
t = np.linspace(0.01, 10, 1000)
print("min of H for alpha=1.5, lam=1:", float(np.min(kernel_H(spec, t))))
