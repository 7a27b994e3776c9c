"""Solve the time-fractional wave equation on (0, 1) against a known solution.

The forcing is chosen so that u(t, x) = t**2 sin(pi x) solves
D_t^alpha u - u_xx = f with zero initial data.  Halving the time step should
shrink the error by about four, since the product-integration scheme is
second order for smooth forcing.
"""

import math

import numpy as np

from fracwave.fraccalc import TimeGrid
from fracwave.spectral import BoxDomain, solve_zero_ic

domain = BoxDomain.unit(1)

for alpha in (1.25, 1.5, 1.75):

    def forcing(t, x, alpha=alpha):
        return (2 * t ** (2 - alpha) / math.gamma(3 - alpha) + math.pi**2 * t**2) * np.sin(math.pi * x)

    errors = []
    for dt in (4e-3, 2e-3, 1e-3):
        grid = TimeGrid.from_step(1.0, dt)
        u = solve_zero_ic(alpha, forcing, domain, n_modes=1, grid=grid, n_points=64)
        t, x = np.meshgrid(grid.nodes, u.axes[0], indexing="ij")
        exact = t**2 * np.sin(math.pi * x)
        errors.append(np.max(np.abs(u.values - exact)) / np.max(np.abs(exact)))
    gains = [errors[i] / errors[i + 1] for i in range(2)]
    print(f"alpha={alpha}: relative errors " + ", ".join(f"{e:.2e}" for e in errors)
          + "  gains " + ", ".join(f"{g:.2f}" for g in gains))

# a free vibration: initial displacement sin(pi x) decays like E_alpha(-pi^2 t^alpha)
from fracwave.mlfunc import ml_one
from fracwave.spectral import InitialData, solve_with_ic

grid = TimeGrid.from_step(4.0, 1e-2)
u = solve_with_ic(1.5, InitialData(u0=lambda x: np.sin(math.pi * x)), domain, 4, grid, n_points=32)
mid = u.values[:, 16]
print("midpoint displacement at t = 0, 1, 2, 3, 4:", np.round(mid[::100], 4))
print("E_1.5(-pi^2 t^1.5) at the same times:   ",
      np.round(ml_one(1.5, -math.pi**2 * grid.nodes[::100] ** 1.5), 4))
