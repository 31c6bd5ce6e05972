"""Ornstein-Uhlenbeck sanity check.

    dX = -X dt + sqrt(2) dW,   X ~ N(0, 1) at stationarity

With a first-order ODE the stationarity condition fixes the mean, so the
Bochner program collapses to a feasibility check.  The recovered
characteristic function and density are compared with the Gaussian pair.

Run with ``python demos/ou_oracle.py``.
"""

import math

import numpy as np

from cfbounds import config
from cfbounds.bounds import all_moment_bounds, estimate_cf, lift_moments
from cfbounds.inversion import coarsen, invert

mf = config.load("ou")
model, grid = mf.model, mf.grid

bounds = all_moment_bounds(model, grid)
print(f"mu1 in [{bounds.lower(1):.3e}, {bounds.upper(1):.3e}]")
lifted = lift_moments(model, 4, bounds)
for k, iv in lifted.items():
    print(f"  lifted mu{k} in [{iv.lower:.6f}, {iv.upper:.6f}]")

est = estimate_cf(model, grid, bounds=bounds)
err = np.abs(est.phi - np.exp(-est.omega**2 / 2)).max()
print(f"CF sup error on every collocation node: {err:.2e}")

x = np.linspace(-4, 4, 801)
phi, step = coarsen(est.phi, grid.step, 4.0)
dens = invert(phi, step, x)
gauss = np.exp(-x**2 / 2) / math.sqrt(2 * math.pi)
print(f"density: h(0) = {dens.values[400]:.5f} (1/sqrt(2 pi) = {1 / math.sqrt(2 * math.pi):.5f}), "
      f"Linf error {np.abs(dens.values - gauss).max():.2e}")
