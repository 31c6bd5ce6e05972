"""Fourier inversion of characteristic-function samples to a density.

For samples ``phi(k h)``, ``k = 0..q``, the density is approximated by

    p(x) = (1 / pi) * trapezoid_{w in [0, q h]} Re(exp(-j w x) phi(w)),

which uses ``phi(-w) = conj(phi(w))`` to fold negative frequencies.  The
result is periodic in ``x`` with period ``2 pi / h``, so only
``|x| <= pi / h`` is resolvable.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import warnings

import numpy as np
from scipy.integrate import trapezoid

from .collocation import FrequencyGrid


NEGATIVE_MASS_TOL = 0.05


class TruncationWarning(UserWarning):
    """The characteristic function has not decayed at the truncation frequency."""


@dataclasses.dataclass(frozen=True)
class DensityEstimate:
    x: np.ndarray
    values: np.ndarray
    mass: float
    cutoff: float
    imag_residue: float
    tail_magnitude: float
    negative_mass: float = 0.0

    @property
    def mass_ok(self) -> bool:
        """Total mass in ``[0.95, 1.05]`` with at most ``0.05`` of it negative.

        The second condition catches truncation artifacts such as the
        Dirichlet kernel, whose signed mass is still close to one.
        """
        return 0.95 <= self.mass <= 1.05 and self.negative_mass <= NEGATIVE_MASS_TOL

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def to_csv(self, stream=None, extra: dict[str, np.ndarray] | None = None) -> str:
        return write_csv(self.x, {"density": self.values, **(extra or {})}, stream)


def _trapezoid_weights(m: int, h: float) -> np.ndarray:
    w = np.full(m, h)
    w[0] = w[-1] = h / 2
    return w


def invert(cf, grid: FrequencyGrid | float, x_grid, tail_tol: float = 0.01) -> DensityEstimate:
    """Density at ``x_grid`` from samples ``cf[k] = phi(k h)``.

    Parameters
    ----------
    cf : array_like of complex
        Samples at ``0, h, ..., q h``.
    grid : FrequencyGrid or float
        Test-frequency grid, or the spacing ``h`` itself.
    x_grid : array_like of float
        Abscissae, each with ``|x| <= pi / h``.
    tail_tol : float
        Warn with :class:`TruncationWarning` when ``|phi(q h)|`` exceeds this.

    The mass (and the mass of the negative part) are trapezoidal integrals
    over ``x_grid`` and are only meaningful when ``x_grid`` covers the support.
    """
    phi = np.asarray(cf, dtype=complex).ravel()
    h = grid.h if isinstance(grid, FrequencyGrid) else float(grid)
    if isinstance(grid, FrequencyGrid) and phi.size != grid.q + 1:
        raise ValueError(f"expected {grid.q + 1} samples, got {phi.size}")
    if phi.size < 2:
        raise ValueError("need at least two samples")
    if abs(phi[0] - 1) > 1e-6:
        raise ValueError(f"phi(0) must be 1 within 1e-6, got {phi[0]}")
    x = np.asarray(x_grid, dtype=float).ravel()
    limit = math.pi / h
    if np.any(np.abs(x) > limit * (1 + 1e-12)):
        raise ValueError(f"x outside the resolvable window |x| <= pi/h = {limit:.6g}")
    tail = float(abs(phi[-1]))
    if tail > tail_tol:
        warnings.warn(
            f"|phi| = {tail:.3g} at the cutoff {h * (phi.size - 1):.6g}; truncation error dominates",
            TruncationWarning,
            stacklevel=2,
        )
    w = np.arange(phi.size) * h
    wphi = _trapezoid_weights(phi.size, h) * phi
    values = np.empty(x.size)
    block = max(1, 2**22 // phi.size)
    for start in range(0, x.size, block):
        xs = x[start:start + block]
        values[start:start + block] = (np.exp(-1j * np.outer(xs, w)) @ wphi).real / math.pi
    # the two-sided sum is real up to the h Im(phi(0)) / (2 pi) left by a nonreal phi(0)
    residue = h * abs(phi[0].imag) / (2 * math.pi)
    if x.size > 1:
        mass = float(trapezoid(values, x))
        negative = float(trapezoid(np.maximum(-values, 0.0), x))
    else:
        mass = negative = float("nan")
    return DensityEstimate(x, values, mass, float(w[-1]), residue, tail, negative)


def coarsen(cf, h: float, extent: float) -> tuple[np.ndarray, float]:
    """Thin samples on spacing ``h`` to the coarsest stride resolving ``|x| <= extent``.

    The stride divides the number of intervals, so the cutoff frequency is kept.
    """
    phi = np.asarray(cf, dtype=complex).ravel()
    intervals = phi.size - 1
    best = 1
    for stride in range(1, intervals + 1):
        if intervals % stride == 0 and math.pi / (stride * h) >= extent:
            best = stride
    return phi[::best], best * h


def default_x_grid(h: float, points: int = 801, lo: float | None = None,
                   hi: float | None = None) -> np.ndarray:
    """Evenly spaced abscissae covering the resolvable window (or a sub-range)."""
    limit = math.pi / h
    lo = -limit if lo is None else lo
    hi = limit if hi is None else hi
    if not -limit <= lo < hi <= limit:
        raise ValueError(f"x range [{lo}, {hi}] must lie within |x| <= {limit:.6g}")
    return np.linspace(lo, hi, points)


def write_csv(x, columns: dict[str, np.ndarray], stream=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", *columns])
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for i, xi in enumerate(np.asarray(x, dtype=float)):
        writer.writerow([repr(float(xi)), *(repr(float(c[i])) for c in cols)])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
