"""Trapezoidal collocation of the stationary characteristic-function ODE.

Unknowns at every node ``w_i`` are the complex samples
``v_i = (phi, phi', ..., phi^(n))(w_i)``.  Consecutive nodes are linked by the
trapezoidal rule on each derivative chain, the ODE residual is imposed at every
node ``w_i > 0``, the reduced residual at ``w = 0``, and
``phi^(l)(0) = j^l mu_l`` ties the samples to the real moment unknowns.

The Bochner test points are every ``substeps``-th node, so a finer
integration step can be used without changing the test matrix.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp

from .cf_ode import CfOdeSystem, j_power, reduced_coeffs_at_zero


@dataclasses.dataclass(frozen=True)
class FrequencyGrid:
    """Evenly spaced test frequencies ``k h`` for ``k = 0..q``.

    Collocation nodes are spaced ``h / substeps`` and include every test
    frequency.
    """

    h: float
    q: int
    substeps: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"grid spacing must be positive, got {self.h!r}")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"test-point count q must be a positive integer, got {self.q!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError(f"substeps must be a positive integer, got {self.substeps!r}")

    @property
    def step(self) -> float:
        return self.h / self.substeps

    @property
    def n_intervals(self) -> int:
        return self.q * self.substeps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_intervals + 1) * self.step

    @property
    def test_frequencies(self) -> np.ndarray:
        return np.arange(self.q + 1) * self.h

    @property
    def span(self) -> float:
        return self.q * self.h

    def with_q(self, q: int) -> "FrequencyGrid":
        return dataclasses.replace(self, q=q)

    def to_dict(self) -> dict:
        return {"h": self.h, "q": self.q, "substeps": self.substeps}


@dataclasses.dataclass(frozen=True)
class DiscreteSystem:
    """Assembled real equality system ``matrix @ u = rhs``.

    Real unknown layout: for node ``i`` and derivative ``l`` the pair
    ``(Re, Im)`` of ``v_{l,i}`` sits at ``2 * (i * (n + 1) + l)``; the moments
    ``mu_1..mu_n`` follow all node unknowns.
    """

    ode: CfOdeSystem
    grid: FrequencyGrid
    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def order(self) -> int:
        return self.ode.order

    @property
    def n_node_unknowns(self) -> int:
        return 2 * (self.grid.n_intervals + 1) * (self.order + 1)

    @property
    def n_unknowns(self) -> int:
        return self.n_node_unknowns + self.order

    def moment_index(self, k: int) -> int:
        return self.n_node_unknowns + k - 1

    def pack(self, samples: np.ndarray, mu) -> np.ndarray:
        """Real unknown vector from complex ``samples[i, l]`` and moments."""
        samples = np.asarray(samples, dtype=complex)
        u = np.empty(self.n_unknowns)
        flat = samples.reshape(-1)
        u[0 : self.n_node_unknowns : 2] = flat.real
        u[1 : self.n_node_unknowns : 2] = flat.imag
        u[self.n_node_unknowns :] = mu
        return u

    def unpack(self, u) -> tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_unknowns,):
            raise ValueError(f"solution has shape {u.shape}, expected ({self.n_unknowns},)")
        z = u[0 : self.n_node_unknowns : 2] + 1j * u[1 : self.n_node_unknowns : 2]
        return z.reshape(self.grid.n_intervals + 1, self.order + 1), u[self.n_node_unknowns :]


def constraint_count(n: int, intervals: int) -> int:
    """Number of real equality rows produced by :func:`discretize`."""
    return 2 * (n * intervals + intervals + 1) + 2 * (n + 1)


def discretize(sys: CfOdeSystem, grid: FrequencyGrid) -> DiscreteSystem:
    n = sys.order
    if grid.q < n:
        raise ValueError(f"grid has q={grid.q} test points but the ODE has order {n}")
    big_q = grid.n_intervals
    h = grid.step
    width = n + 1
    n_nodes_real = 2 * (big_q + 1) * width

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []
    row = 0

    def add_complex(terms, value=0j):
        # sum coef * v  ->  real and imaginary rows over (Re v, Im v) pairs
        nonlocal row
        for idx, c in terms:
            rows.extend((row, row, row + 1, row + 1))
            cols.extend((2 * idx, 2 * idx + 1, 2 * idx, 2 * idx + 1))
            vals.extend((c.real, -c.imag, c.imag, c.real))
        rhs.extend((value.real, value.imag))
        row += 2

    def v(i, l):
        return i * width + l

    # node 0: normalization, moment boundary, reduced residual
    add_complex([(v(0, 0), 1 + 0j)], 1 + 0j)
    for l in range(1, n + 1):
        jl = complex(j_power(l))
        mom = n_nodes_real + l - 1
        for part, coef in ((0, jl.real), (1, jl.imag)):
            rows.extend((row, row))
            cols.extend((2 * v(0, l) + part, mom))
            vals.extend((1.0, -coef))
            rhs.append(0.0)
            row += 1
    red = reduced_coeffs_at_zero(sys)
    add_complex([(v(0, l), complex(red[l])) for l in range(width) if red[l] != 0])

    coeffs = sys.coeffs(grid.nodes[1:])
    half = h / 2
    for i in range(1, big_q + 1):
        for k in range(n):
            add_complex([
                (v(i, k), 1 + 0j), (v(i - 1, k), -1 + 0j),
                (v(i - 1, k + 1), -half + 0j), (v(i, k + 1), -half + 0j),
            ])
        add_complex([(v(i, l), complex(coeffs[i - 1, l])) for l in range(width)])

    total = n_nodes_real + n
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(row, total))
    return DiscreteSystem(sys, grid, mat, np.asarray(rhs))


@dataclasses.dataclass(frozen=True)
class MomentParametrization:
    """Collocation solution as an affine function of the moments.

    ``samples(mu)[i, l] = base[i, l] + sum_k mu[k-1] * directions[k-1, i, l]``
    solves every trapezoidal chain and every residual at ``w > 0`` exactly.
    The reduced residual at ``w = 0`` is the one remaining linear condition
    ``reduced @ (j^l mu_l) = 0`` on the moments.
    """

    ode: CfOdeSystem
    grid: FrequencyGrid
    base: np.ndarray
    directions: np.ndarray

    @property
    def order(self) -> int:
        return self.ode.order

    def samples(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        return self.base + np.tensordot(mu, self.directions, axes=1)

    def cf(self, mu, all_nodes: bool = False) -> np.ndarray:
        phi = self.samples(mu)[:, 0]
        return phi if all_nodes else phi[:: self.grid.substeps]

    def test_base(self) -> np.ndarray:
        return self.base[:: self.grid.substeps, 0]

    def test_directions(self) -> np.ndarray:
        return self.directions[:, :: self.grid.substeps, 0]

    def reduced_residual(self, mu) -> complex:
        red = reduced_coeffs_at_zero(self.ode)
        z0 = j_power(np.arange(self.order + 1)) * np.concatenate([[1.0], np.asarray(mu, float)])
        return complex(red @ z0)


def march(sys: CfOdeSystem, grid: FrequencyGrid, initial: np.ndarray) -> np.ndarray:
    """Propagate node-0 data through the trapezoidal chains and residuals.

    ``initial`` has shape ``(n + 1, m)`` (``m`` independent right-hand sides);
    returns ``(N + 1, n + 1, m)`` samples on every collocation node.
    """
    n = sys.order
    width = n + 1
    initial = np.asarray(initial, dtype=complex)
    if initial.ndim == 1:
        initial = initial[:, None]
    m = initial.shape[1]
    big_q = grid.n_intervals
    half = grid.step / 2
    out = np.empty((big_q + 1, width, m), dtype=complex)
    out[0] = initial
    # With v_n = t the chains give v = alpha + beta * t, where beta is fixed.
    beta = half ** (n - np.arange(width)).astype(float)
    coeffs = sys.coeffs(grid.nodes[1:])
    cur = initial
    for i in range(1, big_q + 1):
        r = cur[:-1] + half * cur[1:]
        alpha = np.zeros((width, m), dtype=complex)
        for k in range(n - 1, -1, -1):
            alpha[k] = r[k] + half * alpha[k + 1]
        c = coeffs[i - 1]
        t = -(c @ alpha) / (c @ beta)
        cur = alpha + beta[:, None] * t[None, :]
        out[i] = cur
    return out


def parametrize(sys: CfOdeSystem, grid: FrequencyGrid) -> MomentParametrization:
    """Affine moment parametrization of the collocation solution."""
    n = sys.order
    if grid.q < n:
        raise ValueError(f"grid has q={grid.q} test points but the ODE has order {n}")
    width = n + 1
    init = np.zeros((width, n + 1), dtype=complex)
    init[0, 0] = 1.0
    for k in range(1, n + 1):
        init[k, k] = j_power(k)
    sol = march(sys, grid, init)
    base = sol[:, :, 0]
    directions = np.moveaxis(sol[:, :, 1:], 2, 0)
    return MomentParametrization(sys, grid, base, directions)


def extract_cf(solution, system: DiscreteSystem, all_nodes: bool = False) -> np.ndarray:
    """``phi`` at the test frequencies (or every node) from a real solution vector."""
    samples, _ = system.unpack(solution)
    phi = samples[:, 0]
    return phi if all_nodes else phi[:: system.grid.substeps]
