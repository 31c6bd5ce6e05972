"""Moment bounds from Bochner-constrained collocation programs.

The program for one grid has decision vector
``(mu_1..mu_n, Re phi_0, Im phi_0, ..., Re phi_q, Im phi_q)`` where ``phi_k`` is
the characteristic function at test frequency ``k h``.  Equalities encode the
reduced residual at zero and the collocation solution of the ODE condensed onto
the test frequencies; the PSD block is the real embedding of the Toeplitz
matrix of the ``phi_k``.  Minimizing and maximizing each moment gives the
bounds.
"""

from __future__ import annotations

import dataclasses
import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from . import sdp
from .bochner import embedding_operator, psd_check, real_embedding, toeplitz_from_samples
from .cf_ode import build_ode, j_power, reduced_coeffs_at_zero
from .collocation import FrequencyGrid, MomentParametrization, parametrize
from .model import PolynomialSde, jump_moment, order


class InfeasiblePinning(ValueError):
    """Pinned moments violate the stationarity condition at zero."""


@dataclasses.dataclass(frozen=True)
class MomentInterval:
    order: int
    lower: float
    upper: float
    lower_solution: sdp.Solution | None = None
    upper_solution: sdp.Solution | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def statuses(self) -> tuple[str, str]:
        return tuple(
            s.status.value if s is not None else "not-run"
            for s in (self.lower_solution, self.upper_solution)
        )

    @property
    def ok(self) -> bool:
        return all(s is not None and s.ok for s in (self.lower_solution, self.upper_solution))

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def to_dict(self) -> dict:
        def side(sol):
            if sol is None:
                return {"status": "not-run", "iterations": 0}
            return {"status": sol.status.value, "iterations": sol.iterations}

        return {
            "order": self.order,
            "lower": _json_float(self.lower),
            "upper": _json_float(self.upper),
            "lower_solver": side(self.lower_solution),
            "upper_solver": side(self.upper_solution),
        }


def _json_float(v: float):
    return v if math.isfinite(v) else None


@dataclasses.dataclass(frozen=True)
class MomentBounds:
    intervals: dict[int, MomentInterval]
    grid: FrequencyGrid
    fingerprint: str

    def __getitem__(self, k: int) -> MomentInterval:
        return self.intervals[k]

    def lower(self, k: int) -> float:
        return self.intervals[k].lower

    def upper(self, k: int) -> float:
        return self.intervals[k].upper

    def midpoints(self) -> dict[int, float]:
        return {k: iv.midpoint for k, iv in self.intervals.items()}

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "grid": self.grid.to_dict(),
            "bounds": [self.intervals[k].to_dict() for k in sorted(self.intervals)],
        }


class BochnerProgram:
    """Assembled collocation + Bochner data for one model and grid.

    Shared by all moment orders and both optimization directions.
    """

    def __init__(self, model: PolynomialSde, grid: FrequencyGrid):
        self.model = model
        self.grid = grid
        self.ode = build_ode(model)
        self.n = self.ode.order
        self.param: MomentParametrization = parametrize(self.ode, grid)

    @property
    def n_vars(self) -> int:
        return self.n + 2 * (self.grid.q + 1)

    @cached_property
    def constraints(self) -> tuple[np.ndarray, np.ndarray, sdp.PsdBlock]:
        n, q = self.n, self.grid.q
        size = q + 1
        base = self.param.test_base()
        dirs = self.param.test_directions()
        a = np.zeros((2 + 2 * size, self.n_vars))
        b = np.zeros(2 + 2 * size)

        red = reduced_coeffs_at_zero(self.ode)
        row = red[1:] * j_power(np.arange(1, n + 1))
        a[0, :n], a[1, :n] = row.real, row.imag
        b[0], b[1] = -red[0].real, -red[0].imag

        for k in range(size):
            re, im = 2 + 2 * k, 3 + 2 * k
            a[re, n + 2 * k] = 1.0
            a[im, n + 2 * k + 1] = 1.0
            a[re, :n] = -dirs[:, k].real
            a[im, :n] = -dirs[:, k].imag
            b[re], b[im] = base[k].real, base[k].imag

        emb = embedding_operator(q)
        coeffs = sp.hstack([sp.csc_matrix((emb.shape[0], n)), emb], format="csc")
        dim = 2 * size
        block = sdp.PsdBlock(dim, np.zeros((dim, dim)), coeffs)
        return a, b, block

    def program(self, objective) -> sdp.ConicProgram:
        a, b, block = self.constraints
        return sdp.ConicProgram(np.asarray(objective, dtype=float), a, b, (block,))

    def moment_objective(self, k: int, sense: float = 1.0) -> np.ndarray:
        if not 1 <= k <= self.n:
            raise ValueError(f"moment order must be in 1..{self.n}, got {k}")
        c = np.zeros(self.n_vars)
        c[k - 1] = sense
        return c

    def moments_of(self, x) -> np.ndarray:
        return np.asarray(x)[: self.n]

    def cf_of(self, x) -> np.ndarray:
        t = np.asarray(x)[self.n :]
        return t[0::2] + 1j * t[1::2]

    def solve_moment(self, k: int, sense: float, settings: sdp.Settings | None = None) -> sdp.Solution:
        return sdp.solve(self.program(self.moment_objective(k, sense)), settings)

    def interval(self, k: int, settings: sdp.Settings | None = None) -> MomentInterval:
        lo = self.solve_moment(k, 1.0, settings)
        hi = self.solve_moment(k, -1.0, settings)
        lower = float(lo.x[k - 1]) if lo.ok else -math.inf
        upper = float(hi.x[k - 1]) if hi.ok else math.inf
        return MomentInterval(k, lower, upper, lo, hi)


def moment_bounds(model: PolynomialSde, grid: FrequencyGrid, k: int,
                  settings: sdp.Settings | None = None) -> MomentInterval:
    """Lower and upper bound on the ``k``-th stationary moment."""
    return BochnerProgram(model, grid).interval(k, settings)


def all_moment_bounds(model: PolynomialSde, grid: FrequencyGrid,
                      orders: Iterable[int] | None = None,
                      settings: sdp.Settings | None = None) -> MomentBounds:
    prog = BochnerProgram(model, grid)
    orders = range(1, prog.n + 1) if orders is None else orders
    intervals = {k: prog.interval(k, settings) for k in orders}
    return MomentBounds(intervals, grid, model.fingerprint())


def refine(model: PolynomialSde, k: int, q_schedule: Sequence[int], h: float,
           substeps: int = 1, settings: sdp.Settings | None = None) -> list[tuple[int, MomentInterval]]:
    """Bounds on moment ``k`` for an increasing sequence of test-point counts."""
    qs = list(q_schedule)
    if not qs or any(b <= a for a, b in zip(qs, qs[1:])):
        raise ValueError(f"q_schedule must be strictly increasing, got {qs}")
    return [(q, moment_bounds(model, FrequencyGrid(h, q, substeps), k, settings)) for q in qs]


# --- characteristic-function estimate ------------------------------------------


@dataclasses.dataclass(frozen=True)
class CfEstimate:
    omega: np.ndarray
    phi: np.ndarray
    moments: np.ndarray
    reduced_residual: float
    grid: FrequencyGrid

    def psd_check(self, tol: float = 1e-6) -> tuple[bool, float]:
        return psd_check(real_embedding(toeplitz_from_samples(self.phi[:: self.grid.substeps], tol=1e-6)), tol)

    @property
    def test_phi(self) -> np.ndarray:
        return self.phi[:: self.grid.substeps]

    @property
    def test_omega(self) -> np.ndarray:
        return self.omega[:: self.grid.substeps]


def estimate_cf(model: PolynomialSde, grid: FrequencyGrid, moments=None,
                bounds: MomentBounds | None = None, tol: float = 1e-8) -> CfEstimate:
    """Characteristic function on every collocation node with moments pinned.

    ``moments`` maps order -> value (or is a length-``n`` sequence, with NaN for
    free entries); missing orders default to bounds midpoints.  Orders still
    free are fitted by least squares to the stationarity condition at zero.
    """
    ode = build_ode(model)
    n = ode.order
    pinned = np.full(n, np.nan)
    if bounds is not None:
        for k, iv in bounds.intervals.items():
            if 1 <= k <= n and math.isfinite(iv.lower) and math.isfinite(iv.upper):
                pinned[k - 1] = iv.midpoint
    if moments is not None:
        items = moments.items() if isinstance(moments, dict) else enumerate(moments, start=1)
        for k, v in items:
            if v is not None and not (isinstance(v, float) and math.isnan(v)):
                pinned[int(k) - 1] = float(v)

    red = reduced_coeffs_at_zero(ode)
    row = red[1:] * j_power(np.arange(1, n + 1))
    free = np.isnan(pinned)
    if free.any():
        # least-squares completion of the (complex) reduced residual
        known = -red[0] - row[~free] @ pinned[~free] if (~free).any() else -red[0]
        a = np.vstack([row[free].real, row[free].imag])
        b = np.array([known.real, known.imag])
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        pinned[free] = sol

    resid = abs(red[0] + row @ pinned)
    scale = 1.0 + np.abs(red).max() * np.abs(np.concatenate([[1.0], pinned])).max()
    if resid > tol * scale:
        raise InfeasiblePinning(
            f"moments {pinned.tolist()} violate E[f(X)] = 0 (residual {resid:.3g})"
        )
    param = parametrize(ode, grid)
    phi = param.cf(pinned, all_nodes=True)
    return CfEstimate(grid.nodes, phi, pinned, float(resid), grid)


# --- moment lift ---------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class MomentLiftSystem:
    """Stationarity rows ``E[L x^m] = 0`` over moments ``mu_1..mu_top``.

    ``matrix @ (mu_1..mu_top) = rhs``; columns ``low`` hold orders up to ``n``
    (the bounded ones) and ``high`` the rest.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    rows: tuple[int, ...]
    top: int

    def split(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.matrix[:, :n], self.matrix[:, n:]


def generator_row(model: PolynomialSde, m: int) -> dict[int, float]:
    """Coefficients of ``E[L x^m]`` by moment order (order 0 is the constant)."""
    out: dict[int, float] = {}

    def add(k, v):
        if v != 0:
            out[k] = out.get(k, 0.0) + v

    for l, a in enumerate(model.drift_coeffs):
        add(m - 1 + l, m * a)
    if m >= 2:
        for l, a in enumerate(model.diffusion_sq_coeffs):
            add(m - 2 + l, 0.5 * m * (m - 1) * a)
    for k in range(2, m + 1):
        add(m - k, math.comb(m, k) * jump_moment(model.levy, k))
    return out


def lift_system(model: PolynomialSde, cutoff: int) -> MomentLiftSystem:
    n = order(model)
    if cutoff < n:
        raise ValueError(f"cutoff {cutoff} is below the model order {n}")
    n_rows = cutoff - n + 1
    rows, rhs = [], []
    for m in range(1, n_rows + 1):
        coeffs = generator_row(model, m)
        r = np.zeros(cutoff)
        for k, v in coeffs.items():
            if k == 0:
                continue
            if k > cutoff:
                raise ValueError(f"row m={m} needs moment {k} beyond cutoff {cutoff}")
            r[k - 1] += v
        rows.append(r)
        rhs.append(-coeffs.get(0, 0.0))
    return MomentLiftSystem(np.array(rows), np.array(rhs), tuple(range(1, n_rows + 1)), cutoff)


def lift_moments(model: PolynomialSde, cutoff: int, base_bounds: MomentBounds,
                 tol: float = 1e-9) -> dict[int, MomentInterval]:
    """Propagate moment boxes through the stationarity rows by linear programs.

    Returns an interval for every order ``1..cutoff``; unbounded directions
    come back as infinite endpoints.
    """
    system = lift_system(model, cutoff)
    bounds_box = [(None, None)] * cutoff
    for k, iv in base_bounds.intervals.items():
        if k <= cutoff:
            lo = iv.lower if math.isfinite(iv.lower) else None
            hi = iv.upper if math.isfinite(iv.upper) else None
            bounds_box[k - 1] = (lo, hi)
    out = {}
    for k in range(1, cutoff + 1):
        ends = []
        for sense in (1.0, -1.0):
            c = np.zeros(cutoff)
            c[k - 1] = sense
            res = scipy.optimize.linprog(
                c, A_eq=system.matrix, b_eq=system.rhs, bounds=bounds_box, method="highs",
                options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
            )
            if res.status == 3:
                ends.append(-sense * math.inf)
            elif res.status != 0:
                raise ValueError(f"moment lift LP for order {k} failed: {res.message}")
            else:
                ends.append(float(res.x[k - 1]))
        out[k] = MomentInterval(k, ends[0], ends[1])
    return out
