"""Small dense semidefinite programs solved by operator splitting.

Programs have the form::

    minimize    c @ x
    subject to  A @ x == b
                S0_k + sum_i x[i] * S_ik  is PSD   for each block k

The equality set is handled once up front: a rank-revealing SVD of the
(equilibrated) equality matrix gives a particular solution and an orthonormal
null-space basis, which is exactly the cached factorization needed to project
onto the affine set.  The remaining problem over the null-space coordinates is
solved with an over-relaxed ADMM that alternates a small linear solve with
projection onto the PSD cone by eigenvalue clipping.
"""

from __future__ import annotations

import dataclasses
import enum
import io
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"
    MAX_ITERATIONS = "max-iterations"


@dataclasses.dataclass(frozen=True)
class PsdBlock:
    """Affine symmetric-matrix map ``x -> S0 + sum_i x[i] S_i``.

    ``coeffs`` is a sparse ``(dim * dim, n_vars)`` matrix whose column ``i`` is
    ``S_i`` flattened in row-major order.
    """

    dim: int
    offset: np.ndarray
    coeffs: sp.csc_matrix

    def __post_init__(self):
        if self.offset.shape != (self.dim, self.dim):
            raise ValueError("offset must be dim x dim")
        if self.coeffs.shape[0] != self.dim * self.dim:
            raise ValueError("coeffs must have dim*dim rows")

    @classmethod
    def from_matrices(cls, offset, matrices: Sequence) -> "PsdBlock":
        offset = np.asarray(offset, dtype=float)
        cols = [sp.csc_matrix(np.asarray(m, dtype=float).reshape(-1, 1)) for m in matrices]
        coeffs = sp.hstack(cols, format="csc") if cols else sp.csc_matrix((offset.size, 0))
        return cls(offset.shape[0], offset, coeffs)

    def evaluate(self, x) -> np.ndarray:
        m = self.offset + (self.coeffs @ np.asarray(x, dtype=float)).reshape(self.dim, self.dim)
        return 0.5 * (m + m.T)


@dataclasses.dataclass(frozen=True)
class ConicProgram:
    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    blocks: tuple[PsdBlock, ...] = ()

    def __post_init__(self):
        n = self.objective.shape[0]
        if self.eq_matrix.ndim != 2 or self.eq_matrix.shape[1] != n:
            raise ValueError(
                f"equality matrix has shape {self.eq_matrix.shape}, expected (m, {n})"
            )
        if self.eq_rhs.shape != (self.eq_matrix.shape[0],):
            raise ValueError("equality right-hand side does not match matrix rows")
        for blk in self.blocks:
            if blk.coeffs.shape[1] != n:
                raise ValueError("PSD block coefficient count does not match decision dimension")
            if not np.allclose(blk.offset, blk.offset.T):
                raise ValueError("PSD block offset is not symmetric")
            c = blk.coeffs.tocoo()
            d = blk.dim
            mirrored = sp.csc_matrix(
                (c.data, ((c.row % d) * d + c.row // d, c.col)), shape=c.shape
            )
            if abs(mirrored - blk.coeffs).max() > 1e-12 * max(1.0, abs(c.data).max(initial=0)):
                raise ValueError("PSD block coefficient matrices are not symmetric")

    @classmethod
    def build(cls, objective, eq_matrix=None, eq_rhs=None, blocks=()) -> "ConicProgram":
        objective = np.asarray(objective, dtype=float).ravel()
        n = objective.shape[0]
        if eq_matrix is None:
            eq_matrix = np.zeros((0, n))
            eq_rhs = np.zeros(0)
        eq_matrix = np.atleast_2d(np.asarray(eq_matrix, dtype=float))
        if eq_matrix.size == 0:
            eq_matrix = eq_matrix.reshape(0, n)
        return cls(objective, eq_matrix, np.asarray(eq_rhs, dtype=float).ravel(), tuple(blocks))

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclasses.dataclass(frozen=True)
class Settings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 50000
    alpha: float = 1.5
    rho: float = 0.1
    sigma: float = 1e-6
    check_every: int = 10
    adapt_every: int = 50
    min_iter_infeasible: int = 1000
    tol_infeasible: float = 1e-7
    ruiz_iters: int = 15


@dataclasses.dataclass
class Solution:
    x: np.ndarray
    status: Status
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    min_eigenvalue: float = float("nan")
    certificate: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


# --- symmetric-matrix vectorization --------------------------------------------


class _Svec:
    """Isometric vectorization of symmetric matrices of a fixed size."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows, self.cols = np.triu_indices(dim)
        self.scale = np.where(self.rows == self.cols, 1.0, np.sqrt(2.0))
        self.flat = self.rows * dim + self.cols
        self.flat_t = self.cols * dim + self.rows

    @property
    def size(self) -> int:
        return self.rows.size

    def vec(self, m: np.ndarray) -> np.ndarray:
        return m[self.rows, self.cols] * self.scale

    def vec_flat_operator(self, coeffs: sp.spmatrix) -> np.ndarray:
        """Apply ``vec`` to every column of a flattened-matrix operator."""
        c = sp.csr_matrix(coeffs)
        sym = 0.5 * (c[self.flat] + c[self.flat_t])
        return np.asarray(sym.todense()) * self.scale[:, None]

    def mat(self, v: np.ndarray) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        vals = v / self.scale
        m[self.rows, self.cols] = vals
        m[self.cols, self.rows] = vals
        return m


def _project_psd(m: np.ndarray) -> tuple[np.ndarray, float]:
    w, v = np.linalg.eigh(m)
    lo = w[0]
    w = np.maximum(w, 0.0)
    return (v * w) @ v.T, lo


# --- equality preprocessing ----------------------------------------------------


def _equilibrate_rows(a: np.ndarray, b: np.ndarray):
    norms = np.abs(a).max(axis=1) if a.size else np.zeros(0)
    norms[norms == 0] = 1.0
    return a / norms[:, None], b / norms


def _affine_parametrization(a: np.ndarray, b: np.ndarray, tol: float):
    """Return ``(x0, basis, residual)`` with ``{x : a x = b} = x0 + basis @ y``.

    ``residual`` is the sup-norm of ``a x0 - b`` after row equilibration; a value
    above tolerance means the equalities are inconsistent.
    """
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.zeros(n), np.eye(n), 0.0
    a_s, b_s = _equilibrate_rows(a, b)
    u, s, vt = np.linalg.svd(a_s, full_matrices=True)
    cutoff = max(a_s.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0) * 10
    rank = int(np.sum(s > cutoff))
    x0 = vt[:rank].T @ ((u[:, :rank].T @ b_s) / s[:rank])
    basis = vt[rank:].T
    residual = float(np.abs(a_s @ x0 - b_s).max())
    return x0, basis, residual


# --- solver ---------------------------------------------------------------------


def solve(program: ConicProgram, settings: Settings | None = None, **overrides) -> Solution:
    """Minimize ``program.objective @ x`` over the program's constraints."""
    s = settings or Settings()
    if overrides:
        s = dataclasses.replace(s, **overrides)
    c_full = program.objective
    x0, basis, eq_res = _affine_parametrization(program.eq_matrix, program.eq_rhs, s.tol_feas)
    if eq_res > s.tol_feas:
        cert = program.eq_matrix @ x0 - program.eq_rhs
        return Solution(x0, Status.PRIMAL_INFEASIBLE, float("nan"), eq_res, float("nan"),
                        float("nan"), 0, certificate=cert)

    blocks = program.blocks
    svecs = [_Svec(blk.dim) for blk in blocks]
    g_parts, off_parts = [], []
    for blk, sv in zip(blocks, svecs):
        g_full = sv.vec_flat_operator(blk.coeffs)
        g_parts.append(g_full @ basis)
        off_parts.append(sv.vec(blk.offset) + g_full @ x0)
    p = basis.shape[1]
    c = basis.T @ c_full
    offset_obj = float(c_full @ x0)

    if not blocks:
        return _solve_unconstrained(x0, basis, c, offset_obj, s)
    if p == 0:
        return _solve_fixed(x0, blocks, offset_obj, s)

    return _admm(x0, basis, c, offset_obj, g_parts, off_parts, svecs, s)


def _solve_unconstrained(x0, basis, c, offset_obj, s: Settings) -> Solution:
    if basis.shape[1] and np.abs(c).max() > s.tol_gap:
        ray = -basis @ c
        return Solution(x0, Status.DUAL_INFEASIBLE, -np.inf, 0.0, float(np.abs(c).max()),
                        float("nan"), 0, certificate=ray)
    return Solution(x0, Status.OPTIMAL, offset_obj, 0.0, 0.0, 0.0, 0)


def _solve_fixed(x0, blocks, offset_obj, s: Settings) -> Solution:
    lo = min(np.linalg.eigvalsh(blk.evaluate(x0))[0] for blk in blocks)
    status = Status.OPTIMAL if lo >= -s.tol_feas else Status.PRIMAL_INFEASIBLE
    return Solution(x0, status, offset_obj, max(0.0, -lo), 0.0, 0.0, 0, min_eigenvalue=lo)


def _admm(x0, basis, c, offset_obj, g_parts, off_parts, svecs, s: Settings) -> Solution:
    p = basis.shape[1]
    sizes = [g.shape[0] for g in g_parts]
    splits = np.cumsum(sizes)[:-1]
    G = np.vstack(g_parts)
    g = np.concatenate(off_parts)

    # Ruiz equilibration: free scaling per column, one scalar per cone.
    col = np.ones(p)
    cone = np.ones(len(sizes))
    Gs = G.copy()
    for _ in range(s.ruiz_iters):
        cn = np.abs(Gs).max(axis=0)
        cn[cn == 0] = 1.0
        dcol = 1.0 / np.sqrt(cn)
        rn = np.array([np.abs(part).max() if part.size else 1.0
                       for part in np.split(Gs, splits, axis=0)])
        rn[rn == 0] = 1.0
        dcone = 1.0 / np.sqrt(rn)
        col *= dcol
        cone *= dcone
        Gs = np.repeat(dcone, sizes)[:, None] * Gs * dcol[None, :]
    erow = np.repeat(cone, sizes)
    gs = erow * g
    cs = col * c
    cnorm = np.abs(cs).max()
    gamma = 1.0 / cnorm if cnorm > 0 else 1.0
    cs = gamma * cs

    def unscale(y_s, lam_s):
        return col * y_s, erow * lam_s / gamma

    rho, sigma, alpha = s.rho, s.sigma, s.alpha
    GtG = Gs.T @ Gs
    kkt = np.linalg.cholesky(sigma * np.eye(p) + rho * GtG)

    def kkt_solve(rhs):
        return np.linalg.solve(kkt.T, np.linalg.solve(kkt, rhs))

    y = np.zeros(p)
    z = np.zeros_like(gs)
    lam = np.zeros_like(gs)
    lo_eigs = [np.inf] * len(sizes)
    status = Status.MAX_ITERATIONS
    rp = rd = gap = np.inf
    it = 0
    y_prev, lam_prev = y.copy(), lam.copy()

    def project(v):
        out = np.empty_like(v)
        for k, (sv, part) in enumerate(zip(svecs, np.split(np.arange(v.size), splits))):
            mat = sv.mat(v[part] + gs[part])
            proj, lo_eigs[k] = _project_psd(mat)
            out[part] = sv.vec(proj) - gs[part]
        return out

    for it in range(1, s.max_iter + 1):
        y_prev, lam_prev = y, lam
        y_t = kkt_solve(sigma * y - cs + Gs.T @ (rho * z - lam))
        z_t = Gs @ y_t
        y = alpha * y_t + (1 - alpha) * y
        z_relax = alpha * z_t + (1 - alpha) * z
        z_new = project(z_relax + lam / rho)
        lam = lam + rho * (z_relax - z_new)
        z = z_new

        if it % s.check_every:
            continue
        yu, lu = unscale(y, lam)
        Gy = G @ yu
        zu = z / erow
        rp = float(np.abs(Gy - zu).max())
        rd = float(np.abs(c + G.T @ lu).max())
        pobj = float(c @ yu)
        dobj = float(lu @ g)
        gap = abs(pobj - dobj)
        scale_p = 1.0 + max(np.abs(g).max(), np.abs(Gy).max())
        scale_d = 1.0 + np.abs(c).max()
        if (rp <= s.tol_feas * scale_p and rd <= s.tol_feas * scale_d
                and gap <= s.tol_gap * (1.0 + abs(pobj + offset_obj))):
            lo = _min_eig(Gy + g, svecs, splits)
            if lo >= -s.tol_feas:
                status = Status.OPTIMAL
                break

        if it >= s.min_iter_infeasible:
            dy, dl = y - y_prev, lam - lam_prev
            cert = _infeasibility(dy, dl, Gs, gs, cs, svecs, splits, s.tol_infeasible)
            if cert is not None:
                status = cert
                ray, dual_ray = unscale(dy, dl)
                certificate = basis @ ray if status is Status.DUAL_INFEASIBLE else dual_ray
                x = x0 + basis @ unscale(y, lam)[0]
                return Solution(x, status, float("nan"), rp, rd, float("nan"), it,
                                certificate=certificate)

        if it % s.adapt_every == 0:
            rp_s = np.abs(Gs @ y - z).max() / max(np.abs(Gs @ y).max(), np.abs(z).max(), 1e-30)
            rd_s = np.abs(cs + Gs.T @ lam).max() / max(np.abs(Gs.T @ lam).max(), np.abs(cs).max(), 1e-30)
            ratio = np.sqrt(rp_s / max(rd_s, 1e-30))
            if ratio > 5.0 or ratio < 0.2:
                rho = float(np.clip(rho * ratio, 1e-6, 1e6))
                kkt = np.linalg.cholesky(sigma * np.eye(p) + rho * GtG)

    yu, lu = unscale(y, lam)
    x = x0 + basis @ yu
    lo = _min_eig(G @ yu + g, svecs, splits)
    return Solution(x, status, float(c @ yu) + offset_obj, rp, rd, gap, it, min_eigenvalue=lo)


def _min_eig(v, svecs, splits) -> float:
    parts = np.split(v, splits)
    return min(np.linalg.eigvalsh(sv.mat(part))[0] for sv, part in zip(svecs, parts))


def _infeasibility(dy, dl, G, g, c, svecs, splits, eps):
    """Check iterate differences for infeasibility certificates (scaled space)."""
    nl = np.abs(dl).max()
    if nl > 0:
        # dl must lie in the polar cone -K, annihilate G and separate the offset.
        pos = np.concatenate([
            sv.vec(_project_psd(sv.mat(part))[0]) for sv, part in zip(svecs, np.split(dl, splits))
        ])
        if (np.abs(G.T @ dl).max() <= eps * nl and np.abs(pos).max() <= eps * nl
                and dl @ g > eps * nl):
            return Status.PRIMAL_INFEASIBLE
    ny = np.abs(dy).max()
    if ny > 0 and c @ dy < -eps * ny:
        gd = G @ dy
        neg = np.concatenate([
            sv.vec(_project_psd(-sv.mat(part))[0]) for sv, part in zip(svecs, np.split(gd, splits))
        ])
        if np.abs(neg).max() <= eps * ny:
            return Status.DUAL_INFEASIBLE
    return None


# --- text dump ------------------------------------------------------------------


def dump(program: ConicProgram, stream=None) -> str:
    """Write the program as plain text.

    Format::

        conic-program v1
        vars N
        objective
        <N values>
        eq M
        <i j value> ...          (sparse triplets of A, one per line)
        rhs
        <M values>
        blocks K
        block D NNZ0 NNZ          (per block)
        <r c value> ...           (offset S0 triplets)
        <r c var value> ...       (coefficient S_var triplets)
    """
    out = io.StringIO()
    w = out.write
    n = program.n_vars
    w("conic-program v1\n")
    w(f"vars {n}\n")
    w("objective\n")
    w(" ".join(repr(float(v)) for v in program.objective) + "\n")
    a = sp.coo_matrix(program.eq_matrix)
    w(f"eq {program.eq_matrix.shape[0]} {a.nnz}\n")
    for i, j, v in zip(a.row, a.col, a.data):
        w(f"{i} {j} {float(v)!r}\n")
    w("rhs\n")
    w(" ".join(repr(float(v)) for v in program.eq_rhs) + "\n")
    w(f"blocks {len(program.blocks)}\n")
    for blk in program.blocks:
        off = sp.coo_matrix(blk.offset)
        co = blk.coeffs.tocoo()
        w(f"block {blk.dim} {off.nnz} {co.nnz}\n")
        for i, j, v in zip(off.row, off.col, off.data):
            w(f"{i} {j} {float(v)!r}\n")
        for flat, var, v in zip(co.row, co.col, co.data):
            w(f"{flat // blk.dim} {flat % blk.dim} {var} {float(v)!r}\n")
    text = out.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def load(text: str) -> ConicProgram:
    """Inverse of :func:`dump`."""
    lines = iter(text.splitlines())
    if next(lines).strip() != "conic-program v1":
        raise ValueError("not a conic-program v1 dump")
    n = int(next(lines).split()[1])
    next(lines)
    obj = np.array([float(v) for v in next(lines).split()]) if n else np.zeros(0)
    _, m, nnz = next(lines).split()
    m, nnz = int(m), int(nnz)
    a = np.zeros((m, n))
    for _ in range(nnz):
        i, j, v = next(lines).split()
        a[int(i), int(j)] = float(v)
    next(lines)
    rhs_line = next(lines)
    rhs = np.array([float(v) for v in rhs_line.split()]) if m else np.zeros(0)
    nblocks = int(next(lines).split()[1])
    blocks = []
    for _ in range(nblocks):
        _, d, nnz0, nnz1 = next(lines).split()
        d, nnz0, nnz1 = int(d), int(nnz0), int(nnz1)
        off = np.zeros((d, d))
        for _ in range(nnz0):
            i, j, v = next(lines).split()
            off[int(i), int(j)] = float(v)
        rows, cols, vals = [], [], []
        for _ in range(nnz1):
            i, j, var, v = next(lines).split()
            rows.append(int(i) * d + int(j))
            cols.append(int(var))
            vals.append(float(v))
        coeffs = sp.csc_matrix((vals, (rows, cols)), shape=(d * d, n))
        blocks.append(PsdBlock(d, off, coeffs))
    return ConicProgram(obj, a, rhs, tuple(blocks))
