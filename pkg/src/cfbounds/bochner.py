"""Bochner positive-definiteness tests on evenly spaced frequency samples.

With test points ``w_i = i h`` the Bochner matrix ``M[p, r] = phi((p - r) h)``
is Hermitian Toeplitz and linear in the samples ``phi(k h)``.  The real
embedding ``[[Re M, -Im M], [Im M, Re M]]`` is PSD iff ``M`` is, with every
eigenvalue of ``M`` appearing twice.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


@dataclasses.dataclass(frozen=True)
class HermitianToeplitz:
    generator: np.ndarray

    @property
    def size(self) -> int:
        return self.generator.size

    @property
    def matrix(self) -> np.ndarray:
        t = self.generator
        return sla.toeplitz(t, np.conj(t))


def toeplitz_from_samples(cf, tol: float = 1e-9) -> HermitianToeplitz:
    t = np.asarray(cf, dtype=complex).ravel()
    if t.size == 0 or abs(t[0] - 1) > tol:
        raise ValueError(f"characteristic-function samples must start at phi(0) = 1, got {t[:1]}")
    t = t.copy()
    t[0] = 1.0
    return HermitianToeplitz(t)


def real_embedding(m) -> np.ndarray:
    if isinstance(m, HermitianToeplitz):
        m = m.matrix
    m = np.asarray(m, dtype=complex)
    x, y = m.real, m.imag
    return np.block([[x, -y], [y, x]])


def psd_check(matrix, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether ``matrix`` is PSD to within ``tol`` (scaled by dimension).

    Returns ``(passed, minimum_eigenvalue)``.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dim = a.shape[0]
    threshold = tol * max(1, dim)
    if np.abs(a - a.T).max(initial=0.0) > threshold * max(1.0, np.abs(a).max(initial=0.0)):
        raise ValueError("matrix is not symmetric")
    lo = float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
    return lo >= -threshold, lo


def embedding_operator(q: int) -> sp.csc_matrix:
    """Sparse map from ``(Re t_0, Im t_0, ..., Re t_q, Im t_q)`` to the flattened embedding.

    Column ``2k`` (``2k + 1``) is the row-major flattening of the real
    embedding of the Toeplitz matrix generated by ``t = e_k`` (``t = j e_k``).
    """
    size = q + 1
    dim = 2 * size
    p, r = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    lag = (p - r).ravel()
    pr, rr = p.ravel(), r.ravel()
    k = np.abs(lag)
    sign = np.sign(lag)
    rows, cols, vals = [], [], []

    def put(bi, bj, value, var):
        keep = value != 0
        rows.append(((pr + bi * size) * dim + (rr + bj * size))[keep])
        cols.append(var[keep])
        vals.append(value[keep])

    ones = np.ones_like(lag, dtype=float)
    # Re M = sum_k Re t_k [|p - r| = k] sits in both diagonal blocks
    put(0, 0, ones, 2 * k)
    put(1, 1, ones, 2 * k)
    # Im M = sum_k Im t_k sign(p - r) [|p - r| = k]: +Im M lower-left, -Im M upper-right
    put(1, 0, sign.astype(float), 2 * k + 1)
    put(0, 1, -sign.astype(float), 2 * k + 1)
    return sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim * dim, 2 * size),
    )
