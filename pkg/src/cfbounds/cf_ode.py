"""Stationary characteristic-function ODE of a polynomial SDE.

For ``f(x) = sum a_f[l] x^l`` and ``g(x)^2 = sum a_g[l] x^l`` the stationary
characteristic function satisfies the linear ODE

    sum_l c_l(w) phi^(l)(w) = 0,
    c_l(w) = j w a_f[l] j^-l + (j w)^2 / 2 a_g[l] j^-l + eta(w) [l == 0].

Every ``c_l`` vanishes at ``w = 0``; dividing by ``j w`` and letting ``w -> 0``
gives the regular condition ``sum_l a_f[l] j^-l phi^(l)(0) = 0``, i.e.
``E[f(X)] = 0``.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import PolynomialSde, characteristic_exponent, order


class SingularLeadingCoefficient(ValueError):
    """The leading coefficient ``c_n(w)`` is numerically zero."""


_J_POW = np.array([1, 1j, -1, -1j])


def j_power(l):
    """``j**l`` for integer ``l`` (negative allowed), exact."""
    return _J_POW[np.mod(l, 4)]


@dataclasses.dataclass(frozen=True)
class CfOdeSystem:
    model: PolynomialSde
    order: int
    drift: np.ndarray
    diffusion_sq: np.ndarray

    def coeffs(self, omega) -> np.ndarray:
        """Residual coefficients at one or many frequencies.

        Returns shape ``(n + 1,)`` for scalar ``omega`` and ``(len(omega), n + 1)``
        otherwise.
        """
        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        jinv = j_power(-np.arange(self.order + 1))
        jw = 1j * w[:, None]
        c = jw * (self.drift * jinv) + 0.5 * jw**2 * (self.diffusion_sq * jinv)
        c[:, 0] += characteristic_exponent(self.model.levy, w)
        return c[0] if scalar else c


@dataclasses.dataclass(frozen=True)
class CompanionSystem:
    dimension: int
    matrix: np.ndarray


def build_ode(model: PolynomialSde) -> CfOdeSystem:
    n = order(model)
    f, g = model.padded(n)
    return CfOdeSystem(model, n, f, g)


def residual_coeffs(sys: CfOdeSystem, omega: float) -> np.ndarray:
    if not np.isfinite(omega):
        raise ValueError("frequency must be finite")
    return sys.coeffs(float(omega))


def residual(sys: CfOdeSystem, omega, derivatives) -> np.ndarray:
    """``sum_l c_l(w) phi^(l)(w)`` given ``derivatives[..., l] = phi^(l)(w)``."""
    return np.sum(sys.coeffs(omega) * np.asarray(derivatives), axis=-1)


def reduced_coeffs_at_zero(sys: CfOdeSystem) -> np.ndarray:
    """Coefficients of the residual divided by ``j w`` in the limit ``w -> 0``."""
    return sys.drift * j_power(-np.arange(sys.order + 1))


def companion(sys: CfOdeSystem, omega: float) -> CompanionSystem:
    """First-order form ``z' = P(w) z`` with ``z = (phi, ..., phi^(n-1))``."""
    n = sys.order
    c = sys.coeffs(float(omega))
    scale = 1.0 + abs(omega) ** (n + 2)
    if abs(c[n]) < 1e-12 * scale:
        raise SingularLeadingCoefficient(
            f"leading coefficient c_{n}({omega}) = {c[n]} is numerically zero"
        )
    p = np.zeros((n, n), dtype=complex)
    p[np.arange(n - 1), np.arange(1, n)] = 1.0
    p[n - 1] = -c[:n] / c[n]
    return CompanionSystem(n, p)


def moment_boundary(mu) -> np.ndarray:
    """Initial state ``z(0) = (1, j mu_1, ..., j^(len-1) mu_(len-1))``.

    ``mu`` holds ``mu_1, mu_2, ...``; the output has the same length, with the
    normalization ``phi(0) = 1`` in front and the last moment dropped.  Use
    :func:`derivatives_at_zero` for the full chain including ``phi^(n)(0)``.
    """
    mu = np.asarray(mu, dtype=float)
    full = derivatives_at_zero(mu)
    return full[: mu.size]


def derivatives_at_zero(mu) -> np.ndarray:
    """``(phi(0), phi'(0), ...) = (1, j mu_1, j^2 mu_2, ...)``."""
    mu = np.concatenate([[1.0], np.asarray(mu, dtype=float)])
    return j_power(np.arange(mu.size)) * mu
