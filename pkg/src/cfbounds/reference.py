"""Closed-form oracles: modified Bessel functions and exact stationary laws.

The Bessel functions of orders 0 and 1 are evaluated by their ascending series.
``K0`` is obtained from the logarithmic series, which cancels heavily for
large ``|z|``; the sums are therefore carried out in extended precision
(mpmath) with the working precision raised until the cancellation is covered.
"""

from __future__ import annotations

import dataclasses
import math

import mpmath
import numpy as np

from .model import PolynomialSde

DOMAIN_RADIUS = 25.0

# logistic model dX = (1 + X - 0.1 X^2) dt + sqrt(2) X dW
_LOGISTIC_Z0 = 2.0 * math.sqrt(0.1)


def _check_domain(z: complex, need_right_half: bool) -> None:
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"Bessel argument must be finite, got {z!r}")
    if abs(z) > DOMAIN_RADIUS:
        raise ValueError(f"|z| = {abs(z):.4g} exceeds the series domain radius {DOMAIN_RADIUS}")
    if need_right_half and not z.real > 0:
        raise ValueError(f"K requires Re(z) > 0, got {z!r}")


def _working_dps(z: complex) -> int:
    # terms grow like exp(|z|) while K decays like exp(-|z|)
    return 20 + int(2 * abs(z) / math.log(10)) + 5


def _i_mp(order: int, z: complex):
    zz = mpmath.mpc(z)
    q = zz * zz / 4
    term = mpmath.mpf(1) if order == 0 else zz / 2
    total = term
    eps = mpmath.mpf(10) ** (-mpmath.mp.dps)
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + order))
        total += term
        if k > abs(q) and abs(term) <= eps * abs(total):
            return total


def _k0_mp(z: complex):
    # K0 = -(log(z/2) + gamma) I0 + sum_k (z^2/4)^k / (k!)^2 H_k
    zz = mpmath.mpc(z)
    q = zz * zz / 4
    term = mpmath.mpf(1)
    i0 = term
    tail = mpmath.mpc(0)
    hk = mpmath.mpf(0)
    eps = mpmath.mpf(10) ** (-mpmath.mp.dps)
    k = 0
    while True:
        k += 1
        term = term * q / (k * k)
        hk += mpmath.mpf(1) / k
        i0 += term
        tail += term * hk
        if k > abs(q) and abs(term) * hk <= eps * abs(i0):
            break
    return -(mpmath.log(zz / 2) + mpmath.euler) * i0 + tail


def bessel_i(order: int, z) -> complex:
    """Modified Bessel function of the first kind, orders 0 and 1, ``|z| <= 25``."""
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")
    z = complex(z)
    _check_domain(z, need_right_half=False)
    with mpmath.workdps(_working_dps(z)):
        return complex(_i_mp(order, z))


def bessel_k(order: int, z) -> complex:
    """Modified Bessel function of the second kind, orders 0 and 1.

    ``K1`` follows from the Wronskian ``K1 I0 + K0 I1 = 1/z``.
    """
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")
    z = complex(z)
    _check_domain(z, need_right_half=True)
    with mpmath.workdps(_working_dps(z)):
        k0 = _k0_mp(z)
        if order == 0:
            return complex(k0)
        zz = mpmath.mpc(z)
        return complex((1 / zz - k0 * _i_mp(1, z)) / _i_mp(0, z))


# --- logistic model -----------------------------------------------------------


def logistic_normalizer() -> float:
    """``2 K0(2 sqrt(0.1))``, the normalizing constant of the exact density."""
    return 2.0 * bessel_k(0, _LOGISTIC_Z0).real


def logistic_exact_density(x):
    """Stationary density ``x^-1 exp(-1/x - 0.1 x) / (2 K0(2 sqrt(0.1)))``, ``x > 0``.

    This is the generalized inverse Gaussian law with ``lambda = 0``,
    ``chi = 2``, ``psi = 0.2``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("logistic density is defined for x > 0 only")
    return np.exp(-1.0 / x - 0.1 * x) / (x * logistic_normalizer())


def logistic_exact_mean() -> float:
    """``sqrt(10) K1(2 sqrt(0.1)) / K0(2 sqrt(0.1))``."""
    z0 = _LOGISTIC_Z0
    return math.sqrt(10.0) * bessel_k(1, z0).real / bessel_k(0, z0).real


def logistic_exact_moment(k: int) -> float:
    """``E[X^k] = 10^(k/2) K_k(z0) / K_0(z0)`` via the upward recurrence of ``K``."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    z0 = _LOGISTIC_Z0
    ks = [bessel_k(0, z0).real, bessel_k(1, z0).real]
    while len(ks) <= k:
        nu = len(ks) - 1
        ks.append(ks[-2] + 2 * nu / z0 * ks[-1])
    return 10.0 ** (k / 2) * ks[k] / ks[0]


def logistic_mode() -> float:
    """Positive root of ``0.1 x^2 + x - 1 = 0``; ``d log p / dx`` vanishes there."""
    return (-1.0 + math.sqrt(1.4)) / 0.2


@dataclasses.dataclass(frozen=True)
class ClosedFormLogisticCf:
    """``phi(w) = c1/sqrt(5) I0(z) + c2/sqrt(5) K0(z)`` with ``z = 2 sqrt(0.1 - j w)``.

    The coefficients enforce ``phi(0) = 1`` and ``phi'(0) = j mu1``.  Valid for
    ``|2 sqrt(0.1 - j w)| <= 25``, i.e. ``|w| <= 156``.
    """

    mu1: float
    c1: complex
    c2: complex
    domain_note: str = "|2 sqrt(0.1 - j w)| <= 25"

    @staticmethod
    def _z(omega: float) -> complex:
        return 2.0 * np.sqrt(complex(0.1, -omega))

    def __call__(self, omega) -> np.ndarray | complex:
        w = np.asarray(omega, dtype=float)
        flat = [self._eval(float(v)) for v in w.ravel()]
        out = np.array(flat, dtype=complex).reshape(w.shape)
        return out[()] if out.ndim == 0 else out

    def _eval(self, omega: float) -> complex:
        z = self._z(omega)
        s5 = math.sqrt(5.0)
        return self.c1 / s5 * bessel_i(0, z) + self.c2 / s5 * bessel_k(0, z)

    def derivative(self, omega: float) -> complex:
        # d/dw I0(z) = I1(z) dz/dw, d/dw K0(z) = -K1(z) dz/dw, dz/dw = -2j / z
        z = self._z(float(omega))
        dz = -2j / z
        s5 = math.sqrt(5.0)
        return (self.c1 * bessel_i(1, z) - self.c2 * bessel_k(1, z)) * dz / s5


def logistic_cf(mu1: float, omega=None):
    """Closed-form logistic characteristic function for a given mean.

    Returns the :class:`ClosedFormLogisticCf` when ``omega`` is None, else its
    values at ``omega``.
    """
    z0 = _LOGISTIC_Z0
    s5 = math.sqrt(5.0)
    # phi'(0) = (c1 I1(z0) - c2 K1(z0)) (-j sqrt(10)) / sqrt(5) = j mu1
    a = np.array([
        [bessel_i(0, z0) / s5, bessel_k(0, z0) / s5],
        [-math.sqrt(2.0) * bessel_i(1, z0), math.sqrt(2.0) * bessel_k(1, z0)],
    ], dtype=complex)
    if abs(np.linalg.det(a)) < 1e-12 * np.abs(a).max() ** 2:
        raise ValueError("coefficient system for the closed-form CF is singular")
    c1, c2 = np.linalg.solve(a, np.array([1.0, mu1], dtype=complex))
    cf = ClosedFormLogisticCf(float(mu1), complex(c1), complex(c2))
    return cf if omega is None else cf(omega)


# --- Ornstein-Uhlenbeck -------------------------------------------------------


def ou_exact_cf(a: float, sigma: float, omega):
    """``exp(-sigma^2 w^2 / (4 a))``: CF of the stationary law of ``dX = -a X dt + sigma dW``."""
    if not a > 0:
        raise ValueError(f"mean-reversion rate must be positive, got {a!r}")
    w = np.asarray(omega, dtype=float)
    out = np.exp(-(sigma**2) * w**2 / (4.0 * a)) + 0j
    return out[()] if out.ndim == 0 else out


def ou_exact_density(a: float, sigma: float, x):
    var = sigma**2 / (2.0 * a)
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x**2 / var) / math.sqrt(2 * math.pi * var)


# --- dispatch -----------------------------------------------------------------


def _match_ou(model: PolynomialSde) -> tuple[float, float] | None:
    if model.levy.kind != "none":
        return None
    f, g = model.drift_coeffs, model.diffusion_sq_coeffs
    if len(f) == 2 and f[0] == 0.0 and f[1] < 0 and len(g) == 1 and g[0] > 0:
        return -f[1], math.sqrt(g[0])
    return None


def _match_logistic(model: PolynomialSde) -> bool:
    return (
        model.levy.kind == "none"
        and model.drift_coeffs == (1.0, 1.0, -0.1)
        and model.diffusion_sq_coeffs == (0.0, 0.0, 2.0)
    )


def exact_density_for(model: PolynomialSde):
    """Closed-form stationary density for recognised models, else ``None``."""
    ou = _match_ou(model)
    if ou is not None:
        return lambda x: ou_exact_density(ou[0], ou[1], x)
    if _match_logistic(model):
        def density(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = logistic_exact_density(x[pos])
            return out
        return density
    return None


def exact_cf_for(model: PolynomialSde):
    """Closed-form characteristic function for recognised models, else ``None``."""
    ou = _match_ou(model)
    if ou is not None:
        return lambda w: ou_exact_cf(ou[0], ou[1], w)
    if _match_logistic(model):
        return logistic_cf(logistic_exact_mean())
    return None
