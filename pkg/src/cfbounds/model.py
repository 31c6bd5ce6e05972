"""Polynomial SDE models driven by Brownian and Lévy noise.

A model is ``dX = f(X) dt + g(X) dW + dL`` where ``f`` and ``g**2`` are
polynomials (stored by ascending coefficients) and ``L`` is a compensated Lévy
process given by one of the :class:`LevyComponent` variants.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from typing import Union

import numpy as np


@dataclasses.dataclass(frozen=True)
class NoLevy:
    kind = "none"

    def params(self) -> dict:
        return {}


@dataclasses.dataclass(frozen=True)
class CompensatedGamma:
    """Gamma subordinator with Lévy measure ``a y^-1 exp(-b y) dy`` minus its drift ``a t / b``."""

    a: float
    b: float
    kind = "compensated_gamma"

    def __post_init__(self):
        _require_positive(self, a=self.a, b=self.b)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}


@dataclasses.dataclass(frozen=True)
class VarianceGamma:
    """``sigma W(tau(t))`` with ``tau`` a gamma process of parameters ``a, b``."""

    a: float
    b: float
    sigma: float
    kind = "variance_gamma"

    def __post_init__(self):
        _require_positive(self, a=self.a, b=self.b, sigma=self.sigma)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b, "sigma": self.sigma}


LevyComponent = Union[NoLevy, CompensatedGamma, VarianceGamma]


def _require_positive(obj, **kw):
    for name, v in kw.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"Lévy parameter {name} must be positive and finite, got {v!r}")
        object.__setattr__(obj, name, float(v))


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    if not all(math.isfinite(v) for v in c):
        raise ValueError("coefficients must be finite")
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclasses.dataclass(frozen=True)
class PolynomialSde:
    """Scalar Itô-Lévy SDE with polynomial drift and squared diffusion.

    Parameters
    ----------
    drift_coeffs : sequence of float
        ``a_f[l]`` multiplying ``x**l`` in the drift.
    diffusion_sq_coeffs : sequence of float
        ``a_g[l]`` multiplying ``x**l`` in ``g(x)**2``.
    levy : LevyComponent
        Jump part; defaults to no jumps.

    Trailing zero coefficients are dropped so that degrees are exact.
    """

    drift_coeffs: tuple[float, ...]
    diffusion_sq_coeffs: tuple[float, ...] = ()
    levy: LevyComponent = NoLevy()

    def __post_init__(self):
        object.__setattr__(self, "drift_coeffs", _trim(self.drift_coeffs))
        object.__setattr__(self, "diffusion_sq_coeffs", _trim(self.diffusion_sq_coeffs))
        if not self.drift_coeffs and not self.diffusion_sq_coeffs:
            raise ValueError("at least one of drift or diffusion must be nonzero")
        if order(self) < 1:
            raise ValueError("model order max(deg f, deg g^2) must be at least 1")

    @property
    def drift_degree(self) -> int:
        return len(self.drift_coeffs) - 1

    @property
    def diffusion_degree(self) -> int:
        return len(self.diffusion_sq_coeffs) - 1

    def drift(self, x):
        return _polyval(self.drift_coeffs, x)

    def diffusion_sq(self, x):
        return _polyval(self.diffusion_sq_coeffs, x)

    def padded(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Drift and squared-diffusion coefficients zero-padded to length ``n + 1``."""
        n = order(self) if n is None else n
        f = np.zeros(n + 1)
        g = np.zeros(n + 1)
        f[: len(self.drift_coeffs)] = self.drift_coeffs
        g[: len(self.diffusion_sq_coeffs)] = self.diffusion_sq_coeffs
        return f, g

    def to_dict(self) -> dict:
        return {
            "drift": list(self.drift_coeffs),
            "diffusion_sq": list(self.diffusion_sq_coeffs),
            "levy": {"kind": self.levy.kind, **self.levy.params()},
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _polyval(coeffs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for a in reversed(coeffs):
        out = out * x + a
    return out


def order(model: PolynomialSde) -> int:
    """Order ``max(deg f, deg g^2)`` of the stationary characteristic-function ODE."""
    return max(model.drift_degree, model.diffusion_degree)


def characteristic_exponent(levy: LevyComponent, omega):
    """Characteristic exponent ``eta(omega)`` of the compensated jump process.

    ``E[exp(j omega L(t))] = exp(t eta(omega))``.  Accepts scalars or arrays.
    """
    w = np.asarray(omega, dtype=float)
    if isinstance(levy, NoLevy):
        out = np.zeros(w.shape, dtype=complex)
    elif isinstance(levy, CompensatedGamma):
        out = -levy.a * np.log(1 - 1j * w / levy.b) - 1j * w * levy.a / levy.b
    elif isinstance(levy, VarianceGamma):
        out = -levy.a * np.log1p((levy.sigma * w) ** 2 / (2 * levy.b)) + 0j
    else:
        raise TypeError(f"unknown Lévy component {levy!r}")
    return out[()] if out.ndim == 0 else out


def jump_moment(levy: LevyComponent, k: int) -> float:
    """``int y**k nu(dy)`` for the Lévy measure ``nu``, ``k >= 2``."""
    if k < 2 or int(k) != k:
        raise ValueError(f"jump moments are defined for integer k >= 2, got {k!r}")
    k = int(k)
    if isinstance(levy, NoLevy):
        return 0.0
    if isinstance(levy, CompensatedGamma):
        return levy.a * math.factorial(k - 1) / levy.b**k
    if isinstance(levy, VarianceGamma):
        if k % 2:
            return 0.0
        m = k // 2
        # Taylor coefficients of -a log(1 + c w^2), c = sigma^2 / (2 b).
        c = levy.sigma**2 / (2 * levy.b)
        return levy.a * math.factorial(k) * c**m / m
    raise TypeError(f"unknown Lévy component {levy!r}")


def levy_from_dict(d: dict | None) -> LevyComponent:
    if not d:
        return NoLevy()
    d = dict(d)
    kind = d.pop("kind", "none")
    try:
        if kind == "none":
            if d:
                raise TypeError(f"unexpected keys {sorted(d)}")
            return NoLevy()
        if kind == "compensated_gamma":
            return CompensatedGamma(**{k: float(v) for k, v in d.items()})
        if kind == "variance_gamma":
            return VarianceGamma(**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ValueError(f"bad parameters for Lévy kind {kind!r}: {exc}") from None
    raise ValueError(f"unknown Lévy kind {kind!r}")


def from_dict(d: dict) -> PolynomialSde:
    return PolynomialSde(
        tuple(d.get("drift", ())),
        tuple(d.get("diffusion_sq", ())),
        levy_from_dict(d.get("levy")),
    )


# Models used throughout the examples and tests.

def logistic() -> PolynomialSde:
    """``dX = (1 + X - 0.1 X^2) dt + sqrt(2) X dW``."""
    return PolynomialSde((1.0, 1.0, -0.1), (0.0, 0.0, 2.0))


def ornstein_uhlenbeck(rate: float = 1.0, sigma: float | None = None) -> PolynomialSde:
    """``dX = -rate X dt + sigma dW``; ``sigma`` defaults to ``sqrt(2 rate)``, a unit-variance law."""
    sigma_sq = 2.0 * rate if sigma is None else sigma**2
    return PolynomialSde((0.0, -rate), (sigma_sq,))


def vg_cubic(a: float = 5.0, b: float = 5.0, sigma: float = 1.0) -> PolynomialSde:
    """``dX = (10 X - 5 X^3) dt + dL`` with ``L`` variance-gamma."""
    return PolynomialSde((0.0, 10.0, 0.0, -5.0), (), VarianceGamma(a, b, sigma))
