import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfbounds import model, reference
from cfbounds.cf_ode import (
    SingularLeadingCoefficient,
    build_ode,
    companion,
    derivatives_at_zero,
    j_power,
    moment_boundary,
    reduced_coeffs_at_zero,
    residual,
    residual_coeffs,
)

OU = build_ode(model.ornstein_uhlenbeck())
LOGISTIC = build_ode(model.logistic())
VG = build_ode(model.vg_cubic())


def test_j_power_exact():
    assert [complex(j_power(k)) for k in range(-2, 5)] == [-1, -1j, 1, 1j, -1, -1j, 1]


def test_ou_coefficients():
    # residual -w phi' - w^2 phi
    np.testing.assert_allclose(residual_coeffs(OU, 2.0), [-4.0, -2.0], atol=1e-15)
    w = 0.7
    np.testing.assert_allclose(residual_coeffs(OU, w), [-w * w, -w], atol=1e-15)


def test_logistic_coefficients():
    # j w phi + w phi' + (j 0.1 w + w^2) phi''
    np.testing.assert_allclose(residual_coeffs(LOGISTIC, 1.0), [1j, 1.0, 1 + 0.1j], atol=1e-15)
    w = 2.5
    np.testing.assert_allclose(residual_coeffs(LOGISTIC, w), [1j * w, w, 0.1j * w + w * w], atol=1e-14)


def test_vg_cubic_coefficients():
    # eta(w) phi + 10 w phi' + 5 w phi'''
    for w in (0.5, 1.0, 3.0):
        eta = model.characteristic_exponent(model.vg_cubic().levy, w)
        np.testing.assert_allclose(residual_coeffs(VG, w), [eta, 10 * w, 0, 5 * w], atol=1e-13)


@pytest.mark.parametrize("sys", [OU, LOGISTIC, VG])
def test_coefficients_vanish_at_zero(sys):
    np.testing.assert_array_equal(residual_coeffs(sys, 0.0), np.zeros(sys.order + 1))


def test_residual_coeffs_rejects_nonfinite():
    with pytest.raises(ValueError):
        residual_coeffs(OU, float("inf"))


def _stationarity(sys, mu):
    red = reduced_coeffs_at_zero(sys)
    return complex(red @ derivatives_at_zero(mu))


def test_reduced_coefficients():
    # logistic: 1 + mu1 - 0.1 mu2 = 0
    for mu1, mu2 in ((5.2, 62.0), (1.0, 3.0)):
        assert _stationarity(LOGISTIC, [mu1, mu2]) == pytest.approx(1 + mu1 - 0.1 * mu2)
    # OU: -mu1 = 0
    assert _stationarity(OU, [0.3]) == pytest.approx(-0.3)
    # VG cubic: 10 mu1 - 5 mu3 = 0
    assert _stationarity(VG, [0.2, 1.0, 0.7]) == pytest.approx(10 * 0.2 - 5 * 0.7)


def test_companion_examples():
    p = companion(OU, 1.0).matrix
    np.testing.assert_allclose(p, [[-1.0]])
    with pytest.raises(SingularLeadingCoefficient):
        companion(LOGISTIC, 0.0)
    p = companion(LOGISTIC, 1.0).matrix
    np.testing.assert_allclose(p[0], [0, 1])
    np.testing.assert_allclose(p[1], [-1j / (1 + 0.1j), -1 / (1 + 0.1j)])


@given(st.floats(0.05, 20))
def test_companion_matches_residual(w):
    for sys in (OU, LOGISTIC, VG):
        c = residual_coeffs(sys, w)
        p = companion(sys, w).matrix
        rng = np.random.default_rng(int(w * 1000))
        z = rng.standard_normal(sys.order) + 1j * rng.standard_normal(sys.order)
        zn = p[-1] @ z
        full = np.concatenate([z, [zn]])
        assert abs(c @ full) <= 1e-10 * np.abs(c).max() * (1 + np.abs(full).max())
        if sys.order > 1:
            np.testing.assert_allclose((p @ z)[:-1], z[1:])


@given(st.floats(-30, 30))
def test_coefficient_conjugate_symmetry(w):
    # phi^(l)(-w) = (-1)^l conj(phi^(l)(w)), so the residual at -w is the
    # conjugate of the residual at w when c_l(-w) = (-1)^l conj(c_l(w))
    for sys in (OU, LOGISTIC, VG):
        sign = (-1.0) ** np.arange(sys.order + 1)
        np.testing.assert_allclose(residual_coeffs(sys, -w), sign * np.conj(residual_coeffs(sys, w)),
                                   atol=1e-12)


def test_ou_exact_solution_has_zero_residual():
    w = np.linspace(-10, 10, 401)
    phi = np.exp(-w**2 / 2)
    derivs = np.stack([phi, -w * phi], axis=1)
    assert np.abs(residual(OU, w, derivs)).max() < 1e-12


def test_logistic_closed_form_residual():
    mu1 = reference.logistic_exact_mean()
    cf = reference.logistic_cf(mu1)
    for w in np.linspace(0.1, 10, 12):
        # phi'' from the Bessel ODE reduction: z = 2 sqrt(0.1 - j w)
        h = 1e-4
        d2 = (cf(w + h) - 2 * cf(w) + cf(w - h)) / h**2
        derivs = np.array([cf(w), cf.derivative(w), d2])
        scale = np.abs(residual_coeffs(LOGISTIC, w) * derivs).max()
        assert abs(residual(LOGISTIC, w, derivs)) < 1e-6 * max(scale, 1.0)


def test_moment_boundary():
    np.testing.assert_allclose(moment_boundary([5.2024, 62.024]), [1, 5.2024j])
    np.testing.assert_allclose(moment_boundary([0.0]), [1])
    np.testing.assert_allclose(moment_boundary([0.0, 2.0, 0.0]), [1, 0, -2])
    np.testing.assert_allclose(derivatives_at_zero([0.0, 2.0, 0.0]), [1, 0, -2, 0])
