import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbounds import model as m


def test_order_of_reference_models():
    assert m.order(m.logistic()) == 2
    assert m.order(m.ornstein_uhlenbeck()) == 1
    assert m.order(m.vg_cubic()) == 3


def test_trailing_zeros_trimmed():
    sde = m.PolynomialSde((1.0, -1.0, 0.0, 0.0), (2.0, 0.0))
    assert sde.drift_coeffs == (1.0, -1.0)
    assert sde.diffusion_sq_coeffs == (2.0,)
    assert m.order(sde) == 1


@pytest.mark.parametrize("drift, diff", [((), ()), ((1.0,), ()), ((3.0,), (1.0,)), ((float("nan"), 1.0), ())])
def test_invalid_models_rejected(drift, diff):
    with pytest.raises(ValueError):
        m.PolynomialSde(drift, diff)


@pytest.mark.parametrize("cls, kw", [
    (m.CompensatedGamma, {"a": 0.0, "b": 1.0}),
    (m.CompensatedGamma, {"a": 1.0, "b": -1.0}),
    (m.VarianceGamma, {"a": 1.0, "b": 1.0, "sigma": 0.0}),
    (m.VarianceGamma, {"a": math.inf, "b": 1.0, "sigma": 1.0}),
])
def test_levy_parameters_validated(cls, kw):
    with pytest.raises(ValueError):
        cls(**kw)


def test_exponent_examples():
    vg = m.VarianceGamma(1.0, 2.0, 1.0)
    assert m.characteristic_exponent(vg, 0.0) == 0
    # independent high-precision evaluation
    ref = complex(-mpmath.log(1 + mpmath.mpf(2) ** 2 / 4))
    assert m.characteristic_exponent(vg, 2.0) == pytest.approx(ref, abs=1e-14)
    assert m.characteristic_exponent(vg, 2.0) == pytest.approx(-math.log(2), abs=1e-14)

    cg = m.CompensatedGamma(1.0, 1.0)
    ref = complex(-mpmath.log(1 - 1j) - 1j)
    got = m.characteristic_exponent(cg, 1.0)
    assert got == pytest.approx(ref, abs=1e-14)
    assert got.real == pytest.approx(-0.346574, abs=1e-6)
    assert got.imag == pytest.approx(-0.214602, abs=1e-6)

    assert m.characteristic_exponent(m.NoLevy(), 3.0) == 0


def test_exponent_vectorized():
    w = np.linspace(-5, 5, 11)
    vg = m.VarianceGamma(2.0, 3.0, 0.7)
    out = m.characteristic_exponent(vg, w)
    assert out.shape == (11,)
    np.testing.assert_allclose(out, [m.characteristic_exponent(vg, float(v)) for v in w])


def test_jump_moment_examples():
    vg = m.VarianceGamma(1.0, 2.0, 1.0)
    assert m.jump_moment(vg, 2) == pytest.approx(0.5)
    assert m.jump_moment(vg, 3) == 0.0
    assert m.jump_moment(vg, 4) == pytest.approx(3 * 1.0 * 1.0 / 2.0**2)
    # 2 * Gamma(3) by independent quadrature
    quad = float(mpmath.quad(lambda y: y**3 * 2 * mpmath.exp(-y) / y, [0, mpmath.inf]))
    assert m.jump_moment(m.CompensatedGamma(2.0, 1.0), 3) == pytest.approx(quad, rel=1e-12)
    assert m.jump_moment(m.CompensatedGamma(2.0, 1.0), 3) == pytest.approx(4.0)
    assert m.jump_moment(m.NoLevy(), 5) == 0.0
    for bad in (0, 1, 2.5):
        with pytest.raises(ValueError):
            m.jump_moment(vg, bad)


levys = st.one_of(
    st.just(m.NoLevy()),
    st.builds(m.CompensatedGamma, st.floats(0.1, 10), st.floats(0.1, 10)),
    st.builds(m.VarianceGamma, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 3)),
)


@given(levys, st.floats(-50, 50))
def test_exponent_conjugate_symmetry(levy, w):
    a = m.characteristic_exponent(levy, -w)
    b = np.conj(m.characteristic_exponent(levy, w))
    assert abs(a - b) <= 1e-12 * (1 + abs(b))


@given(st.builds(m.VarianceGamma, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 3)), st.floats(-100, 100))
def test_vg_exponent_real(levy, w):
    assert m.characteristic_exponent(levy, w).imag == 0.0


@settings(max_examples=30)
@given(st.one_of(
    st.builds(m.CompensatedGamma, st.floats(0.2, 5), st.floats(0.5, 5)),
    st.builds(m.VarianceGamma, st.floats(0.2, 5), st.floats(0.5, 5), st.floats(0.2, 2)),
), st.sampled_from([2, 3, 4]))
def test_jump_moments_match_exponent_derivatives(levy, k):
    # m_k = (-j)^k eta^(k)(0), derivative taken by mpmath on the analytic exponent
    if isinstance(levy, m.CompensatedGamma):
        eta = lambda w: -levy.a * mpmath.log(1 - 1j * w / levy.b) - 1j * w * levy.a / levy.b
    else:
        eta = lambda w: -levy.a * mpmath.log(1 + (levy.sigma * w) ** 2 / (2 * levy.b))
    with mpmath.workdps(30):
        d = complex(mpmath.diff(eta, 0, k))
    expected = ((-1j) ** k * d).real
    got = m.jump_moment(levy, k)
    assert got == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_dict_roundtrip_and_fingerprint():
    for sde in (m.logistic(), m.ornstein_uhlenbeck(), m.vg_cubic(), m.PolynomialSde((0, -2), (1,), m.CompensatedGamma(1, 2))):
        back = m.from_dict(sde.to_dict())
        assert back == sde
        assert back.fingerprint() == sde.fingerprint()
    assert m.logistic().fingerprint() != m.vg_cubic().fingerprint()
    with pytest.raises(ValueError):
        m.levy_from_dict({"kind": "stable", "alpha": 1.5})
    with pytest.raises(ValueError):
        m.levy_from_dict({"kind": "compensated_gamma", "a": 1.0})


def test_polynomial_evaluation():
    sde = m.logistic()
    x = np.array([0.5, 2.0, 7.0])
    np.testing.assert_allclose(sde.drift(x), 1 + x - 0.1 * x**2)
    np.testing.assert_allclose(sde.diffusion_sq(x), 2 * x**2)
    f, g = sde.padded(3)
    np.testing.assert_array_equal(f, [1.0, 1.0, -0.1, 0.0])
    np.testing.assert_array_equal(g, [0.0, 0.0, 2.0, 0.0])
