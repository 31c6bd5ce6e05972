import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbounds.collocation import FrequencyGrid
from cfbounds.inversion import (
    TruncationWarning,
    coarsen,
    default_x_grid,
    invert,
)

GRID = FrequencyGrid(0.25, 40)
W = GRID.test_frequencies
GAUSS = np.exp(-W**2 / 2)


def _normal(x, loc=0.0):
    return np.exp(-((x - loc) ** 2) / 2) / math.sqrt(2 * math.pi)


def test_gaussian_density():
    x = np.linspace(-4, 4, 401)
    est = invert(GAUSS, GRID, x)
    assert est.values[200] == pytest.approx(0.39894, abs=1e-3)
    assert np.abs(est.values - _normal(x)).max() <= 2e-3
    assert est.mass_ok
    assert est.negative_mass < 1e-6
    assert est.imag_residue == 0
    assert est.cutoff == pytest.approx(10.0)


def test_flat_cf_fails_mass_check():
    x = np.linspace(-4, 4, 401)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        est = invert(np.ones(41), GRID, x)
    assert not est.mass_ok
    assert est.negative_mass > 0.05


def test_flat_cf_warns_about_truncation():
    with pytest.warns(TruncationWarning):
        invert(np.ones(41), GRID, [0.0])


def test_window_and_input_validation():
    with pytest.raises(ValueError):
        invert(GAUSS, GRID, [math.pi / 0.25 + 0.1])
    with pytest.raises(ValueError):
        invert(GAUSS * 0.5, GRID, [0.0])
    with pytest.raises(ValueError):
        invert(GAUSS[:10], GRID, [0.0])
    with pytest.raises(ValueError):
        default_x_grid(0.25, lo=-20.0)


def test_accepts_bare_spacing():
    x = np.linspace(-2, 2, 11)
    np.testing.assert_array_equal(invert(GAUSS, 0.25, x).values, invert(GAUSS, GRID, x).values)


@settings(max_examples=20)
@given(st.floats(0.05, 0.95), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_linearity(weight, s1, s2):
    x = np.linspace(-5, 5, 51)
    a = np.exp(-(s1 * W) ** 2 / 2)
    b = np.exp(-(s2 * W) ** 2 / 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        mix = invert(weight * a + (1 - weight) * b, GRID, x).values
        sep = weight * invert(a, GRID, x).values + (1 - weight) * invert(b, GRID, x).values
    np.testing.assert_allclose(mix, sep, atol=1e-12)


@pytest.mark.parametrize("shift", [-1.5, 0.4, 2.0])
def test_shift(shift):
    x = np.linspace(-4, 4, 161)
    shifted = invert(GAUSS * np.exp(1j * W * shift), GRID, x).values
    assert np.abs(shifted - _normal(x, shift)).max() <= 2e-3


def test_imaginary_residue_reported():
    phi = GAUSS.astype(complex)
    phi[0] = 1 + 1e-7j
    est = invert(phi, GRID, [0.0])
    assert est.imag_residue == pytest.approx(0.25e-7 / (2 * math.pi))


def test_coarsen_keeps_cutoff_and_resolves_extent():
    fine = np.exp(-(np.arange(161) * 0.0625) ** 2 / 2)
    phi, h = coarsen(fine, 0.0625, 4.0)
    assert (phi.size - 1) * h == pytest.approx(160 * 0.0625)
    assert math.pi / h >= 4.0
    assert h == pytest.approx(0.625)  # stride 10, the coarsest divisor of 160 that fits
    np.testing.assert_array_equal(coarsen(fine, 0.0625, 100.0)[0], fine)


def test_csv_output():
    x = np.linspace(-1, 1, 3)
    est = invert(GAUSS, GRID, x)
    buf = io.StringIO()
    text = est.to_csv(buf, {"exact": _normal(x)})
    lines = text.splitlines()
    assert lines[0] == "x,density,exact"
    assert len(lines) == 4
    assert float(lines[2].split(",")[1]) == est.values[1]
    assert buf.getvalue() == text
