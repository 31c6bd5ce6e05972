import math

import numpy as np
import pytest

from cfbounds import reference
from cfbounds.bounds import (
    BochnerProgram,
    InfeasiblePinning,
    MomentBounds,
    MomentInterval,
    all_moment_bounds,
    estimate_cf,
    generator_row,
    lift_moments,
    lift_system,
    moment_bounds,
    refine,
)
from cfbounds.collocation import FrequencyGrid
from cfbounds.model import logistic, ornstein_uhlenbeck, vg_cubic
from cfbounds.sdp import Settings

LOGISTIC_GRID = FrequencyGrid(1.0, 30, 1024)
OU_GRID = FrequencyGrid(0.25, 40, 4)


@pytest.fixture(scope="module")
def logistic_bounds():
    return all_moment_bounds(logistic(), LOGISTIC_GRID)


@pytest.fixture(scope="module")
def ou_bounds():
    return all_moment_bounds(ornstein_uhlenbeck(), OU_GRID)


def test_logistic_mean_interval(logistic_bounds):
    iv = logistic_bounds[1]
    assert iv.ok
    assert 5.19 <= iv.lower <= iv.upper <= 5.22
    assert iv.width <= 0.02
    assert iv.contains(reference.logistic_exact_mean())


def test_logistic_second_moment_follows_stationarity(logistic_bounds):
    iv1, iv2 = logistic_bounds[1], logistic_bounds[2]
    np.testing.assert_allclose([iv2.lower, iv2.upper], [10 * (1 + iv1.lower), 10 * (1 + iv1.upper)],
                               rtol=1e-6)


def test_ou_mean_is_pinned(ou_bounds):
    iv = ou_bounds[1]
    assert iv.ok
    assert iv.contains(0.0, slack=1e-12)
    assert iv.width < 1e-4


def test_ou_mean_on_coarser_grid():
    iv = moment_bounds(ornstein_uhlenbeck(), FrequencyGrid(0.5, 20), 1)
    assert iv.ok and iv.contains(0.0, slack=1e-12) and iv.width < 1e-4


def test_interval_serialization(logistic_bounds):
    d = logistic_bounds.to_dict()
    assert [b["order"] for b in d["bounds"]] == [1, 2]
    one = d["bounds"][0]
    assert one["lower"] <= one["upper"]
    assert one["lower_solver"]["status"] == "optimal"
    assert logistic_bounds.midpoints()[1] == pytest.approx(logistic_bounds[1].midpoint)


def test_unbounded_direction_gives_infinite_endpoint():
    iv = MomentInterval(1, -math.inf, 2.0)
    assert iv.width == math.inf
    assert iv.to_dict()["lower"] is None


def test_refinement_is_nested():
    settings = Settings()
    slack = 10 * settings.tol_gap
    steps = refine(logistic(), 1, [5, 10, 20], 1.0, substeps=256)
    for (_, coarse), (_, fine) in zip(steps, steps[1:]):
        assert fine.lower >= coarse.lower - slack * (1 + abs(coarse.lower))
        assert fine.upper <= coarse.upper + slack * (1 + abs(coarse.upper))


def test_refine_rejects_non_increasing_schedule():
    with pytest.raises(ValueError):
        refine(logistic(), 1, [10, 10], 1.0)


def test_program_shape():
    prog = BochnerProgram(logistic(), FrequencyGrid(1.0, 4, 8))
    assert prog.n == 2
    assert prog.n_vars == 2 + 2 * 5
    a, b, block = prog.constraints
    assert a.shape[1] == prog.n_vars and a.shape[0] == b.size
    assert block.dim == 10


def test_estimate_cf_logistic_midpoint(logistic_bounds):
    est = estimate_cf(logistic(), LOGISTIC_GRID, bounds=logistic_bounds)
    assert est.phi[0] == 1
    exact = reference.logistic_cf(est.moments[0], est.test_omega)
    assert np.abs(est.test_phi - exact).max() < 1e-2
    ok, lo = est.psd_check(1e-6)
    assert ok


def test_estimate_cf_ou_against_gaussian():
    est = estimate_cf(ornstein_uhlenbeck(), OU_GRID, moments={1: 0.0})
    exact = np.exp(-est.omega**2 / 2)
    assert est.phi[0] == 1
    assert np.abs(est.phi - exact).max() < 2e-3
    assert est.psd_check()[0]


def test_estimate_cf_fills_free_moments():
    est = estimate_cf(logistic(), FrequencyGrid(1.0, 5, 64), moments=[5.2, math.nan])
    assert est.moments[1] == pytest.approx(62.0)


def test_inconsistent_pinning_raises():
    with pytest.raises(InfeasiblePinning):
        estimate_cf(logistic(), FrequencyGrid(1.0, 5, 64), moments={1: 5.2, 2: 70.0})


def test_generator_rows():
    # OU: E[L x^2] = -2 mu_2 + 2
    row = generator_row(ornstein_uhlenbeck(), 2)
    assert set(row) == {0, 2}
    assert row[2] == pytest.approx(-2.0) and row[0] == pytest.approx(2.0)
    # variance-gamma cubic, m = 1: 10 mu_1 - 5 mu_3 (jump moment 1 absent)
    assert generator_row(vg_cubic(), 1) == pytest.approx({1: 10.0, 3: -5.0})
    # m = 2 picks up E[J^2] = sigma^2 a / b = 1
    row = generator_row(vg_cubic(), 2)
    assert row[2] == pytest.approx(20.0) and row[4] == pytest.approx(-10.0)
    assert row[0] == pytest.approx(1.0)


def test_lift_system_cutoff_validation():
    with pytest.raises(ValueError):
        lift_system(vg_cubic(), 2)
    sys = lift_system(logistic(), 4)
    assert sys.matrix.shape == (3, 4)


def test_lift_ou_second_moment(ou_bounds):
    lifted = lift_moments(ornstein_uhlenbeck(), 2, ou_bounds)
    assert lifted[2].lower == pytest.approx(1.0, abs=1e-9)
    assert lifted[2].upper == pytest.approx(1.0, abs=1e-9)


def test_lift_logistic_matches_stationarity(logistic_bounds):
    lifted = lift_moments(logistic(), 2, MomentBounds({1: logistic_bounds[1]}, LOGISTIC_GRID, ""))
    iv1 = logistic_bounds[1]
    assert lifted[2].lower == pytest.approx(10 * (1 + iv1.lower), rel=1e-9)
    assert lifted[2].upper == pytest.approx(10 * (1 + iv1.upper), rel=1e-9)
    # the lifted box for order 2 intersects the direct SDP bound
    direct = logistic_bounds[2]
    assert lifted[2].lower <= direct.upper and direct.lower <= lifted[2].upper


def test_lift_unbounded_without_box():
    lifted = lift_moments(logistic(), 3, MomentBounds({}, LOGISTIC_GRID, ""))
    assert math.isinf(lifted[1].lower) and math.isinf(lifted[1].upper)


def test_bounds_are_reproducible():
    grid = FrequencyGrid(1.0, 10, 256)
    a = moment_bounds(logistic(), grid, 1)
    b = moment_bounds(logistic(), grid, 1)
    assert (a.lower, a.upper) == (b.lower, b.upper)


def test_ou_refinement_contains_zero():
    steps = refine(ornstein_uhlenbeck(), 1, [4, 8, 16], 0.5)
    assert all(iv.contains(0.0, slack=1e-12) for _, iv in steps)


def test_single_step_schedule():
    (step,) = refine(ornstein_uhlenbeck(), 1, [10], 0.5)
    assert step[0] == 10 and step[1].ok


def test_lift_vg_third_moment_from_symmetric_mean():
    base = MomentBounds({1: MomentInterval(1, 0.0, 0.0)}, FrequencyGrid(1.0, 80), "")
    lifted = lift_moments(vg_cubic(), 3, base)
    assert lifted[3].lower == pytest.approx(0.0, abs=1e-9)
    assert lifted[3].upper == pytest.approx(0.0, abs=1e-9)
