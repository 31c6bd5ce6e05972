import io

import numpy as np
import pytest

from cfbounds import sdp


def _two_by_two(objective, offset, coef):
    blk = sdp.PsdBlock.from_matrices(offset, [coef])
    return sdp.ConicProgram.build(objective, blocks=[blk])


MIN_X = _two_by_two([1.0], [[0, 1], [1, 0]], [[1, 0], [0, 1]])        # min x, [[x,1],[1,x]] >= 0
MAX_T = _two_by_two([-1.0], [[1, 0], [0, 1]], [[0, 1], [1, 0]])       # max t, [[1,t],[t,1]] >= 0


@pytest.mark.parametrize("program, expected", [(MIN_X, 1.0), (MAX_T, 1.0)])
def test_analytic_two_by_two(program, expected):
    sol = sdp.solve(program)
    assert sol.status is sdp.Status.OPTIMAL
    assert abs(sol.x[0] - expected) <= 1e-6
    assert sol.gap <= 1e-7
    assert sol.min_eigenvalue >= -1e-8
    assert sol.primal_residual <= 1e-8 * 3 and sol.dual_residual <= 1e-8 * 3


def test_inconsistent_equalities():
    prog = sdp.ConicProgram.build([0.0], [[1.0], [1.0]], [1.0, 2.0])
    sol = sdp.solve(prog)
    assert sol.status is sdp.Status.PRIMAL_INFEASIBLE
    assert sol.certificate is not None


def test_infeasible_lmi():
    # x = -2 forced, [[x, 0], [0, 1]] >= 0 impossible
    blk = sdp.PsdBlock.from_matrices([[0, 0], [0, 1]], [[[1, 0], [0, 0]], [[0, 0], [0, 0]]])
    prog = sdp.ConicProgram.build([0.0, 1.0], [[1.0, 0.0]], [-2.0], [blk])
    sol = sdp.solve(prog)
    assert sol.status is sdp.Status.PRIMAL_INFEASIBLE


def test_infeasible_lmi_without_equalities():
    # [[-1 - y^2 ...]] style: offset -I plus y * [[0,1],[1,0]] is never PSD
    blk = sdp.PsdBlock.from_matrices(-np.eye(2), [[[0, 1], [1, 0]]])
    sol = sdp.solve(sdp.ConicProgram.build([1.0], blocks=[blk]))
    assert sol.status is sdp.Status.PRIMAL_INFEASIBLE
    assert sol.iterations >= 1000


def test_unbounded_program():
    # min -x with [[x, 0], [0, 1]] >= 0
    blk = sdp.PsdBlock.from_matrices([[0, 0], [0, 1]], [[[1, 0], [0, 0]]])
    sol = sdp.solve(sdp.ConicProgram.build([-1.0], blocks=[blk]))
    assert sol.status is sdp.Status.DUAL_INFEASIBLE
    assert sol.certificate[0] > 0


def test_equality_and_psd_feasibility_reported():
    # min x1 + x2, x1 - x2 = 0, [[x1, 1], [1, x2]] >= 0  ->  x1 = x2 = 1
    blk = sdp.PsdBlock.from_matrices([[0, 1], [1, 0]], [[[1, 0], [0, 0]], [[0, 0], [0, 1]]])
    a = np.array([[1.0, -1.0], [2.0, -2.0]])  # redundant row
    b = np.zeros(2)
    prog = sdp.ConicProgram.build([1.0, 1.0], a, b, [blk])
    sol = sdp.solve(prog)
    assert sol.ok
    np.testing.assert_allclose(sol.x, [1, 1], atol=1e-6)
    assert np.abs(a @ sol.x - b).max() <= 1e-8 * (1 + np.abs(b).max())
    assert np.linalg.eigvalsh(blk.evaluate(sol.x)).min() >= -1e-8


def test_determinism():
    runs = [sdp.solve(MIN_X) for _ in range(3)]
    for r in runs[1:]:
        np.testing.assert_array_equal(r.x, runs[0].x)
        assert r.iterations == runs[0].iterations


@pytest.mark.parametrize("scale", [1e-3, 7.0, 1e4])
def test_objective_scaling_invariance(scale):
    base = sdp.solve(MAX_T)
    prog = sdp.ConicProgram.build(MAX_T.objective * scale, blocks=MAX_T.blocks)
    sol = sdp.solve(prog)
    assert sol.ok
    assert abs(sol.x[0] - base.x[0]) <= 10 * 1e-8 * 100


def test_max_iterations_status():
    sol = sdp.solve(MIN_X, max_iter=5)
    assert sol.status is sdp.Status.MAX_ITERATIONS
    assert not sol.ok


def test_no_free_directions_is_a_psd_check():
    blk = sdp.PsdBlock.from_matrices([[1, 0], [0, 1]], [[[1, 0], [0, -1]]])
    good = sdp.solve(sdp.ConicProgram.build([1.0], [[1.0]], [0.5], [blk]))
    bad = sdp.solve(sdp.ConicProgram.build([1.0], [[1.0]], [2.0], [blk]))
    assert good.status is sdp.Status.OPTIMAL and good.x[0] == pytest.approx(0.5)
    assert bad.status is sdp.Status.PRIMAL_INFEASIBLE


def test_construction_validation():
    with pytest.raises(ValueError):
        sdp.ConicProgram.build([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        sdp.ConicProgram.build([1.0], [[1.0]], [1.0, 2.0])
    with pytest.raises(ValueError):
        sdp.PsdBlock.from_matrices(np.eye(2), [[[0, 1], [0, 0]]]).__class__  # fine on its own
        sdp.ConicProgram.build([1.0], blocks=[sdp.PsdBlock.from_matrices(np.eye(2), [[[0, 1], [0, 0]]])])


def test_dump_roundtrip():
    blk = sdp.PsdBlock.from_matrices([[0, 1], [1, 0]], [[[1, 0], [0, 0]], [[0, 0], [0, 1]]])
    prog = sdp.ConicProgram.build([1.0, 1.0], [[1.0, -1.0]], [0.0], [blk])
    buf = io.StringIO()
    text = sdp.dump(prog, buf)
    assert buf.getvalue() == text
    assert text.startswith("conic-program v1\n")
    back = sdp.load(text)
    np.testing.assert_array_equal(back.objective, prog.objective)
    np.testing.assert_array_equal(back.eq_matrix, prog.eq_matrix)
    np.testing.assert_array_equal(back.blocks[0].coeffs.toarray(), prog.blocks[0].coeffs.toarray())
    np.testing.assert_array_equal(sdp.solve(back).x, sdp.solve(prog).x)
    with pytest.raises(ValueError):
        sdp.load("something else\n")
