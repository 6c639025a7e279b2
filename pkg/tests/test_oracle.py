import numpy as np
import pytest

from probclone.errors import GridTooLarge
from probclone.feasibility import check
from probclone.optimize import Certificate, identify
from probclone.oracle import GridSpec, feasibility_grid, grid_optimum, region_census
from probclone.problem import CloningProblem, StateSet

from conftest import Q_SYMMETRIC, counterexample_states, random_problem


def test_grid_spec():
    spec = GridSpec(0.1, 2)
    np.testing.assert_allclose(spec.axis, np.arange(11) / 10, atol=1e-15)
    assert spec.axis[0] == 0.0 and spec.axis[-1] == 1.0
    with pytest.raises(GridTooLarge):
        GridSpec(0.05, 5)
    with pytest.raises(GridTooLarge):
        GridSpec(1e-3, 4)
    with pytest.raises(ValueError):
        GridSpec(0.0, 2)


def test_grid_optimum_symmetric(symmetric_problem):
    step = 0.01
    opt = grid_optimum(symmetric_problem, step)
    assert opt.certificate is Certificate.GRID
    assert check(symmetric_problem, opt.q_star).feasible
    assert Q_SYMMETRIC <= opt.Q <= Q_SYMMETRIC + 3 * step


def test_grid_optimum_counterexample_face():
    prob = CloningProblem(StateSet(3, counterexample_states()))
    ref = grid_optimum(prob, 0.01)
    assert ref.q_star.q[2] == 1.0
    assert ref.Q - identify(counterexample_states()).Q <= 0.03


def test_feasibility_grid_matches_eigen_test(rng):
    prob = random_problem(rng, 3)
    ok, det = feasibility_grid(prob, 0.1)
    axis = GridSpec(0.1, 3).axis
    for idx in [(0, 0, 0), (10, 10, 10), (3, 7, 9), (10, 2, 5), (6, 6, 6)]:
        q = axis[list(idx)]
        rep = check(prob, q)
        if abs(rep.det) > 1e-9:
            assert ok[idx] == rep.feasible
        assert det[idx] == pytest.approx(rep.det, abs=1e-12)


def test_region_census_symmetric(symmetric_problem):
    c = region_census(symmetric_problem, 0.02)
    assert c.connected and c.components == 1 and c.anchor_feasible
    assert c.feasible + c.infeasible == 51 ** 3
    assert 0 < c.near_surface < c.feasible + c.infeasible


def test_region_census_random_connected(rng):
    for N in (2, 3):
        c = region_census(random_problem(rng, N), 0.02)
        assert c.connected
