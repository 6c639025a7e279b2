import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probclone.errors import NotFeasible
from probclone.feasibility import check
from probclone.machine import construct, simulate, simulate_all, verify_isometry
from probclone.optimize import optimize
from probclone.problem import CloningProblem, StateSet, build_grams

from conftest import Q_SECOND_ROOT, Q_SYMMETRIC, counterexample_states, random_problem


def test_symmetric_machine(symmetric_problem):
    q = np.full(3, Q_SYMMETRIC)
    mach = construct(symmetric_problem, q)
    assert verify_isometry(mach, build_grams(symmetric_problem)) <= 1e-10
    for i in range(3):
        ps, pf = mach.branch_probabilities(i)
        assert ps == pytest.approx(1 - Q_SYMMETRIC, abs=1e-10)
        assert pf == pytest.approx(Q_SYMMETRIC, abs=1e-10)
    # M(q) loses exactly one rank on the surface
    assert mach.n_fail == 2
    assert list(mach.flag_partition[0]) == [0, 1, 2]


def test_second_root_not_constructible(symmetric_problem):
    with pytest.raises(NotFeasible):
        construct(symmetric_problem, np.full(3, Q_SECOND_ROOT))


def test_all_fail_and_never_fail():
    prob = CloningProblem(StateSet(3, counterexample_states()))
    mach = construct(prob, [1, 1, 1])
    for i in range(3):
        assert mach.branch_probabilities(i)[0] == 0.0
    ortho = CloningProblem(StateSet(2, np.eye(2, dtype=complex)), m=1, n=3)
    mach = construct(ortho, [0, 0])
    assert mach.n_fail == 0
    assert mach.branch_probabilities(1) == pytest.approx((1.0, 0.0))


def test_negative_control(symmetric_problem):
    # perturbing the outputs breaks the Gram check
    mach = construct(symmetric_problem, np.full(3, 0.9))
    bad = mach.outputs.copy()
    bad[0] = bad[0] * np.exp(0.1j)
    G = bad.conj() @ bad.T
    assert np.max(np.abs(G - build_grams(symmetric_problem).x_m)) > 1e-3


def test_simulation_reproducible(symmetric_problem):
    mach = construct(symmetric_problem, np.full(3, Q_SYMMETRIC))
    a = simulate(mach, 1, 5000, seed=3)
    b = simulate(mach, 1, 5000, seed=3)
    c = simulate(mach, 1, 5000, seed=4)
    assert a == b
    assert a.successes + a.failures == 5000 and a.seed == 3
    assert c.successes != a.successes or c.seed != a.seed
    with pytest.raises(ValueError):
        simulate(mach, 0, 0)


@pytest.mark.slow
def test_simulation_converges(symmetric_problem):
    shots = 10 ** 6
    skewed = symmetric_problem.with_priors([0.35, 0.25, 0.4])
    for prob in (symmetric_problem, skewed):
        opt = optimize(prob)
        mach = construct(prob, opt.q_star)
        for r, p in zip(simulate_all(mach, shots, seed=11), opt.q_star.p):
            assert abs(r.rate - p) <= 5 * np.sqrt(p * (1 - p) / shots)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), N=st.integers(2, 4))
def test_construct_iff_feasible(seed, N):
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, N, max_n=2 if N == 4 else 3)
    q = rng.uniform(0, 1, N)
    rep = check(prob, q)
    if abs(rep.det) <= 1e-7:
        return
    if rep.feasible:
        mach = construct(prob, q)
        assert verify_isometry(mach, build_grams(prob)) <= 1e-10
        for i in range(N):
            ps, pf = mach.branch_probabilities(i)
            assert ps == pytest.approx(1 - q[i], abs=1e-10)
            assert pf == pytest.approx(q[i], abs=1e-10)
    else:
        with pytest.raises(NotFeasible):
            construct(prob, q)
