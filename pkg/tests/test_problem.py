import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probclone.errors import ProblemError
from probclone.problem import (CloningProblem, StateSet, build_grams, compute_overlaps,
                               load_problem, problem_from_dict, save_problem)

from conftest import DATA, OMEGA, counterexample_states, random_alpha, random_states, symmetric_states


def test_overlaps_orthonormal():
    S = compute_overlaps(np.eye(2))
    np.testing.assert_array_equal(S, np.eye(2))


def test_overlaps_symmetric_states():
    S = compute_overlaps(symmetric_states())
    assert S[0, 1] == pytest.approx((2 + OMEGA) / 3, abs=1e-15)
    assert S[1, 2] == pytest.approx((2 + OMEGA) / 3, abs=1e-15)
    assert S[2, 0] == pytest.approx((1 + 2 * OMEGA ** 2) / 3, abs=1e-15)


def test_overlaps_counterexample():
    S = compute_overlaps(counterexample_states())
    assert S[0, 1] == 0
    assert abs(S[1, 2]) == pytest.approx(1 / np.sqrt(3), abs=1e-15)
    assert S[1, 2] == pytest.approx(np.conj(S[2, 0]), abs=1e-15)


def test_overlaps_reject_bad_norm():
    with pytest.raises(ProblemError) as err:
        compute_overlaps(np.array([[1.0, 0.0], [0.0, 1.1]]))
    assert err.value.invariant == "unit_norm"


def test_stateset_validation():
    with pytest.raises(ProblemError, match="not linearly independent"):
        StateSet(2, np.array([[1, 0], [1, 0]]))
    with pytest.raises(ProblemError):
        StateSet(3, np.eye(2))
    with pytest.raises(ProblemError):
        StateSet(1, np.array([[1.0]]))
    with pytest.raises(ProblemError):
        StateSet(2, np.array([[1, 0], [0.6, 0.7]]))


def test_identification_grams_are_identity():
    P = CloningProblem(StateSet(3, symmetric_states()))
    g = build_grams(P)
    np.testing.assert_array_equal(g.x_n_p, np.eye(3))
    np.testing.assert_allclose(g.x_m, compute_overlaps(symmetric_states()), atol=0)
    assert P.identification and not P.generalized


def test_two_state_real_grams():
    s, a, m, n = 0.6, 0.7, 2, 3
    states = np.array([[1, 0], [s, np.sqrt(1 - s * s)]])
    P = CloningProblem(StateSet(2, states), m=m, n=n, alpha=[[1, a], [a, 1]])
    g = build_grams(P)
    np.testing.assert_allclose(g.x_m, [[1, s ** m], [s ** m, 1]], atol=1e-15)
    np.testing.assert_allclose(g.x_n_p, [[1, s ** n * a], [s ** n * a, 1]], atol=1e-15)


def test_problem_invariants():
    S = StateSet(2, np.eye(2))
    with pytest.raises(ProblemError):
        CloningProblem(S, m=2, n=2)
    with pytest.raises(ProblemError, match="strictly positive"):
        CloningProblem(S, priors=[1.0, 0.0])
    with pytest.raises(ProblemError):
        CloningProblem(S, priors=[0.5, 0.6])
    with pytest.raises(ProblemError):
        CloningProblem(S, alpha=[[1, 2], [2, 1]])
    with pytest.raises(ProblemError):
        CloningProblem(S, alpha=[[1, 0.5], [0.4, 1]])
    assert CloningProblem(S, m=2).generalized


def test_load_defaults(tmp_path):
    P = load_problem(DATA / "symmetric_three.json")
    assert P.identification
    np.testing.assert_array_equal(P.priors, np.full(3, 1 / 3))


def test_load_priors_exact():
    P = load_problem(DATA / "symmetric_three_skewed.json")
    assert list(P.priors) == [0.35, 0.25, 0.4]


def test_load_dependent_states(tmp_path):
    doc = {"dim": 2, "states": [[[1, 0], [0, 0]], [[1, 0], [0, 0]]], "m": 1, "n": 2}
    path = tmp_path / "dep.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ProblemError, match="states not linearly independent") as err:
        load_problem(path)
    assert err.value.invariant == "linear_independence"


def test_load_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ProblemError) as err:
        load_problem(path)
    assert err.value.invariant == "parse"
    with pytest.raises(ProblemError):
        problem_from_dict({"dim": 2, "states": [[1, 0], [0, 1]]})


def test_from_gram_reproduces_overlaps(rng):
    G = compute_overlaps(random_states(rng, 4))
    S = StateSet.from_gram(G)
    np.testing.assert_allclose(compute_overlaps(S), G, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), N=st.integers(2, 5))
def test_overlaps_hermitian_unit_diagonal(seed, N):
    rng = np.random.default_rng(seed)
    S = compute_overlaps(StateSet(N + 1, random_states(rng, N, N + 1)))
    np.testing.assert_array_equal(S, S.conj().T)
    np.testing.assert_array_equal(np.diag(S), np.ones(N))
    assert np.linalg.eigvalsh(S)[0] > 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), N=st.integers(2, 4), m=st.integers(1, 3),
       extra=st.integers(1, 3))
def test_clone_gram_dominated_entrywise(seed, N, m, extra):
    rng = np.random.default_rng(seed)
    P = CloningProblem(StateSet(N, random_states(rng, N)), m=m, n=m + extra,
                       alpha=random_alpha(rng, N))
    g = build_grams(P)
    assert np.all(np.abs(g.x_n_p) <= np.abs(g.x_m) + 1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), N=st.integers(2, 4), with_alpha=st.booleans())
def test_save_load_round_trip(tmp_path_factory, seed, N, with_alpha):
    rng = np.random.default_rng(seed)
    P = CloningProblem(StateSet(N, random_states(rng, N)), m=1, n=3,
                       alpha=random_alpha(rng, N) if with_alpha else None,
                       priors=np.full(N, 1.0 / N))
    path = tmp_path_factory.mktemp("rt") / "p.json"
    save_problem(P, path)
    R = load_problem(path)
    np.testing.assert_array_equal(R.states.states, P.states.states)
    np.testing.assert_array_equal(R.alpha, P.alpha)
    np.testing.assert_array_equal(R.priors, P.priors)
    assert (R.m, R.n, R.states.dim) == (P.m, P.n, P.states.dim)
