"""Explicit cloning machine at a realizable point, and measurement sampling.

Only the restriction of the unitary to the span of the ``N`` inputs is built:
output ``i`` is

    sqrt(p_i) |psi_i>^n (x) |a_i>  +  sqrt(q_i) |0...0> (x) |f_i>

in ``H^n (x) (H_suc + H_fail)``, where the success flags ``a_i`` realize the
flag-overlap matrix and the failure flags ``f_i`` realize the recovered
failure Gram ``Y``. If these outputs reproduce the input overlaps ``s_ij^m``,
the map is an isometry on the span and extends to a unitary.

Flag basis layout: success flags first (indices ``0 .. n_suc - 1``), then
failure flags. Vectors are stored flag-index fastest, i.e. an output reshapes
to ``(d**n, n_suc + n_fail)``.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import NotFeasible, NumericalGramMismatch
from .feasibility import ParameterPoint, check, recover_fail_gram
from .hermitian import PSD_TOL, psd_factor
from .problem import build_grams

GRAM_CHECK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CloningMachine:
    outputs: np.ndarray  # (N, d**n * (n_suc + n_fail))
    clone_dim: int       # d**n
    n_suc: int
    n_fail: int
    p: np.ndarray
    success_flags: np.ndarray
    fail_flags: np.ndarray

    @property
    def flag_dim(self):
        return self.n_suc + self.n_fail

    @property
    def flag_partition(self):
        return range(0, self.n_suc), range(self.n_suc, self.flag_dim)

    def blocks(self, i):
        """``(success, failure)`` components of output ``i`` as ``(d**n, .)`` arrays."""
        v = self.outputs[i].reshape(self.clone_dim, self.flag_dim)
        return v[:, :self.n_suc], v[:, self.n_suc:]

    def branch_probabilities(self, i):
        """Born probabilities of success and failure for input ``i``, from the vector itself."""
        suc, fail = self.blocks(i)
        return float(np.vdot(suc, suc).real), float(np.vdot(fail, fail).real)


@dataclass(frozen=True)
class SimulationResult:
    state_index: int
    shots: int
    successes: int
    failures: int
    rate: float
    seed: int
    p_born: float


def tensor_power(v, n):
    return reduce(np.kron, [v] * n)


def construct(problem, q, tol=PSD_TOL):
    """Build the outputs of a machine with failure probabilities ``q``.

    Raises :class:`NotFeasible` when ``M(q)`` is not PSD and
    :class:`NumericalGramMismatch` if the assembled outputs miss the input
    overlaps by more than 1e-8.
    """
    point = ParameterPoint.of(q)
    grams = build_grams(problem)
    if not check(grams, point, tol).feasible:
        raise NotFeasible(f"q = {point.q} is not realizable")
    qv, pv = point.q, point.p
    N = problem.N

    A = psd_factor(problem.alpha, tol)
    success_flags = A.conj()
    fg = recover_fail_gram(grams, point, tol)
    fail_flags = np.zeros((N, 0), dtype=complex)
    if fg.indices:
        Fy = psd_factor(fg.entries, tol)
        fail_flags = np.zeros((N, Fy.shape[1]), dtype=complex)
        fail_flags[list(fg.indices)] = Fy.conj()
    n_suc, n_fail = success_flags.shape[1], fail_flags.shape[1]

    vecs = problem.states.states
    clone_dim = problem.states.dim ** problem.n
    blank = np.zeros(clone_dim, dtype=complex)
    blank[0] = 1.0
    outputs = np.empty((N, clone_dim * (n_suc + n_fail)), dtype=complex)
    for i in range(N):
        suc = np.sqrt(pv[i]) * np.kron(tensor_power(vecs[i], problem.n), success_flags[i])
        fail = np.sqrt(qv[i]) * np.kron(blank, fail_flags[i])
        outputs[i] = np.concatenate([suc.reshape(clone_dim, n_suc),
                                     fail.reshape(clone_dim, n_fail)], axis=1).ravel()
    outputs.setflags(write=False)
    machine = CloningMachine(outputs=outputs, clone_dim=clone_dim, n_suc=n_suc, n_fail=n_fail,
                             p=pv.copy(), success_flags=success_flags, fail_flags=fail_flags)
    dev = verify_isometry(machine, grams)
    if dev > GRAM_CHECK_TOL:
        raise NumericalGramMismatch(f"output overlaps deviate from inputs by {dev:.3e}")
    return machine


def verify_isometry(machine, grams):
    """Largest ``|<out_i|out_j> - s_ij^m|``."""
    G = machine.outputs.conj() @ machine.outputs.T
    return float(np.max(np.abs(G - grams.x_m)))


def simulate(machine, state_index, shots, seed=0):
    """Measure the flag register of output ``state_index`` ``shots`` times.

    Outcome probabilities are the squared norms of the flag-basis components
    of the stored output vector. Uses a Philox generator keyed by
    ``(seed, state_index)``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    v = machine.outputs[state_index].reshape(machine.clone_dim, machine.flag_dim)
    probs = np.sum(np.abs(v) ** 2, axis=0)
    probs = probs / probs.sum()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, state_index])))
    outcomes = rng.choice(machine.flag_dim, size=shots, p=probs)
    successes = int(np.count_nonzero(outcomes < machine.n_suc))
    return SimulationResult(state_index=state_index, shots=shots, successes=successes,
                            failures=shots - successes, rate=successes / shots, seed=seed,
                            p_born=float(probs[:machine.n_suc].sum()))


def simulate_all(machine, shots, seed=0):
    return [simulate(machine, i, shots, seed) for i in range(machine.outputs.shape[0])]
