"""Problem data model: known states, success-flag overlaps, priors, and the
Gram matrices built from them.

A problem file is JSON::

    {"dim": 3,
     "states": [[[re, im], ...], ...],
     "m": 1, "n": 2,
     "alpha": [[[re, im], ...], ...],   # optional, default identity
     "priors": [0.35, 0.25, 0.4]}       # optional, default uniform

Leaving out ``alpha`` gives an identification problem (success flags
orthonormal), for which ``n`` is optional and defaults to ``m + 1``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ProblemError
from .hermitian import psd_factor

NORM_TOL = 1e-12
INDEPENDENCE_TOL = 1e-10
ALPHA_PSD_TOL = 1e-10
PRIOR_SUM_TOL = 1e-12


def compute_overlaps(states):
    """Overlap matrix ``S[i, j] = <psi_i|psi_j>`` of the rows of ``states``.

    Accepts a :class:`StateSet` or an ``(N, d)`` array of unit vectors.
    """
    if isinstance(states, StateSet):
        vecs = states.states
    else:
        vecs = np.asarray(states, dtype=complex)
        if vecs.ndim != 2:
            raise ProblemError("dimension", "states must be a 2-D array (N, dim)")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise ProblemError("unit_norm", f"state norms deviate from 1: {norms}")
    S = vecs.conj() @ vecs.T
    S = 0.5 * (S + S.conj().T)
    S[np.diag_indices_from(S)] = 1.0
    return S


@dataclass(frozen=True, eq=False)
class StateSet:
    """``N`` linearly independent unit vectors in ``C^dim`` (rows of ``states``)."""

    dim: int
    states: np.ndarray

    def __post_init__(self):
        vecs = np.array(self.states, dtype=complex)
        if vecs.ndim != 2:
            raise ProblemError("dimension", "states must be a list of vectors")
        N, d = vecs.shape
        if self.dim < 1 or d != self.dim:
            raise ProblemError("dimension", f"states have length {d}, dim is {self.dim}")
        if N < 2:
            raise ProblemError("count", "need at least two states")
        if self.dim < N:
            raise ProblemError("count", f"{N} states cannot be independent in dim {self.dim}")
        norms = np.linalg.norm(vecs, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ProblemError("unit_norm", f"state {int(bad[0])} has norm {norms[bad[0]]!r}")
        gram = vecs.conj() @ vecs.T
        if np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[0] <= INDEPENDENCE_TOL:
            raise ProblemError("linear_independence", "states not linearly independent")
        vecs.setflags(write=False)
        object.__setattr__(self, "states", vecs)

    @property
    def count(self):
        return self.states.shape[0]

    @classmethod
    def from_gram(cls, gram):
        """Synthesize vectors whose overlap matrix is ``gram``.

        Uses the PSD factor ``gram = F F^H``; state ``i`` is ``conj(F[i])`` so
        that ``<psi_i|psi_j> = gram[i, j]``. The ambient dimension is ``N``.
        """
        gram = np.asarray(gram, dtype=complex)
        N = gram.shape[0]
        F = psd_factor(gram)
        vecs = np.zeros((N, N), dtype=complex)
        vecs[:, :F.shape[1]] = F.conj()
        vecs /= np.linalg.norm(vecs, axis=1)[:, None]
        return cls(dim=N, states=vecs)


def _check_alpha(alpha, N):
    A = np.array(alpha, dtype=complex)
    if A.shape != (N, N):
        raise ProblemError("alpha_shape", f"alpha must be {N}x{N}, got {A.shape}")
    if not np.allclose(A, A.conj().T, rtol=0, atol=1e-12):
        raise ProblemError("alpha_hermitian", "alpha is not Hermitian")
    if not np.allclose(np.diag(A), 1.0, rtol=0, atol=1e-12):
        raise ProblemError("alpha_unit_diagonal", "alpha must have unit diagonal")
    if np.any(np.abs(A) > 1 + 1e-12):
        raise ProblemError("alpha_bounded", "|alpha_ij| must not exceed 1")
    H = 0.5 * (A + A.conj().T)
    if np.linalg.eigvalsh(H)[0] < -ALPHA_PSD_TOL:
        raise ProblemError("alpha_psd", "alpha is not positive semidefinite")
    return A


def _check_priors(priors, N):
    if priors is None:
        return np.full(N, 1.0 / N)
    eta = np.array(priors, dtype=float)
    if eta.shape != (N,):
        raise ProblemError("priors_shape", f"need {N} priors, got {eta.shape}")
    if not np.all(np.isfinite(eta)) or np.any(eta <= 0):
        raise ProblemError("priors_positive", "priors must be strictly positive; drop zero-prior states")
    if abs(eta.sum() - 1.0) > PRIOR_SUM_TOL:
        raise ProblemError("priors_sum", f"priors sum to {eta.sum()!r}, not 1")
    return eta


@dataclass(frozen=True, eq=False)
class CloningProblem:
    """States plus copy numbers ``m -> n``, success-flag overlaps and priors.

    ``alpha=None`` means identification (identity flag overlaps).
    """

    states: StateSet
    m: int = 1
    n: int = None
    alpha: np.ndarray = None
    priors: np.ndarray = None
    _alpha_given: bool = field(default=False, repr=False)

    def __post_init__(self):
        N = self.states.count
        if int(self.m) != self.m or self.m < 1:
            raise ProblemError("copies", f"m must be a positive integer, got {self.m!r}")
        n = self.m + 1 if self.n is None else self.n
        if int(n) != n or n <= self.m:
            raise ProblemError("copies", f"n must be an integer > m, got n={n!r}, m={self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(n))
        if self.alpha is None:
            A = np.eye(N, dtype=complex)
        else:
            A = _check_alpha(self.alpha, N)
            object.__setattr__(self, "_alpha_given", True)
        A.setflags(write=False)
        object.__setattr__(self, "alpha", A)
        eta = _check_priors(self.priors, N)
        eta.setflags(write=False)
        object.__setattr__(self, "priors", eta)

    @property
    def N(self):
        return self.states.count

    @property
    def identification(self):
        return bool(np.array_equal(self.alpha, np.eye(self.N)))

    @property
    def generalized(self):
        """Identification from ``m > 1`` copies, which extends the usual m=1 setting."""
        return self.identification and self.m != 1

    def with_priors(self, priors):
        return CloningProblem(self.states, self.m, self.n,
                              self.alpha if self._alpha_given else None, priors)

    @classmethod
    def from_gram(cls, gram, **kwargs):
        return cls(StateSet.from_gram(gram), **kwargs)


@dataclass(frozen=True, eq=False)
class GramPair:
    """``x_m[i, j] = s_ij^m`` and ``x_n_p[i, j] = s_ij^n * alpha_ij``."""

    x_m: np.ndarray
    x_n_p: np.ndarray


def build_grams(problem):
    S = compute_overlaps(problem.states)
    x_m = S ** problem.m
    x_n_p = (S ** problem.n) * problem.alpha
    for X in (x_m, x_n_p):
        X[np.diag_indices_from(X)] = 1.0
    return GramPair(x_m=x_m, x_n_p=x_n_p)


def _encode_complex(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_encode_complex(row) for row in a]


def _decode_complex(obj, name):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemError("parse", f"{name}: expected nested [re, im] pairs") from exc
    if arr.shape[-1:] != (2,):
        raise ProblemError("parse", f"{name}: complex numbers must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def problem_to_dict(problem):
    doc = {
        "dim": problem.states.dim,
        "states": _encode_complex(problem.states.states),
        "m": problem.m,
        "n": problem.n,
        "priors": [float(x) for x in problem.priors],
    }
    if problem._alpha_given:
        doc["alpha"] = _encode_complex(problem.alpha)
    return doc


def problem_from_dict(doc):
    if not isinstance(doc, dict):
        raise ProblemError("parse", "problem document must be a JSON object")
    for key in ("dim", "states"):
        if key not in doc:
            raise ProblemError("parse", f"missing required key {key!r}")
    states = StateSet(dim=int(doc["dim"]), states=_decode_complex(doc["states"], "states"))
    alpha = doc.get("alpha")
    if alpha is not None:
        alpha = _decode_complex(alpha, "alpha")
    return CloningProblem(states, m=doc.get("m", 1), n=doc.get("n"), alpha=alpha,
                          priors=doc.get("priors"))


def load_problem(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError("parse", f"{path}: {exc}") from exc
    return problem_from_dict(doc)


def save_problem(problem, path):
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=2))
