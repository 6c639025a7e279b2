"""Realizability of a failure-probability vector ``q`` and the geometry of the
realizable region.

The test matrix is ``M(q) = X_m - sqrt(G) X_np sqrt(G)`` with ``G = diag(1 - q)``;
a cloner with failure probabilities ``q`` exists iff ``M(q)`` is PSD. The
realizable set is star-shaped around ``(1, ..., 1)``: every segment from a
realizable point to the all-ones corner stays realizable, and strictly inside
the PD cone except possibly at the starting point. Ray searches from the
corner rely on this.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroFailureRow
from .hermitian import PSD_TOL, determinant, hermitian, is_psd, min_eigenvalue
from .problem import GramPair, build_grams

SURFACE_TOL = 1e-9
RAY_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class ParameterPoint:
    """Failure probabilities ``q`` in the unit cube; ``p = 1 - q``."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 1:
            raise ValueError("q must be a vector")
        if not np.all(np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
            raise ValueError(f"q must lie in [0, 1]^N, got {q}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def p(self):
        return 1.0 - self.q

    @property
    def N(self):
        return self.q.size

    @classmethod
    def of(cls, q):
        return q if isinstance(q, cls) else cls(q)

    def __repr__(self):
        return f"ParameterPoint({np.array2string(self.q, precision=12)})"


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    matrix: np.ndarray
    feasible: bool
    min_eig: float
    det: float
    on_surface: bool


@dataclass(frozen=True, eq=False)
class FailGram:
    """Overlaps of the failure branches, recovered from the unitarity relation.

    ``entries`` covers only ``indices`` (states with ``q_i > 0``). For the
    remaining states ``off_block_residual`` is the largest violation of
    ``x_m[i, j] = sqrt(p_i p_j) x_np[i, j]``, which must vanish for them.
    """

    entries: np.ndarray
    indices: tuple
    valid: bool
    off_block_residual: float = 0.0


def _grams(problem):
    return problem if isinstance(problem, GramPair) else build_grams(problem)


def build_m(grams, q):
    q = ParameterPoint.of(q).q
    if q.size != grams.x_m.shape[0]:
        raise ValueError(f"q has {q.size} entries for {grams.x_m.shape[0]} states")
    sp = np.sqrt(1.0 - q)
    M = grams.x_m - np.outer(sp, sp) * grams.x_n_p
    M = hermitian(M)
    M[np.diag_indices_from(M)] = q
    return M


def surface_tolerance(grams):
    N = grams.x_m.shape[0]
    norm = float(np.max(np.abs(np.linalg.eigvalsh(grams.x_m))))
    return SURFACE_TOL * max(1.0, norm ** N)


def check(problem, q, tol=PSD_TOL):
    grams = _grams(problem)
    M = build_m(grams, q)
    det = determinant(M)
    return FeasibilityReport(
        matrix=M,
        feasible=is_psd(M, tol),
        min_eig=min_eigenvalue(M),
        det=det,
        on_surface=abs(det) <= surface_tolerance(grams),
    )


def recover_fail_gram(problem, q, tol=PSD_TOL, strict=False):
    """Failure-flag Gram ``Y[i, j] = M[i, j] / sqrt(q_i q_j)``.

    With ``strict=True`` a zero failure probability raises
    :class:`ZeroFailureRow`; otherwise ``Y`` is reported on the states that
    can fail and the remaining rows of ``M`` are checked for vanishing.
    """
    grams = _grams(problem)
    point = ParameterPoint.of(q)
    M = build_m(grams, point)
    qv = point.q
    zero = np.flatnonzero(qv == 0)
    if strict and zero.size:
        raise ZeroFailureRow(int(zero[0]))
    idx = np.flatnonzero(qv > 0)
    off = 0.0
    if zero.size:
        off = float(np.max(np.abs(M[zero, :])))
    root = np.sqrt(qv[idx])
    Y = M[np.ix_(idx, idx)] / np.outer(root, root)
    Y = hermitian(Y) if idx.size else Y
    Y[np.diag_indices_from(Y)] = 1.0
    valid = off <= tol * max(1.0, float(np.max(np.abs(M)))) and (idx.size == 0 or is_psd(Y, tol))
    return FailGram(entries=Y, indices=tuple(int(i) for i in idx), valid=bool(valid),
                    off_block_residual=off)


def _ray_point(d, t):
    return np.clip(1.0 - t * d, 0.0, 1.0)


def _ray_limit(d):
    pos = d > 0
    return float(np.min(1.0 / d[pos]))


def ray_boundary(grams, d, tol=0.0, ttol=RAY_TOL):
    """Farthest realizable point on ``q(t) = 1 - t d``; zero entries of ``d`` allowed.

    Returns ``(q, t)``. Brackets by doubling from a small step, then bisects.
    Realizability is monotone along the ray, so the first infeasible sample
    bounds the realizable interval.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or not np.any(d > 0):
        raise ValueError("direction must be nonnegative and nonzero")
    t_max = _ray_limit(d)

    x_m, x_n_p = grams.x_m, grams.x_n_p
    diag = np.diag_indices_from(x_m)

    def ok(t):
        q = _ray_point(d, t)
        sp = np.sqrt(1.0 - q)
        M = x_m - np.outer(sp, sp) * x_n_p
        M[diag] = q
        w = np.linalg.eigvalsh(M)
        return w[0] >= -tol * max(1.0, abs(w[-1]))

    lo, hi = 0.0, None
    t = 1e-3 * t_max
    while True:
        if t >= t_max:
            if ok(t_max):
                # exact zeros on the face that the ray exits through
                return np.clip(1.0 - d / d.max(), 0.0, 1.0), t_max
            hi = t_max
            break
        if ok(t):
            lo, t = t, 2.0 * t
        else:
            hi = t
            break
    for _ in range(200):
        if hi - lo <= ttol:
            break
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return _ray_point(d, lo), lo


def boundary_along_ray(problem, direction, tol=0.0):
    """Boundary point of the realizable region seen from ``(1, ..., 1)``.

    ``direction`` must be a unit vector with strictly positive entries. The
    result lies on ``det M = 0`` or on a face of the cube.
    """
    d = np.asarray(direction, dtype=float)
    if np.any(d <= 0):
        raise ValueError("direction must have strictly positive components")
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    q, _ = ray_boundary(_grams(problem), d, tol)
    return ParameterPoint(q)


def segment_feasible(problem, q_from, samples=100, tol=PSD_TOL):
    """Check ``samples + 1`` evenly spaced points from ``q_from`` to the all-ones corner."""
    grams = _grams(problem)
    q0 = ParameterPoint.of(q_from).q
    for r in np.linspace(0.0, 1.0, samples + 1):
        q = np.clip(q0 + r * (1.0 - q0), 0.0, 1.0)
        if not is_psd(build_m(grams, q), tol):
            return False
    return True

