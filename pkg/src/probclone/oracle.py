"""Brute-force references on a grid over the cube ``[0, 1]^N`` (``N <= 4``).

Feasibility here is the principal-minor criterion evaluated in bulk, which
shares nothing with the eigenvalue test and ray geometry used by the
optimizer.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GridTooLarge
from .feasibility import ParameterPoint
from .hermitian import PSD_TOL, psd_by_minors_from_entries
from .optimize import Certificate, Optimum
from .problem import build_grams

MAX_N = 4
MAX_POINTS = 3 * 10 ** 8


@dataclass(frozen=True)
class GridSpec:
    step: float
    N: int

    def __post_init__(self):
        if not 0 < self.step <= 0.1:
            raise ValueError("grid step must be in (0, 0.1]")
        if self.N > MAX_N:
            raise GridTooLarge(f"grid oracle supports N <= {MAX_N}, got {self.N}")
        if self.points ** self.N > MAX_POINTS:
            raise GridTooLarge(f"{self.points}^{self.N} grid points exceed {MAX_POINTS}")

    @property
    def points(self):
        return int(round(1.0 / self.step)) + 1

    @property
    def axis(self):
        # both endpoints included
        return np.linspace(0.0, 1.0, self.points)


@dataclass(frozen=True)
class Census:
    feasible: int
    infeasible: int
    near_surface: int
    components: int
    anchor_feasible: bool
    connected: bool


def _batch_m(grams, Q):
    """Stack of ``M(q)`` for the rows of ``Q`` (shape ``(K, N)``)."""
    sp = np.sqrt(1.0 - Q)
    Ms = grams.x_m[None, :, :] - sp[:, :, None] * sp[:, None, :] * grams.x_n_p[None, :, :]
    idx = np.arange(Q.shape[1])
    Ms[:, idx, idx] = Q
    return Ms


def _grid_psd(grams, Q, tol):
    """Minor test for the rows of ``Q`` without materializing the matrices."""
    N = Q.shape[1]
    sp = np.sqrt(1.0 - Q)
    diag = [Q[:, i] for i in range(N)]
    upper = {(i, j): grams.x_m[i, j] - sp[:, i] * sp[:, j] * grams.x_n_p[i, j]
             for i in range(N) for j in range(i + 1, N)}
    return psd_by_minors_from_entries(diag, upper, tol)


def _slices(spec):
    """Iterate grid points in slabs of fixed first coordinate: ``(q0, Q)``."""
    ax = spec.axis
    rest = np.array(list(itertools.product(ax, repeat=spec.N - 1))) if spec.N > 1 else np.zeros((1, 0))
    for q0 in ax:
        yield q0, np.column_stack([np.full(len(rest), q0), rest])


def grid_optimum(problem, grid, tol=PSD_TOL):
    """Lowest-Q feasible grid point.

    ``grid`` is a :class:`GridSpec` or a step size. Slabs whose first
    coordinate alone already exceeds the best Q are skipped, and within a slab
    only points that could improve on the best are tested; both prunings are
    exact, so the result equals a full scan. Ties go to the lexicographically
    smallest point.
    """
    spec = grid if isinstance(grid, GridSpec) else GridSpec(float(grid), problem.N)
    grams = build_grams(problem)
    eta = np.asarray(problem.priors, dtype=float)
    best_Q, best_q = np.inf, None
    for q0, Q in _slices(spec):
        if eta[0] * q0 > best_Q + 1e-12:
            break
        vals = Q @ eta
        keep = vals <= best_Q + 1e-12
        if not keep.any():
            continue
        Qk, vk = Q[keep], vals[keep]
        ok, _ = _grid_psd(grams, Qk, tol)
        if not ok.any():
            continue
        Qf, vf = Qk[ok], vk[ok]
        order = np.lexsort(tuple(Qf[:, c] for c in reversed(range(Qf.shape[1]))) + (vf,))
        j = order[0]
        cand = (vf[j], tuple(Qf[j]))
        if best_q is None or cand[0] < best_Q - 1e-12 or (
                abs(cand[0] - best_Q) <= 1e-12 and cand[1] < tuple(best_q)):
            best_Q, best_q = float(cand[0]), np.array(cand[1])
    if best_q is None:
        raise RuntimeError("no feasible grid point; (1, ..., 1) should always be feasible")
    M = _batch_m(grams, best_q[None, :])[0]
    return Optimum(q_star=ParameterPoint(best_q), Q=best_Q, success=1.0 - best_Q,
                   certificate=Certificate.GRID, det_at_opt=float(np.linalg.det(M).real),
                   gradient_residual=float("nan"))


def feasibility_grid(problem, grid, tol=PSD_TOL):
    """Boolean feasibility and ``det M`` on the full grid, arrays of shape ``(points,)*N``."""
    spec = grid if isinstance(grid, GridSpec) else GridSpec(float(grid), problem.N)
    grams = build_grams(problem)
    shape = (spec.points,) * spec.N
    ok_all, det_all = [], []
    for _, Q in _slices(spec):
        ok, det = _grid_psd(grams, Q, tol)
        ok_all.append(ok)
        det_all.append(det)
    return np.concatenate(ok_all).reshape(shape), np.concatenate(det_all).reshape(shape)


def region_census(problem, grid, tol=PSD_TOL):
    """Classify every grid point and check the feasible points form one
    face-connected component containing ``(1, ..., 1)``.

    Near-surface points have ``|det| <= 10 * step * |grad det|``, with the
    gradient estimated by finite differences on the grid itself.
    """
    spec = grid if isinstance(grid, GridSpec) else GridSpec(float(grid), problem.N)
    if spec.N > 3:
        raise GridTooLarge("region census supports N <= 3")
    ok, det = feasibility_grid(problem, spec, tol)
    grads = np.gradient(det, spec.step)
    if spec.N == 1:
        grads = [grads]
    gnorm = np.sqrt(sum(g ** 2 for g in grads))
    near = np.abs(det) <= 10.0 * spec.step * gnorm
    labels, count = ndimage.label(ok)
    anchor = (spec.points - 1,) * spec.N
    anchor_ok = bool(ok[anchor])
    connected = anchor_ok and count == 1
    return Census(feasible=int(ok.sum()), infeasible=int((~ok).sum()), near_surface=int(near.sum()),
                  components=int(count), anchor_feasible=anchor_ok, connected=bool(connected))
