"""Minimum average failure probability ``Q = sum(eta * q)`` over the realizable
region.

Every boundary point of the region is reached by a ray from ``(1, ..., 1)``,
so the search runs over ray directions: a low-discrepancy multistart, a
Nelder-Mead refinement of the best directions, and a Newton polish of the
tangency conditions ``det M(q) = 0`` and ``grad det M(q) || eta``. Directions
with zero components reach the faces ``q_i = 1``.

Two states have a closed form (:func:`optimize_two`); identification is the
special case of identity success-flag overlaps (:func:`identify`).
"""

import enum
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize as spo
from scipy.stats import qmc

from .errors import UnsupportedDimension
from .feasibility import ParameterPoint, build_m, check, ray_boundary, surface_tolerance
from .hermitian import PSD_TOL, adjugate
from .problem import CloningProblem, StateSet, build_grams, compute_overlaps

log = logging.getLogger(__name__)

KKT_TOL = 1e-6
FD_STEP = 1e-6
FACE_TOL = 1e-7


class Certificate(str, enum.Enum):
    SURFACE_TANGENT = "SurfaceTangent"
    CUBE_FACE = "CubeFace"
    DEGENERATE = "Degenerate"
    GRID = "GridOracle"


@dataclass(frozen=True, eq=False)
class Optimum:
    q_star: ParameterPoint
    Q: float
    success: float
    certificate: Certificate
    det_at_opt: float
    gradient_residual: float
    converged: bool = True

    def to_dict(self):
        q = self.q_star.q
        return {
            "q": [float(x) for x in q],
            "p": [float(x) for x in 1.0 - q],
            "Q": float(self.Q),
            "success": float(self.success),
            "det": float(self.det_at_opt),
            "certificate": self.certificate.value,
            "gradient_residual": float(self.gradient_residual),
            "converged": bool(self.converged),
        }


@dataclass
class OptimizeOptions:
    """Search settings. ``multistart=None`` picks ``max(64, 8 * 2**N)``.

    ``weights`` replaces the priors as objective coefficients; any positive
    vector is accepted, so rescaled objectives can be compared.
    """

    multistart: int = None
    refine: int = 3
    tol: float = PSD_TOL
    kkt_tol: float = KKT_TOL
    fd_step: float = FD_STEP
    face_tol: float = FACE_TOL
    newton_iters: int = 40
    weights: object = None


def default_multistart(N):
    return max(64, 8 * 2 ** N)


def start_directions(N, count, eta=None):
    """Unit directions in the open positive orthant: the diagonal, ``eta``, and Halton points."""
    pts = qmc.Halton(d=N, scramble=False).random(count + 1)[1:]
    dirs = [np.ones(N)]
    if eta is not None:
        dirs.append(np.asarray(eta, dtype=float))
    dirs.extend(pts)
    return [d / np.linalg.norm(d) for d in dirs]


# ---------------------------------------------------------------- derivatives

def det_gradient(grams, q, idx=None):
    """Analytic gradient of ``det M(q)`` for coordinates with ``q_k < 1``.

    ``d det / d q_k = Re[(adj(M) U P)_kk] / u_k`` with ``u = sqrt(1 - q)`` and
    ``P = x_n_p``.
    """
    q = np.asarray(q, dtype=float)
    idx = np.arange(q.size) if idx is None else np.asarray(idx)
    u = np.sqrt(1.0 - q)
    A = adjugate(build_m(grams, q))
    AUP = (A * u) @ grams.x_n_p
    return np.array([AUP[k, k].real / u[k] for k in idx])


def fd_det_gradient(grams, q, idx=None, h=FD_STEP):
    """Central-difference gradient of ``det M(q)``, one-sided at the cube faces."""
    q = np.asarray(q, dtype=float)
    idx = np.arange(q.size) if idx is None else np.asarray(idx)
    out = np.empty(len(idx))
    for n, k in enumerate(idx):
        lo, hi = max(0.0, q[k] - h), min(1.0, q[k] + h)
        qa, qb = q.copy(), q.copy()
        qa[k], qb[k] = lo, hi
        da = np.linalg.det(build_m(grams, qa)).real
        db = np.linalg.det(build_m(grams, qb)).real
        out[n] = (db - da) / (hi - lo)
    return out


def tangency_residual(grad, eta):
    """``min_lambda ||grad - lambda eta|| / ||grad||``; 1.0 when the gradient vanishes."""
    g = np.asarray(grad, dtype=float)
    e = np.asarray(eta, dtype=float)
    gn = np.linalg.norm(g)
    if gn == 0.0 or not np.isfinite(gn):
        return 1.0
    lam = g @ e / (e @ e)
    return float(np.linalg.norm(g - lam * e) / gn)


# ------------------------------------------------------------------- search

def _directions(z, free, N):
    d = np.zeros(N)
    d[free] = np.asarray(z) ** 2
    s = np.linalg.norm(d)
    if s == 0.0:
        d[free] = 1.0
        s = np.linalg.norm(d)
    return d / s


def _refine(grams, eta, d0, free):
    """Nelder-Mead over directions supported on ``free``; returns ``(Q, q)``."""
    N = eta.size
    cache = {}

    def f(z):
        q, _ = ray_boundary(grams, _directions(z, free, N))
        cache[tuple(z)] = q
        return float(eta @ q)

    z0 = np.sqrt(d0[free] / np.linalg.norm(d0[free]))
    if z0.size == 1:
        q = ray_boundary(grams, _directions(z0, free, N))[0]
        return float(eta @ q), q
    res = spo.minimize(f, z0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-13, "maxfev": 250 * z0.size})
    q = cache.get(tuple(res.x))
    if q is None:
        q = ray_boundary(grams, _directions(res.x, free, N))[0]
    return float(eta @ q), q


def _polish(grams, eta, q0, opts):
    """Newton on ``eta_J = lam * grad_J det``, ``det = 0`` over interior coordinates ``J``.

    Coordinates at ``q = 1`` stay fixed. The result is pushed back onto the
    region boundary along the ray from the all-ones corner, so it is always
    realizable.
    """
    q0 = np.asarray(q0, dtype=float)
    J = np.flatnonzero(q0 < 1.0 - opts.face_tol)
    if J.size == 0 or np.any(q0 <= opts.face_tol):
        return None
    eJ = eta[J]
    q = q0.copy()
    q[q0 >= 1.0 - opts.face_tol] = 1.0
    g = det_gradient(grams, q, J)
    if not np.all(np.isfinite(g)) or np.linalg.norm(g) == 0.0:
        return None
    lam = (g @ eJ) / (g @ g)
    dscale = np.linalg.norm(g)

    def residual(x, lam):
        qq = q.copy()
        qq[J] = x
        gg = det_gradient(grams, qq, J)
        det = np.linalg.det(build_m(grams, qq)).real
        return np.concatenate([(eJ - lam * gg) / np.linalg.norm(eJ), [det / dscale]]), gg

    x = q[J].copy()
    F, g = residual(x, lam)
    h = 1e-6
    for _ in range(opts.newton_iters):
        if np.linalg.norm(F) < 1e-14:
            break
        H = np.empty((J.size, J.size))
        for c in range(J.size):
            xa, xb = x.copy(), x.copy()
            xa[c] -= h
            xb[c] += h
            qa, qb = q.copy(), q.copy()
            qa[J], qb[J] = xa, xb
            H[:, c] = (det_gradient(grams, qb, J) - det_gradient(grams, qa, J)) / (2 * h)
        en = np.linalg.norm(eJ)
        jac = np.zeros((J.size + 1, J.size + 1))
        jac[:J.size, :J.size] = -lam * H / en
        jac[:J.size, J.size] = -g / en
        jac[J.size, :J.size] = g / dscale
        try:
            step = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            break
        a, improved = 1.0, False
        for _ in range(30):
            xn = np.clip(x + a * step[:J.size], 1e-15, 1.0 - 1e-15)
            ln = lam + a * step[J.size]
            Fn, gn = residual(xn, ln)
            if np.linalg.norm(Fn) < np.linalg.norm(F):
                x, lam, F, g, improved = xn, ln, Fn, gn, True
                break
            a *= 0.5
        if not improved:
            break
    qn = q.copy()
    qn[J] = x
    d = 1.0 - qn
    if np.any(d < 0) or not np.any(d > 0):
        return None
    qp, _ = ray_boundary(grams, d / np.linalg.norm(d))
    return qp


def _better(a, b, slack=1e-12):
    """True if candidate ``a`` = (Q, q) beats ``b``: lower Q, ties broken lexicographically."""
    if b is None:
        return True
    if a[0] < b[0] - slack:
        return True
    if a[0] > b[0] + slack:
        return False
    return tuple(a[1]) < tuple(b[1])


def certify(grams, eta, q, opts=None):
    """Classify an optimum: tangency on ``det = 0``, cube face, or neither."""
    opts = opts or OptimizeOptions()
    q = np.asarray(q, dtype=float)
    M = build_m(grams, q)
    det = float(np.linalg.det(M).real)
    at_one = q >= 1.0 - 1e-9
    at_zero = q <= 1e-9
    J = np.flatnonzero(~at_one & ~at_zero)
    resid = 1.0
    if J.size:
        resid = tangency_residual(fd_det_gradient(grams, q, J, opts.fd_step), eta[J])
    if np.any(at_one | at_zero):
        cert = Certificate.CUBE_FACE
    elif abs(det) <= surface_tolerance(grams) and resid <= opts.kkt_tol:
        cert = Certificate.SURFACE_TANGENT
    else:
        cert = Certificate.DEGENERATE
    return cert, det, resid


def optimize(problem, options=None, **kwargs):
    """Minimize ``sum(eta * q)`` over realizable ``q``.

    ``options`` is an :class:`OptimizeOptions`; keyword arguments override
    its fields. Never raises on poor convergence: the best point found is
    returned with ``certificate = Degenerate`` and ``converged = False``.
    """
    opts = replace(options or OptimizeOptions(), **kwargs)
    grams = build_grams(problem)
    eta = np.asarray(problem.priors if opts.weights is None else opts.weights, dtype=float)
    if eta.shape != (problem.N,) or np.any(eta <= 0) or not np.all(np.isfinite(eta)):
        raise ValueError("weights must be a positive vector with one entry per state")
    N = eta.size
    count = opts.multistart or default_multistart(N)

    scored = []
    for d in start_directions(N, count, eta):
        q, _ = ray_boundary(grams, d)
        scored.append((float(eta @ q), tuple(q), d))
    scored.sort(key=lambda t: (t[0], t[1]))

    best = None
    everything = np.arange(N)
    seen = []
    for Q0, q0, d0 in scored:
        if len(seen) >= opts.refine:
            break
        if any(np.allclose(d0, s, atol=1e-3) for s in seen):
            continue
        seen.append(d0)
        cands = [(Q0, np.array(q0))]
        Q1, q1 = _refine(grams, eta, d0, everything)
        cands.append((Q1, q1))
        face = q1 >= 1.0 - 1e-6
        if face.any() and not face.all():
            free = np.flatnonzero(~face)
            dface = np.where(face, 0.0, 1.0 - q1)
            cands.append(_refine(grams, eta, dface / np.linalg.norm(dface), free))
        for c in cands:
            if _better(c, best):
                best = c

    Qb, qb = best
    polished = _polish(grams, eta, qb, opts)
    if polished is not None:
        Qp = float(eta @ polished)
        if Qp <= Qb + 1e-11:
            Qb, qb = Qp, polished
        else:
            log.debug("polish rejected: Q %.16g -> %.16g", Qb, Qp)

    converged = bool(check(grams, qb, opts.tol).feasible)
    cert, det, resid = certify(grams, eta, qb, opts)
    if not converged:
        cert = Certificate.DEGENERATE
    return Optimum(q_star=ParameterPoint(qb), Q=float(eta @ qb), success=1.0 - float(eta @ qb),
                   certificate=cert, det_at_opt=det, gradient_residual=resid,
                   converged=converged and cert is not Certificate.DEGENERATE)


def identify(states, priors=None, m=1, options=None, **kwargs):
    """Optimal unambiguous identification: ``optimize`` with identity flag overlaps."""
    if not isinstance(states, StateSet):
        states = np.asarray(states, dtype=complex)
        states = StateSet(dim=states.shape[1], states=states)
    return optimize(CloningProblem(states, m=m, priors=priors), options, **kwargs)


# ------------------------------------------------------------------ N = 2

def aligned_alpha(s, m, n, mag):
    """2x2 flag overlap with modulus ``mag`` whose phase aligns ``alpha s^n`` with ``s^m``."""
    phase = np.exp(1j * (m - n) * np.angle(s)) if s != 0 else 1.0
    a = mag * phase
    return np.array([[1.0, a], [np.conj(a), 1.0]], dtype=complex)


def _two_curve_q2(q1, a, b):
    """Smallest ``q2`` with ``sqrt(q1 q2) + b sqrt(p1 p2) = a`` (``q2 = sin^2 theta2``)."""
    s1, c1 = np.sqrt(q1), np.sqrt(max(0.0, 1.0 - q1))
    R = np.hypot(b * c1, s1)
    phi = np.arctan2(s1, b * c1)
    theta2 = max(0.0, phi - np.arccos(min(1.0, a / R)))
    return min(1.0, np.sin(theta2) ** 2)


def optimize_two(states, m=1, n=2, alpha_mag=1.0, priors=None):
    """Closed-form optimum for two states.

    On the optimal curve ``|s|^m = sqrt(p1 p2) |alpha| |s|^n + sqrt(q1 q2)``
    (with the flag phase aligned). The curve is parametrized by ``q1`` and the
    stationarity condition ``eta || grad C`` is solved by Brent's method;
    endpoints on the cube faces are also compared. ``alpha_mag = 0`` is
    identification.
    """
    if isinstance(states, CloningProblem):
        states = states.states
    if not isinstance(states, StateSet):
        states = np.asarray(states, dtype=complex)
        states = StateSet(dim=states.shape[1], states=states)
    if states.count != 2:
        raise UnsupportedDimension(f"optimize_two needs 2 states, got {states.count}")
    if not 0.0 <= alpha_mag <= 1.0:
        raise ValueError("alpha_mag must be in [0, 1]")
    S = compute_overlaps(states)
    s = S[0, 1]
    alpha = None if alpha_mag == 0 else aligned_alpha(s, m, n, alpha_mag)
    problem = CloningProblem(states, m=m, n=n, alpha=alpha, priors=priors)
    eta = problem.priors
    a = abs(s) ** m
    b = alpha_mag * abs(s) ** n

    if a == 0.0:
        q = np.zeros(2)
    else:
        q1_lo = (a * a - b * b) / (1.0 - b * b)

        def curve(q1):
            return np.array([q1, _two_curve_q2(q1, a, b)])

        def k(q1):
            q1_, q2 = curve(q1)
            p1, p2 = 1.0 - q1_, 1.0 - q2
            c_q1 = 0.5 * (np.sqrt(q2 / q1_) - (b * np.sqrt(p2 / p1) if b else 0.0))
            c_q2 = 0.5 * (np.sqrt(q1_ / q2) - (b * np.sqrt(p1 / p2) if b else 0.0))
            return eta[0] * c_q2 - eta[1] * c_q1

        cands = [curve(q1_lo), curve(1.0)]
        # stationary points can sit arbitrarily close to either end of the curve
        edge = np.logspace(-14, -3, 45)
        u = np.unique(np.concatenate([edge, np.linspace(0.0, 1.0, 401)[1:-1], 1.0 - edge]))
        grid = q1_lo + (1.0 - q1_lo) * u
        grid = grid[(grid > q1_lo) & (grid < 1.0)]
        vals = [k(x) for x in grid]
        for x0, x1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if np.sign(v0) != np.sign(v1):
                root = spo.brentq(k, x0, x1, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
                cands.append(curve(root))
        q = min(cands, key=lambda c: (float(eta @ c), tuple(c)))

    grams = build_grams(problem)
    cert, det, resid = certify(grams, eta, q)
    Q = float(eta @ q)
    return Optimum(q_star=ParameterPoint(q), Q=Q, success=1.0 - Q, certificate=cert,
                   det_at_opt=det, gradient_residual=resid)


def two_state_residual(s_abs, m, n, alpha_mag, q):
    """``|s|^m - sqrt(p1 p2)|alpha||s|^n - sqrt(q1 q2)``."""
    q = np.asarray(q, dtype=float)
    p = 1.0 - q
    return s_abs ** m - np.sqrt(p[0] * p[1]) * alpha_mag * s_abs ** n - np.sqrt(q[0] * q[1])


# ------------------------------------------------------------------- surface

def mesh_directions(resolution):
    """``resolution**2`` strictly positive unit directions on a spherical-angle grid."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    ang = (np.arange(resolution) + 0.5) / resolution * (np.pi / 2)
    out = []
    for th in ang:
        for ph in ang:
            out.append(np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))
    return out


def surface_mesh(problem, resolution):
    """Boundary points of the realizable region on a grid of ray directions (``N = 3``)."""
    if problem.N != 3:
        raise UnsupportedDimension(f"surface mesh is defined for 3 states, got {problem.N}")
    grams = build_grams(problem)
    return [ParameterPoint(ray_boundary(grams, d)[0]) for d in mesh_directions(resolution)]
