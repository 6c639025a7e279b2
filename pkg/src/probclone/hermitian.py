"""Dense Hermitian linear algebra: PSD tests, determinants, principal minors
and PSD factorization.

Matrices are plain complex ``numpy`` arrays. Every public function passes its
input through :func:`hermitian`, which symmetrizes it, so callers may hand in
matrices that are Hermitian only up to rounding.
"""

import itertools

import numpy as np

from .errors import NotPSDError

#: Absolute floor applied to every relative tolerance.
ABS_FLOOR = 1e-14
#: Default relative tolerance of :func:`is_psd`.
PSD_TOL = 1e-10
#: Largest order for which :func:`principal_minors` will enumerate subsets.
MAX_MINOR_ORDER = 20


def hermitian(M):
    """Return ``(M + M^H) / 2`` with an exactly real diagonal."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    H = 0.5 * (M + M.conj().T)
    H[np.diag_indices_from(H)] = H.diagonal().real
    return H


def spectral_norm(M):
    M = hermitian(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(M))))


def scale_of(M):
    """Scale used to make tolerances relative: ``max(1, ||M||_2)``."""
    return max(1.0, spectral_norm(M))


def min_eigenvalue(M):
    return float(np.linalg.eigvalsh(hermitian(M))[0])


def is_psd(M, tol=PSD_TOL):
    """True iff the smallest eigenvalue is >= ``-tol * max(1, ||M||)``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = np.linalg.eigvalsh(hermitian(M))
    scale = max(1.0, float(np.max(np.abs(w))))
    return bool(w[0] >= -max(tol * scale, ABS_FLOOR if tol > 0 else 0.0))


def determinant(M):
    """Real determinant of a Hermitian matrix via LU factorization."""
    M = hermitian(M)
    if M.shape[0] == 0:
        return 1.0
    return float(np.linalg.det(M).real)


def principal_minors(M, max_order=None):
    """All principal minors up to ``max_order``.

    Returns a list of ``(indices, det)`` pairs ordered by subset size and then
    lexicographically. There are ``2^N - 1`` of them for the full order, so this
    is meant for small matrices; it refuses ``N > 20``.
    """
    M = hermitian(M)
    N = M.shape[0]
    if N > MAX_MINOR_ORDER:
        raise ValueError(f"order {N} too large for minor enumeration (max {MAX_MINOR_ORDER})")
    if max_order is None:
        max_order = N
    if not 1 <= max_order <= N:
        raise ValueError(f"max_order must be in [1, {N}]")
    out = []
    for k in range(1, max_order + 1):
        for idx in itertools.combinations(range(N), k):
            sub = M[np.ix_(idx, idx)]
            out.append((idx, float(np.linalg.det(sub).real)))
    return out


def is_psd_by_minors(M, tol=PSD_TOL):
    """Sylvester-type criterion: every principal minor is >= ``-tol * scale^k``.

    Exponential in the order; kept as an independent cross-check of
    :func:`is_psd`.
    """
    M = hermitian(M)
    scale = scale_of(M)
    return all(d >= -tol * scale ** len(idx) for idx, d in principal_minors(M))


def adjugate(M):
    """Adjugate of a Hermitian matrix from its eigendecomposition.

    Stays accurate on the singular set, where ``det(M) * inv(M)`` does not.
    """
    M = hermitian(M)
    w, V = np.linalg.eigh(M)
    N = len(w)
    cof = np.empty(N)
    for j in range(N):
        cof[j] = np.prod(np.delete(w, j)) if N > 1 else 1.0
    return (V * cof) @ V.conj().T


def psd_factor(M, tol=PSD_TOL, rank_tol=1e-12):
    """Factor a PSD matrix as ``M = F F^H``.

    Eigenvalues within ``tol`` of zero (relative to the matrix scale) are
    clamped to zero; eigenvalues at or below ``rank_tol * scale`` are dropped,
    so ``F`` has ``r`` = numerical rank columns. Columns are ordered by
    decreasing eigenvalue and each eigenvector's phase is fixed so its largest
    entry is real and positive, which makes the factor deterministic.

    Rows of ``F`` are the realizing vectors: ``M[i, j] = F[i] . conj(F[j])``.
    """
    M = hermitian(M)
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if w.size and w[0] < -max(tol * scale, ABS_FLOOR):
        raise NotPSDError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    keep = w > max(rank_tol * scale, ABS_FLOOR)
    w, V = w[keep], V[:, keep]
    for k in range(V.shape[1]):
        col = V[:, k]
        j = int(np.argmax(np.abs(col)))
        V[:, k] = col * (abs(col[j]) / col[j])
    return V * np.sqrt(w)


def batched_psd_by_minors(Ms, tol=PSD_TOL, scale=1.0):
    """Vectorized principal-minor PSD test over a stack of matrices.

    ``Ms`` has shape ``(K, N, N)``. Returns a boolean array of length ``K``
    together with the full determinants. A minor of order ``k`` passes when
    it is >= ``-tol * scale^k``.
    """
    Ms = np.asarray(Ms, dtype=complex)
    N = Ms.shape[1]
    diag = [Ms[:, i, i].real for i in range(N)]
    upper = {(i, j): Ms[:, i, j] for i in range(N) for j in range(i + 1, N)}
    return psd_by_minors_from_entries(diag, upper, tol, scale)


def psd_by_minors_from_entries(diag, upper, tol=PSD_TOL, scale=1.0):
    """Principal-minor PSD test from entry arrays of a batch of Hermitian matrices.

    ``diag[i]`` holds the (real) diagonal entries ``M[:, i, i]`` and
    ``upper[(i, j)]`` the entries ``M[:, i, j]`` for ``i < j``. Orders 1 to 3
    use closed-form determinants; larger principal submatrices are assembled
    and passed to ``numpy.linalg.det``.
    """
    N = len(diag)
    K = np.shape(diag[0])[0]
    ok = np.ones(K, dtype=bool)
    full = None
    for k in range(1, N + 1):
        thr = -tol * scale ** k
        for idx in itertools.combinations(range(N), k):
            d = _minor(diag, upper, idx)
            ok &= d >= thr
            if k == N:
                full = d
    return ok, full


def _minor(diag, upper, idx):
    if len(idx) == 1:
        return diag[idx[0]]
    if len(idx) == 2:
        i, j = idx
        return diag[i] * diag[j] - np.abs(upper[i, j]) ** 2
    if len(idx) == 3:
        i, j, k = idx
        x, y, z = upper[i, j], upper[j, k], np.conj(upper[i, k])
        return (diag[i] * diag[j] * diag[k] - diag[i] * np.abs(y) ** 2
                - diag[j] * np.abs(z) ** 2 - diag[k] * np.abs(x) ** 2
                + 2.0 * (x * y * z).real)
    k = len(idx)
    sub = np.empty((np.shape(diag[0])[0], k, k), dtype=complex)
    for a, i in enumerate(idx):
        sub[:, a, a] = diag[i]
        for b in range(a + 1, k):
            j = idx[b]
            sub[:, a, b] = upper[i, j]
            sub[:, b, a] = np.conj(upper[i, j])
    return np.linalg.det(sub).real
