"""Dense nonnegative and Metzler matrix utilities.

Everything here works on small dense ``numpy`` arrays (n up to a few
hundred).  The dominant eigenpair is found by power iteration on ``M + I``:
for a nonnegative ``M`` the shift leaves the eigenvectors unchanged, adds
one to every eigenvalue, and makes the dominant eigenvalue strictly
dominant even when ``M`` is periodic (e.g. a permutation matrix).
Reducible matrices are split into strongly connected blocks first, since a
Jordan block at the top of the spectrum would slow the iteration to a crawl.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    NegativeEntry,
    NoConvergence,
    NonpositiveWeight,
    NotIrreducible,
    NotMetzler,
    ValidationError,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class EigenPair:
    """Dominant eigenvalue with its positive, unit-sum eigenvector."""

    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def as_square(M, name="M") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {M.shape}", name)
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries", name)
    return M


def is_nonnegative(M) -> bool:
    return bool(np.all(as_square(M) >= 0))


def is_metzler(M) -> bool:
    M = as_square(M)
    off = M - np.diag(np.diag(M))
    return bool(np.all(off >= 0))


def _reaches_all(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u] & ~seen):
            seen[v] = True
            queue.append(int(v))
    return bool(seen.all())


def is_irreducible(M) -> bool:
    """Strong connectivity of the graph with an edge i -> j whenever M[i, j] > 0.

    Node 0 must reach every node in the graph and in its reverse.
    """
    M = as_square(M)
    if np.any(M < 0):
        raise NegativeEntry("irreducibility is only defined for nonnegative matrices", "M")
    adj = M > 0
    return _reaches_all(adj) and _reaches_all(adj.T)


def _shifted_power_iteration(M, tol, max_iter):
    """Dominant eigenvalue of ``M + I`` minus one, for irreducible ``M``.

    Stops on the Collatz-Wielandt bracket ``min (Sx)_i / x_i <= rho(S) <=
    max (Sx)_i / x_i``, which bounds the error itself rather than the step.
    """
    n = M.shape[0]
    S = M + np.eye(n)
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        y = S @ x
        if np.all(x > 0):
            ratios = y / x
            lo, hi = float(ratios.min()), float(ratios.max())
            lam = 0.5 * (lo + hi)
            if hi - lo <= tol * max(1.0, lam):
                return lam - 1.0, x, it
        total = y.sum()
        if total <= 0.0:
            # S = M + I keeps the positive start vector positive
            raise NoConvergence("power iteration collapsed to zero")
        x = y / total
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def spectral_radius(M, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Spectral radius of a nonnegative matrix by shifted power iteration."""
    M = as_square(M)
    if np.any(M < 0):
        raise NegativeEntry("spectral_radius expects a nonnegative matrix", "M")
    ncomp, labels = connected_components(M > 0, directed=True, connection="strong")
    if ncomp == 1:
        rho, _, _ = _shifted_power_iteration(M, tol, max_iter)
        return max(rho, 0.0)
    # the spectrum of a reducible matrix is the union of its diagonal blocks'
    best = 0.0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1:
            best = max(best, float(M[idx[0], idx[0]]))
        else:
            rho, _, _ = _shifted_power_iteration(M[np.ix_(idx, idx)], tol, max_iter)
            best = max(best, rho)
    return best


def perron_eigenpair(M, side: str = "right", tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> EigenPair:
    """Perron-Frobenius eigenpair of an irreducible nonnegative matrix.

    ``side="left"`` returns the left eigenvector (iteration on ``M.T``).
    The vector is normalized to unit sum.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    M = as_square(M)
    if not is_irreducible(M):
        raise NotIrreducible("Perron eigenpair requires an irreducible matrix", "M")
    work = M.T if side == "left" else M
    rho, x, iters = _shifted_power_iteration(work, tol, max_iter)
    v = x / x.sum()
    residual = float(np.max(np.abs(work @ v - rho * v)))
    return EigenPair(value=rho, vector=v, residual=residual, iterations=iters)


def matrix_measure_inf(M, xi) -> float:
    """Matrix measure induced by the weighted sup-norm ``||diag(xi) x||_inf``.

    ``max_i (m_ii + xi_i * sum_{j != i} |m_ij| / xi_j)``
    """
    M = as_square(M)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (M.shape[0],):
        raise ValidationError(f"weight vector must have length {M.shape[0]}", "xi")
    if np.any(~(xi > 0)):
        raise NonpositiveWeight("weights must be strictly positive", "xi")
    off = np.abs(M)
    np.fill_diagonal(off, 0.0)
    rows = np.diag(M) + xi * (off @ (1.0 / xi))
    return float(np.max(rows))


def metzler_abscissa(M, tol: float = DEFAULT_TOL) -> float:
    """Largest real part of the spectrum of a Metzler matrix.

    With ``s = max|m_ii|`` the matrix ``M + sI`` is nonnegative, and its
    spectral radius minus ``s`` is the dominant (real) eigenvalue of ``M``.
    """
    M = as_square(M)
    if not is_metzler(M):
        raise NotMetzler("matrix has a negative off-diagonal entry", "M")
    s = float(np.max(np.abs(np.diag(M))))
    return spectral_radius(M + s * np.eye(M.shape[0]), tol=tol) - s


def is_hurwitz_metzler(M, tol: float = DEFAULT_TOL) -> bool:
    """True iff the Metzler matrix ``M`` is Hurwitz, with margin ``tol``."""
    return metzler_abscissa(M, tol=tol) < -tol
