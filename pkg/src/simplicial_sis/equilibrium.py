"""Endemic equilibria: monotone fixed-point iteration and stability checks.

An interior point ``x`` is an equilibrium iff it is a fixed point of

    H(y) = H+(beta1 Gamma^-1 A y + beta2 Gamma^-1 (y^T B_1 y, ..., y^T B_n y)),

with ``H+`` applying ``z -> z / (1 + z)`` entrywise.  ``H`` is monotone on
the nonnegative orthant, so iterating it from a point with ``H(y0) >= y0``
produces a nondecreasing sequence that converges to an endemic state.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import linalg
from .analysis import Domain, classify_theory
from .errors import MonotonicityViolation, NotEquilibrium, PreconditionViolated
from .model import (
    SimplicialSis,
    as_state,
    decomposition_D,
    field,
    jacobian_any,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1_000_000
MONOTONE_SLACK = 1e-14
STABILITY_MARGIN = 1e-9


class Stability(str, enum.Enum):
    EXPONENTIALLY_STABLE = "exponentially-stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IterationTrace:
    iterates: np.ndarray   # (k + 1, n)
    residuals: np.ndarray  # (k,) sup-norm step sizes


@dataclass(frozen=True)
class EquilibriumResult:
    xstar: np.ndarray
    converged: bool
    iterations: int
    residual: float
    stability: Stability | None


@dataclass(frozen=True)
class Certificate:
    """Outcome of the sampled contraction test.

    ``rate`` is the largest ``c`` with ``mu(D(x, x*)) <= -c`` at every tested
    point (only meaningful when ``certified``); ``worst_measure`` is the
    largest measure seen.  This is evidence from samples, not a proof.
    """

    certified: bool
    rate: float
    worst_measure: float
    points: int


class _FixedPointMap:
    def __init__(self, model: SimplicialSis):
        n = model.n
        self.n = n
        self.A_bar = model.beta1 * model.A / model.gamma[:, None]
        self.B_bar = (model.beta2 * model.B / model.gamma[:, None, None]).reshape(n, n * n)

    def __call__(self, y):
        z = self.A_bar @ y + self.B_bar @ np.outer(y, y).ravel()
        return z / (1.0 + z)


def fixed_point_map(model: SimplicialSis, y) -> np.ndarray:
    y = as_state(y, model.n)
    return _FixedPointMap(model)(y)


def initial_guess(model: SimplicialSis, domain: Domain) -> np.ndarray:
    """``eta / 2`` when bistable, ``(1 - 1/lam) u`` when endemic.

    ``u`` is the Perron vector of ``beta1 Gamma^-1 A`` scaled to unit max and
    ``lam = min_i (A_bar u)_i / u_i`` its Collatz-Wielandt lower bound.  With
    ``lam`` in place of the exact radius, ``H(y0) >= y0`` holds for the
    computed ``u`` itself, not only up to the eigenvector's error.
    """
    if domain is Domain.BISTABLE:
        return 0.5 * model.eta
    A_bar = model.beta1 * model.A / model.gamma[:, None]
    u = linalg.perron_eigenpair(A_bar).vector
    u = u / u.max()
    lam = float(np.min((A_bar @ u) / u))
    return (1.0 - 1.0 / lam) * u


def check_equilibrium(model, x, tol: float = 1e-8):
    """``(ok, residual)`` with ``residual = ||f(x)||_inf``."""
    residual = float(np.max(np.abs(field(model, x))))
    return residual <= tol, residual


def endemic_iterate(model: SimplicialSis, domain_hint, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER, keep_trace: bool = True):
    """Iterate ``H`` from the domain's start point until the step is below ``tol``.

    Returns ``(EquilibriumResult, IterationTrace)``; the trace is ``None``
    when ``keep_trace`` is false.  Iteration continues past a small step while
    ``||f(x)||_inf > 10 tol max(gamma)`` and progress is still possible.
    """
    hint = Domain(domain_hint)
    if hint not in (Domain.BISTABLE, Domain.ENDEMIC):
        raise PreconditionViolated(f"domain hint must be bistable or endemic, not {hint}")
    verdict = classify_theory(model).domain
    if verdict is not hint:
        raise PreconditionViolated(f"model classifies as {verdict}, not {hint}")

    H = _FixedPointMap(model)
    target = 10.0 * tol * float(model.gamma.max())
    y = initial_guess(model, hint)
    iterates = [y] if keep_trace else None
    steps = []
    residual = float(np.max(np.abs(field(model, y))))
    it = 0
    while it < max_iter:
        nxt = H(y)
        it += 1
        diff = nxt - y
        if diff.min() < -MONOTONE_SLACK:
            raise MonotonicityViolation(f"iterate decreased by {-diff.min():.3g} at step {it}")
        step = float(np.max(np.abs(diff)))
        y = nxt
        steps.append(step)
        if keep_trace:
            iterates.append(y)
        if step <= tol:
            residual = float(np.max(np.abs(field(model, y))))
            if residual <= target or step == 0.0:
                break
    else:
        residual = float(np.max(np.abs(field(model, y))))

    converged = residual <= target
    if not converged:
        log.warning("endemic iteration stopped after %d steps with residual %.3g", it, residual)
    stability = local_stability(model, y) if converged else None
    result = EquilibriumResult(xstar=y, converged=converged, iterations=it,
                               residual=residual, stability=stability)
    trace = IterationTrace(np.array(iterates), np.array(steps)) if keep_trace else None
    return result, trace


def local_stability(model, xstar) -> Stability:
    """Linearized stability verdict from the dominant eigenvalue of the Metzler Jacobian."""
    ok, residual = check_equilibrium(model, xstar, tol=1e-6)
    if not ok:
        raise NotEquilibrium(f"||f(x)||_inf = {residual:.3g} exceeds 1e-6")
    abscissa = linalg.metzler_abscissa(jacobian_any(model, xstar))
    if abscissa < -STABILITY_MARGIN:
        return Stability.EXPONENTIALLY_STABLE
    if abscissa > STABILITY_MARGIN:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def default_alpha(model: SimplicialSis, xstar) -> float:
    # u has unit max, so alpha <= min(x*)/2 keeps the box floor below x*.
    rho = linalg.spectral_radius(model.A / model.gamma[:, None])
    return min(0.01 / rho, 0.5 * float(np.min(xstar)))


def certificate_points(lower, samples: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points in the box ``[lower, 1]`` plus all corners for n <= 12."""
    n = lower.shape[0]
    parts = []
    if samples > 0:
        unit = qmc.Sobol(d=n, scramble=True, seed=seed).random(samples)
        parts.append(lower + unit * (1.0 - lower))
    if n <= 12:
        bits = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        parts.append(np.where(bits == 1, 1.0, lower))
    return np.vstack(parts)


def contraction_certificate(model: SimplicialSis, xstar, alpha: float | None = None,
                            samples: int = 256, seed: int = 0, points=None) -> Certificate:
    """Sampled check that ``D(x, x*) x* <= -c x*`` on ``{alpha u <= x <= 1}``.

    For Metzler ``D`` this is ``mu_{inf, diag(x*)^-1}(D(x, x*)) <= -c``; with
    the measure negative on the whole (convex, forward invariant) box, every
    trajectory in it converges to ``x*`` at rate ``c``.  ``u`` is the Perron
    vector of ``Gamma^-1 A`` scaled to unit max.  Pass ``points`` to test an
    explicit set instead of the sampled box.
    """
    xstar = as_state(xstar, model.n)
    if np.any(xstar <= 0):
        raise PreconditionViolated("x* must be strictly positive")
    u = linalg.perron_eigenpair(model.A / model.gamma[:, None]).vector
    u = u / u.max()
    if points is None:
        if alpha is None:
            alpha = default_alpha(model, xstar)
        lower = alpha * u
        if np.any(lower >= xstar):
            raise PreconditionViolated("alpha too large: alpha * u must lie below x*")
        points = certificate_points(lower, samples, seed)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = 1.0 / xstar
    worst = max(linalg.matrix_measure_inf(decomposition_D(model, x, xstar), weights) for x in points)
    return Certificate(certified=worst < 0.0, rate=max(-worst, 0.0),
                       worst_measure=worst, points=len(points))
