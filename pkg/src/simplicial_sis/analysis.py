"""Parameter-space classification from the sufficient conditions.

All conditions are sufficient, not necessary, so a model can satisfy none
of them; it is then reported as ``Indeterminate`` together with every
certifying quantity that was computed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import PreconditionViolated
from .model import HigherOrderSis, ScalarSis, SimplicialSis


class Domain(str, enum.Enum):
    DISEASE_FREE = "disease-free"
    BISTABLE = "bistable"
    ENDEMIC = "endemic"
    INDETERMINATE = "indeterminate"
    UNDECIDED = "undecided"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DomainClassification:
    """Theory verdict plus the numbers that certify it.

    ``bistable_margin`` is NaN when no group has higher-order interactions
    (the bistable condition is then vacuous).
    """

    domain: Domain
    reproduction_number: float
    disease_free_lhs: float
    bistable_margin: float

    @property
    def endemic_condition(self) -> bool:
        return self.reproduction_number > 1.0 + STRICT_MARGIN

    @property
    def disease_free_condition(self) -> bool:
        return self.disease_free_lhs < 1.0 - STRICT_MARGIN

    @property
    def bistable_condition(self) -> bool:
        return self.reproduction_number < 1.0 - STRICT_MARGIN and self.bistable_margin >= 0.0


@dataclass(frozen=True)
class ScalarDiagnostics:
    v_c: float
    nu_minus: float | None
    nu_plus: float | None
    domain: Domain


def reproduction_number(model) -> float:
    """``beta1 * rho(Gamma^-1 A)``."""
    return model.beta1 * linalg.spectral_radius(model.A / model.gamma[:, None])


def disease_free_matrix(model: SimplicialSis, beta1=None, beta2=None) -> np.ndarray:
    beta1 = model.beta1 if beta1 is None else beta1
    beta2 = model.beta2 if beta2 is None else beta2
    return (beta1 * model.A + beta2 * model.b_column_sums) / model.gamma[:, None]


# Strict inequalities must hold beyond rounding noise to certify anything.
STRICT_MARGIN = 1e-12


def _decide(R, rho_df, margin) -> Domain:
    if R > 1.0 + STRICT_MARGIN:
        return Domain.ENDEMIC
    if rho_df < 1.0 - STRICT_MARGIN:
        return Domain.DISEASE_FREE
    if R < 1.0 - STRICT_MARGIN and margin >= 0.0:
        return Domain.BISTABLE
    return Domain.INDETERMINATE


def bistable_margin(model: SimplicialSis) -> float:
    eta = model.eta
    groups = np.flatnonzero(eta)
    if groups.size == 0:
        return math.nan
    A_eta = model.A @ eta
    quad = np.einsum("ijk,j,k->i", model.B, eta, eta)
    vals = (model.beta1 / model.gamma * A_eta + model.beta2 / (2.0 * model.gamma) * quad)[groups]
    return float(vals.min() - 2.0)


def classify_theory(model: SimplicialSis) -> DomainClassification:
    R = reproduction_number(model)
    rho_df = linalg.spectral_radius(disease_free_matrix(model))
    margin = bistable_margin(model)
    return DomainClassification(_decide(R, rho_df, margin), R, rho_df, margin)


def higher_order_collapse(model: HigherOrderSis) -> np.ndarray:
    """``Gamma^-1 sum_k beta_k Bhat_k`` where ``Bhat_k[i, j]`` sums the
    weights of order-``k`` hyperedges with target ``i`` and first source ``j``."""
    n = model.n
    out = np.zeros((n, n))
    for hs in model.orders.values():
        np.add.at(out, (hs.targets, hs.sources[:, 0]), hs.beta * hs.weights)
    return out / model.gamma[:, None]


def bistable_margin_higher(model: HigherOrderSis) -> float:
    n = model.n
    ind = model.indicator
    groups = np.flatnonzero(ind)
    if groups.size == 0:
        return math.nan
    frac = (n - 2) / (n - 1)
    total = model.beta1 * (model.A @ ind)
    for k, hs in model.orders.items():
        hits = hs.weights * np.prod(ind[hs.sources], axis=1)
        total = total + hs.beta * frac ** (k - 1) * np.bincount(hs.targets, weights=hits, minlength=n)
    return float((total / model.gamma)[groups].min() - (n - 1))


def classify_theory_higher(model: HigherOrderSis) -> DomainClassification:
    R = reproduction_number(model)
    rho_df = linalg.spectral_radius(model.beta1 * model.A / model.gamma[:, None]
                                    + higher_order_collapse(model))
    margin = bistable_margin_higher(model)
    return DomainClassification(_decide(R, rho_df, margin), R, rho_df, margin)


def classify(model) -> DomainClassification:
    if isinstance(model, HigherOrderSis):
        return classify_theory_higher(model)
    return classify_theory(model)


def _quadratic_roots(model: ScalarSis):
    # Nonzero equilibria solve b2 y^2 - (b2 - b1) y - (b1 - g) = 0.
    g, b1, b2 = model.gamma, model.beta1, model.beta2
    disc = (b1 - b2) ** 2 - 4.0 * b2 * (g - b1)
    if disc < 0:
        return None, None
    root = math.sqrt(disc)
    p = b2 - b1
    # Pair the larger-magnitude root with Vieta's product to avoid cancellation.
    big = (p + math.copysign(root, p if p != 0 else 1.0)) / (2.0 * b2)
    if big == 0.0:
        return 0.0, 0.0
    other = (g - b1) / (b2 * big)
    return min(big, other), max(big, other)


def scalar_classify(model: ScalarSis) -> ScalarDiagnostics:
    """Domain of the scalar model with its two interior equilibria.

    ``nu_minus``/``nu_plus`` are reported only when real and inside (0, 1].
    """
    r1 = model.beta1 / model.gamma
    r2 = model.beta2 / model.gamma
    v_c = 2.0 * math.sqrt(r2) - r2
    if r1 > 1.0:
        domain = Domain.ENDEMIC
    elif (r2 <= 1.0 and r1 <= 1.0) or (r2 > 1.0 and r1 < v_c):
        domain = Domain.DISEASE_FREE
    elif r2 > 1.0 and v_c < r1 < 1.0:
        domain = Domain.BISTABLE
    else:
        domain = Domain.INDETERMINATE
    lo, hi = _quadratic_roots(model)
    inside = lambda y: y is not None and 0.0 < y <= 1.0  # noqa: E731
    return ScalarDiagnostics(v_c=v_c,
                             nu_minus=lo if inside(lo) else None,
                             nu_plus=hi if inside(hi) else None,
                             domain=domain)


def beta2_bistable_threshold(model: SimplicialSis) -> float | None:
    """Smallest ``beta2`` meeting the bistable condition at the model's ``beta1``.

    The model's own ``beta2`` is ignored.  Returns ``None`` when no group has
    higher-order terms or when some nonzero ``B_i`` has ``eta^T B_i eta = 0``
    (raising ``beta2`` can then never satisfy the condition).
    """
    if reproduction_number(model) >= 1.0:
        raise PreconditionViolated("bistable threshold needs beta1 * rho(Gamma^-1 A) < 1")
    eta = model.eta
    groups = np.flatnonzero(eta)
    if groups.size == 0:
        return None
    quad = np.einsum("ijk,j,k->i", model.B, eta, eta)[groups]
    if np.any(quad <= 0):
        return None
    gamma = model.gamma[groups]
    deficit = 2.0 - model.beta1 / gamma * (model.A @ eta)[groups]
    return float(np.max(np.maximum(2.0 * gamma * deficit, 0.0) / quad))


def disease_free_boundary_beta2(model: SimplicialSis, beta1: float, tol: float = 1e-10) -> float:
    """``beta2`` at which the disease-free spectral condition becomes an equality.

    Bisection on the nondecreasing map ``beta2 -> rho(...)``.  Returns 0 when
    ``beta1`` sits on the epidemic threshold and ``inf`` when every ``B_i`` is
    zero (the spectral radius then never moves).
    """
    base = beta1 * linalg.spectral_radius(model.A / model.gamma[:, None])
    if base > 1.0 + 1e-12:
        raise PreconditionViolated("disease-free boundary needs rho(beta1 Gamma^-1 A) < 1")
    if base >= 1.0 - 1e-12:
        return 0.0
    if not model.eta.any():
        return math.inf

    def rho(b2):
        return linalg.spectral_radius(disease_free_matrix(model, beta1, b2))

    lo, hi = 0.0, 1.0
    while rho(hi) < 1.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if rho(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
