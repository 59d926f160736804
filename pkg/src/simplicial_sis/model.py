"""Model containers, vector fields and Jacobians.

Three flavours are supported:

* :class:`ScalarSis` -- one homogeneous population,
  ``y' = -g y + b1 (1 - y) y + b2 (1 - y) y**2``.
* :class:`SimplicialSis` -- ``n`` groups with pairwise weights ``A`` and
  triadic weights ``B[i, j, k]`` (the ``i``-th slice is the matrix acting on
  target group ``i``).
* :class:`HigherOrderSis` -- pairwise weights plus sparse hyperedge lists of
  any order ``k`` in ``2..n-1``.

Models validate themselves on construction and are immutable afterwards.
Indices are 0-based in memory and 1-based in files and error messages.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .errors import (
    NegativeEntry,
    NonpositiveRate,
    NotIrreducible,
    OutOfDomain,
    ValidationError,
)

log = logging.getLogger(__name__)

DOMAIN_TOL = 1e-9


class _ClampStats:
    """Process-wide record of harmless rounding excursions outside [0, 1]."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0
        self.max_excursion = 0.0

    def record(self, excursion):
        with self._lock:
            self.count += 1
            self.max_excursion = max(self.max_excursion, excursion)

    def reset(self):
        with self._lock:
            self.count = 0
            self.max_excursion = 0.0


clamp_stats = _ClampStats()


def as_state(x, n: int, tol: float = DOMAIN_TOL) -> np.ndarray:
    """Coerce ``x`` to a state in ``[0, 1]^n``.

    Entries at most ``tol`` outside the box are clamped (and counted in
    :data:`clamp_stats`); anything further out raises :class:`OutOfDomain`.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise OutOfDomain(f"state must have {n} entries, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise OutOfDomain("state has non-finite entries")
    excursion = max(float(-x.min()), float(x.max() - 1.0), 0.0)
    if excursion > 0.0:
        if excursion > tol:
            raise OutOfDomain(f"state leaves [0, 1]^n by {excursion:.3g}")
        clamp_stats.record(excursion)
        log.debug("clamped state excursion %.3g", excursion)
        x = np.clip(x, 0.0, 1.0)
    return x


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_rates(gamma, n):
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if gamma.shape != (n,):
        raise ValidationError(f"gamma must have {n} entries", "gamma")
    for i, g in enumerate(gamma):
        if not (np.isfinite(g) and g > 0):
            raise NonpositiveRate(f"gamma[{i + 1}] = {g} must be positive", f"gamma[{i + 1}]")
    return gamma


def _check_positive(value, name):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise NonpositiveRate(f"{name} = {value} must be positive", name)
    return value


def _check_nonnegative_matrix(M, name):
    M = linalg.as_square(M, name)
    bad = np.argwhere(M < 0)
    if bad.size:
        i, j = bad[0]
        raise NegativeEntry(f"{name}[{i + 1},{j + 1}] = {M[i, j]} is negative",
                            f"{name}[{i + 1},{j + 1}]")
    return M


def _check_pairwise(A, n):
    A = _check_nonnegative_matrix(A, "A")
    if A.shape != (n, n):
        raise ValidationError(f"A must be {n}x{n}", "A")
    if not linalg.is_irreducible(A):
        raise NotIrreducible("A must be irreducible (strongly connected contact graph)", "A")
    return A


@dataclass(frozen=True, eq=False)
class ScalarSis:
    gamma: float
    beta1: float
    beta2: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_positive(self.gamma, "gamma"))
        object.__setattr__(self, "beta1", _check_positive(self.beta1, "beta1"))
        object.__setattr__(self, "beta2", _check_positive(self.beta2, "beta2"))


@dataclass(frozen=True, eq=False)
class SimplicialSis:
    """Multi-group SIS model with pairwise and triadic infection terms.

    ``B[i]`` holds the coefficients ``b_ijk`` for target group ``i``.  ``eta``
    flags the groups whose ``B[i]`` is not identically zero.
    """

    gamma: np.ndarray
    A: np.ndarray
    B: np.ndarray
    beta1: float
    beta2: float
    eta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = linalg.as_square(self.A, "A")
        n = A.shape[0]
        gamma = _check_rates(self.gamma, n)
        A = _check_pairwise(A, n)
        B = np.asarray(self.B, dtype=float)
        if B.shape != (n, n, n):
            raise ValidationError(f"B must hold {n} matrices of size {n}x{n}, got shape {B.shape}", "B")
        for i in range(n):
            _check_nonnegative_matrix(B[i], f"B[{i + 1}]")
        object.__setattr__(self, "gamma", _frozen(gamma))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "beta1", _check_positive(self.beta1, "beta1"))
        object.__setattr__(self, "beta2", _check_positive(self.beta2, "beta2"))
        object.__setattr__(self, "eta", _frozen(np.any(B != 0, axis=(1, 2)).astype(float)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def with_rates(self, beta1=None, beta2=None) -> "SimplicialSis":
        return replace(self,
                       beta1=self.beta1 if beta1 is None else beta1,
                       beta2=self.beta2 if beta2 is None else beta2)

    @property
    def b_column_sums(self) -> np.ndarray:
        """Matrix whose ``i``-th row is ``1^T B_i``."""
        return self.B.sum(axis=1)

    def triad_terms(self, x) -> np.ndarray:
        """``(x^T B_1 x, ..., x^T B_n x)``."""
        return np.einsum("ijk,j,k->i", self.B, x, x)


@dataclass(frozen=True, eq=False)
class HyperedgeSet:
    """All hyperedges of one order ``k`` and their shared rate ``beta``."""

    k: int
    beta: float
    targets: np.ndarray
    sources: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_list(cls, k, beta, edges):
        """Build from ``[(target, (source_1, ..., source_k), weight), ...]`` (0-based)."""
        edges = list(edges)
        targets = np.array([e[0] for e in edges], dtype=np.int64)
        sources = np.array([list(e[1]) for e in edges], dtype=np.int64).reshape(len(edges), k)
        weights = np.array([e[2] for e in edges], dtype=float)
        return cls(k=int(k), beta=float(beta), targets=targets, sources=sources, weights=weights)

    def products(self, x) -> np.ndarray:
        return self.weights * np.prod(x[self.sources], axis=1)


@dataclass(frozen=True, eq=False)
class HigherOrderSis:
    """General higher-order SIS model with sparse order-``k`` hyperedges.

    ``orders`` maps ``k`` to a :class:`HyperedgeSet`.  ``indicator`` is 1 for
    every group that receives at least one positively weighted hyperedge.
    """

    gamma: np.ndarray
    A: np.ndarray
    beta1: float
    orders: Mapping[int, HyperedgeSet]
    indicator: np.ndarray = field(init=False, repr=False)
    b_star: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = linalg.as_square(self.A, "A")
        n = A.shape[0]
        gamma = _check_rates(self.gamma, n)
        A = _check_pairwise(A, n)
        b_star = np.zeros(n)
        orders = {}
        for k, hs in sorted(dict(self.orders).items()):
            if hs.k != k:
                raise ValidationError(f"order key {k} does not match hyperedge order {hs.k}", f"orders[k={k}]")
            if not 2 <= k <= n - 1:
                raise ValidationError(f"order {k} outside 2..{n - 1}", f"orders[k={k}]")
            _check_positive(hs.beta, f"beta{k}")
            if hs.sources.shape != (hs.targets.shape[0], k) or hs.weights.shape != hs.targets.shape:
                raise ValidationError(f"malformed hyperedge arrays for order {k}", f"orders[k={k}]")
            for e, (t, src, w) in enumerate(zip(hs.targets, hs.sources, hs.weights)):
                name = f"orders[k={k}].hyperedges[{e + 1}]"
                if not (0 <= t < n) or np.any(src < 0) or np.any(src >= n):
                    raise ValidationError(f"{name} has an index outside 1..{n}", name)
                if not np.isfinite(w) or w < 0:
                    raise NegativeEntry(f"{name} weight {w} is negative", name)
            for arr in (hs.targets, hs.sources, hs.weights):
                arr.setflags(write=False)
            b_star += hs.beta * np.bincount(hs.targets, weights=hs.weights, minlength=n)
            orders[k] = hs
        object.__setattr__(self, "gamma", _frozen(gamma))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "beta1", _check_positive(self.beta1, "beta1"))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "b_star", _frozen(b_star))
        object.__setattr__(self, "indicator", _frozen((b_star > 0).astype(float)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_hyperedges(cls, gamma, A, beta1, orders):
        """``orders`` maps ``k`` to ``(beta_k, [(i, (i1, ..., ik), w), ...])``, 0-based."""
        sets = {int(k): HyperedgeSet.from_list(k, beta, edges) for k, (beta, edges) in orders.items()}
        return cls(gamma=gamma, A=A, beta1=beta1, orders=sets)

    @classmethod
    def from_simplicial(cls, model: SimplicialSis):
        """Order-2 model with one hyperedge ``(i; (j, k); b_ijk)`` per nonzero ``b_ijk``."""
        idx = np.argwhere(model.B != 0)
        edges = [(i, (j, k), model.B[i, j, k]) for i, j, k in idx]
        return cls.from_hyperedges(model.gamma, model.A, model.beta1, {2: (model.beta2, edges)})

    def higher_terms(self, x) -> np.ndarray:
        """``sum_k beta_k sum b_{i i1..ik} x_i1 ... x_ik`` for every target ``i``."""
        out = np.zeros(self.n)
        for hs in self.orders.values():
            out += hs.beta * np.bincount(hs.targets, weights=hs.products(x), minlength=self.n)
        return out


def validate(model):
    """Re-run every invariant check and return the model."""
    if isinstance(model, SimplicialSis):
        return SimplicialSis(model.gamma, model.A, model.B, model.beta1, model.beta2)
    if isinstance(model, HigherOrderSis):
        return HigherOrderSis(model.gamma, model.A, model.beta1, model.orders)
    if isinstance(model, ScalarSis):
        return ScalarSis(model.gamma, model.beta1, model.beta2)
    raise TypeError(f"not a model: {type(model).__name__}")


# ---------------------------------------------------------------- vector fields

def vector_field(model: SimplicialSis, x) -> np.ndarray:
    x = as_state(x, model.n)
    infection = model.beta1 * (model.A @ x) + model.beta2 * model.triad_terms(x)
    return -model.gamma * x + (1.0 - x) * infection


def vector_field_higher(model: HigherOrderSis, x) -> np.ndarray:
    x = as_state(x, model.n)
    infection = model.beta1 * (model.A @ x) + model.higher_terms(x)
    return -model.gamma * x + (1.0 - x) * infection


def field(model, x) -> np.ndarray:
    """Dispatch to the vector field matching the model type."""
    if isinstance(model, HigherOrderSis):
        return vector_field_higher(model, x)
    return vector_field(model, x)


def scalar_vector_field(model: ScalarSis, y) -> float:
    y = float(as_state([y], 1)[0])
    return -model.gamma * y + model.beta1 * (1.0 - y) * y + model.beta2 * (1.0 - y) * y * y


def jacobian(model: SimplicialSis, x) -> np.ndarray:
    """Analytic Jacobian of :func:`vector_field`; Metzler on ``[0, 1]^n``."""
    x = as_state(x, model.n)
    keep = np.diag(1.0 - x)
    O1 = np.einsum("ijk,j->ik", model.B, x) + np.einsum("ijk,k->ij", model.B, x)
    O2 = np.diag(model.triad_terms(x))
    return (-np.diag(model.gamma)
            + model.beta1 * keep @ model.A
            - model.beta1 * np.diag(model.A @ x)
            + model.beta2 * keep @ O1
            - model.beta2 * O2)


def jacobian_higher(model: HigherOrderSis, x) -> np.ndarray:
    x = as_state(x, model.n)
    n = model.n
    J = -np.diag(model.gamma) + model.beta1 * (np.diag(1.0 - x) @ model.A - np.diag(model.A @ x))
    J -= np.diag(model.higher_terms(x))
    for hs in model.orders.values():
        xs = x[hs.sources]
        scale = hs.beta * hs.weights * (1.0 - x[hs.targets])
        for pos in range(hs.k):
            others = np.prod(np.delete(xs, pos, axis=1), axis=1)
            np.add.at(J, (hs.targets, hs.sources[:, pos]), scale * others)
    return J


def jacobian_any(model, x) -> np.ndarray:
    if isinstance(model, HigherOrderSis):
        return jacobian_higher(model, x)
    return jacobian(model, x)


def decomposition_D(model: SimplicialSis, x, xstar) -> np.ndarray:
    """Matrix ``D(x, x*)`` with ``D(x, x*) (x - x*) = f(x) - f(x*)``.

    Sum of a part that depends on ``x*`` only and a part carrying the
    ``x``-dependence; both are Metzler on ``[0, 1]^n``.
    """
    n = model.n
    x = as_state(x, n)
    xstar = as_state(xstar, n)
    keep_star = np.diag(1.0 - xstar)
    rows_star = np.einsum("j,ijk->ik", xstar, model.B)      # row i: x*^T B_i
    rows_x_t = np.einsum("k,ijk->ij", x, model.B)           # row i: x^T B_i^T
    D1 = (-np.diag(model.gamma)
          + model.beta1 * keep_star @ model.A
          + model.beta2 * keep_star @ rows_star)
    D2 = (-model.beta1 * np.diag(model.A @ x)
          + model.beta2 * keep_star @ rows_x_t
          - model.beta2 * np.diag(model.triad_terms(x)))
    return D1 + D2


# ----------------------------------------------------------------- generation

def random_binary_model(n: int, density: float, seed: int, gamma: float = 2.0,
                        beta1: float | None = None, beta2: float = 1.0,
                        zero_b: Sequence[int] = ()) -> SimplicialSis:
    """Seeded random model with binary ``A`` and ``B_i``.

    ``A`` is made irreducible by adding the cycle ``1 -> 2 -> ... -> n -> 1``
    when it is not already.  A sampled ``B_i`` that came out all-zero gets
    ``b_iii = 1``; groups listed in ``zero_b`` (0-based) get ``B_i = 0``.
    Draws come from a Philox counter-based stream, ``A`` first, then ``B``.
    ``beta1`` defaults to half the epidemic threshold.
    """
    if n < 1:
        raise ValidationError("n must be positive", "n")
    if not 0.0 <= density <= 1.0:
        raise ValidationError("density must lie in [0, 1]", "density")
    rng = np.random.Generator(np.random.Philox(seed))
    A = (rng.random((n, n)) < density).astype(float)
    B = (rng.random((n, n, n)) < density).astype(float)
    if not linalg.is_irreducible(A):
        A[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    for i in range(n):
        if not B[i].any():
            B[i, i, i] = 1.0
    for i in zero_b:
        B[i] = 0.0
    gamma_vec = np.full(n, float(gamma))
    if beta1 is None:
        beta1 = 0.5 / linalg.spectral_radius(A / gamma_vec[:, None])
    return SimplicialSis(gamma=gamma_vec, A=A, B=B, beta1=beta1, beta2=beta2)


# ---------------------------------------------------------------------- files

def _plain(value):
    value = float(value)
    return int(value) if value.is_integer() else value


def _matrix_to_list(M):
    return [[_plain(v) for v in row] for row in M]


def model_to_dict(model) -> dict:
    if isinstance(model, SimplicialSis):
        return {
            "n": model.n,
            "gamma": [_plain(g) for g in model.gamma],
            "A": _matrix_to_list(model.A),
            "B": ["zero" if not model.eta[i] else _matrix_to_list(model.B[i]) for i in range(model.n)],
            "beta1": _plain(model.beta1),
            "beta2": _plain(model.beta2),
        }
    if isinstance(model, HigherOrderSis):
        return {
            "n": model.n,
            "gamma": [_plain(g) for g in model.gamma],
            "A": _matrix_to_list(model.A),
            "beta1": _plain(model.beta1),
            "orders": [
                {
                    "k": k,
                    "beta": _plain(hs.beta),
                    "hyperedges": [[int(t) + 1, [int(s) + 1 for s in src], _plain(w)]
                                   for t, src, w in zip(hs.targets, hs.sources, hs.weights)],
                }
                for k, hs in model.orders.items()
            ],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _parse_b(raw, n):
    if not isinstance(raw, list) or len(raw) != n:
        raise ValidationError(f"B must be a list of {n} matrices", "B")
    B = np.zeros((n, n, n))
    for i, entry in enumerate(raw):
        if isinstance(entry, str):
            if entry != "zero":
                raise ValidationError(f"B[{i + 1}] must be a matrix or the string 'zero'", f"B[{i + 1}]")
            continue
        Bi = np.asarray(entry, dtype=float)
        if Bi.shape != (n, n):
            raise ValidationError(f"B[{i + 1}] must be {n}x{n}", f"B[{i + 1}]")
        B[i] = Bi
    return B


def model_from_dict(doc: dict):
    """Build a :class:`SimplicialSis` or, when ``orders`` is present, a :class:`HigherOrderSis`."""
    for key in ("n", "gamma", "A", "beta1"):
        if key not in doc:
            raise ValidationError(f"missing field '{key}'", key)
    n = int(doc["n"])
    if n < 1:
        raise ValidationError("n must be positive", "n")
    gamma = np.asarray(doc["gamma"], dtype=float)
    A = np.asarray(doc["A"], dtype=float)
    if A.shape != (n, n):
        raise ValidationError(f"A must be {n}x{n}", "A")
    if "orders" not in doc:
        if "B" not in doc or "beta2" not in doc:
            raise ValidationError("missing field 'B' or 'beta2'", "B" if "B" not in doc else "beta2")
        return SimplicialSis(gamma=gamma, A=A, B=_parse_b(doc["B"], n),
                             beta1=doc["beta1"], beta2=doc["beta2"])
    orders = {}
    for pos, spec in enumerate(doc["orders"]):
        name = f"orders[{pos + 1}]"
        try:
            k = int(spec["k"])
            beta = spec["beta"]
            edges = []
            for t, src, w in spec["hyperedges"]:
                src = [int(s) - 1 for s in src]
                if len(src) != k:
                    raise ValidationError(f"{name}: hyperedge with {len(src)} sources in order {k}", name)
                edges.append((int(t) - 1, src, float(w)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{name} is malformed: {exc}", name) from exc
        if k in orders:
            raise ValidationError(f"order {k} listed twice", name)
        orders[k] = (beta, edges)
    if "B" in doc:
        B = _parse_b(doc["B"], n)
        if B.any():
            if 2 in orders:
                raise ValidationError("order 2 given both as 'B' and in 'orders'", "B")
            if "beta2" not in doc:
                raise ValidationError("missing field 'beta2'", "beta2")
            orders[2] = (doc["beta2"], [(i, (j, k), B[i, j, k]) for i, j, k in np.argwhere(B != 0)])
    return HigherOrderSis.from_hyperedges(gamma, A, doc["beta1"], orders)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})", "file") from exc
    return model_from_dict(doc)


def dump_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
