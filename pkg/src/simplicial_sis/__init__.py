"""Multi-group SIS epidemics with pairwise and higher-order infection.

Modules: ``linalg`` (Perron-Frobenius and Metzler tools), ``model``
(model types, vector fields, files), ``analysis`` (theory classification),
``equilibrium`` (endemic states and stability), ``sim`` (RK4 simulation
and empirical classification), ``sweep`` (parameter-plane diagrams) and
``cli``.
"""

from .analysis import Domain, classify, classify_theory, scalar_classify
from .equilibrium import contraction_certificate, endemic_iterate, local_stability
from .model import (
    HigherOrderSis,
    ScalarSis,
    SimplicialSis,
    load_model,
    random_binary_model,
    vector_field,
)
from .sim import IntegratorConfig, classify_empirical, integrate
from .sweep import GridSpec

__all__ = [
    "Domain",
    "GridSpec",
    "HigherOrderSis",
    "IntegratorConfig",
    "ScalarSis",
    "SimplicialSis",
    "classify",
    "classify_empirical",
    "classify_theory",
    "contraction_certificate",
    "endemic_iterate",
    "integrate",
    "load_model",
    "local_stability",
    "random_binary_model",
    "scalar_classify",
    "vector_field",
]
