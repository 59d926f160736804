import numpy as np
import pytest
from hypothesis import assume, given

from conftest import RING2, two_group
from oracles import eig_abscissa, eig_radius
from simplicial_sis import analysis, equilibrium, model
from simplicial_sis.analysis import Domain
from simplicial_sis.equilibrium import Stability
from simplicial_sis.errors import NotEquilibrium, PreconditionViolated
from simplicial_sis.model import SimplicialSis
from strategies import random_model, rng_of, seeds

ONE_GROUP = SimplicialSis(gamma=[1.0], A=[[1.0]], B=[[[1.0]]], beta1=0.5, beta2=4.0)
NU_PLUS = 0.6951941016011042  # larger root of 4 y^2 - 3.5 y + 0.5 = 0


def subthreshold_bistable(seed):
    """Random binary model pushed 20% above its bistable threshold."""
    m = model.random_binary_model(5, 0.5, seed=seed)
    hat = analysis.beta2_bistable_threshold(m)
    return m.with_rates(beta2=1.2 * hat)


class TestFixedPointMap:
    def test_origin(self, bistable_model):
        np.testing.assert_array_equal(equilibrium.fixed_point_map(bistable_model, [0, 0]), [0, 0])

    def test_scalar_fixed_point(self):
        # 0.5 y + 4 y^2 = 2.2808 at y = 0.6952, and 2.2808 / 3.2808 = 0.6952
        assert equilibrium.fixed_point_map(ONE_GROUP, [0.6952])[0] == pytest.approx(0.6952, abs=1e-3)

    @given(seeds)
    def test_monotone(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        y = rng.random(m.n)
        z = np.minimum(y + rng.random(m.n) * (rng.random(m.n) < 0.5), 1.0)
        assert np.all(equilibrium.fixed_point_map(m, y) <= equilibrium.fixed_point_map(m, z) + 1e-15)

    @given(seeds)
    def test_fixed_points_are_equilibria(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        x = rng.uniform(0.05, 0.95, m.n)
        # H(x) = x and f(x) = 0 differ by the positive factor Gamma (1 + z)
        z = (m.beta1 * m.A @ x + m.beta2 * m.triad_terms(x)) / m.gamma
        f = model.vector_field(m, x)
        gap = equilibrium.fixed_point_map(m, x) - x
        np.testing.assert_allclose(f, m.gamma * (1 + z) * gap, atol=1e-12)


class TestEndemicIterate:
    def test_classical_scalar(self):
        m = SimplicialSis([1.0], [[1.0]], [[[0.0]]], beta1=2.0, beta2=1.0)
        res, _ = equilibrium.endemic_iterate(m, Domain.ENDEMIC)
        assert res.xstar[0] == pytest.approx(0.5, abs=1e-10)
        assert res.converged and res.stability is Stability.EXPONENTIALLY_STABLE

    def test_scalar_bistable(self):
        res, trace = equilibrium.endemic_iterate(ONE_GROUP, "bistable")
        assert trace.iterates[0][0] == 0.5
        assert res.xstar[0] == pytest.approx(NU_PLUS, abs=1e-10)
        assert res.residual < 1e-10

    def test_two_group_bistable(self, bistable_model):
        res, trace = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE)
        assert np.all(res.xstar >= 0.5)
        assert np.max(np.abs(model.vector_field(bistable_model, res.xstar))) <= 1e-8
        assert np.all(np.diff(trace.iterates, axis=0) >= 0)
        ok, _ = equilibrium.check_equilibrium(bistable_model, res.xstar)
        assert ok

    def test_domain_mismatch(self, disease_free_model, bistable_model):
        with pytest.raises(PreconditionViolated):
            equilibrium.endemic_iterate(disease_free_model, Domain.BISTABLE)
        with pytest.raises(PreconditionViolated):
            equilibrium.endemic_iterate(bistable_model, Domain.ENDEMIC)
        with pytest.raises(PreconditionViolated):
            equilibrium.endemic_iterate(bistable_model, Domain.DISEASE_FREE)

    def test_no_trace(self, bistable_model):
        res, trace = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE, keep_trace=False)
        assert trace is None and res.converged

    def test_iteration_budget(self, bistable_model):
        res, trace = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE, max_iter=2)
        assert res.iterations == 2 and not res.converged and res.stability is None
        assert len(trace.iterates) == 3

    @given(seeds)
    def test_endemic_monotone_interior(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        rho = eig_radius(m.A / m.gamma[:, None])
        m = m.with_rates(beta1=float(rng.uniform(1.1, 4.0)) / rho)
        res, trace = equilibrium.endemic_iterate(m, Domain.ENDEMIC)
        assert res.converged
        assert np.all(np.diff(trace.iterates, axis=0) >= -1e-15)
        assert np.all(trace.iterates <= 1.0)
        assert np.all((res.xstar > 0) & (res.xstar < 1))
        assert res.residual <= 10 * equilibrium.DEFAULT_TOL * m.gamma.max()
        gap = equilibrium.fixed_point_map(m, res.xstar) - res.xstar
        assert np.max(np.abs(gap)) <= 1e-10

    @given(seeds)
    def test_endemic_start_is_subsolution(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        rho = eig_radius(m.A / m.gamma[:, None])
        m = m.with_rates(beta1=float(rng.uniform(1.0001, 4.0)) / rho)
        y0 = equilibrium.initial_guess(m, Domain.ENDEMIC)
        assert y0.max() == pytest.approx(1 - 1 / (m.beta1 * rho), rel=1e-9)
        assert np.all(equilibrium.fixed_point_map(m, y0) - y0 >= -equilibrium.MONOTONE_SLACK)

    @given(seeds)
    def test_bistable_bound(self, seed):
        m = subthreshold_bistable(seed % 10_000)
        assume(analysis.classify_theory(m).domain is Domain.BISTABLE)
        res, _ = equilibrium.endemic_iterate(m, Domain.BISTABLE)
        assert res.converged
        assert np.all(res.xstar[m.eta == 1] >= 0.5)


class TestCheckEquilibrium:
    def test_origin(self, bistable_model):
        assert equilibrium.check_equilibrium(bistable_model, [0, 0]) == (True, 0.0)

    def test_full_infection(self):
        m = SimplicialSis([1.0, 3.0], RING2, np.ones((2, 2, 2)), 0.5, 1.0)
        ok, residual = equilibrium.check_equilibrium(m, [1, 1])
        assert not ok and residual == pytest.approx(3.0)


class TestLocalStability:
    def test_origin_disease_free(self, disease_free_model):
        assert equilibrium.local_stability(disease_free_model, [0, 0]) is Stability.EXPONENTIALLY_STABLE

    def test_origin_endemic(self):
        assert equilibrium.local_stability(two_group(1.5, 1.0), [0, 0]) is Stability.UNSTABLE

    def test_origin_on_threshold(self):
        assert equilibrium.local_stability(two_group(1.0, 1.0), [0, 0]) is Stability.MARGINAL

    def test_bistable_xstar(self, bistable_model):
        res, _ = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE)
        assert equilibrium.local_stability(bistable_model, res.xstar) is Stability.EXPONENTIALLY_STABLE

    def test_not_equilibrium(self, bistable_model):
        with pytest.raises(NotEquilibrium):
            equilibrium.local_stability(bistable_model, [0.3, 0.3])

    def test_matches_eigensolver(self, bistable_model):
        res, _ = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE)
        assert eig_abscissa(model.jacobian(bistable_model, res.xstar)) < 0


class TestCertificate:
    def test_classical_ring_certified(self):
        m = SimplicialSis(np.ones(2), RING2, np.zeros((2, 2, 2)), 2.0, 1.0)
        res, _ = equilibrium.endemic_iterate(m, Domain.ENDEMIC)
        cert = equilibrium.contraction_certificate(m, res.xstar)
        assert cert.certified and cert.rate > 0 and cert.worst_measure < 0
        assert cert.points == 256 + 4

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_triad_strength_decides(self, seed):
        t = model.random_binary_model(5, 0.5, seed=seed)
        rho = eig_radius(t.A / t.gamma[:, None])
        verdicts = {}
        for beta2 in (1e-4, 10.0):
            m = t.with_rates(beta1=1.5 / rho, beta2=beta2)
            res, _ = equilibrium.endemic_iterate(m, Domain.ENDEMIC)
            verdicts[beta2] = equilibrium.contraction_certificate(m, res.xstar).certified
        assert verdicts == {1e-4: True, 10.0: False}

    @pytest.mark.parametrize("beta1, beta2, domain", [(2.0, 0.1, Domain.ENDEMIC), (0.5, 1.0, Domain.BISTABLE),
                                                      (1.5, 30.0, Domain.ENDEMIC)])
    def test_single_point_matches_local_stability(self, beta1, beta2, domain):
        m = two_group(beta1, beta2)
        res, _ = equilibrium.endemic_iterate(m, domain)
        cert = equilibrium.contraction_certificate(m, res.xstar, points=[res.xstar])
        # at x = x* the matrix is the Jacobian; a negative weighted measure forces a negative abscissa
        mu = cert.worst_measure
        assert mu == pytest.approx(
            np.max((model.jacobian(m, res.xstar) @ res.xstar) / res.xstar), abs=1e-12)
        stable = equilibrium.local_stability(m, res.xstar) is Stability.EXPONENTIALLY_STABLE
        if cert.certified:
            assert stable

    def test_deterministic(self):
        m = SimplicialSis(np.ones(2), RING2, np.zeros((2, 2, 2)), 2.0, 1.0)
        res, _ = equilibrium.endemic_iterate(m, Domain.ENDEMIC)
        a = equilibrium.contraction_certificate(m, res.xstar, seed=3)
        b = equilibrium.contraction_certificate(m, res.xstar, seed=3)
        assert a == b

    def test_alpha_too_large(self, bistable_model):
        res, _ = equilibrium.endemic_iterate(bistable_model, Domain.BISTABLE)
        with pytest.raises(PreconditionViolated):
            equilibrium.contraction_certificate(bistable_model, res.xstar, alpha=0.99)

    def test_points_inside_box(self):
        lower = np.array([0.1, 0.2, 0.3])
        pts = equilibrium.certificate_points(lower, 64, seed=0)
        assert pts.shape == (64 + 8, 3)
        assert np.all(pts >= lower) and np.all(pts <= 1.0)
