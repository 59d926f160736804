import json

import numpy as np
import pytest
from hypothesis import given

from conftest import ONES2, RING2, two_group
from oracles import fd_jacobian, field_loops, higher_field_loops
from simplicial_sis import linalg, model
from simplicial_sis.errors import (
    NegativeEntry,
    NonpositiveRate,
    NotIrreducible,
    OutOfDomain,
    ValidationError,
)
from simplicial_sis.model import HigherOrderSis, ScalarSis, SimplicialSis
from strategies import random_model, random_state, rng_of, seeds

SCALAR = ScalarSis(gamma=1.0, beta1=0.5, beta2=4.0)
ONE_GROUP = SimplicialSis(gamma=[1.0], A=[[1.0]], B=[[[1.0]]], beta1=0.5, beta2=4.0)


def four_cycle():
    return np.roll(np.eye(4), 1, axis=1)


class TestValidation:
    def test_valid_example(self):
        m = two_group(0.5, 1.0)
        np.testing.assert_array_equal(m.eta, [1, 1])
        assert m.n == 2

    def test_reducible_rejected(self):
        with pytest.raises(NotIrreducible) as exc:
            SimplicialSis(np.ones(2), [[1, 0], [1, 1]], ONES2, 0.5, 1.0)
        assert exc.value.field == "A"

    def test_eta_flags_zero_blocks(self):
        B = np.zeros((2, 2, 2))
        B[0] = 1.0
        m = two_group(0.5, 1.0, B=B)
        np.testing.assert_array_equal(m.eta, [1, 0])

    @pytest.mark.parametrize("gamma, field_name", [([-1.0, 1.0], "gamma[1]"), ([1.0, 0.0], "gamma[2]")])
    def test_rate_errors_name_field(self, gamma, field_name):
        with pytest.raises(NonpositiveRate) as exc:
            SimplicialSis(gamma, RING2, ONES2, 0.5, 1.0)
        assert exc.value.field == field_name
        assert field_name in str(exc.value)

    def test_negative_b_entry_named(self):
        B = ONES2.copy()
        B[1, 0, 1] = -0.5
        with pytest.raises(NegativeEntry) as exc:
            two_group(0.5, 1.0, B=B)
        assert "B[2]" in exc.value.field

    @pytest.mark.parametrize("beta1, beta2", [(0.0, 1.0), (0.5, -1.0)])
    def test_rates_positive(self, beta1, beta2):
        with pytest.raises(NonpositiveRate):
            two_group(beta1, beta2)

    def test_b_shape(self):
        with pytest.raises(ValidationError):
            SimplicialSis(np.ones(2), RING2, np.ones((2, 2)), 0.5, 1.0)

    def test_arrays_are_frozen(self):
        m = two_group(0.5, 1.0)
        with pytest.raises(ValueError):
            m.A[0, 0] = 3.0

    def test_validate_roundtrip(self):
        m = two_group(0.5, 1.0)
        assert model.validate(m).beta2 == 1.0

    def test_higher_order_range(self):
        with pytest.raises(ValidationError):
            HigherOrderSis.from_hyperedges(np.ones(3), np.roll(np.eye(3), 1, 1), 0.5,
                                           {3: (1.0, [(0, (1, 2, 0), 1.0)])})

    def test_higher_order_negative_weight(self):
        with pytest.raises(NegativeEntry):
            HigherOrderSis.from_hyperedges(np.ones(3), np.roll(np.eye(3), 1, 1), 0.5,
                                           {2: (1.0, [(0, (1, 2), -1.0)])})


class TestDomain:
    def test_small_excursion_clamped(self):
        x = model.as_state([-5e-10, 1 + 5e-10], 2)
        np.testing.assert_array_equal(x, [0.0, 1.0])

    def test_large_excursion_rejected(self):
        with pytest.raises(OutOfDomain):
            model.as_state([-1e-6, 0.5], 2)

    def test_wrong_length(self):
        with pytest.raises(OutOfDomain):
            model.as_state([0.5], 2)


class TestVectorField:
    def test_origin(self, bistable_model):
        np.testing.assert_array_equal(model.vector_field(bistable_model, [0, 0]), [0, 0])

    def test_scalar_root(self):
        assert abs(model.vector_field(ONE_GROUP, [0.6952])[0]) < 1e-3

    def test_full_infection(self):
        m = SimplicialSis([1.0, 2.5], RING2, ONES2, 0.5, 1.0)
        np.testing.assert_allclose(model.vector_field(m, [1, 1]), [-1.0, -2.5])

    @given(seeds)
    def test_matches_loops(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        x = random_state(rng, m.n)
        expected = field_loops(m.gamma, m.A, m.B, m.beta1, m.beta2, x)
        np.testing.assert_allclose(model.vector_field(m, x), expected, atol=1e-12)

    @given(seeds)
    def test_boundary_points_into_cube(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        x = random_state(rng, m.n)
        f = model.vector_field(m, x)
        assert np.all(f[x == 0.0] >= 0.0)
        assert np.all(f[x == 1.0] < 0.0)

    @given(seeds)
    def test_classical_reduction(self, seed):
        rng = rng_of(seed)
        m = random_model(rng, zero_b=True)
        x = rng.random(m.n)
        classical = -m.gamma * x + m.beta1 * (1 - x) * (m.A @ x)
        np.testing.assert_allclose(model.vector_field(m, x), classical, atol=1e-13)


class TestScalarField:
    @pytest.mark.parametrize("y, expected", [(0.0, 0.0), (1.0, -1.0)])
    def test_endpoints(self, y, expected):
        assert model.scalar_vector_field(SCALAR, y) == pytest.approx(expected)

    @pytest.mark.parametrize("root", [0.1798, 0.6952])
    def test_near_roots(self, root):
        assert abs(model.scalar_vector_field(SCALAR, root)) < 1e-3

    def test_agrees_with_one_group_model(self):
        for y in np.linspace(0, 1, 11):
            assert model.scalar_vector_field(SCALAR, y) == pytest.approx(model.vector_field(ONE_GROUP, [y])[0])


class TestHigherOrder:
    @given(seeds)
    def test_mirror_matches_simplicial(self, seed):
        rng = rng_of(seed)
        m = random_model(rng, n=int(rng.integers(3, 7)))
        h = HigherOrderSis.from_simplicial(m)
        x = random_state(rng, m.n)
        np.testing.assert_allclose(model.vector_field_higher(h, x), model.vector_field(m, x),
                                   rtol=1e-13, atol=1e-15)

    def test_origin(self):
        h = HigherOrderSis.from_hyperedges(np.ones(4), four_cycle(), 0.3,
                                           {3: (8.0, [(0, (1, 2, 3), 1.0)])})
        np.testing.assert_array_equal(model.vector_field_higher(h, np.zeros(4)), np.zeros(4))

    def test_single_order3_edge(self):
        beta3, w = 8.0, 0.7
        h = HigherOrderSis.from_hyperedges(np.ones(4), four_cycle(), 0.3,
                                           {3: (beta3, [(0, (1, 2, 3), w)])})
        x = np.array([0.0, 1.0, 1.0, 1.0])
        f = model.vector_field_higher(h, x)
        pairwise = 0.3 * (four_cycle() @ x)[0]
        assert f[0] - pairwise == pytest.approx(beta3 * w)
        expected = higher_field_loops(np.ones(4), four_cycle(), 0.3, {3: (beta3, [(0, (1, 2, 3), w)])}, x)
        np.testing.assert_allclose(f, expected, atol=1e-14)

    def test_mixed_orders_match_loops(self):
        rng = np.random.default_rng(3)
        n = 5
        A = np.roll(np.eye(n), 1, axis=1)
        spec = {2: (1.5, [(0, (1, 2), 0.5), (3, (4, 0), 1.0)]),
                3: (2.0, [(1, (2, 3, 4), 0.25)]),
                4: (0.5, [(2, (0, 1, 3, 4), 2.0)])}
        h = HigherOrderSis.from_hyperedges(np.full(n, 1.5), A, 0.4, spec)
        x = rng.random(n)
        np.testing.assert_allclose(model.vector_field_higher(h, x),
                                   higher_field_loops(h.gamma, A, 0.4, spec, x), atol=1e-14)
        np.testing.assert_array_equal(h.indicator, [1, 1, 1, 1, 0])

    def test_dispatch(self, bistable_model):
        x = np.array([0.3, 0.6])
        np.testing.assert_array_equal(model.field(bistable_model, x), model.vector_field(bistable_model, x))


class TestJacobian:
    def test_origin(self, bistable_model):
        m = bistable_model
        np.testing.assert_allclose(model.jacobian(m, [0, 0]), -np.diag(m.gamma) + m.beta1 * m.A)

    def test_zero_b(self):
        rng = np.random.default_rng(1)
        m = random_model(rng, n=4, zero_b=True)
        x = rng.random(4)
        expected = (-np.diag(m.gamma) + m.beta1 * (np.eye(4) - np.diag(x)) @ m.A
                    - m.beta1 * np.diag(m.A @ x))
        np.testing.assert_allclose(model.jacobian(m, x), expected, atol=1e-14)

    @given(seeds)
    def test_finite_differences(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        x = np.clip(rng.random(m.n), 1e-5, 1 - 1e-5)
        J = fd_jacobian(lambda y: field_loops(m.gamma, m.A, m.B, m.beta1, m.beta2, y), x)
        np.testing.assert_allclose(model.jacobian(m, x), J, atol=1e-6)

    @given(seeds)
    def test_metzler_on_cube(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        assert linalg.is_metzler(model.jacobian(m, random_state(rng, m.n)))

    @given(seeds)
    def test_higher_order_finite_differences(self, seed):
        rng = rng_of(seed)
        n = int(rng.integers(4, 7))
        A = np.roll(np.eye(n), 1, axis=1) + rng.random((n, n)) * (rng.random((n, n)) < 0.3)
        spec = {k: (float(rng.uniform(0.5, 3)),
                    [(int(rng.integers(n)), tuple(int(s) for s in rng.integers(0, n, k)), float(rng.random()))
                     for _ in range(4)])
                for k in (2, 3)}
        h = HigherOrderSis.from_hyperedges(rng.uniform(0.5, 2, n), A, 0.7, spec)
        x = np.clip(rng.random(n), 1e-5, 1 - 1e-5)
        J = fd_jacobian(lambda y: higher_field_loops(h.gamma, A, 0.7, spec, y), x)
        np.testing.assert_allclose(model.jacobian_higher(h, x), J, atol=1e-6)

    @given(seeds)
    def test_mirror_jacobian(self, seed):
        rng = rng_of(seed)
        m = random_model(rng, n=int(rng.integers(3, 6)))
        x = rng.random(m.n)
        np.testing.assert_allclose(model.jacobian_any(HigherOrderSis.from_simplicial(m), x),
                                   model.jacobian(m, x), atol=1e-12)


class TestDecomposition:
    def test_at_equilibrium(self, bistable_model):
        xs = np.array([0.4, 0.7])
        D = model.decomposition_D(bistable_model, xs, xs)
        np.testing.assert_allclose(D @ np.zeros(2), 0.0)
        np.testing.assert_allclose(D, model.jacobian(bistable_model, xs), atol=1e-14)

    @pytest.mark.parametrize("zero_b", [True, False])
    def test_identity_examples(self, zero_b):
        rng = np.random.default_rng(11)
        m = random_model(rng, n=5, zero_b=zero_b)
        x, xs = rng.random(5), rng.random(5)
        lhs = model.decomposition_D(m, x, xs) @ (x - xs)
        rhs = model.vector_field(m, x) - model.vector_field(m, xs)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @given(seeds)
    def test_identity(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        x, xs = random_state(rng, m.n), random_state(rng, m.n)
        lhs = model.decomposition_D(m, x, xs) @ (x - xs)
        rhs = model.vector_field(m, x) - model.vector_field(m, xs)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @given(seeds)
    def test_metzler(self, seed):
        rng = rng_of(seed)
        m = random_model(rng)
        assert linalg.is_metzler(model.decomposition_D(m, rng.random(m.n), rng.random(m.n)))


class TestGeneration:
    def test_deterministic(self):
        a = model.random_binary_model(5, 0.5, seed=42)
        b = model.random_binary_model(5, 0.5, seed=42)
        assert model.model_to_dict(a) == model.model_to_dict(b)

    def test_seed_matters(self):
        a = model.random_binary_model(5, 0.5, seed=1)
        b = model.random_binary_model(5, 0.5, seed=2)
        assert model.model_to_dict(a) != model.model_to_dict(b)

    @given(seeds)
    def test_always_irreducible_and_binary(self, seed):
        m = model.random_binary_model(5, 0.2, seed=seed)
        assert linalg.is_irreducible(m.A)
        assert set(np.unique(m.A)) <= {0.0, 1.0} and set(np.unique(m.B)) <= {0.0, 1.0}
        assert m.eta.all()
        np.testing.assert_array_equal(m.gamma, 2.0)

    def test_density_one(self):
        m = model.random_binary_model(4, 1.0, seed=0)
        assert np.all(m.A == 1) and np.all(m.B == 1)

    def test_zero_b(self):
        m = model.random_binary_model(4, 0.5, seed=0, zero_b=[1, 3])
        np.testing.assert_array_equal(m.eta, [1, 0, 1, 0])


class TestFiles:
    def test_roundtrip_simplicial(self, tmp_path):
        m = model.random_binary_model(4, 0.5, seed=7, zero_b=[2])
        path = tmp_path / "m.json"
        model.dump_model(m, path)
        doc = json.loads(path.read_text())
        assert doc["B"][2] == "zero"
        back = model.load_model(path)
        for name in ("gamma", "A", "B"):
            np.testing.assert_array_equal(getattr(back, name), getattr(m, name))
        assert (back.beta1, back.beta2) == (m.beta1, m.beta2)

    def test_roundtrip_higher(self, tmp_path):
        h = HigherOrderSis.from_hyperedges(np.ones(4), four_cycle(), 0.3,
                                           {3: (8.0, [(i, tuple(j for j in range(4) if j != i), 1.0)
                                                      for i in range(4)])})
        path = tmp_path / "h.json"
        model.dump_model(h, path)
        doc = json.loads(path.read_text())
        assert doc["orders"][0]["hyperedges"][0] == [1, [2, 3, 4], 1]
        back = model.load_model(path)
        x = np.array([0.2, 0.4, 0.6, 0.8])
        np.testing.assert_array_equal(model.field(back, x), model.field(h, x))

    def test_b_folded_into_orders(self):
        doc = {"n": 3, "gamma": [1, 1, 1], "A": np.roll(np.eye(3), 1, 1).tolist(), "beta1": 0.3,
               "beta2": 2.0, "B": ["zero", np.ones((3, 3)).tolist(), "zero"],
               "orders": [{"k": 2, "beta": 1.0, "hyperedges": []}]}
        with pytest.raises(ValidationError):
            model.model_from_dict(doc)
        doc["orders"] = []
        h = model.model_from_dict(doc)
        np.testing.assert_array_equal(h.indicator, [0, 1, 0])

    def test_negative_gamma_named(self):
        doc = {"n": 2, "gamma": [-1, 1], "A": RING2.tolist(), "B": ["zero", "zero"], "beta1": 1, "beta2": 1}
        with pytest.raises(NonpositiveRate) as exc:
            model.model_from_dict(doc)
        assert "gamma[1]" in str(exc.value)

    def test_missing_field(self):
        with pytest.raises(ValidationError) as exc:
            model.model_from_dict({"n": 2, "gamma": [1, 1], "A": RING2.tolist()})
        assert exc.value.field == "beta1"

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            model.load_model(path)
