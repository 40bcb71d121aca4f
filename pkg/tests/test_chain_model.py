import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import kernel_from_weights, metropolis, random_weights
from markov_hoeffding.chain_model import (
    chain_from_arrays,
    compute_stationary,
    denormalize_observable,
    detailed_balance_residual,
    is_irreducible,
    load_chain,
    normalize_observable,
    parse_chain,
    serialize_chain,
    two_sided_setup,
)
from markov_hoeffding.errors import ChainValidationError


def _doc(P, f, states=None, **extra):
    states = states or [f"s{i}" for i in range(len(f))]
    return json.dumps({"states": states, "transition": P, "observable": f, **extra})


class TestParseChain:
    def test_two_state_symmetric(self):
        spec = parse_chain(_doc([[0.75, 0.25], [0.25, 0.75]], [0, 1]))
        np.testing.assert_allclose(spec.pi, [0.5, 0.5], atol=1e-15)
        assert spec.mu == pytest.approx(0.5, abs=1e-15)
        assert spec.states == ("s0", "s1")

    def test_row_not_stochastic(self):
        with pytest.raises(ChainValidationError, match="row not stochastic"):
            parse_chain(_doc([[0.5, 0.4], [0.25, 0.75]], [0, 1]))

    def test_periodic_chain_accepted(self):
        spec = parse_chain(_doc([[0, 1], [1, 0]], [0, 1]))
        np.testing.assert_allclose(spec.pi, [0.5, 0.5])

    def test_reducible_rejected(self):
        with pytest.raises(ChainValidationError, match="reducible"):
            parse_chain(_doc([[1, 0], [0, 1]], [0, 1]))

    def test_non_reversible_rejected(self):
        # cyclic drift on three states has uniform pi but no detailed balance
        P = [[0.1, 0.8, 0.1], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]]
        with pytest.raises(ChainValidationError, match="detailed balance"):
            parse_chain(_doc(P, [0, 0.5, 1]))

    def test_constant_observable_rejected(self):
        with pytest.raises(ChainValidationError, match="constant"):
            parse_chain(_doc([[0.5, 0.5], [0.5, 0.5]], [3, 3]))

    def test_all_problems_collected(self):
        P = [[0.5, 0.4], [0.25, 0.7]]
        with pytest.raises(ChainValidationError) as info:
            parse_chain(_doc(P, [0, 1]))
        assert len(info.value.problems) == 2

    @pytest.mark.parametrize(
        "document",
        ["not json", "[1, 2]", json.dumps({"states": ["a", "b"], "transition": [[1, 0], [0, 1]]})],
    )
    def test_malformed_documents(self, document):
        with pytest.raises(ChainValidationError):
            parse_chain(document)

    def test_duplicate_labels(self):
        with pytest.raises(ChainValidationError, match="distinct"):
            parse_chain(_doc([[0.5, 0.5], [0.5, 0.5]], [0, 1], states=["a", "a"]))

    def test_single_state_rejected(self):
        with pytest.raises(ChainValidationError):
            parse_chain(_doc([[1.0]], [0.0]))

    def test_supplied_stationary_is_verified(self):
        P = [[0.75, 0.25], [0.25, 0.75]]
        with pytest.raises(ChainValidationError, match="pi P = pi"):
            parse_chain(_doc(P, [0, 1], stationary=[0.4, 0.6]))
        spec = parse_chain(_doc(P, [0, 1], stationary=[0.5, 0.5]))
        np.testing.assert_array_equal(spec.pi, [0.5, 0.5])

    def test_stationary_must_be_normalized(self):
        with pytest.raises(ChainValidationError, match="sums to"):
            parse_chain(_doc([[0.75, 0.25], [0.25, 0.75]], [0, 1], stationary=[0.5, 0.5 + 1e-9]))

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        P = kernel_from_weights(random_weights(4, rng))
        spec = chain_from_arrays(P, [1.0, -2.0, 0.5, 3.0], states=["a", "b", "c", "d"])
        path = tmp_path / "chain.json"
        path.write_text(serialize_chain(spec))
        again = load_chain(path)
        np.testing.assert_array_equal(again.P, spec.P)
        np.testing.assert_array_equal(again.pi, spec.pi)
        np.testing.assert_array_equal(again.f_raw, spec.f_raw)
        assert again.states == spec.states
        assert serialize_chain(again) == serialize_chain(spec)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_chain(tmp_path / "absent.json")

    def test_mu_and_raw_units(self):
        spec = chain_from_arrays([[0.5, 0.5], [0.5, 0.5]], [-1.0, 1.0])
        assert spec.mu == pytest.approx(0.5)
        assert spec.mu_raw == pytest.approx(0.0)
        assert spec.to_normalized_eps(0.4) == pytest.approx(0.2)
        assert spec.to_raw_x(spec.to_normalized_x(0.3)) == pytest.approx(0.3)


class TestComputeStationary:
    def test_doubly_stochastic_uniform(self):
        np.testing.assert_allclose(compute_stationary(np.array([[0.75, 0.25], [0.25, 0.75]])), [0.5, 0.5])

    def test_identical_rows(self):
        q = np.array([0.1, 0.2, 0.3, 0.4])
        np.testing.assert_allclose(compute_stationary(np.tile(q, (4, 1))), q, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_metropolis_recovers_target(self, seed):
        rng = np.random.default_rng(seed)
        target = rng.dirichlet(np.ones(4))
        K = np.full((4, 4), 1.0 / 3.0)
        P = metropolis(target, K)
        np.testing.assert_allclose(compute_stationary(P), target, atol=1e-10)
        assert np.abs(detailed_balance_residual(P, target)).max() <= 1e-15

    def test_tiny_probabilities(self):
        # birth-death chain whose pi spans many orders of magnitude
        m = 12
        P = np.zeros((m, m))
        for i in range(m):
            if i + 1 < m:
                P[i, i + 1] = 0.01
            if i > 0:
                P[i, i - 1] = 0.9
            P[i, i] = 1.0 - P[i].sum()
        pi = compute_stationary(P)
        ratios = pi[1:] / pi[:-1]
        np.testing.assert_allclose(ratios, 0.01 / 0.9, rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 2**32 - 1))
    def test_stationary_is_fixed_point(self, m, seed):
        P = kernel_from_weights(random_weights(m, np.random.default_rng(seed), density=0.6))
        pi = compute_stationary(P)
        assert pi.min() > 0
        assert abs(pi.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(pi @ P, pi, atol=1e-12)


class TestIrreducible:
    def test_path_graph(self):
        assert is_irreducible(np.array([[0.5, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0.5]]))

    def test_absorbing_state(self):
        assert not is_irreducible(np.array([[1.0, 0.0], [0.5, 0.5]]))


class TestNormalizeObservable:
    def test_affine_map(self):
        g, a, b = normalize_observable([2, 5, 8])
        np.testing.assert_allclose(g, [0, 0.5, 1])
        assert (a, b) == (2, 8)

    def test_binary_unchanged(self):
        g, _, _ = normalize_observable([0.0, 1.0, 1.0, 0.0])
        np.testing.assert_array_equal(g, [0, 1, 1, 0])

    def test_eps_scaling(self):
        spec = chain_from_arrays([[0.5, 0.5], [0.5, 0.5]], [-1.0, 1.0])
        assert spec.to_normalized_eps(0.4) == pytest.approx(0.2)

    def test_constant_rejected(self):
        with pytest.raises(ChainValidationError):
            normalize_observable([1.5, 1.5])

    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=10))
    def test_endpoints_and_inverse(self, values):
        f = np.array(values)
        if np.ptp(f) <= 1e-6 * max(1.0, np.abs(f).max()):
            return
        g, a, b = normalize_observable(f)
        assert g.min() == 0.0 and g.max() == 1.0
        np.testing.assert_allclose(denormalize_observable(g, a, b), f, rtol=1e-12, atol=1e-9 * (b - a))


class TestTwoSided:
    def test_complement(self):
        spec = chain_from_arrays([[0.7, 0.3], [0.7, 0.3]], [0, 1])
        (first, e1), (second, e2) = two_sided_setup(spec, 0.1)
        assert first is spec and e1 == e2 == 0.1
        np.testing.assert_array_equal(second.f, [1, 0])
        assert second.mu == pytest.approx(0.7)

    def test_symmetric_case_equal_bounds(self):
        from markov_hoeffding.bounds import log_product_bound

        spec = chain_from_arrays([[0.75, 0.25], [0.25, 0.75]], [0, 1])
        (up, eps), (down, _) = two_sided_setup(spec, 0.2)
        assert log_product_bound(up.mu, eps, 10, 0.5) == pytest.approx(log_product_bound(down.mu, eps, 10, 0.5))

    def test_rejects_nonpositive_eps(self):
        spec = chain_from_arrays([[0.75, 0.25], [0.25, 0.75]], [0, 1])
        with pytest.raises(ValueError):
            two_sided_setup(spec, 0.0)
