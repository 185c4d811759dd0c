import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from excoef.errors import BoundTooSmall, InvalidArgument, NotCompletelyAlternating
from excoef.generators import random_valid_ecf
from excoef.maxlinear import (
    RandomSetDistribution,
    SampleBatch,
    TauTable,
    binary_realization,
    bivariate,
    build_tau,
    chi_matrix,
    joint_cdf,
    marginalize,
    max_combine,
    product_chi,
    recover_theta,
    simulate,
    spectral_atoms,
    stable_tail_dependence,
    theta_from_tau,
)
from excoef.setfun import EcfTable, GroundSet, complete_dependence, from_mask, independence

from conftest import table

seeds = st.integers(0, 2**32 - 1)


def brute_chi(tau, s, t):
    return sum(tau.tau[L] for L in range(tau.ground.size) if (L >> s) & 1 and (L >> t) & 1)


class TestBuildTau:
    def test_running_example(self, example3):
        tau = build_tau(example3)
        assert tau.tau.tolist() == [0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, 0.5]
        np.testing.assert_allclose(tau.marginal_sums(), 1.0, atol=1e-15)

    def test_independence(self):
        tau = build_tau(independence(2))
        assert tau.tau.tolist() == [0.0, 1.0, 1.0, 0.0]

    def test_complete_dependence(self):
        tau = build_tau(complete_dependence(3))
        assert tau.support.tolist() == [7]
        assert tau[(0, 1, 2)] == 1.0

    def test_invalid_raises_with_report(self, invalid3):
        with pytest.raises(NotCompletelyAlternating) as err:
            build_tau(invalid3)
        assert not err.value.report.valid

    def test_table_rejects_bad_marginals(self):
        with pytest.raises(InvalidArgument):
            TauTable(GroundSet(2), [0.0, 0.5, 1.0, 0.0])
        with pytest.raises(InvalidArgument):
            TauTable(GroundSet(2), [0.0, -0.5, 0.0, 1.5])

    def test_digest_depends_on_weights(self, example3):
        a = build_tau(example3)
        b = build_tau(independence(3))
        assert a.digest() != b.digest()
        assert a.digest() == build_tau(example3).digest()


class TestRecoverTheta:
    def test_pair(self, example3):
        assert recover_theta(build_tau(example3), (0, 1)) == 1.5

    def test_empty_is_zero(self, example3):
        assert recover_theta(build_tau(example3), ()) == 0.0

    def test_independence_full(self):
        assert recover_theta(build_tau(independence(4)), range(4)) == 4.0

    @given(st.integers(1, 10), seeds)
    def test_round_trip(self, m, seed):
        theta = random_valid_ecf(m, np.random.default_rng(seed))
        tau = build_tau(theta)
        np.testing.assert_allclose(theta_from_tau(tau).values, theta.values, rtol=1e-12, atol=0)
        for t in range(m):
            assert recover_theta(tau, (t,)) == pytest.approx(1.0, abs=1e-12)


class TestMarginalize:
    def test_running_example(self, example3):
        sub = marginalize(build_tau(example3), (0, 1))
        assert sub.tau.tolist() == [0.0, 0.5, 0.5, 0.5]

    def test_full_set_is_identity(self, example3):
        tau = build_tau(example3)
        assert marginalize(tau, range(3)) == tau

    def test_independence(self):
        sub = marginalize(build_tau(independence(4)), (1, 3))
        assert sub.tau.tolist() == [0.0, 1.0, 1.0, 0.0]

    def test_empty_rejected(self, example3):
        with pytest.raises(InvalidArgument):
            marginalize(build_tau(example3), ())

    @given(st.integers(2, 7), seeds, st.data())
    def test_consistency(self, m, seed, data):
        tau = build_tau(random_valid_ecf(m, np.random.default_rng(seed)))
        t = data.draw(st.integers(0, m - 1))
        rest = [i for i in range(m) if i != t]
        small = marginalize(tau, rest)
        # tau^M_L = tau^{M+t}_L + tau^{M+t}_{L+t}, with L re-indexed onto `rest`
        for k in range(1, small.ground.size):
            L = sum(1 << rest[j] for j in from_mask(k))
            assert small.tau[k] == pytest.approx(tau.tau[L] + tau.tau[L | (1 << t)], abs=1e-12)
        # marginal theta equals the restriction of theta
        np.testing.assert_allclose(theta_from_tau(small).values, theta_from_tau(tau).restrict(rest).values, atol=1e-12)


class TestDerived:
    def test_joint_cdf_pair(self, pair15):
        assert joint_cdf(build_tau(pair15), [1, 1]) == pytest.approx(math.exp(-1.5), abs=1e-15)

    def test_joint_cdf_infinite(self, example3):
        assert joint_cdf(build_tau(example3), [np.inf] * 3) == 1.0

    def test_joint_cdf_marginal(self):
        tau = TauTable(GroundSet(1), [0.0, 1.0])
        assert joint_cdf(tau, [2.0]) == pytest.approx(math.exp(-0.5))

    def test_joint_cdf_rejects_nonpositive(self, pair15):
        with pytest.raises(InvalidArgument):
            joint_cdf(build_tau(pair15), [0.0, 1.0])

    def test_stable_tail_pair(self, pair15):
        assert stable_tail_dependence(build_tau(pair15), [1, 0.5]) == pytest.approx(1.25)

    def test_stable_tail_indicator(self, example3):
        tau = build_tau(example3)
        for A in range(1, 8):
            ind = [(A >> t) & 1 for t in range(3)]
            assert stable_tail_dependence(tau, ind) == pytest.approx(example3.values[A])
        assert stable_tail_dependence(tau, [2.5] * 3) == pytest.approx(5.0)

    def test_stable_tail_negative(self, pair15):
        with pytest.raises(InvalidArgument):
            stable_tail_dependence(build_tau(pair15), [-1, 1])

    def test_bivariate(self, example3):
        b = bivariate(build_tau(example3), 0, 1)
        assert (b.theta_pair, b.chi, b.eta) == (1.5, 0.5, 0.5)
        same = bivariate(build_tau(example3), 2, 2)
        assert (same.theta_pair, same.chi, same.eta) == (1.0, 1.0, 0.0)

    def test_chi_reference_models(self):
        np.testing.assert_allclose(chi_matrix(build_tau(independence(3))), np.eye(3))
        np.testing.assert_allclose(chi_matrix(build_tau(complete_dependence(3))), np.ones((3, 3)))

    @given(st.integers(2, 8), seeds)
    def test_chi_gram(self, m, seed):
        theta = random_valid_ecf(m, np.random.default_rng(seed))
        tau = build_tau(theta)
        chi = chi_matrix(tau)
        np.testing.assert_allclose(np.diag(chi), 1.0, atol=1e-12)
        assert np.linalg.eigvalsh(chi).min() >= -1e-9
        for s in range(m):
            for t in range(m):
                assert chi[s, t] == pytest.approx(brute_chi(tau, s, t), abs=1e-12)
                if s != t:
                    assert chi[s, t] == pytest.approx(2 - theta[(s, t)], abs=1e-12)

    @given(st.integers(3, 7), seeds)
    def test_eta_triangle(self, m, seed):
        eta = 1 - chi_matrix(build_tau(random_valid_ecf(m, np.random.default_rng(seed))))
        for s in range(m):
            for t in range(m):
                for r in range(m):
                    assert eta[s, t] <= eta[s, r] + eta[r, t] + 1e-12

    def test_spectral_sum_norm_independence(self):
        atoms = spectral_atoms(build_tau(independence(2)), "sum")
        assert atoms.weights.tolist() == [1.0, 1.0]
        assert atoms.atoms.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_spectral_max_norm_example(self, example3):
        atoms = spectral_atoms(build_tau(example3))
        assert atoms.weights.tolist() == [0.5] * 4
        assert len(atoms.subsets) == 4

    @pytest.mark.parametrize("norm", ["max", "sum", "euclidean"])
    def test_spectral_normalisation(self, example3, norm):
        atoms = spectral_atoms(build_tau(example3), norm)
        np.testing.assert_allclose(atoms.coordinate_masses(), 1.0)
        ref = {"max": np.max, "sum": np.sum, "euclidean": np.linalg.norm}[norm]
        np.testing.assert_allclose([ref(a) for a in atoms.atoms], 1.0)


class TestSimulate:
    def test_zero_replicates(self, example3):
        with pytest.raises(InvalidArgument):
            simulate(build_tau(example3), 0, 1)

    def test_complete_dependence_equal_coordinates(self):
        batch = simulate(build_tau(complete_dependence(4)), 1000, 3)
        assert np.all(batch.values == batch.values[:, :1])

    def test_deterministic(self, example3):
        tau = build_tau(example3)
        a, b = simulate(tau, 5000, 11), simulate(tau, 5000, 11)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, simulate(tau, 5000, 12).values)

    def test_partial_batches_concatenate(self, example3):
        tau = build_tau(example3)
        full = simulate(tau, 10_000, 5)
        parts = [simulate(tau, 3000, 5, start=0), simulate(tau, 4500, 5, start=3000), simulate(tau, 2500, 5, start=7500)]
        assert np.array_equal(np.vstack([p.values for p in parts]), full.values)

    def test_metadata(self, example3):
        tau = build_tau(example3)
        meta = simulate(tau, 10, 99).metadata()
        assert meta["n"] == 10 and meta["seed"] == 99 and meta["model_digest"] == tau.digest()

    def test_batch_rejects_nonpositive(self):
        with pytest.raises(InvalidArgument):
            SampleBatch(np.array([[1.0, 0.0]]), 0, "", ("a", "b"))

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_simulation_law(self, seed):
        rng = np.random.default_rng(seed)
        theta = random_valid_ecf(4, rng)
        tau = build_tau(theta)
        n = 100_000
        batch = simulate(tau, n, seed)
        p = joint_cdf(tau, [1.0] * 4)
        emp = np.mean(np.all(batch.values <= 1.0, axis=1))
        assert abs(emp - p) <= 4 / math.sqrt(n)
        for A in range(1, 16):
            idx = list(from_mask(A))
            mean = np.mean(1.0 / batch.values[:, idx].max(axis=1))
            target = 1.0 / theta.values[A]
            assert abs(mean - target) <= 4 * target / math.sqrt(n)


class TestBinaryRealization:
    def test_running_example(self, example3):
        d = binary_realization(example3, 2.0)
        assert d.q.tolist() == [0.0, 0.25, 0.25, 0.0, 0.25, 0.0, 0.0, 0.25]
        assert d.p == 0.5

    def test_capacity_is_scaled_theta(self, example3):
        d = binary_realization(example3, 3.0)
        np.testing.assert_allclose(d.capacity().values, example3.values / 3)

    def test_bound_too_small(self, example3):
        with pytest.raises(BoundTooSmall):
            binary_realization(example3, 1.5)

    def test_conditional_inclusion_matches_chi(self, example3):
        d = binary_realization(example3)
        n = 200_000
        Z = d.sample(n, 7)
        for s, t in [(0, 1), (1, 2), (2, 0)]:
            given_t = Z[:, t]
            emp = Z[given_t, s].mean()
            assert d.conditional_inclusion(s, t) == pytest.approx(0.5)
            assert abs(emp - 0.5) <= 4 / math.sqrt(n * d.p)
            C = d.capacity()
            assert 2 - C[(s, t)] / C[(t,)] == pytest.approx(0.5)


class TestCombinations:
    def test_alpha_one(self, example3):
        assert max_combine(example3, independence(3), 1.0) == example3

    def test_half_mix(self):
        mixed = max_combine(independence(2), complete_dependence(2), 0.5)
        assert mixed[(0, 1)] == 1.5

    def test_ground_mismatch(self, example3):
        with pytest.raises(InvalidArgument):
            max_combine(example3, independence(2), 0.5)

    def test_max_combine_matches_simulation(self, rng):
        # max(alpha X1, (1 - alpha) X2) has theta = alpha theta1 + (1 - alpha) theta2
        th1, th2 = random_valid_ecf(3, rng), random_valid_ecf(3, rng)
        alpha, n = 0.3, 100_000
        X = np.maximum(alpha * simulate(build_tau(th1), n, 1).values, (1 - alpha) * simulate(build_tau(th2), n, 2).values)
        target = max_combine(th1, th2, alpha)
        for A in range(1, 8):
            est = n / np.sum(1.0 / X[:, list(from_mask(A))].max(axis=1))
            assert abs(est - target.values[A]) <= 4 * target.values[A] / math.sqrt(n)

    def test_product_with_deterministic_full_set(self, example3):
        d1 = binary_realization(example3)
        full = RandomSetDistribution(d1.ground, np.eye(8)[7])
        np.testing.assert_allclose(product_chi(d1, full).q, d1.q)

    def test_product_of_example_copies(self, example3):
        d = binary_realization(example3)
        prod = product_chi(d, d)
        assert prod.conditional_inclusion(0, 1) == pytest.approx(0.25, abs=1e-15)
        assert prod.p == pytest.approx(d.p**2)

    def test_product_with_independence(self, example3):
        d = binary_realization(example3)
        ind = binary_realization(independence(3))
        prod = product_chi(d, ind)
        for s in range(3):
            for t in range(3):
                if s != t:
                    assert prod.conditional_inclusion(s, t) == 0.0

    def test_product_exhaustive_oracle(self, rng):
        d1 = binary_realization(random_valid_ecf(3, rng))
        d2 = binary_realization(random_valid_ecf(3, rng))
        q = np.zeros(8)
        for a in range(8):
            for b in range(8):
                q[a & b] += d1.q[a] * d2.q[b]
        np.testing.assert_allclose(product_chi(d1, d2).q, q, atol=1e-15)
        for s in range(3):
            for t in range(3):
                if s != t:
                    assert product_chi(d1, d2).conditional_inclusion(s, t) == pytest.approx(
                        d1.conditional_inclusion(s, t) * d2.conditional_inclusion(s, t))
