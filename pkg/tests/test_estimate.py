import math

import numpy as np
import pytest

from excoef.errors import InsufficientExceedances, InvalidArgument
from excoef.estimate import (
    CONTINUITY_EPSILONS,
    bivariate_cdf,
    check_bivariate_cdf,
    check_continuity_bound,
    continuity_bound,
    empirical_quantile,
    estimate_chi,
    estimate_theta,
    finite_threshold_chi,
)
from excoef.generators import random_valid_ecf
from excoef.maxlinear import bivariate, build_tau, simulate
from excoef.setfun import complete_dependence, from_mask, independence


@pytest.fixture(scope="module")
def example_batch():
    from conftest import table

    return simulate(build_tau(table(3, [0.0, 1.0, 1.5, 2.0])), 1_000_000, 2024)


class TestEstimateTheta:
    def test_complete_dependence(self):
        n = 100_000
        est = estimate_theta(simulate(build_tau(complete_dependence(3)), n, 1), (0, 1, 2))
        assert abs(est.point - 1.0) <= 4 / math.sqrt(n)

    def test_independence_full_set(self):
        n, m = 100_000, 4
        est = estimate_theta(simulate(build_tau(independence(m)), n, 2), range(m))
        assert abs(est.point - m) <= 4 * m / math.sqrt(n)
        assert est.stderr == pytest.approx(est.point / math.sqrt(n))

    def test_running_example(self, example_batch):
        est = estimate_theta(example_batch, (0, 1, 2))
        assert abs(est.point - 2.0) <= 4 * 2.0 / math.sqrt(example_batch.n)

    def test_empty_subset(self, example_batch):
        with pytest.raises(InvalidArgument):
            estimate_theta(example_batch, ())

    def test_consistency_across_seeds(self):
        rng = np.random.default_rng(5)
        theta = random_valid_ecf(6, rng)
        tau = build_tau(theta)
        n = 100_000
        sets = [A for A in range(1, 64) if bin(A).count("1") <= 3]
        passes = 0
        for seed in range(20):
            batch = simulate(tau, n, seed)
            passes += all(
                abs(estimate_theta(batch, from_mask(A)).point - theta.values[A]) <= 4 * theta.values[A] / math.sqrt(n)
                for A in sets
            )
        assert passes >= 19


class TestEstimateChi:
    def test_complete_dependence(self):
        batch = simulate(build_tau(complete_dependence(2)), 10_000, 3)
        for q in (0.5, 0.9, 0.99):
            assert estimate_chi(batch, 0, 1, quantile=q).point == 1.0

    def test_insufficient_exceedances(self, example_batch):
        with pytest.raises(InsufficientExceedances) as err:
            estimate_chi(example_batch, 0, 1, threshold=1e7)
        assert err.value.count < 30

    def test_finite_threshold_at_95_percent(self, example_batch):
        # at the 0.95 quantile the conditional probability still exceeds chi = 0.5
        # by about 0.019; the estimate matches the exact finite-threshold value
        est = estimate_chi(example_batch, 0, 1, quantile=0.95)
        exact = finite_threshold_chi(1.5, est.info["threshold"])
        assert exact == pytest.approx(0.519, abs=2e-3)
        assert abs(est.point - exact) <= 5 * est.stderr

    def test_limit_at_99_percent(self, example_batch):
        est = estimate_chi(example_batch, 0, 1, quantile=0.99)
        assert abs(est.point - 0.5) <= 5 * est.stderr

    def test_independence_bias_decreases(self):
        batch = simulate(build_tau(independence(2)), 1_000_000, 4)
        values = [estimate_chi(batch, 0, 1, quantile=q).point for q in (0.8, 0.9, 0.95, 0.99)]
        assert values == sorted(values, reverse=True)
        assert values[-1] < 0.02

    def test_bias_envelope_over_seeds(self):
        tau = build_tau(random_valid_ecf(3, np.random.default_rng(9)))
        chi = bivariate(tau, 0, 1).chi
        first, last = [], []
        for seed in range(5):
            batch = simulate(tau, 200_000, seed)
            first.append(abs(estimate_chi(batch, 0, 1, quantile=0.8).point - chi))
            last.append(abs(estimate_chi(batch, 0, 1, quantile=0.995).point - chi))
        assert np.mean(last) < np.mean(first)

    def test_quantile_range(self, example_batch):
        with pytest.raises(InvalidArgument):
            empirical_quantile(example_batch, 0, 1.0)

    def test_finite_threshold_limit(self):
        assert finite_threshold_chi(1.5, 1e8) == pytest.approx(0.5, abs=1e-6)
        assert finite_threshold_chi(1.0, 3.0) == pytest.approx(1.0)


class TestContinuityBound:
    def test_closed_form(self):
        exact, linear = continuity_bound(0.5, 1.0)
        assert exact == pytest.approx(0.7869, abs=1e-4)
        assert linear == 1.0

    def test_complete_dependence(self):
        batch = simulate(build_tau(complete_dependence(2)), 10_000, 1)
        check = check_continuity_bound(batch, 0, 1, 0.0)
        assert check.ok
        assert all(r["empirical"] == 0.0 and r["bound"] == 0.0 for r in check.rows)

    def test_running_example(self, example_batch):
        for s, t in [(0, 1), (0, 2), (1, 2)]:
            check = check_continuity_bound(example_batch, s, t, 0.5)
            assert check.ok
            assert [r["epsilon"] for r in check.rows] == list(CONTINUITY_EPSILONS)
            row = check.rows[2]
            assert row["empirical"] < row["bound"]

    def test_bad_epsilon(self):
        with pytest.raises(InvalidArgument):
            continuity_bound(0.5, 0.0)


class TestBivariateCdf:
    def test_plug_in(self):
        assert bivariate_cdf(0.5, 1, 1) == pytest.approx(math.exp(-1.5))

    def test_marginal_limit(self):
        assert bivariate_cdf(0.5, 1e300, 2.0) == pytest.approx(math.exp(-0.5))

    def test_independence(self):
        assert bivariate_cdf(1.0, 2.0, 3.0) == pytest.approx(math.exp(-0.5) * math.exp(-1 / 3))

    def test_against_samples(self, example_batch):
        grid = [(x, y) for x in (0.5, 1, 3) for y in (0.5, 1, 3)]
        assert check_bivariate_cdf(example_batch, 0, 1, 0.5, grid).ok
