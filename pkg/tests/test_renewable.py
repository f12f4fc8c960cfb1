import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from reserve_insure import renewable as rn
from reserve_insure.errors import DataError
from reserve_insure.quadrature import adaptive_simpson, capped_cost_quad, shortfall_quad
from reserve_insure.renewable import RenewableModel, fit_hourly_gaussian


def one(mu, sigma, cap=100.0):
    return RenewableModel(np.array([mu]), np.array([sigma]), cap)


class TestModel:
    def test_rejects_mean_above_capacity(self):
        with pytest.raises(ValueError):
            one(40.0, 1.0, cap=32.0)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            one(10.0, -1.0)

    def test_dict_round_trip(self):
        m = RenewableModel(np.array([1.0, 2.5]), np.array([0.3, 0.0]), 10.0)
        back = RenewableModel.from_dict(m.to_dict())
        assert_allclose(back.mu, m.mu)
        assert back.degenerate.tolist() == [False, True]


class TestFit:
    def test_constant_slot_flagged(self):
        with pytest.warns(RuntimeWarning, match="degenerate"):
            m = fit_hourly_gaussian([[10, 10, 10], [8, 12]])
        assert m.mu[0] == 10 and m.sigma[0] == 0 and m.degenerate[0]

    def test_unbiased_std(self):
        m = fit_hourly_gaussian([[8.0, 12.0]])
        assert_allclose(m.sigma[0], np.sqrt(8.0))
        assert m.capacity == 12.0

    def test_capacity_override(self):
        assert fit_hourly_gaussian([[8.0, 12.0]], capacity=30).capacity == 30.0

    def test_too_few_samples(self):
        with pytest.raises(DataError, match="slot 1"):
            fit_hourly_gaussian([[1.0, 2.0], [3.0]])

    def test_recovers_mean(self, rng):
        samples = 15 + 3 * rng.standard_normal((24, 31))
        m = fit_hourly_gaussian(list(samples))
        assert_allclose(m.mu, samples.mean(axis=1))
        # worst of 24 slots, so the per-slot 3 SE bound is widened for the family
        assert np.all(np.abs(m.mu - 15) < 3.5 * 3 / np.sqrt(31))


class TestQuantile:
    def test_median(self):
        assert rn.quantile(one(10, 2), 0, 0.5) == pytest.approx(10.0)

    def test_worked_value(self):
        # independent reference from mpmath's erfinv
        z = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf("0.4") - 1))
        assert_allclose(rn.quantile(one(10, 2), 0, 0.4), 10 + 2 * z, atol=1e-12)
        assert_allclose(rn.quantile(one(10, 2), 0, 0.4), 9.4933057937, atol=1e-9)

    def test_inverse_of_cdf(self):
        p = np.linspace(0.01, 0.99, 99)
        m = one(12, 3)
        assert_allclose(rn.cdf(m, 0, rn.quantile(m, 0, p)), p, atol=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5, np.nan])
    def test_out_of_range(self, p):
        with pytest.raises(ValueError):
            rn.quantile(one(10, 2), 0, p)

    def test_degenerate(self):
        assert rn.quantile(one(7, 0), 0, 0.9) == 7.0


class TestShortfall:
    def test_at_mean(self):
        assert_allclose(rn.expected_shortfall(one(10, 2), 0, 10.0), 2 / np.sqrt(2 * np.pi), atol=1e-12)

    def test_far_below(self):
        assert rn.expected_shortfall(one(10, 2), 0, 10 - 7 * 2) < 1e-8

    def test_far_above(self):
        assert_allclose(rn.expected_shortfall(one(10, 2), 0, 22.0), 12.0, atol=1e-6)

    def test_degenerate(self):
        assert rn.expected_shortfall(one(5, 0), 0, 8.0) == 3.0
        assert rn.expected_shortfall(one(5, 0), 0, 2.0) == 0.0

    @pytest.mark.parametrize("c", [4.0, 9.0, 10.0, 13.5, 18.0])
    def test_matches_quadrature(self, c):
        assert_allclose(rn.expected_shortfall(one(10, 2), 0, c), shortfall_quad(10, 2, c), atol=1e-9)

    def test_grid_shape_properties(self):
        m = one(10, 2)
        grid = np.linspace(0, 25, 501)
        es = rn.expected_shortfall(m, 0, grid)
        d = np.diff(es)
        assert np.all(d >= -1e-15)
        assert np.all(d <= np.diff(grid) + 1e-12)
        assert np.all(np.diff(d) >= -1e-12)

    def test_monte_carlo(self, rng):
        r = 10 + 2 * rng.standard_normal(10 ** 6)
        s = np.maximum(11.0 - r, 0.0)
        se = s.std(ddof=1) / np.sqrt(s.size)
        assert abs(s.mean() - rn.expected_shortfall(one(10, 2), 0, 11.0)) < 4 * se


class TestCappedCost:
    def test_zero_cap(self):
        assert rn.expected_capped_cost(one(10, 2), 0, 11.0, 0.0, 7.0) == 0.0

    def test_infinite_cap(self):
        m = one(10, 2)
        assert_allclose(rn.expected_capped_cost(m, 0, 11.0, np.inf, 7.0), 7 * rn.expected_shortfall(m, 0, 11.0))

    def test_worked_value(self):
        got = rn.expected_capped_cost(one(10, 2), 0, 11.0, 4.0, 7.0)
        assert_allclose(got, capped_cost_quad(10, 2, 11.0, 4.0, 7.0), atol=1e-8)
        assert_allclose(got, 9.35885669094, atol=1e-9)

    def test_negative_cap(self):
        with pytest.raises(ValueError):
            rn.expected_capped_cost(one(10, 2), 0, 11.0, -1.0, 7.0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 30), st.floats(0, 20), st.floats(0, 20))
    def test_monotone_and_bounded(self, c, cap1, extra):
        m = one(12, 3)
        lo = rn.expected_capped_cost(m, 0, c, cap1, 7.0)
        hi = rn.expected_capped_cost(m, 0, c, cap1 + extra, 7.0)
        assert lo <= hi + 1e-12
        assert hi <= 7.0 * (cap1 + extra) + 1e-9
        assert hi <= 7.0 * rn.expected_shortfall(m, 0, c) + 1e-9


class TestSampling:
    def test_degenerate(self):
        r = rn.sample(one(6, 0, cap=10), 0, np.random.default_rng(0), size=5)
        assert np.all(r == 6.0)

    def test_same_seed_same_draws(self):
        m = RenewableModel(np.full(24, 10.0), np.full(24, 3.0), 32)
        a = rn.sample_scenarios(m, rn.scenario_rng(7, 3), 10)
        b = rn.sample_scenarios(m, rn.scenario_rng(7, 3), 10)
        c = rn.sample_scenarios(m, rn.scenario_rng(7, 4), 10)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_clipped_range(self):
        m = RenewableModel(np.full(4, 2.0), np.full(4, 5.0), 6.0)
        r = rn.sample_scenarios(m, np.random.default_rng(1), 1000)
        assert r.min() == 0.0 and r.max() == 6.0

    def test_truncated_mean_matches_quadrature(self):
        from reserve_insure.quadrature import gaussian_pdf
        mu, sigma, hi = 15.0, 3.0, 20.0
        inner = adaptive_simpson(lambda r: r * gaussian_pdf(r, mu, sigma), 0.0, hi, 1e-11)
        lower = adaptive_simpson(lambda r: gaussian_pdf(r, mu, sigma), hi, mu + 14 * sigma, 1e-11)
        assert_allclose(rn.truncated_mean(mu, sigma, 0.0, hi), inner + hi * lower, atol=1e-8)

    def test_clipped_mean(self):
        m = one(15, 3, cap=32)
        r = rn.sample(m, 0, rn.scenario_rng(11), size=10 ** 6)
        assert abs(r.mean() - rn.truncated_mean(15, 3, 0, 32)) < 0.01


def test_expected_delivery():
    m = one(10, 2)
    assert_allclose(rn.expected_delivery(m, 0, 10.0), 10 - 2 / np.sqrt(2 * np.pi))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert rn.expected_delivery(m, 0, 0.0) == pytest.approx(0.0, abs=1e-6)
