import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from confounding.demand import DomainError, MarketParams
from confounding.infodesign import (
    METRIC_COLUMNS,
    DegenerateMetricError,
    Signal,
    ValueCurve,
    captured_share,
    concavify,
    confounding_curve,
    metrics_table,
    optimal_signal,
    relative_gain,
    split_signal,
    truthful_signal,
    uninformative_signal,
    w_max,
    w_truthful,
)
from confounding.promotion import solve_policy_curve
from frozen import FROZEN

curves = st.integers(3, 40).flatmap(
    lambda n: st.lists(st.floats(-10, 10), min_size=n, max_size=n).map(
        lambda v: ValueCurve(np.linspace(0, 1, len(v)), np.array(v))
    )
)


class TestConcavify:
    def test_concave_input_unchanged(self):
        mu = np.linspace(0, 1, 101)
        v = -((mu - 0.5) ** 2)
        np.testing.assert_allclose(concavify(ValueCurve(mu, v)).values, v, atol=1e-12)

    def test_convex_input_gives_chord(self):
        mu = np.linspace(0, 1, 101)
        v = np.maximum(0, mu - 0.9) * 10
        np.testing.assert_allclose(concavify(ValueCurve(mu, v)).values, mu, atol=1e-12)

    def test_matches_brute_force_on_confounding_curve(self, params):
        wc = confounding_curve(params, 501)
        co = concavify(wc)
        np.testing.assert_allclose(co.values, oracles.brute_concave_envelope(wc.mu_grid, wc.values), atol=1e-12)
        gap = co.values - wc.values
        # The gap opens on an interval reaching up to (but not including) mu = 1.
        assert gap.max() > 0 and gap[-1] == 0.0 and gap[-2] > 0
        assert co(0.5) == pytest.approx(FROZEN["co_w_c_half"], abs=1e-8)

    @given(curves)
    def test_envelope_properties(self, curve):
        co = concavify(curve)
        assert np.all(co.values >= curve.values)
        assert np.all(np.diff(co.values, 2) <= 1e-12 * (1 + np.abs(curve.values).max()))
        assert co.values[0] == curve.values[0] and co.values[-1] == curve.values[-1]
        np.testing.assert_allclose(co.values, oracles.brute_concave_envelope(curve.mu_grid, curve.values), atol=1e-9)

    def test_value_curve_validation(self):
        with pytest.raises(ValueError):
            ValueCurve([0.0, 0.5, 0.4], [1, 2, 3])
        with pytest.raises(ValueError):
            ValueCurve([0.0, 1.0], [1.0, np.inf])
        with pytest.raises(ValueError):
            ValueCurve([0.0], [1.0])


class TestSignal:
    def test_split_formulas(self):
        sig = split_signal(0.6, 0.3, 1.0)
        assert sig.prob_low_given_low == 1.0
        assert sig.prob_low_given_high == pytest.approx(0.285714, abs=1e-6)
        assert sig.mean_posterior(0.6) == pytest.approx(0.6, abs=1e-12)
        assert sig.posterior(0.6, False) == pytest.approx(0.3, abs=1e-12)
        assert sig.posterior(0.6, True) == pytest.approx(1.0, abs=1e-12)

    def test_concave_curve_gives_uninformative(self):
        mu = np.linspace(0, 1, 11)
        sig = optimal_signal(ValueCurve(mu, -((mu - 0.5) ** 2)), 0.3)
        assert sig == uninformative_signal(0.3)

    def test_mu0_on_touch_point(self):
        mu = np.linspace(0, 1, 11)
        v = np.maximum(0, mu - 0.5)
        v[3] = 0.5  # spike touching the envelope at 0.3
        assert optimal_signal(ValueCurve(mu, v), mu[3]).mu_prime == mu[3]

    def test_endpoints_and_domain(self):
        mu = np.linspace(0.2, 1, 5)
        curve = ValueCurve(mu, mu**2)
        assert optimal_signal(ValueCurve(np.linspace(0, 1, 5), np.zeros(5)), 0.0) == uninformative_signal(0.0)
        with pytest.raises(DomainError):
            optimal_signal(curve, 0.1)

    def test_default_market_split(self, params):
        wc = confounding_curve(params, 501)
        sig = optimal_signal(wc, 0.5)
        assert sig.mu_prime == pytest.approx(FROZEN["mu_prime_half"], abs=1e-12)
        assert sig.mu_double_prime == 1.0
        assert sig.prob_low_given_low == 1.0
        assert sig.expected_value(wc, 0.5) == pytest.approx(concavify(wc)(0.5), abs=1e-9)

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Signal(0.5, 0.4, 0.0, 1.0, 0.2, 0.8)

    @given(curves, st.floats(0, 1))
    def test_bayes_plausible_and_attains_envelope(self, curve, mu0):
        sig = optimal_signal(curve, mu0)
        assert abs(sig.mean_posterior(mu0) - mu0) < 1e-12
        assert sig.mu_prime <= mu0 <= sig.mu_double_prime
        assert sig.expected_value(curve, mu0) == pytest.approx(concavify(curve)(mu0), abs=1e-9)

    def test_truthful(self):
        sig = truthful_signal()
        assert sig.posterior(0.3, True) == 1.0 and sig.posterior(0.3, False) == 0.0


class TestMetrics:
    def test_frozen_values(self, params):
        assert w_truthful(params, 0.5) == pytest.approx(FROZEN["w_truthful_half"], abs=1e-9)
        assert w_max(params, 0.5) == pytest.approx(FROZEN["w_max_half"], abs=1e-9)
        assert w_truthful(params, 1.0) == pytest.approx(FROZEN["w_bar_high_one"], abs=1e-9)

    def test_endpoints_exact(self, params):
        for mu in (0.0, 1.0):
            assert w_truthful(params, mu) == w_max(params, mu)
            assert relative_gain(params, mu) == 0.0
            assert captured_share(params, mu) == 1.0

    def test_table(self, params, tmp_path):
        t = metrics_table(params, 501)
        assert np.all(t.w_max >= t.co_w_c - 1e-12)
        assert np.all(t.co_w_c >= t.w_c)
        assert np.all(t.w_max >= t.w_truthful - 1e-12)
        assert np.all(t.relative_gain >= -1e-9)
        k = int(np.argmax(t.relative_gain))
        assert 0 < k < len(t.mu) - 1
        assert t.relative_gain[k] == pytest.approx(FROZEN["max_relative_gain"], abs=1e-7)
        assert t.mu[k] == pytest.approx(FROZEN["argmax_relative_gain"])
        path = tmp_path / "m.csv"
        t.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(METRIC_COLUMNS) and len(lines) == 502

    def test_observable_envelope_is_truthful(self, params):
        obs = solve_policy_curve(params, "observable", 201)
        co = concavify(ValueCurve(obs.mu_grid, obs.surplus))
        np.testing.assert_allclose(co.values, w_truthful(params, obs.mu_grid), atol=1e-12)

    def test_zero_denominator(self, params):
        from confounding.infodesign import _ratio

        with pytest.raises(DegenerateMetricError):
            _ratio(np.ones(2), np.array([1.0, 0.0]))

    def test_other_market(self):
        params = MarketParams(0.9, 0.3, 0.1, 0.6)
        t = metrics_table(params, 201)
        assert np.all(t.w_max >= t.co_w_c - 1e-12) and np.all(t.co_w_c >= t.w_c)
        assert t.relative_gain[0] == 0.0 and t.captured_share[-1] == 1.0
