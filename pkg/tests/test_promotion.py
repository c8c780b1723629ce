import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from confounding.demand import MarketParams, UniformDemand
from confounding.policy import PromotionPolicy
from confounding.promotion import (
    InfeasibleError,
    baseline_confounding,
    confounding_alpha_high,
    confounding_price_closed_form,
    alpha_high_unhalved_variant,
    expected_surplus,
    myopic_price_closed_form,
    myopic_promotion,
    observable_confounding,
    observable_confounding_surplus,
    optimal_confounding,
    optimal_confounding_numeric,
    sale_probability,
    solve_policy_curve,
)
from confounding.seller import outside_option_price, phi_bar
from frozen import FROZEN
from test_demand import valid_params

GRID = np.linspace(0, 1, 101)


class _NumericOnly:
    """Uniform demand hidden behind a plain object so solvers take the numeric path."""

    def __init__(self, a, b):
        self._m = UniformDemand(a, b)
        self.price_domain = self._m.price_domain
        self.w_c_const = self._m.w_c_const

    def rho0(self, p):
        return self._m.rho0(p)

    def rho_c(self, p):
        return self._m.rho_c(p)

    def w0(self, p):
        return self._m.w0(p)

    def w_c(self, p):
        return self._m.w_c(p)


class TestMyopic:
    def test_default_market(self, params):
        policy, surplus = myopic_promotion(params, 0.5)
        assert (policy.alpha_low, policy.alpha_high) == (1.0, 1.0)
        assert policy.promoted_price == pytest.approx(FROZEN["myopic_price_half"], abs=1e-9)
        assert surplus == pytest.approx(FROZEN["w_max_half"], abs=1e-9)

    def test_price_decreasing_in_belief(self, params):
        prices = myopic_price_closed_form(params, GRID)
        assert np.all(np.diff(prices) < 0)
        assert prices[-1] == pytest.approx(FROZEN["myopic_price_one"], abs=1e-9)

    def test_closed_form_matches_numeric(self, params):
        model = _NumericOnly(0.6, 0.2)
        for mu in GRID[::10]:
            closed, _ = myopic_promotion(params, mu, method="closed")
            numeric, _ = myopic_promotion(params, mu, model)
            assert closed.promoted_price == pytest.approx(numeric.promoted_price, abs=1e-7)

    def test_degenerate_states_give_constant_price(self):
        flat = MarketParams.unvalidated(seller_quality=0.6, rival_quality=0.2, phi_low=0.5, phi_high=0.5)
        prices = myopic_price_closed_form(flat, GRID)
        assert np.ptp(prices) == 0.0

    def test_rejects_bad_belief(self, params):
        with pytest.raises(ValueError):
            myopic_promotion(params, 1.5)
        with pytest.raises(ValueError):
            myopic_promotion(params, 0.5, method="magic")


class TestAlphaHigh:
    def test_default_market_values(self, params):
        ah = confounding_alpha_high(params, FROZEN["confounding_price_half"], 1.0)
        assert ah == pytest.approx(FROZEN["alpha_high_half"], abs=1e-9)
        assert confounding_alpha_high(params, 0.29, 0.0) == pytest.approx(0.75 * 0.29 / 0.31, abs=1e-12)

    def test_equal_demand_gives_one(self):
        params = MarketParams(0.6, 0.0, 0.2, 0.8)
        assert confounding_alpha_high(params, 0.2, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_zero_demand_raises(self, params):
        with pytest.raises(ZeroDivisionError):
            confounding_alpha_high(params, 0.6, 1.0)

    def test_unhalved_variant_does_not_confound(self, params):
        # The variant with b^2 in place of b^2/2 misses the confounding identity.
        p = FROZEN["confounding_price_half"]
        variant = alpha_high_unhalved_variant(params, p)
        assert variant == pytest.approx(0.94185, abs=1e-5)
        policy = PromotionPolicy(p, 1.0, variant)
        gap = sale_probability(params, policy, "high") - sale_probability(params, policy, "low")
        assert abs(gap) > 1e-3


class TestSaleProbability:
    def test_confounded(self, params):
        policy, _ = optimal_confounding(params, 0.5)
        low = sale_probability(params, policy, "low")
        high = sale_probability(params, policy, "high")
        assert abs(low - high) < 1e-9
        assert low == pytest.approx(0.49990, abs=1e-4)
        assert low == pytest.approx(FROZEN["sale_prob_half"], abs=1e-9)

    def test_no_promotion(self, params):
        pol = PromotionPolicy(0.1, 0.0, 0.0)
        assert sale_probability(params, pol, "low") == pytest.approx(0.8 * (0.5 - 0.02))

    def test_equal_demand(self):
        params = MarketParams(0.6, 0.0, 0.2, 0.8)
        assert sale_probability(params, PromotionPolicy(0.2, 0.0, 1.0), "high") == pytest.approx(0.4)

    def test_bad_state(self, params):
        with pytest.raises(ValueError):
            sale_probability(params, PromotionPolicy(0.1, 0, 0), "medium")


class TestOptimalConfounding:
    def test_default_market(self, params):
        policy, surplus = optimal_confounding(params, 0.5)
        assert policy.promoted_price == pytest.approx(FROZEN["confounding_price_half"], abs=1e-9)
        assert policy.alpha_low == 1.0
        assert policy.alpha_high == pytest.approx(FROZEN["alpha_high_half"], abs=1e-9)
        assert surplus == pytest.approx(FROZEN["w_c_half"], abs=1e-9)
        # Rounded reference value, a few 1e-6 above the direct evaluation.
        assert surplus == pytest.approx(0.137262, abs=1e-5)

    def test_degenerate_beliefs_are_myopic(self, params):
        for mu in (0.0, 1.0):
            assert optimal_confounding(params, mu) == myopic_promotion(params, mu)

    def test_numeric_matches_closed_form(self, params):
        for mu in (0.01, 0.25, 0.5, 0.75, 0.99):
            closed, wc = optimal_confounding(params, mu, method="closed")
            numeric, wn = optimal_confounding(params, mu, method="numeric")
            assert numeric.alpha_low == 1.0
            assert numeric.promoted_price == pytest.approx(closed.promoted_price, abs=1e-6)
            assert wn == pytest.approx(wc, abs=1e-9)

    def test_matches_bisection_oracle(self, params):
        for mu in (0.1, 0.5, 0.9):
            p = oracles.confounding_price(0.6, 0.2, 0.2, 0.8, mu)
            assert optimal_confounding(params, mu)[0].promoted_price == pytest.approx(p, abs=1e-8)

    def test_matches_brute_force_grid(self, params):
        w, p, al = oracles.brute_force_confounding(0.6, 0.2, 0.2, 0.8, 0.5, n_price=1201, n_alpha=11)
        policy, surplus = optimal_confounding(params, 0.5)
        assert al == 1.0
        assert surplus >= w - 1e-12
        assert surplus - w < 1e-3
        assert abs(policy.promoted_price - p) < 1e-3

    def test_participation_binds(self, params):
        model = UniformDemand(0.6, 0.2)
        for mu in GRID[1:-1]:
            pol, _ = optimal_confounding(params, mu)
            p = pol.promoted_price
            lhs = (1 - 0.2) * p * model.rho_c(p) + 0.2 * pol.alpha_low * p * model.rho0(p)
            rhs = 0.29 * 0.29 * (1 - phi_bar(params, mu))
            assert lhs == pytest.approx(rhs, abs=1e-7)

    def test_raises_price_above_myopic(self, params):
        for mu in GRID:
            assert optimal_confounding(params, mu)[0].promoted_price >= myopic_promotion(params, mu)[0].promoted_price

    def test_infeasible_is_reported(self, params):
        class NoDemand(_NumericOnly):
            def rho0(self, p):
                return np.zeros_like(np.asarray(p, dtype=float))

        with pytest.raises(InfeasibleError):
            optimal_confounding_numeric(params, 0.5, NoDemand(0.6, 0.2))

    @given(valid_params(), st.floats(0.01, 0.99))
    def test_properties(self, params, mu):
        policy, wc = optimal_confounding(params, mu)
        _, wm = myopic_promotion(params, mu)
        low = sale_probability(params, policy, "low")
        high = sale_probability(params, policy, "high")
        assert abs(low - high) < 1e-9
        assert wc <= wm + 1e-12
        base = baseline_confounding(params)
        wb = expected_surplus(params, UniformDemand.from_params(params), base.promoted_price, 0.0, base.alpha_high, mu)
        assert wc >= wb - 1e-12
        assert observable_confounding_surplus(params, mu) <= wc + 1e-12


class TestBaseline:
    def test_default_market(self, params):
        pol = baseline_confounding(params)
        assert pol.promoted_price == 0.29
        assert pol.alpha_low == 0.0
        assert pol.alpha_high == pytest.approx(0.70161, abs=1e-5)
        low = sale_probability(params, pol, "low")
        assert low == pytest.approx(0.232, abs=1e-12)
        assert abs(low - sale_probability(params, pol, "high")) < 1e-12

    def test_vanishes_as_states_merge(self):
        for gap in (1e-2, 1e-4, 1e-6):
            params = MarketParams(0.6, 0.2, 0.5, 0.5 + gap)
            assert baseline_confounding(params).alpha_high < 2 * gap


class TestObservable:
    def test_zero_with_valuable_rival(self, params):
        assert observable_confounding_surplus(params, 0.5) == 0.0
        assert observable_confounding(params, 0.3) == (None, 0.0)

    def test_degenerate_belief(self, params):
        assert observable_confounding_surplus(params, 1.0) == myopic_promotion(params, 1.0)[1]

    def test_worthless_rival_matches_confounding(self):
        params = MarketParams(0.6, 0.0, 0.2, 0.8)
        for mu in (0.1, 0.5, 0.9):
            pol, w = observable_confounding(params, mu)
            _, wc = optimal_confounding(params, mu)
            assert w == pytest.approx(wc, abs=1e-9)
            assert pol.alpha_low == pol.alpha_high == 1.0


class TestCurves:
    def test_modes(self, params):
        for mode in ("myopic", "confounding", "observable", "baseline"):
            curve = solve_policy_curve(params, mode, 51)
            assert len(curve) == 51
            assert curve.mu_grid[0] == 0.0 and curve.mu_grid[-1] == 1.0
        with pytest.raises(ValueError):
            solve_policy_curve(params, "greedy", 11)

    def test_observable_interior_zero(self, params):
        curve = solve_policy_curve(params, "observable", 51)
        assert np.all(curve.surplus[1:-1] == 0.0)
        assert curve.surplus[0] > 0 and curve.surplus[-1] > 0

    def test_confounding_gap_vs_myopic(self, params):
        conf = solve_policy_curve(params, "confounding", 101)
        my = solve_policy_curve(params, "myopic", 101)
        gap = my.surplus - conf.surplus
        assert gap[0] == 0.0 and gap[-1] == 0.0
        assert np.all(gap >= -1e-12)

    def test_curve_revenue_equals_fallback(self, params):
        conf = solve_policy_curve(params, "confounding", 101)
        fallback = (1 - phi_bar(params, conf.mu_grid)) * outside_option_price(params) ** 2
        np.testing.assert_allclose(conf.seller_revenue, fallback, atol=1e-12)

    def test_cached(self, params):
        assert solve_policy_curve(params, "myopic", 31) is solve_policy_curve(params, "myopic", 31)
