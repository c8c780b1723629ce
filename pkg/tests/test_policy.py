import numpy as np
import pytest

from confounding.policy import POLICY_CURVE_COLUMNS, PolicyCurve, PromotionPolicy


def small_curve():
    grid = np.array([0.0, 0.5, 1.0])
    pols = [PromotionPolicy(0.1, 1.0, 1.0), PromotionPolicy(0.2, 1.0, 0.9), PromotionPolicy(0.05, 1.0, 1.0)]
    return PolicyCurve(grid, pols, [0.1, 0.2, 0.3], [0.01, 0.02, 0.03])


@pytest.mark.parametrize("lo,hi", [(-0.1, 0.5), (0.5, 1.1)])
def test_policy_rejects_bad_probabilities(lo, hi):
    with pytest.raises(ValueError):
        PromotionPolicy(0.1, lo, hi)


def test_policy_rejects_nonfinite_price():
    with pytest.raises(ValueError):
        PromotionPolicy(float("nan"), 0.5, 0.5)


def test_curve_validation():
    c = small_curve()
    with pytest.raises(ValueError):
        PolicyCurve(np.array([0.0, 0.0, 1.0]), c.policies, c.surplus, c.seller_revenue)
    with pytest.raises(ValueError):
        PolicyCurve(c.mu_grid, c.policies[:2], c.surplus, c.seller_revenue)
    with pytest.raises(ValueError):
        PolicyCurve(c.mu_grid, c.policies, [-1.0, 0.0, 0.0], c.seller_revenue)


def test_nearest_index_ties_go_low():
    c = small_curve()
    assert c.nearest_index(0.25) == 0
    assert c.nearest_index(0.26) == 1
    np.testing.assert_array_equal(c.nearest_index(np.array([0.0, 0.74, 0.76, 1.0])), [0, 1, 2, 2])
    assert c.policy_at(0.9).promoted_price == 0.05


def test_csv_round_trip_is_exact(tmp_path):
    c = small_curve()
    path = tmp_path / "curve.csv"
    c.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(POLICY_CURVE_COLUMNS)
    back = PolicyCurve.from_csv(path)
    np.testing.assert_array_equal(back.mu_grid, c.mu_grid)
    assert back.policies == c.policies
    np.testing.assert_array_equal(back.surplus, c.surplus)
