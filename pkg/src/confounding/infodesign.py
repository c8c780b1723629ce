"""Value curves, concavification and the optimal binary signal.

The long-run surplus of the best simple policy at prior ``mu0`` is the upper
concave envelope of the confounding curve ``W^C`` evaluated at ``mu0``.  The
signal that achieves it splits ``mu0`` into the two envelope-touch points
around it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

from .demand import DomainError, DemandModel, MarketParams, demand_for
from .promotion import myopic_promotion, solve_policy_curve

METRIC_COLUMNS = ("mu", "wC", "coWC", "wTruthful", "wMax", "RG", "CCS")

# |co - curve| below this counts as the envelope touching the curve.
TOUCH_TOL = 1e-9


class DegenerateMetricError(ZeroDivisionError):
    """A surplus ratio has a zero denominator."""


@dataclass(frozen=True)
class ValueCurve:
    mu_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "mu_grid", mu)
        object.__setattr__(self, "values", v)
        if mu.ndim != 1 or len(mu) < 2 or np.any(np.diff(mu) <= 0):
            raise ValueError("mu_grid must be strictly ascending with at least two points")
        if v.shape != mu.shape:
            raise ValueError("values must have one entry per grid point")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")

    def __call__(self, mu: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Piecewise-linear interpolation between grid points."""
        out = np.interp(mu, self.mu_grid, self.values)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Signal:
    """Binary signal: row ``L`` / ``H`` is the message distribution in that state.

    ``mu_prime`` is the posterior after message ``L`` and ``mu_double_prime``
    after message ``H``.
    """

    prob_low_given_low: float
    prob_high_given_low: float
    prob_low_given_high: float
    prob_high_given_high: float
    mu_prime: float
    mu_double_prime: float

    def __post_init__(self) -> None:
        for name in ("prob_low_given_low", "prob_high_given_low", "prob_low_given_high", "prob_high_given_high"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.prob_low_given_low + self.prob_high_given_low - 1.0) > 1e-12:
            raise ValueError("low-state row must sum to one")
        if abs(self.prob_low_given_high + self.prob_high_given_high - 1.0) > 1e-12:
            raise ValueError("high-state row must sum to one")

    def prob_message_low(self, mu0: float) -> float:
        return (1.0 - mu0) * self.prob_low_given_low + mu0 * self.prob_low_given_high

    def posterior(self, mu0: float, message_high: bool) -> float:
        """Belief after the message, by Bayes' rule from ``mu0``."""
        if message_high:
            num = mu0 * self.prob_high_given_high
            den = num + (1.0 - mu0) * self.prob_high_given_low
        else:
            num = mu0 * self.prob_low_given_high
            den = num + (1.0 - mu0) * self.prob_low_given_low
        return mu0 if den == 0.0 else num / den

    def mean_posterior(self, mu0: float) -> float:
        p_low = self.prob_message_low(mu0)
        return p_low * self.mu_prime + (1.0 - p_low) * self.mu_double_prime

    def expected_value(self, curve: ValueCurve, mu0: float) -> float:
        p_low = self.prob_message_low(mu0)
        return p_low * curve(self.mu_prime) + (1.0 - p_low) * curve(self.mu_double_prime)


def uninformative_signal(mu0: float) -> Signal:
    return Signal(1.0, 0.0, 1.0, 0.0, mu0, mu0)


def truthful_signal() -> Signal:
    return Signal(1.0, 0.0, 0.0, 1.0, 0.0, 1.0)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def upper_hull_indices(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the upper convex hull of points sorted by ``x`` (monotone chain).

    Collinear middle points are dropped.
    """
    hull: list[int] = []
    for i in range(len(x)):
        p = (x[i], y[i])
        while len(hull) >= 2 and _cross((x[hull[-2]], y[hull[-2]]), (x[hull[-1]], y[hull[-1]]), p) >= 0:
            hull.pop()
        hull.append(i)
    return hull


def concavify(curve: ValueCurve) -> ValueCurve:
    """Upper concave envelope of ``curve`` evaluated on its own grid.

    Hull vertices keep their input value exactly; other points are linearly
    interpolated along the hull edge above them.
    """
    x, y = curve.mu_grid, curve.values
    hull = upper_hull_indices(x, y)
    out = np.interp(x, x[hull], y[hull])
    out[hull] = y[hull]
    # Rounding in the interpolation must never dip below the input.
    return ValueCurve(x, np.maximum(out, y))


def optimal_signal(curve: ValueCurve, mu0: float, envelope: ValueCurve | None = None) -> Signal:
    """Binary signal attaining the envelope value at ``mu0``.

    ``mu_prime`` / ``mu_double_prime`` are the closest grid points at or below /
    at or above ``mu0`` where the envelope touches the curve.  When the
    envelope meets the curve at ``mu0`` itself the signal is uninformative.
    """
    grid = curve.mu_grid
    if not grid[0] <= mu0 <= grid[-1]:
        raise DomainError(f"mu0={mu0} outside the curve grid [{grid[0]}, {grid[-1]}]")
    if mu0 in (0.0, 1.0):
        return uninformative_signal(mu0)
    co = concavify(curve) if envelope is None else envelope
    # No persuasion value where the envelope already meets the (interpolated) curve.
    if abs(co(mu0) - curve(mu0)) <= TOUCH_TOL:
        return uninformative_signal(mu0)
    touch = np.abs(co.values - curve.values) <= TOUCH_TOL
    below = np.flatnonzero(touch & (grid <= mu0))
    above = np.flatnonzero(touch & (grid >= mu0))
    mu_p, mu_pp = float(grid[below[-1]]), float(grid[above[0]])
    if mu_p == mu_pp:
        return uninformative_signal(mu0)
    return split_signal(mu0, mu_p, mu_pp)


def split_signal(mu0: float, mu_p: float, mu_pp: float) -> Signal:
    """Signal whose posteriors are ``mu_p`` and ``mu_pp`` with ``mu_p < mu0 < mu_pp``."""
    if not (0.0 <= mu_p < mu0 < mu_pp <= 1.0):
        raise ValueError(f"need 0 <= mu' < mu0 < mu'' <= 1, got {mu_p}, {mu0}, {mu_pp}")
    weight = (mu_pp - mu0) / (mu_pp - mu_p)  # probability of message L
    p_ll = 1.0 if mu_pp == 1.0 else (1.0 - mu_p) / (1.0 - mu0) * weight
    p_lh = 0.0 if mu_p == 0.0 else mu_p / mu0 * weight
    p_ll, p_lh = min(p_ll, 1.0), min(p_lh, 1.0)
    return Signal(p_ll, 1.0 - p_ll, p_lh, 1.0 - p_lh, mu_p, mu_pp)


# --------------------------------------------------------------------------- surplus curves


def conditional_myopic_surplus(
    params: MarketParams, mu: Union[float, np.ndarray], high: bool, demand: DemandModel | None = None
) -> Union[float, np.ndarray]:
    """Surplus in one state when the platform plays the myopic policy for belief ``mu``."""
    model = demand_for(params, demand)
    phi = params.phi_high if high else params.phi_low
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.empty(mus.shape)
    for i, m in enumerate(mus):
        policy, _ = myopic_promotion(params, float(m), model)
        p = policy.promoted_price
        out[i] = phi * model.w0(p) + (1.0 - phi) * model.w_c(p)
    return float(out[0]) if np.ndim(mu) == 0 else out


def w_max(params: MarketParams, mu, demand: DemandModel | None = None):
    """Best one-period surplus at belief ``mu`` with no confounding requirement."""
    high = conditional_myopic_surplus(params, mu, True, demand)
    low = conditional_myopic_surplus(params, mu, False, demand)
    return mu * high + (1.0 - mu) * low


def w_truthful(params: MarketParams, mu, demand: DemandModel | None = None):
    """Per-period surplus after a fully revealing signal."""
    high = conditional_myopic_surplus(params, 1.0, True, demand)
    low = conditional_myopic_surplus(params, 0.0, False, demand)
    return mu * high + (1.0 - mu) * low


def confounding_curve(params: MarketParams, grid_size: int = 501, demand: DemandModel | None = None) -> ValueCurve:
    curve = solve_policy_curve(params, "confounding", grid_size, demand)
    return ValueCurve(curve.mu_grid, curve.surplus)


@dataclass(frozen=True)
class MetricsTable:
    mu: np.ndarray
    w_c: np.ndarray
    co_w_c: np.ndarray
    w_truthful: np.ndarray
    w_max: np.ndarray

    @property
    def relative_gain(self) -> np.ndarray:
        return _ratio(self.co_w_c - self.w_truthful, self.w_truthful)

    @property
    def captured_share(self) -> np.ndarray:
        return _ratio(self.co_w_c, self.w_max)

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(METRIC_COLUMNS)
            cols = (self.mu, self.w_c, self.co_w_c, self.w_truthful, self.w_max, self.relative_gain, self.captured_share)
            for row in zip(*cols):
                writer.writerow([repr(float(x)) for x in row])


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    if np.any(den == 0):
        raise DegenerateMetricError("surplus ratio with zero denominator")
    return num / den


@lru_cache(maxsize=32)
def _metrics(params: MarketParams, grid_size: int) -> MetricsTable:
    wc = confounding_curve(params, grid_size)
    co = concavify(wc)
    mu = wc.mu_grid
    return MetricsTable(mu, wc.values, co.values, w_truthful(params, mu), w_max(params, mu))


def metrics_table(
    params: MarketParams, grid_size: int = 501, demand: DemandModel | None = None
) -> MetricsTable:
    """``W^C``, its envelope, ``W^T`` and ``W^max`` on a uniform belief grid."""
    if demand is None:
        return _metrics(params, grid_size)
    wc = confounding_curve(params, grid_size, demand)
    co = concavify(wc)
    mu = wc.mu_grid
    return MetricsTable(mu, wc.values, co.values, w_truthful(params, mu, demand), w_max(params, mu, demand))


def relative_gain(params: MarketParams, mu: float, grid_size: int = 501, demand: DemandModel | None = None) -> float:
    """``(co(W^C) - W^T) / W^T`` at ``mu``; the envelope is interpolated between grid points."""
    table = metrics_table(params, grid_size, demand)
    co = float(np.interp(mu, table.mu, table.co_w_c))
    wt = float(w_truthful(params, mu, demand))
    if wt == 0:
        raise DegenerateMetricError("truthful surplus is zero")
    return (co - wt) / wt


def captured_share(params: MarketParams, mu: float, grid_size: int = 501, demand: DemandModel | None = None) -> float:
    """``co(W^C) / W^max`` at ``mu``."""
    table = metrics_table(params, grid_size, demand)
    co = float(np.interp(mu, table.mu, table.co_w_c))
    wm = float(w_max(params, mu, demand))
    if wm == 0:
        raise DegenerateMetricError("maximum surplus is zero")
    return co / wm


def envelope_value(params: MarketParams, mu0: float, grid_size: int = 501) -> float:
    """``co(W^C)(mu0)`` interpolated on the envelope grid."""
    table = metrics_table(params, grid_size)
    return float(np.interp(mu0, table.mu, table.co_w_c))

