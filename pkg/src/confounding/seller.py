"""Seller side: Bayesian beliefs, the outside-option price and best responses.

The seller is a Bayesian who knows the platform's committed policy.  Against a
single-price policy its only interesting choices are the promoted price and
the price ``p*`` that maximises revenue from patient consumers alone, which it
can always fall back to.  ``dp_best_response_value`` checks by backward
induction that no dynamic pricing plan beats pricing myopically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .demand import DemandModel, MarketParams, RegimeError, UniformDemand, demand_for
from .optimize import grid_then_golden_max
from .policy import PolicyCurve, PromotionPolicy

ArrayLike = Union[float, np.ndarray]

# Revenue differences below this count as ties, which go to the promoted price.
TIE_TOL = 1e-12


class InconsistentObservationError(ArithmeticError):
    """An outcome the seller's model assigns probability zero was observed."""


def phi_bar(params: MarketParams, mu: ArrayLike) -> ArrayLike:
    """Expected impatient fraction under belief ``mu``."""
    return params.phi_low + (params.phi_high - params.phi_low) * mu


def outside_option_price(
    params: MarketParams, demand: DemandModel | None = None, method: str = "auto"
) -> float:
    """Revenue-maximising price when selling to patient consumers only.

    ``method="closed"`` uses ``(2a - b^2) / 4`` (uniform demand only),
    ``"numeric"`` maximises ``p * rho_c(p)`` by grid plus golden-section
    search, and ``"auto"`` picks the closed form whenever it applies.
    """
    model = demand_for(params, demand)
    if method == "auto":
        method = "closed" if isinstance(model, UniformDemand) else "numeric"
    if method == "closed":
        if not isinstance(model, UniformDemand):
            raise ValueError("closed-form outside-option price needs UniformDemand")
        a, b = model.a, model.b
        p_star = (2.0 * a - b * b) / 4.0
        if not p_star < a - b:
            raise RegimeError(
                f"closed form p*={p_star:.6g} is not below the kink a-b={a - b:.6g}"
            )
        return p_star
    if method == "numeric":
        lo, hi = model.price_domain
        p_star, _ = grid_then_golden_max(
            lambda p: p * model.rho_c(p), lambda p: p * model.rho_c(p), lo, hi, tol=1e-12
        )
        return p_star
    raise ValueError(f"unknown method {method!r}")


def outside_option_revenue(params: MarketParams, demand: DemandModel | None = None) -> float:
    """``p* * rho_c(p*)``: per-patient-consumer revenue of the fallback price."""
    model = demand_for(params, demand)
    p_star = outside_option_price(params, model)
    return p_star * model.rho_c(p_star)


def posterior(mu: ArrayLike, lik_low: ArrayLike, lik_high: ArrayLike) -> ArrayLike:
    """Bayes' rule for the high state given likelihoods of the observed event.

    Vectorised; callers are responsible for zero-probability events.
    """
    num = mu * lik_high
    den = num + (1.0 - mu) * lik_low
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), mu)
    return float(out) if np.ndim(out) == 0 else out


def update_belief(mu: float, q_low: float, q_high: float, sale: bool) -> float:
    """Posterior probability of the high state after one sales observation.

    ``q_low`` / ``q_high`` are the sale probabilities in each state.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"belief must lie in [0, 1], got {mu}")
    for q in (q_low, q_high):
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"sale probability must lie in [0, 1], got {q}")
    lik_low, lik_high = (q_low, q_high) if sale else (1.0 - q_low, 1.0 - q_high)
    den = mu * lik_high + (1.0 - mu) * lik_low
    if den <= 0.0:
        raise InconsistentObservationError(
            f"{'sale' if sale else 'no sale'} has zero probability at mu={mu}"
        )
    if q_low == q_high or mu in (0.0, 1.0):
        return mu
    return mu * lik_high / den


@dataclass(frozen=True)
class SellerDecision:
    price: float
    expected_revenue: float
    took_promoted_price: bool


def sale_probabilities(
    params: MarketParams, model: DemandModel, policy: PromotionPolicy, price: float
) -> tuple[float, float]:
    """Sale probability in the low and the high state when posting ``price``."""
    rc = model.rho_c(price)
    if price == policy.promoted_price:
        r0 = model.rho0(price)
        q_low = params.phi_low * policy.alpha_low * r0 + (1.0 - params.phi_low) * rc
        q_high = params.phi_high * policy.alpha_high * r0 + (1.0 - params.phi_high) * rc
    else:
        q_low = (1.0 - params.phi_low) * rc
        q_high = (1.0 - params.phi_high) * rc
    return q_low, q_high


def promoted_revenue(
    params: MarketParams, model: DemandModel, policy: PromotionPolicy, mu: ArrayLike
) -> ArrayLike:
    """Expected one-period revenue from posting the promoted price."""
    p = policy.promoted_price
    q_low, q_high = sale_probabilities(params, model, policy, p)
    return p * (mu * q_high + (1.0 - mu) * q_low)


def takes_promoted_price(
    params: MarketParams,
    model: DemandModel,
    prices: np.ndarray,
    alpha_low: np.ndarray,
    alpha_high: np.ndarray,
    mu: np.ndarray,
) -> np.ndarray:
    """Vectorised myopic choice: True where the promoted price is (weakly) best.

    The only unpromoted contender is ``p*``, which maximises patient-only
    revenue exactly, so no grid safety net is needed here.
    """
    r0 = model.rho0(prices)
    rc = model.rho_c(prices)
    q_low = params.phi_low * alpha_low * r0 + (1.0 - params.phi_low) * rc
    q_high = params.phi_high * alpha_high * r0 + (1.0 - params.phi_high) * rc
    rev = prices * (mu * q_high + (1.0 - mu) * q_low)
    p_star = outside_option_price(params, model)
    fallback = (1.0 - phi_bar(params, mu)) * p_star * model.rho_c(p_star)
    return rev >= fallback - TIE_TOL


def myopic_best_response(
    params: MarketParams,
    policy: PromotionPolicy,
    mu: float,
    demand: DemandModel | None = None,
    grid_size: int = 201,
) -> SellerDecision:
    """Price maximising this period's expected revenue against ``policy``.

    Compares the promoted price with the fallback ``p*`` and, as a safety net,
    with every unpromoted price on a ``grid_size`` grid.  Ties (within
    ``TIE_TOL``) go to the promoted price.
    """
    model = demand_for(params, demand)
    patient = 1.0 - phi_bar(params, mu)
    p_star = outside_option_price(params, model)
    best_price, best_rev = p_star, patient * p_star * model.rho_c(p_star)
    grid = np.linspace(*model.price_domain, grid_size)
    grid_rev = patient * grid * model.rho_c(grid)
    k = int(np.argmax(grid_rev))
    if grid_rev[k] > best_rev + TIE_TOL and grid[k] != policy.promoted_price:
        best_price, best_rev = float(grid[k]), float(grid_rev[k])
    rev = promoted_revenue(params, model, policy, mu)
    if rev >= best_rev - TIE_TOL:
        return SellerDecision(policy.promoted_price, float(rev), True)
    return SellerDecision(best_price, float(best_rev), False)


def _transition_weights(nodes: np.ndarray, beliefs: np.ndarray, mode: str):
    """Map off-grid beliefs onto grid nodes: returns (lower index, upper index, upper weight)."""
    n = len(nodes)
    if mode == "nearest":
        hi = np.clip(np.searchsorted(nodes, beliefs, side="left"), 1, n - 1)
        lo = hi - 1
        idx = np.where(np.abs(beliefs - nodes[lo]) <= np.abs(nodes[hi] - beliefs), lo, hi)
        return idx, idx, np.zeros_like(beliefs)
    if mode == "linear":
        hi = np.clip(np.searchsorted(nodes, beliefs, side="right"), 1, n - 1)
        lo = hi - 1
        w = np.clip((beliefs - nodes[lo]) / (nodes[hi] - nodes[lo]), 0.0, 1.0)
        return lo, hi, w
    raise ValueError(f"unknown transition mode {mode!r}")


def dp_best_response_value(
    params: MarketParams,
    curve: PolicyCurve,
    mu0: float,
    horizon: int,
    belief_grid_size: int = 201,
    price_grid_size: int = 201,
    demand: DemandModel | None = None,
    transition: str = "linear",
) -> tuple[float, float]:
    """Optimal and always-myopic expected ``horizon``-period seller revenue.

    The seller faces the belief-indexed ``curve`` (policy at the nearest curve
    node).  Beliefs live on a uniform grid of ``belief_grid_size`` nodes; a
    posterior that falls between nodes is either snapped to the nearest node
    (``transition="nearest"``) or split across the two neighbouring nodes
    with weights that preserve its mean (``"linear"``).  The snapped variant
    carries an O(1/grid) bias; the split keeps beliefs a martingale on the
    grid.  Candidate prices are a ``price_grid_size`` grid plus ``p*`` plus
    each node's promoted price.

    Returns ``(dp_value, myopic_value)`` at the node nearest to ``mu0``.
    """
    if not 1 <= horizon <= 12:
        raise ValueError("horizon must lie in [1, 12]")
    if belief_grid_size < 101:
        raise ValueError("belief_grid_size must be at least 101")
    if price_grid_size < 201:
        raise ValueError("price_grid_size must be at least 201")
    if not 0.0 <= mu0 <= 1.0:
        raise ValueError("mu0 must lie in [0, 1]")
    model = demand_for(params, demand)
    nodes = np.linspace(0.0, 1.0, belief_grid_size)
    prom_p, a_low, a_high = curve.arrays()
    idx = curve.nearest_index(nodes)
    prom_p, a_low, a_high = prom_p[idx], a_low[idx], a_high[idx]

    p_star = outside_option_price(params, model)
    base = np.append(np.linspace(*model.price_domain, price_grid_size), p_star)
    g = len(nodes)
    prices = np.concatenate([np.broadcast_to(base, (g, len(base))), prom_p[:, None]], axis=1)
    promoted = np.zeros(prices.shape, dtype=bool)
    promoted[:, -1] = True
    # An unpromoted grid price that happens to equal the promoted one is the promoted price.
    promoted |= prices == prom_p[:, None]

    r0 = model.rho0(prices)
    rc = model.rho_c(prices)
    q_low = (1.0 - params.phi_low) * rc + promoted * params.phi_low * a_low[:, None] * r0
    q_high = (1.0 - params.phi_high) * rc + promoted * params.phi_high * a_high[:, None] * r0
    mu = nodes[:, None]
    q_bar = mu * q_high + (1.0 - mu) * q_low
    revenue = prices * q_bar
    mu_sale = posterior(mu, q_low, q_high)
    mu_none = posterior(mu, 1.0 - q_low, 1.0 - q_high)

    # Myopic choice: best promoted column if within TIE_TOL of the overall best.
    best_any = revenue.max(axis=1)
    prom_rev = np.where(promoted, revenue, -np.inf)
    k_prom = prom_rev.argmax(axis=1)
    rows = np.arange(g)
    k_myopic = np.where(
        prom_rev[rows, k_prom] >= best_any - TIE_TOL, k_prom, revenue.argmax(axis=1)
    )

    s_lo, s_hi, s_w = _transition_weights(nodes, mu_sale.ravel(), transition)
    n_lo, n_hi, n_w = _transition_weights(nodes, mu_none.ravel(), transition)
    shape = prices.shape

    def continuation(v: np.ndarray) -> np.ndarray:
        v_sale = ((1.0 - s_w) * v[s_lo] + s_w * v[s_hi]).reshape(shape)
        v_none = ((1.0 - n_w) * v[n_lo] + n_w * v[n_hi]).reshape(shape)
        return q_bar * v_sale + (1.0 - q_bar) * v_none

    v_dp = np.zeros(g)
    v_my = np.zeros(g)
    for _ in range(horizon):
        total = revenue + continuation(v_dp)
        best, at_myopic = total.max(axis=1), total[rows, k_myopic]
        # Same tie rule as the myopic seller: near-ties resolve to the myopic price.
        v_dp = np.where(at_myopic >= best - TIE_TOL, at_myopic, best)
        v_my = (revenue + continuation(v_my))[rows, k_myopic]
    i0 = int(np.argmin(np.abs(nodes - mu0)))
    return float(v_dp[i0]), float(v_my[i0])

