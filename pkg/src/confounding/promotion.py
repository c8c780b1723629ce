"""Per-belief promotion problems of a surplus-maximising platform.

Every solver returns a single-price policy together with the expected
one-period consumer surplus it generates when the seller prices myopically at
belief ``mu``.  Solvers come in two flavours: closed forms valid for uniform
willingness to pay in the seller-preferred regime, and numeric searches that
only use the demand primitives.  ``method="auto"`` picks the closed form
whenever the demand model allows it.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Union

import numpy as np

from .demand import DemandModel, MarketParams, UniformDemand, demand_for
from .optimize import bisect_root, golden_section_max
from .policy import PolicyCurve, PromotionPolicy
from .seller import outside_option_price, phi_bar, promoted_revenue

ArrayLike = Union[float, np.ndarray]

# Seller participation may fall short by this much and still count as satisfied.
PARTICIPATION_SLACK = 1e-13
# |rho0 - rho_c| below this counts as equal demand (observable-promotions feasibility).
EQUAL_DEMAND_TOL = 1e-9

MODES = ("myopic", "confounding", "observable", "baseline")


class InfeasibleError(RuntimeError):
    """No promotion policy satisfies the confounding and participation constraints."""


def _resolve(params: MarketParams, demand: DemandModel | None, method: str):
    model = demand_for(params, demand)
    if method == "auto":
        method = "closed" if isinstance(model, UniformDemand) else "numeric"
    if method not in ("closed", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" and not isinstance(model, UniformDemand):
        raise ValueError("closed-form solvers need UniformDemand")
    return model, method


def _check_belief(mu: float) -> None:
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"belief must lie in [0, 1], got {mu}")


def state_surplus(
    params: MarketParams, model: DemandModel, price: ArrayLike, phi: float, alpha: ArrayLike
) -> ArrayLike:
    """Expected surplus of one consumer when the impatient fraction is ``phi``.

    Impatient consumers see the seller with probability ``alpha`` and the rival
    otherwise; patient consumers choose among everything.
    """
    impatient = alpha * model.w0(price) + (1.0 - alpha) * model.w_c_const
    return phi * impatient + (1.0 - phi) * model.w_c(price)


def expected_surplus(
    params: MarketParams,
    model: DemandModel,
    price: ArrayLike,
    alpha_low: ArrayLike,
    alpha_high: ArrayLike,
    mu: ArrayLike,
) -> ArrayLike:
    """Surplus averaged over the impatient fraction under belief ``mu``."""
    high = state_surplus(params, model, price, params.phi_high, alpha_high)
    low = state_surplus(params, model, price, params.phi_low, alpha_low)
    return mu * high + (1.0 - mu) * low


def patient_only_revenue(params: MarketParams, model: DemandModel, mu: ArrayLike) -> ArrayLike:
    """What the seller earns by ignoring promotion: ``(1 - phi_bar) p* rho_c(p*)``."""
    p_star = outside_option_price(params, model)
    return (1.0 - phi_bar(params, mu)) * p_star * model.rho_c(p_star)


# --------------------------------------------------------------------------- myopic


def myopic_price_closed_form(params: MarketParams, mu: ArrayLike) -> ArrayLike:
    """Lowest price a fully promoting policy can induce (uniform demand)."""
    a, b = params.seller_quality, params.rival_quality
    f = phi_bar(params, mu)
    return (2 * a - b**2 * (1 - f) - np.sqrt(f) * np.sqrt(4 * a**2 - b**4 * (1 - f))) / 4


def myopic_price_numeric(
    params: MarketParams, mu: float, demand: DemandModel | None = None
) -> float:
    """Smallest price at which always promoting keeps the seller from falling back to ``p*``."""
    model = demand_for(params, demand)
    f = phi_bar(params, mu)
    p_star = outside_option_price(params, model)
    target = patient_only_revenue(params, model, mu)

    def gap(p: float) -> float:
        return p * (f * model.rho0(p) + (1 - f) * model.rho_c(p)) - target

    lo = model.price_domain[0]
    if gap(lo) >= 0:
        return lo
    return bisect_root(gap, lo, p_star)


def myopic_promotion(
    params: MarketParams, mu: float, demand: DemandModel | None = None, method: str = "auto"
) -> tuple[PromotionPolicy, float]:
    """Policy maximising current-period surplus, ignoring what the seller learns.

    In the seller-preferred regime the platform promotes with certainty in both
    states at the lowest price the seller still accepts.
    """
    _check_belief(mu)
    model, method = _resolve(params, demand, method)
    if method == "closed":
        price = float(myopic_price_closed_form(params, mu))
    else:
        price = myopic_price_numeric(params, mu, model)
    surplus = expected_surplus(params, model, price, 1.0, 1.0, mu)
    return PromotionPolicy(price, 1.0, 1.0), float(surplus)


# --------------------------------------------------------------------------- confounding


def confounding_alpha_high(
    params: MarketParams, p: ArrayLike, alpha_low: ArrayLike, demand: DemandModel | None = None
) -> ArrayLike:
    """High-state promotion probability that equalises sale probabilities across states.

    Values above one mean ``(p, alpha_low)`` cannot be confounded.
    """
    model = demand_for(params, demand)
    r0 = model.rho0(p)
    if np.any(np.asarray(r0) <= 0):
        raise ZeroDivisionError("rho0(p) = 0: promotion has no effect at this price")
    fl, fh = params.phi_low, params.phi_high
    return (fh - fl) / fh * (model.rho_c(p) / r0) + alpha_low * fl / fh


def sale_probability(
    params: MarketParams,
    policy: PromotionPolicy,
    state: str,
    demand: DemandModel | None = None,
) -> float:
    """Sale probability at the promoted price when the true fraction is ``state``."""
    model = demand_for(params, demand)
    if state == "low":
        phi, alpha = params.phi_low, policy.alpha_low
    elif state == "high":
        phi, alpha = params.phi_high, policy.alpha_high
    else:
        raise ValueError(f"state must be 'low' or 'high', got {state!r}")
    p = policy.promoted_price
    return float(phi * alpha * model.rho0(p) + (1 - phi) * model.rho_c(p))


def confounding_price_closed_form(params: MarketParams, mu: ArrayLike) -> ArrayLike:
    """Lowest price at which a confounding policy with ``alpha_low = 1`` keeps the seller."""
    a, b = params.seller_quality, params.rival_quality
    fl, fh = params.phi_low, params.phi_high
    disc = (2 * a - b**2) ** 2 * (fh - fl) * mu + fl * (4 * a**2 - b**4) + b**4 * fl**2
    return (2 * a - b**2 * (1 - fl) - np.sqrt(disc)) / 4


def _confounding_objective(params, model, mu, p, alpha_low):
    """Surplus of the confounding policy ``(p, alpha_low)``; -inf where infeasible."""
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, -np.inf)
    r0 = model.rho0(p)
    ok = (r0 > 0) & (p > 0)
    if not np.any(ok):
        return out
    pv, r0v = p[ok], r0[ok]
    rcv = model.rho_c(pv)
    fl, fh = params.phi_low, params.phi_high
    target = patient_only_revenue(params, model, mu)
    if alpha_low == "bind":
        a_low = (target - (1 - fl) * pv * rcv) / (fl * pv * r0v)
        a_low = np.clip(a_low, 0.0, 1.0)
    else:
        a_low = np.full(pv.shape, float(alpha_low))
    a_high = (fh - fl) / fh * (rcv / r0v) + a_low * fl / fh
    participation = (1 - fl) * pv * rcv + fl * a_low * pv * r0v - target
    feasible = (a_high >= 0) & (a_high <= 1) & (participation >= -PARTICIPATION_SLACK)
    value = expected_surplus(params, model, pv, a_low, a_high, mu)
    out[ok] = np.where(feasible, value, -np.inf)
    return out


def _alpha_low_for(params, model, mu, p, mode) -> float:
    if mode != "bind":
        return float(mode)
    target = patient_only_revenue(params, model, mu)
    fl = params.phi_low
    a_low = (target - (1 - fl) * p * model.rho_c(p)) / (fl * p * model.rho0(p))
    return float(np.clip(a_low, 0.0, 1.0))


def optimal_confounding_numeric(
    params: MarketParams,
    mu: float,
    demand: DemandModel | None = None,
    grid_size: int = 2001,
    tol: float = 1e-10,
) -> tuple[PromotionPolicy, float]:
    """Best confounding policy at interior ``mu`` by direct search.

    For each candidate ``alpha_low`` in {0, binding value, 1} the surplus is
    searched over a price grid and refined by golden section; ``alpha_high``
    follows from the confounding identity.
    """
    model = demand_for(params, demand)
    lo, hi = model.price_domain
    grid = np.linspace(lo, hi, grid_size)
    best = (-np.inf, None, None)
    for mode in (0.0, "bind", 1.0):
        values = _confounding_objective(params, model, mu, grid, mode)
        k = int(np.argmax(values))
        if not np.isfinite(values[k]):
            continue
        left, right = grid[max(k - 1, 0)], grid[min(k + 1, grid_size - 1)]
        f = lambda p, mode=mode: float(_confounding_objective(params, model, mu, np.array([p]), mode)[0])
        p_opt, v_opt = golden_section_max(f, float(left), float(right), tol=tol)
        if v_opt < values[k]:
            p_opt, v_opt = float(grid[k]), float(values[k])
        if v_opt > best[0]:
            best = (v_opt, p_opt, mode)
    value, price, mode = best
    if price is None:
        raise InfeasibleError(f"no confounding policy exists at mu={mu}")
    a_low = _alpha_low_for(params, model, mu, price, mode)
    a_high = float(confounding_alpha_high(params, price, a_low, model))
    return PromotionPolicy(price, a_low, min(a_high, 1.0)), float(value)


def optimal_confounding(
    params: MarketParams, mu: float, demand: DemandModel | None = None, method: str = "auto"
) -> tuple[PromotionPolicy, float]:
    """Surplus-maximising policy among those that keep the seller's belief at ``mu``.

    At ``mu`` in {0, 1} the belief cannot move, so the unconstrained myopic
    policy is returned.
    """
    _check_belief(mu)
    model, method = _resolve(params, demand, method)
    if mu in (0.0, 1.0):
        return myopic_promotion(params, mu, model, method)
    if method == "numeric":
        return optimal_confounding_numeric(params, mu, model)
    price = float(confounding_price_closed_form(params, mu))
    a_high = float(confounding_alpha_high(params, price, 1.0, model))
    if not 0.0 <= a_high <= 1.0:
        raise InfeasibleError(f"closed-form alpha_high={a_high} outside [0, 1] at mu={mu}")
    surplus = expected_surplus(params, model, price, 1.0, a_high, mu)
    return PromotionPolicy(price, 1.0, a_high), float(surplus)


def alpha_high_unhalved_variant(params: MarketParams, p: float) -> float:
    """A variant of the high-state promotion probability with the rival term unhalved.

    It carries ``b^2`` where the confounding identity gives ``b^2 / 2`` and so
    does not equalise sale probabilities; kept only for comparison.
    """
    a, b = params.seller_quality, params.rival_quality
    fl, fh = params.phi_low, params.phi_high
    return (a - p - b**2) / (a - p) * (fh - fl) / fh + fl / fh


def baseline_confounding(params: MarketParams, demand: DemandModel | None = None) -> PromotionPolicy:
    """Promote only at ``p*`` and only in the high state, just enough to confound.

    Confounds at every belief, so the seller never learns.
    """
    model = demand_for(params, demand)
    p_star = outside_option_price(params, model)
    a_high = float(confounding_alpha_high(params, p_star, 0.0, model))
    return PromotionPolicy(p_star, 0.0, a_high)


# --------------------------------------------------------------------------- observable


def observable_confounding(
    params: MarketParams, mu: float, demand: DemandModel | None = None, grid_size: int = 2001
) -> tuple[PromotionPolicy | None, float]:
    """Best confounding policy when the seller also sees each promotion decision.

    Confounding then needs full promotion in both states at a price where
    ``rho0 == rho_c``.  Returns ``(None, 0.0)`` when no such price keeps the
    seller, which is the case for uniform demand with a valuable rival.
    """
    _check_belief(mu)
    model = demand_for(params, demand)
    if mu in (0.0, 1.0):
        return myopic_promotion(params, mu, model)
    f = phi_bar(params, mu)
    target = patient_only_revenue(params, model, mu)

    def gap(p):
        return p * (f * model.rho0(p) + (1 - f) * model.rho_c(p)) - target

    grid = np.linspace(*model.price_domain, grid_size)
    equal = np.abs(model.rho0(grid) - model.rho_c(grid)) < EQUAL_DEMAND_TOL
    ok = equal & (gap(grid) >= -PARTICIPATION_SLACK) & (model.rho0(grid) > 0)
    if not np.any(ok):
        return None, 0.0
    # Surplus falls with price, so the lowest feasible price wins; sharpen it by
    # bisection when the node below still has equal demand but no participation.
    k = int(np.flatnonzero(ok)[0])
    price = float(grid[k])
    if k > 0 and equal[k - 1] and gap(grid[k - 1]) < 0:
        price = bisect_root(gap, float(grid[k - 1]), price)
    value = float(expected_surplus(params, model, price, 1.0, 1.0, mu))
    return PromotionPolicy(price, 1.0, 1.0), value


def observable_confounding_surplus(
    params: MarketParams, mu: float, demand: DemandModel | None = None
) -> float:
    return observable_confounding(params, mu, demand)[1]


# --------------------------------------------------------------------------- curves


def default_mu_grid(size: int = 501) -> np.ndarray:
    if size < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(0.0, 1.0, size)


def solve_policy_curve(
    params: MarketParams,
    mode: str,
    mu_grid: np.ndarray | int = 501,
    demand: DemandModel | None = None,
    method: str = "auto",
) -> PolicyCurve:
    """Solve ``mode`` at every grid belief.

    ``mode`` is one of ``myopic``, ``confounding``, ``observable`` or
    ``baseline``.  Where the observable variant is infeasible the curve records
    zero surplus and a never-promote placeholder at ``p*``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    grid = default_mu_grid(mu_grid) if isinstance(mu_grid, (int, np.integer)) else np.asarray(mu_grid, float)
    if demand is None:
        return _cached_curve(params, mode, tuple(grid.tolist()), method)
    return _solve_curve(params, mode, grid, demand, method)


@lru_cache(maxsize=64)
def _cached_curve(params: MarketParams, mode: str, grid: tuple, method: str) -> PolicyCurve:
    return _solve_curve(params, mode, np.array(grid), None, method)


def _solve_curve(params, mode, grid, demand, method) -> PolicyCurve:
    model = demand_for(params, demand)
    policies, surplus, revenue = [], [], []
    placeholder = PromotionPolicy(outside_option_price(params, model), 0.0, 0.0)
    baseline = baseline_confounding(params, model) if mode == "baseline" else None
    for mu in grid:
        mu = float(mu)
        if mode == "myopic":
            pol, w = myopic_promotion(params, mu, model, method)
        elif mode == "confounding":
            pol, w = optimal_confounding(params, mu, model, method)
        elif mode == "observable":
            pol, w = observable_confounding(params, mu, model)
            if pol is None:
                pol = placeholder
        else:
            pol = baseline
            w = float(expected_surplus(params, model, pol.promoted_price, pol.alpha_low, pol.alpha_high, mu))
        policies.append(pol)
        surplus.append(w)
        revenue.append(float(promoted_revenue(params, model, pol, mu)))
    return PolicyCurve(grid, tuple(policies), np.array(surplus), np.array(revenue))
