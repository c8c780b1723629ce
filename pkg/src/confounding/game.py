"""Monte Carlo simulation of the signal-then-pricing game.

One episode draws the impatient fraction from the prior, sends a message from
the signal, and then plays ``horizon`` periods: the myopic seller prices
against the policy at the nearest curve node, the platform promotes, a
consumer arrives and maybe buys, and the seller updates its belief with the
likelihoods the committed policy implies.

Each episode has its own random stream derived from ``(seed, episode index)``,
so batches can be chunked or reordered without changing any episode.  The
stream holds ``2 + 3 * horizon`` uniforms: state, message, and then promotion,
consumer type and purchase for each period.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .demand import DemandModel, MarketParams, demand_for
from .infodesign import Signal
from .policy import PolicyCurve
from .seller import InconsistentObservationError, outside_option_price, takes_promoted_price

BATCH_COLUMNS = ("policy", "signal", "mu0", "horizon", "episodes", "meanSurplus", "stderr")

CHUNK = 500


@dataclass(frozen=True)
class EpisodeConfig:
    params: MarketParams
    policy_curve: PolicyCurve
    signal: Signal
    horizon: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PeriodRecord:
    price: float
    promoted: bool
    consumer_impatient: bool
    sale: bool
    mu_before: float
    mu_after: float
    period_surplus: float


@dataclass(frozen=True)
class EpisodeTrace:
    phi_high: bool
    message_high: bool
    per_period: tuple[PeriodRecord, ...]
    total_surplus: float
    total_seller_revenue: float

    def to_jsonl(self, path: Union[str, Path]) -> None:
        """One JSON object per period, prefixed by the episode-level draws."""
        with open(path, "w") as fh:
            for t, rec in enumerate(self.per_period, start=1):
                row = {"period": t, "phiHigh": self.phi_high, "messageHigh": self.message_high}
                row.update(_camel(asdict(rec)))
                fh.write(json.dumps(row) + "\n")


def _camel(d: dict) -> dict:
    out = {}
    for key, value in d.items():
        head, *rest = key.split("_")
        out[head + "".join(w.capitalize() for w in rest)] = value
    return out


def episode_uniforms(seed: int, episode: int, horizon: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(episode)]))
    return rng.random(2 + 3 * horizon)


@dataclass
class _Paths:
    """Per-period arrays for a block of episodes, shape ``(n, horizon)``."""

    phi_high: np.ndarray
    message_high: np.ndarray
    price: np.ndarray
    promoted: np.ndarray
    impatient: np.ndarray
    sale: np.ndarray
    mu: np.ndarray  # shape (n, horizon + 1): mu_1 ... mu_{T+1}
    surplus: np.ndarray
    revenue: np.ndarray


def _simulate(config: EpisodeConfig, episodes: np.ndarray, model: DemandModel) -> _Paths:
    params, curve, signal, horizon = config.params, config.policy_curve, config.signal, config.horizon
    n = len(episodes)
    u = np.stack([episode_uniforms(config.rng_seed, e, horizon) for e in episodes])

    phi_high = u[:, 0] < params.prior
    p_msg_high = np.where(phi_high, signal.prob_high_given_high, signal.prob_high_given_low)
    message_high = u[:, 1] < p_msg_high
    mu = np.where(
        message_high,
        signal.posterior(params.prior, True),
        signal.posterior(params.prior, False),
    )
    phi = np.where(phi_high, params.phi_high, params.phi_low)

    curve_price, curve_low, curve_high = curve.arrays()
    p_star = outside_option_price(params, model)
    w_const = model.w_c_const

    out = _Paths(
        phi_high,
        message_high,
        np.empty((n, horizon)),
        np.empty((n, horizon), dtype=bool),
        np.empty((n, horizon), dtype=bool),
        np.empty((n, horizon), dtype=bool),
        np.empty((n, horizon + 1)),
        np.empty((n, horizon)),
        np.empty((n, horizon)),
    )
    out.mu[:, 0] = mu
    for t in range(horizon):
        u_promo, u_type, u_buy = u[:, 2 + 3 * t], u[:, 3 + 3 * t], u[:, 4 + 3 * t]
        k = curve.nearest_index(mu)
        prom_price, a_low, a_high = curve_price[k], curve_low[k], curve_high[k]
        took = takes_promoted_price(params, model, prom_price, a_low, a_high, mu)
        price = np.where(took, prom_price, p_star)
        # Any price other than the promoted one is never promoted.
        a_state = np.where(took, np.where(phi_high, a_high, a_low), 0.0)
        promoted = u_promo < a_state
        impatient = u_type < phi
        r0, rc = model.rho0(price), model.rho_c(price)
        buy_prob = np.where(impatient, np.where(promoted, r0, 0.0), rc)
        sale = u_buy < buy_prob
        surplus = np.where(
            impatient, np.where(promoted, model.w0(price), w_const), model.w_c(price)
        )

        a_low_eff = np.where(took, a_low, 0.0)
        a_high_eff = np.where(took, a_high, 0.0)
        q_low = params.phi_low * a_low_eff * r0 + (1.0 - params.phi_low) * rc
        q_high = params.phi_high * a_high_eff * r0 + (1.0 - params.phi_high) * rc
        lik_low = np.where(sale, q_low, 1.0 - q_low)
        lik_high = np.where(sale, q_high, 1.0 - q_high)
        den = mu * lik_high + (1.0 - mu) * lik_low
        frozen = (q_low == q_high) | (mu == 0.0) | (mu == 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            new_mu = np.where(frozen, mu, mu * lik_high / np.where(den > 0, den, 1.0))
        if np.any(~frozen & (den <= 0)):
            raise InconsistentObservationError("simulated an outcome of zero probability")

        out.price[:, t] = price
        out.promoted[:, t] = promoted
        out.impatient[:, t] = impatient
        out.sale[:, t] = sale
        out.surplus[:, t] = surplus
        out.revenue[:, t] = np.where(sale, price, 0.0)
        out.mu[:, t + 1] = new_mu
        mu = new_mu
    return out


def run_episode(config: EpisodeConfig, episode: int = 0, demand: DemandModel | None = None) -> EpisodeTrace:
    """Simulate one episode in full detail; ``episode`` selects the random stream."""
    model = demand_for(config.params, demand)
    paths = _simulate(config, np.array([episode]), model)
    surplus = paths.surplus[0]
    records = tuple(
        PeriodRecord(
            float(paths.price[0, t]),
            bool(paths.promoted[0, t]),
            bool(paths.impatient[0, t]),
            bool(paths.sale[0, t]),
            float(paths.mu[0, t]),
            float(paths.mu[0, t + 1]),
            float(surplus[t]),
        )
        for t in range(config.horizon)
    )
    return EpisodeTrace(
        bool(paths.phi_high[0]),
        bool(paths.message_high[0]),
        records,
        float(np.cumsum(surplus)[-1]),
        float(np.cumsum(paths.revenue[0])[-1]),
    )


@dataclass(frozen=True)
class BatchSummary:
    """Aggregates over a batch.

    Per-episode arrays are kept so callers can form their own statistics.
    ``belief_path_low`` is the mean of ``mu_t`` over episodes with the low
    state, for ``t = 1 .. horizon + 1`` (index 0 is the post-signal belief).
    """

    episodes: int
    horizon: int
    mean_surplus: float
    stderr: float
    mean_final_mu_low: float
    mean_final_mu_high: float
    belief_path_low: np.ndarray
    belief_path_high: np.ndarray
    belief_mean: np.ndarray
    belief_std: np.ndarray
    phi_high: np.ndarray
    mu_initial: np.ndarray
    episode_surplus: np.ndarray
    episode_revenue: np.ndarray
    episode_sales: np.ndarray

    @property
    def belief_stderr(self) -> np.ndarray:
        return self.belief_std / np.sqrt(self.episodes)

    def sale_frequency(self, high: bool) -> tuple[float, float]:
        """Mean per-period sale frequency in one state and its standard error."""
        rates = self.episode_sales[self.phi_high == high] / self.horizon
        if len(rates) == 0:
            return float("nan"), float("nan")
        se = rates.std(ddof=1) / np.sqrt(len(rates)) if len(rates) > 1 else float("nan")
        return float(rates.mean()), float(se)


def run_batch(
    config: EpisodeConfig, episodes: int, demand: DemandModel | None = None
) -> BatchSummary:
    """Simulate ``episodes`` independent episodes and aggregate them.

    Surplus and revenue are per-period averages within each episode.
    """
    if int(episodes) != episodes or episodes < 1:
        raise ValueError(f"episodes must be a positive integer, got {episodes}")
    model = demand_for(config.params, demand)
    T = config.horizon
    phi_high = np.empty(episodes, dtype=bool)
    mu_initial = np.empty(episodes)
    mu_final = np.empty(episodes)
    surplus = np.empty(episodes)
    revenue = np.empty(episodes)
    sales = np.empty(episodes)
    sum_low = np.zeros(T + 1)
    sum_high = np.zeros(T + 1)
    sum_all = np.zeros(T + 1)
    sq_all = np.zeros(T + 1)
    for start in range(0, episodes, CHUNK):
        idx = np.arange(start, min(start + CHUNK, episodes))
        paths = _simulate(config, idx, model)
        block = slice(idx[0], idx[-1] + 1)
        phi_high[block] = paths.phi_high
        mu_initial[block] = paths.mu[:, 0]
        mu_final[block] = paths.mu[:, -1]
        surplus[block] = np.cumsum(paths.surplus, axis=1)[:, -1] / T
        revenue[block] = np.cumsum(paths.revenue, axis=1)[:, -1] / T
        sales[block] = paths.sale.sum(axis=1)
        sum_low += paths.mu[~paths.phi_high].sum(axis=0)
        sum_high += paths.mu[paths.phi_high].sum(axis=0)
        sum_all += paths.mu.sum(axis=0)
        sq_all += (paths.mu**2).sum(axis=0)

    n_high = int(phi_high.sum())
    n_low = episodes - n_high
    mean_all = sum_all / episodes
    var = np.maximum(sq_all / episodes - mean_all**2, 0.0) * episodes / max(episodes - 1, 1)
    nan = float("nan")
    return BatchSummary(
        episodes=episodes,
        horizon=T,
        mean_surplus=float(surplus.mean()),
        stderr=float(surplus.std(ddof=1) / np.sqrt(episodes)) if episodes > 1 else nan,
        mean_final_mu_low=float(mu_final[~phi_high].mean()) if n_low else nan,
        mean_final_mu_high=float(mu_final[phi_high].mean()) if n_high else nan,
        belief_path_low=sum_low / n_low if n_low else np.full(T + 1, nan),
        belief_path_high=sum_high / n_high if n_high else np.full(T + 1, nan),
        belief_mean=mean_all,
        belief_std=np.sqrt(var),
        phi_high=phi_high,
        mu_initial=mu_initial,
        episode_surplus=surplus,
        episode_revenue=revenue,
        episode_sales=sales,
    )


def martingale_check(summary: BatchSummary, mu0: float, n_se: float = 3.0) -> np.ndarray:
    """Per-period pass flags for ``E[mu_t] = mu0``.

    Beliefs are an unconditional martingale started at the prior, so every
    period's batch mean should sit within ``n_se`` standard errors of ``mu0``.
    """
    return np.abs(summary.belief_mean - mu0) <= n_se * summary.belief_stderr + 1e-12


def fit_convergence_rate(belief_path) -> tuple[float, float]:
    """Exponential decay rate of a mean-belief path and the fit's R^2.

    Regresses ``log(path)`` on the period index over the first half of the
    path and returns ``(-slope, R^2)``.  Nonpositive entries are dropped
    first.  A constant path counts as a perfect fit with rate zero.
    """
    path = np.asarray(belief_path, dtype=float)
    if len(path) < 20:
        raise ValueError(f"need at least 20 points, got {len(path)}")
    t = np.arange(len(path))[: len(path) // 2]
    y = path[: len(path) // 2]
    keep = y > 0
    t, y = t[keep], y[keep]
    if len(y) < 2:
        raise ValueError("fewer than two positive points in the first half of the path")
    log_y = np.log(y)
    tc = t - t.mean()
    yc = log_y - log_y.mean()
    slope = float(tc @ yc / (tc @ tc))
    ss_tot = float(yc @ yc)
    if ss_tot == 0.0:
        return -slope + 0.0, 1.0
    resid = yc - slope * tc
    return -slope, 1.0 - float(resid @ resid) / ss_tot


def write_batch_csv(path: Union[str, Path], rows) -> None:
    """``rows`` are tuples in ``BATCH_COLUMNS`` order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BATCH_COLUMNS)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
