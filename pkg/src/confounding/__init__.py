"""Promotion policies and information design for a platform facing a learning seller."""

__version__ = "0.1.0"

from .demand import (
    ConfigurationError,
    DemandModel,
    DomainError,
    MarketParams,
    RegimeError,
    UniformDemand,
    load_market_params,
)
from .policy import PolicyCurve, PromotionPolicy
from .promotion import (
    InfeasibleError,
    baseline_confounding,
    confounding_alpha_high,
    myopic_promotion,
    observable_confounding_surplus,
    optimal_confounding,
    sale_probability,
    solve_policy_curve,
)
from .seller import (
    InconsistentObservationError,
    dp_best_response_value,
    myopic_best_response,
    outside_option_price,
    phi_bar,
    update_belief,
)
from .infodesign import (
    Signal,
    ValueCurve,
    captured_share,
    concavify,
    metrics_table,
    optimal_signal,
    relative_gain,
    w_max,
    w_truthful,
)
from .game import EpisodeConfig, EpisodeTrace, fit_convergence_rate, run_batch, run_episode
