"""Purchase probabilities and consumer surplus for the two-product market.

Consumers value the seller's product at ``v1 ~ U[a - 1, a]`` and the rival's at
``v2 ~ U[b - 1, b]`` (rival price fixed at zero), where ``a`` is the seller
quality and ``b`` the rival quality.  An impatient consumer sees only the
promoted product; a patient one compares both against the outside option.

Four primitives describe the market at seller price ``p``:

* ``rho0(p)``  -- sale probability for an impatient consumer shown the seller
* ``rho_c(p)`` -- sale probability for a patient consumer
* ``w0(p)``    -- expected surplus of an impatient consumer shown the seller
* ``w_c(p)``   -- expected surplus of a patient consumer

plus ``w_c_const``, the surplus of an impatient consumer shown the rival.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Protocol, Union, runtime_checkable

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

ArrayLike = Union[float, np.ndarray]

# Config-file key -> attribute name.
_FILE_KEYS = {
    "sellerQuality": "seller_quality",
    "rivalQuality": "rival_quality",
    "phiLow": "phi_low",
    "phiHigh": "phi_high",
    "prior": "prior",
}


class DomainError(ValueError):
    """A price or belief lies outside the admissible domain."""


class ConfigurationError(ValueError):
    """Market parameters violate an invariant."""


class RegimeError(ConfigurationError):
    """Parameters fall outside the seller-preferred regime the closed forms need."""


def regime_threshold(rival_quality: float) -> float:
    """Smallest seller quality (exclusive) for which the seller is preferred."""
    return 2.0 * rival_quality * (1.0 - rival_quality / 4.0)


@dataclass(frozen=True)
class MarketParams:
    """Demand constants and the binary prior over the impatient fraction.

    ``prior`` is the probability that the impatient fraction equals
    ``phi_high``.
    """

    seller_quality: float
    rival_quality: float
    phi_low: float
    phi_high: float
    prior: float = 0.5

    def __post_init__(self) -> None:
        a, b = self.seller_quality, self.rival_quality
        if not 0.0 < a <= 1.0:
            raise ConfigurationError(f"sellerQuality must lie in (0, 1], got {a}")
        if not 0.0 <= b <= 1.0:
            raise ConfigurationError(f"rivalQuality must lie in [0, 1], got {b}")
        if not 0.0 < self.phi_low < self.phi_high < 1.0:
            raise ConfigurationError(
                f"need 0 < phiLow < phiHigh < 1, got {self.phi_low}, {self.phi_high}"
            )
        if not 0.0 <= self.prior <= 1.0:
            raise ConfigurationError(f"prior must lie in [0, 1], got {self.prior}")
        if not a > regime_threshold(b):
            raise RegimeError(
                f"sellerQuality={a} is outside the seller-preferred regime "
                f"(needs > {regime_threshold(b):.6g} for rivalQuality={b})"
            )

    @classmethod
    def unvalidated(cls, **kwargs: float) -> "MarketParams":
        """Build parameters without invariant checks.

        Only for probing degenerate limits (e.g. ``phi_low == phi_high``) in
        tests; solvers make no promises outside the validated region.
        """
        obj = object.__new__(cls)
        for f in fields(cls):
            value = kwargs.get(f.name, f.default)
            object.__setattr__(obj, f.name, float(value))
        return obj

    def replace(self, **changes: float) -> "MarketParams":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return MarketParams(**data)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "MarketParams":
        """Parse the five camelCase config keys; unknown or missing keys are errors."""
        unknown = set(data) - set(_FILE_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown market parameter keys: {sorted(unknown)}")
        missing = set(_FILE_KEYS) - set(data)
        if missing:
            raise ConfigurationError(f"missing market parameter keys: {sorted(missing)}")
        kwargs = {}
        for key, attr in _FILE_KEYS.items():
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"{key} must be a number, got {value!r}")
            kwargs[attr] = float(value)
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, float]:
        return {key: getattr(self, attr) for key, attr in _FILE_KEYS.items()}


def read_config_file(path: Union[str, Path]) -> dict[str, Any]:
    """Read a JSON or TOML file into a dict, choosing the parser by suffix."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    text = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text.decode("utf-8"))
        else:
            data = tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must contain a table/object at top level")
    return data


def load_market_params(path: Union[str, Path]) -> MarketParams:
    """Load a file holding exactly the five market parameter keys."""
    return MarketParams.from_mapping(read_config_file(path))


@runtime_checkable
class DemandModel(Protocol):
    """What the solvers need from a demand model.

    Implementations must keep ``rho0 >= rho_c``, make ``p * rho0(p)`` and
    ``p * rho_c(p)`` strictly concave, and make ``w0`` and ``w_c`` decreasing
    on ``price_domain``.
    """

    price_domain: tuple[float, float]
    w_c_const: float

    def rho0(self, p: ArrayLike) -> ArrayLike: ...

    def rho_c(self, p: ArrayLike) -> ArrayLike: ...

    def w0(self, p: ArrayLike) -> ArrayLike: ...

    def w_c(self, p: ArrayLike) -> ArrayLike: ...


class UniformDemand:
    """Uniform willingness-to-pay instance with closed-form primitives.

    Prices are restricted to ``[0, seller_quality]``.  On the patient side the
    formulas switch branch at the kink ``p = a - b``: the low branch applies
    strictly below it and the high branch at or above it.
    """

    def __init__(self, seller_quality: float, rival_quality: float):
        self.a = float(seller_quality)
        self.b = float(rival_quality)
        self.price_domain = (0.0, self.a)
        self.kink = self.a - self.b
        self.w_c_const = self.b**2 / 2.0

    @classmethod
    def from_params(cls, params: MarketParams) -> "UniformDemand":
        return cls(params.seller_quality, params.rival_quality)

    def __repr__(self) -> str:
        return f"UniformDemand(seller_quality={self.a}, rival_quality={self.b})"

    def _check(self, p: ArrayLike) -> np.ndarray:
        arr = np.asarray(p, dtype=float)
        lo, hi = self.price_domain
        if np.any(~np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
            raise DomainError(f"price outside [{lo}, {hi}]: {p}")
        return arr

    @staticmethod
    def _out(arr: np.ndarray, p: ArrayLike) -> ArrayLike:
        return float(arr) if np.ndim(p) == 0 else arr

    def rho0(self, p: ArrayLike) -> ArrayLike:
        x = self._check(p)
        return self._out(np.clip(self.a - x, 0.0, 1.0), p)

    def rho_c(self, p: ArrayLike) -> ArrayLike:
        x = self._check(p)
        gap = self.a - x
        high = (1.0 - self.b) * gap + gap**2 / 2.0
        low = gap - self.b**2 / 2.0
        return self._out(np.clip(np.where(x < self.kink, low, high), 0.0, 1.0), p)

    def w0(self, p: ArrayLike) -> ArrayLike:
        x = self._check(p)
        return self._out((self.a - x) ** 2 / 2.0, p)

    def w_c(self, p: ArrayLike) -> ArrayLike:
        x = self._check(p)
        gap = self.a - x
        b = self.b
        high = (3.0 * b**2 + 3.0 * gap**2 * (1.0 - b) + gap**3) / 6.0
        low = (3.0 * gap**2 + 3.0 * b**2 * (1.0 - gap) + b**3) / 6.0
        return self._out(np.where(x < self.kink, low, high), p)


def demand_for(params: MarketParams, demand: DemandModel | None = None) -> DemandModel:
    return UniformDemand.from_params(params) if demand is None else demand


def rho0(params: MarketParams, p: ArrayLike) -> ArrayLike:
    return UniformDemand.from_params(params).rho0(p)


def rho_c(params: MarketParams, p: ArrayLike) -> ArrayLike:
    return UniformDemand.from_params(params).rho_c(p)


def w0(params: MarketParams, p: ArrayLike) -> ArrayLike:
    return UniformDemand.from_params(params).w0(p)


def w_c_of_p(params: MarketParams, p: ArrayLike) -> ArrayLike:
    return UniformDemand.from_params(params).w_c(p)


def w_c_const(params: MarketParams) -> float:
    return UniformDemand.from_params(params).w_c_const
