"""Single-price promotion policies and belief-indexed policy curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

POLICY_CURVE_COLUMNS = ("mu", "promotedPrice", "alphaLow", "alphaHigh", "surplus", "sellerRevenue")


@dataclass(frozen=True)
class PromotionPolicy:
    """Promote ``promoted_price`` with probability ``alpha_low`` / ``alpha_high``
    depending on the true impatient fraction; never promote any other price."""

    promoted_price: float
    alpha_low: float
    alpha_high: float

    def __post_init__(self) -> None:
        for name in ("alpha_low", "alpha_high"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not np.isfinite(self.promoted_price):
            raise ValueError("promoted_price must be finite")

    def alpha(self, high: bool) -> float:
        return self.alpha_high if high else self.alpha_low


@dataclass(frozen=True)
class PolicyCurve:
    """Solved policy, per-period surplus and seller revenue on a belief grid."""

    mu_grid: np.ndarray
    policies: tuple[PromotionPolicy, ...]
    surplus: np.ndarray
    seller_revenue: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_grid, dtype=float)
        object.__setattr__(self, "mu_grid", mu)
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "surplus", np.asarray(self.surplus, dtype=float))
        object.__setattr__(self, "seller_revenue", np.asarray(self.seller_revenue, dtype=float))
        n = len(mu)
        if n < 2 or np.any(np.diff(mu) <= 0):
            raise ValueError("mu_grid must be strictly ascending with at least two points")
        if mu[0] < 0.0 or mu[-1] > 1.0:
            raise ValueError("mu_grid must lie in [0, 1]")
        if not (len(self.policies) == len(self.surplus) == len(self.seller_revenue) == n):
            raise ValueError("policy curve columns must have equal length")
        if np.any(self.surplus < 0):
            raise ValueError("surplus must be nonnegative")

    def __len__(self) -> int:
        return len(self.mu_grid)

    def nearest_index(self, mu: Union[float, np.ndarray]) -> Union[int, np.ndarray]:
        """Index of the grid node closest to ``mu`` (ties go to the lower node)."""
        grid = self.mu_grid
        m = np.asarray(mu, dtype=float)
        hi = np.clip(np.searchsorted(grid, m, side="left"), 1, len(grid) - 1)
        lo = hi - 1
        idx = np.where(np.abs(m - grid[lo]) <= np.abs(grid[hi] - m), lo, hi)
        return int(idx) if np.ndim(mu) == 0 else idx

    def policy_at(self, mu: float) -> PromotionPolicy:
        return self.policies[self.nearest_index(mu)]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Promoted prices, alpha_low and alpha_high as arrays aligned with the grid."""
        prices = np.array([p.promoted_price for p in self.policies])
        a_low = np.array([p.alpha_low for p in self.policies])
        a_high = np.array([p.alpha_high for p in self.policies])
        return prices, a_low, a_high

    def rows(self) -> Iterable[tuple[float, ...]]:
        for mu, pol, w, r in zip(self.mu_grid, self.policies, self.surplus, self.seller_revenue):
            yield (mu, pol.promoted_price, pol.alpha_low, pol.alpha_high, w, r)

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(POLICY_CURVE_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "PolicyCurve":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != POLICY_CURVE_COLUMNS:
                raise ValueError(f"unexpected policy curve columns: {header}")
            rows = [[float(x) for x in row] for row in reader]
        return cls.from_rows(rows)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "PolicyCurve":
        data = np.asarray(rows, dtype=float)
        policies = tuple(PromotionPolicy(p, lo, hi) for p, lo, hi in data[:, 1:4])
        return cls(data[:, 0], policies, data[:, 4], data[:, 5])
