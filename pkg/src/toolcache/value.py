"""Running feature ranges, min-max normalization, and the caching value."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import PolicyConfig


class NonFiniteFeature(ValueError):
    """Observed feature is not a finite non-negative number."""


class EmptyRange(LookupError):
    """Normalization requested before any observation."""


@dataclass
class FeatureRange:
    """Running min/max of one feature; bounds only ever widen."""

    running_min: float = math.inf
    running_max: float = -math.inf
    observation_count: int = 0

    def observe(self, x: float) -> None:
        self.running_min = min(self.running_min, x)
        self.running_max = max(self.running_max, x)
        self.observation_count += 1

    def normalize(self, x: float, floor: float) -> float:
        if self.observation_count == 0:
            raise EmptyRange("no observations yet")
        if self.running_max == self.running_min:
            return 1.0  # degenerate range: every observation is the extreme
        span = self.running_max - self.running_min
        return min(max((x - self.running_min) / span, floor), 1.0)


class FeatureRanges:
    """Global (cross-tool) ranges for fulfillment latency, cost, and size.

    Keeping one range per feature across all tools makes caching values
    comparable between tools, which the admission bandit relies on.
    """

    FEATURES = ("latency", "cost", "size")

    def __init__(self):
        self.latency = FeatureRange()
        self.cost = FeatureRange()
        self.size = FeatureRange()

    def observe(self, latency_ms: float, cost_units: float, size_bytes: float) -> None:
        for name, x in zip(self.FEATURES, (latency_ms, cost_units, size_bytes)):
            if not isinstance(x, (int, float)) or not math.isfinite(x) or x < 0:
                raise NonFiniteFeature(f"{name} must be finite and >= 0, got {x!r}")
        self.latency.observe(float(latency_ms))
        self.cost.observe(float(cost_units))
        self.size.observe(float(size_bytes))

    def normalize(self, feature: str, x: float, floor: float = 0.01) -> float:
        return getattr(self, feature).normalize(x, floor)


def caching_value(cfg: PolicyConfig, norm_latency: float, norm_cost: float,
                  norm_size: float, ttl_seconds: float, tau_s: float | None = None) -> float:
    """Estimated benefit of caching one result.

    Blends normalized fulfillment latency with the cost-to-size ratio, minus
    an exponential staleness penalty that fades as the TTL grows past tau.
    The norm_size floor keeps the ratio finite; short TTLs can push the
    total negative.
    """
    tau = cfg.tau_s if tau_s is None else tau_s
    gain = cfg.latency_weight * norm_latency + cfg.cost_weight * (norm_cost / norm_size)
    return gain - cfg.staleness_weight * math.exp(-ttl_seconds / tau)
