"""Core domain types shared by the cache engine, policies, and simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator

# A parameter value is a scalar (str/int/float/bool) or a nested dict/list of scalars.
ParamValue = Any

# Default lifetime classes for tool results, in seconds.
TTL_CLASSES: dict[str, float] = {
    "command": 0.0,
    "realtime": 60.0,
    "computational": 300.0,
    "static": 3600.0,
}


class RequestType(str, Enum):
    INFORMATIONAL = "INFORMATIONAL"
    COMMAND = "COMMAND"


class MalformedRequest(ValueError):
    """A request field violates its invariant."""

    def __init__(self, field_name: str, reason: str = ""):
        self.field_name = field_name
        msg = f"malformed request field {field_name!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


@dataclass
class ToolCallRequest:
    """One tool invocation plus its ground-truth fulfillment measurements.

    The true_* fields come from the trace (or live measurement) and feed the
    caching value model; parameter order is meaningful because the first
    parameter drives category grouping.
    """

    seq: int
    user_id: str
    tool_name: str
    params: list[tuple[str, ParamValue]]
    true_latency_ms: float
    true_cost_units: float
    true_size_bytes: int
    result_payload: bytes = b""


def validate_request(request: ToolCallRequest) -> None:
    """Raise MalformedRequest if any field invariant is violated."""
    if not isinstance(request.seq, int) or isinstance(request.seq, bool) or request.seq < 0:
        raise MalformedRequest("seq", "must be a non-negative integer")
    if not isinstance(request.user_id, str):
        raise MalformedRequest("user_id", "must be a string")
    if not request.tool_name:
        raise MalformedRequest("tool_name", "must be non-empty")
    for name, x in (("true_latency_ms", request.true_latency_ms),
                    ("true_cost_units", request.true_cost_units)):
        if not isinstance(x, (int, float)) or not math.isfinite(x) or x < 0:
            raise MalformedRequest(name, "must be finite and >= 0")
    if not isinstance(request.true_size_bytes, int) or request.true_size_bytes < 0:
        raise MalformedRequest("true_size_bytes", "must be a non-negative integer")


@dataclass(frozen=True)
class SemanticFeatures:
    """Semantic annotation of one request: drives cacheability, expiry, grouping."""

    request_type: RequestType
    ttl_seconds: float
    parameter_category: str | None = None

    def __post_init__(self):
        if not isinstance(self.ttl_seconds, (int, float)) or not math.isfinite(self.ttl_seconds):
            raise ValueError("ttl_seconds must be a finite number")
        if self.ttl_seconds < 0:
            raise ValueError("ttl_seconds must be >= 0")
        if self.request_type is RequestType.COMMAND and self.ttl_seconds != 0:
            raise ValueError("COMMAND requests always carry ttl_seconds = 0")


@dataclass
class SystemFeatures:
    """Measured runtime features of a cached result."""

    associated_users: set[str] = field(default_factory=set)
    access_count: int = 0
    result_size_bytes: int = 0
    system_latency_ms: float = 0.0
    resource_cost_units: float = 0.0


@dataclass
class CacheEntry:
    """A stored tool result with the metadata that scores it for eviction.

    Times are logical-clock seconds; expiry_time is fixed at insertion
    (hits do not refresh the TTL).
    """

    key: Any  # CacheKey; typed loosely to keep this module dependency-free
    payload: bytes
    semantic: SemanticFeatures
    system: SystemFeatures
    value_score: float
    insert_time: float
    last_access_time: float
    expiry_time: float
    hit_count: int = 0


@dataclass(eq=False)
class GroupNode:
    """Node of the tool -> parameter-category -> user grouping tree.

    Leaves are the admission bandit's arms. access_count/hit_count/value_sum
    accumulate over the current window; admitted_count and selection_count
    are the bandit's per-window counters and reset on regroup.
    """

    path: tuple[str, ...] = ()
    level: int = 0
    access_count: int = 0
    hit_count: int = 0
    admitted_count: int = 0
    selection_count: int = 0
    value_sum: float = 0.0
    member_count: int = 0
    children: dict[str, "GroupNode"] = field(default_factory=dict)

    @property
    def hit_ratio(self) -> float:
        return self.hit_count / max(self.access_count, 1)

    @property
    def mean_value(self) -> float:
        return self.value_sum / max(self.member_count, 1)

    def iter_leaves(self) -> Iterator["GroupNode"]:
        if not self.children:
            yield self
            return
        for child in self.children.values():
            yield from child.iter_leaves()


@dataclass
class PolicyConfig:
    """Tunable policy constants.

    Defaults follow the standard experiment setup: value weights
    (0.8, 0.2, 0.2), split thresholds (20 accesses, 0.5 hit ratio), and
    log offsets (1, 1, 1, e, 1) that keep the reward non-negative and the
    admission denominator >= 1.
    """

    capacity: int = 1024              # resident entry budget
    latency_weight: float = 0.8       # weight of normalized latency in the caching value
    cost_weight: float = 0.2          # weight of the cost-to-size ratio
    staleness_weight: float = 0.2     # weight of the TTL staleness penalty
    tau_s: float = 300.0              # staleness smoothing: expected lifetime of cached entries
    split_min_accesses: int = 20      # a group subdivides only at or above this frequency
    split_max_hit_ratio: float = 0.5  # ... and at or below this hit ratio
    min_group_size: int = 5           # smaller subgroups are absorbed rather than split out
    regroup_interval: int = 200       # requests between tree rebuilds (also the warm-up length)
    explore_coeff: float = math.sqrt(2.0)
    admit_fraction: float = 0.5       # top fraction of groups (by UCB) admitted each round
    hit_offset: float = 1.0           # log offsets for the reward and eviction scores
    level_offset: float = 1.0
    value_offset: float = 1.0
    admit_count_offset: float = math.e
    evict_offset: float = 1.0
    norm_floor: float = 0.01          # lower clamp for normalized features

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        for name in ("latency_weight", "cost_weight", "staleness_weight",
                     "hit_offset", "level_offset", "value_offset", "evict_offset",
                     "explore_coeff"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.tau_s <= 0:
            raise ValueError("tau_s must be > 0")
        if not 0 < self.norm_floor <= 0.1:
            raise ValueError("norm_floor must be in (0, 0.1]")
        if self.admit_count_offset < math.e:
            raise ValueError("admit_count_offset must be >= e so the reward denominator stays >= 1")
        if not 0 < self.admit_fraction <= 1:
            raise ValueError("admit_fraction must be in (0, 1]")
        if not 0 <= self.split_max_hit_ratio <= 1:
            raise ValueError("split_max_hit_ratio must be in [0, 1]")
        if self.split_min_accesses < 1 or self.min_group_size < 1 or self.regroup_interval < 1:
            raise ValueError("split_min_accesses, min_group_size, regroup_interval must be >= 1")
