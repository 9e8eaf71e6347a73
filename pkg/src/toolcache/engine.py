"""The request pipeline: lookup, fulfillment accounting, annotation, gating,
valuation, admission, eviction, insertion.

Time is a logical clock in trace seconds: every request advances it by its
inter-arrival gap, and a miss additionally by the fulfillment latency. TTL
expiry is evaluated against this clock, never wall time, so replays are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotator import is_cacheable
from .keying import make_key
from .model import (CacheEntry, PolicyConfig, SemanticFeatures, SystemFeatures,
                    ToolCallRequest, validate_request)
from .policy import GroupCoords, purge_expired
from .value import FeatureRanges, caching_value

TAU_FLOOR_S = 60.0


class MissingAnnotation(ValueError):
    """Request has no embedded features and no annotator is configured."""


@dataclass
class RequestOutcome:
    """Per-request accounting; hits serve for free, misses pay the true cost."""

    hit: bool
    admitted: bool
    served_latency_ms: float
    cost_incurred: float
    bytes_fetched: int
    evicted_keys: list = field(default_factory=list)


@dataclass
class CacheStore:
    capacity: int
    entries: dict = field(default_factory=dict)
    clock: float = 0.0

    @property
    def resident_count(self) -> int:
        return len(self.entries)


class CacheEngine:
    """Owns the store and all bookkeeping; single writer per instance."""

    def __init__(self, cfg: PolicyConfig, policy, annotator=None):
        self.cfg = cfg
        self.policy = policy
        self.annotator = annotator
        self.store = CacheStore(capacity=cfg.capacity)
        self.ranges = FeatureRanges()
        self.current_tau = cfg.tau_s
        self.requests = 0
        self.hits = 0
        self.total_served_latency_ms = 0.0
        self.total_cost = 0.0
        self.total_bytes_fetched = 0
        self.evictions = 0
        self.expirations = 0

    def _refresh_tau(self) -> None:
        entries = self.store.entries
        if entries:
            mean_ttl = sum(e.semantic.ttl_seconds for e in entries.values()) / len(entries)
            self.current_tau = max(TAU_FLOOR_S, mean_ttl)
        else:
            self.current_tau = self.cfg.tau_s

    def _refresh_values(self) -> None:
        # Entries admitted while the feature ranges were still narrow carry
        # distorted scores; re-score residents before eviction decisions.
        floor = self.cfg.norm_floor
        for entry in self.store.entries.values():
            system = entry.system
            entry.value_score = caching_value(
                self.cfg,
                self.ranges.normalize("latency", system.system_latency_ms, floor),
                self.ranges.normalize("cost", system.resource_cost_units, floor),
                self.ranges.normalize("size", system.result_size_bytes, floor),
                entry.semantic.ttl_seconds,
                tau_s=self.current_tau,
            )

    def process(self, request: ToolCallRequest, features: SemanticFeatures | None = None,
                inter_arrival_s: float = 1.0) -> RequestOutcome:
        validate_request(request)
        store = self.store
        store.clock += inter_arrival_s
        expired = purge_expired(store.entries, store.clock)
        if expired:
            self.expirations += len(expired)
            self._refresh_tau()
        self.requests += 1

        key = make_key(request.tool_name, request.params)
        entry = store.entries.get(key)
        if entry is not None:
            entry.last_access_time = store.clock
            entry.hit_count += 1
            entry.system.access_count += 1
            entry.system.associated_users.add(request.user_id)
            self.hits += 1
            self.policy.observe(
                GroupCoords(request.tool_name, entry.semantic.parameter_category, request.user_id),
                hit=True, value=entry.value_score)
            return RequestOutcome(hit=True, admitted=False, served_latency_ms=0.0,
                                  cost_incurred=0.0, bytes_fetched=0)

        # Miss: the call is fulfilled upstream; account its true cost and let
        # the clock absorb the fulfillment time.
        latency = request.true_latency_ms
        store.clock += latency / 1000.0
        self.total_served_latency_ms += latency
        self.total_cost += request.true_cost_units
        self.total_bytes_fetched += request.true_size_bytes

        if features is None:
            if self.annotator is None:
                raise MissingAnnotation(
                    f"request seq={request.seq} tool={request.tool_name!r} is unannotated")
            features = self.annotator.annotate(request)
        if not is_cacheable(features):
            return RequestOutcome(hit=False, admitted=False, served_latency_ms=latency,
                                  cost_incurred=request.true_cost_units,
                                  bytes_fetched=request.true_size_bytes)

        self.ranges.observe(latency, request.true_cost_units, request.true_size_bytes)
        floor = self.cfg.norm_floor
        value = caching_value(
            self.cfg,
            self.ranges.normalize("latency", latency, floor),
            self.ranges.normalize("cost", request.true_cost_units, floor),
            self.ranges.normalize("size", request.true_size_bytes, floor),
            features.ttl_seconds,
            tau_s=self.current_tau,
        )

        coords = GroupCoords(request.tool_name, features.parameter_category, request.user_id)
        cache_full = store.resident_count >= store.capacity
        decision = self.policy.admit(coords, cache_full)
        self.policy.observe(coords, hit=False, value=value)

        evicted: list = []
        if decision.admitted:
            if store.resident_count >= store.capacity:
                self._refresh_values()
            while store.resident_count >= store.capacity:
                victim = self.policy.choose_victim(store.entries.values())
                del store.entries[victim]
                evicted.append(victim)
                self.evictions += 1
            system = SystemFeatures(associated_users={request.user_id},
                                    result_size_bytes=request.true_size_bytes,
                                    system_latency_ms=latency,
                                    resource_cost_units=request.true_cost_units)
            store.entries[key] = CacheEntry(
                key=key, payload=request.result_payload, semantic=features, system=system,
                value_score=value, insert_time=store.clock, last_access_time=store.clock,
                expiry_time=store.clock + features.ttl_seconds)
            self._refresh_tau()
        return RequestOutcome(hit=False, admitted=decision.admitted, served_latency_ms=latency,
                              cost_incurred=request.true_cost_units,
                              bytes_fetched=request.true_size_bytes, evicted_keys=evicted)

    def stats_snapshot(self) -> dict:
        total = self.requests
        return {
            "requests": total,
            "hits": self.hits,
            "hit_ratio": self.hits / total if total else 0.0,
            "total_served_latency_ms": self.total_served_latency_ms,
            "total_cost": self.total_cost,
            "total_bytes_fetched": self.total_bytes_fetched,
            "evictions": self.evictions,
            "expirations": self.expirations,
        }
