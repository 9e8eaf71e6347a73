"""Reference policies: admit-all LRU and the frequency-only bandit baseline."""

from __future__ import annotations

import math
from typing import Iterable

from .model import CacheEntry, GroupNode, PolicyConfig, ToolCallRequest
from .policy import (AdmissionDecision, BanditPolicy, EmptyCache, GroupCoords,
                     group_reward, recency_sort_key)

POLICY_NAMES = ("vaac", "caca", "lru")


def lru_admit(request: ToolCallRequest) -> bool:
    """LRU admits every cacheable request; eviction alone manages space."""
    return True


def lru_select_victim(entries: Iterable[CacheEntry]):
    """Oldest last access wins; ties by oldest insert, then key."""
    pool = list(entries)
    if not pool:
        raise EmptyCache("cannot evict from an empty cache")
    return min(pool, key=recency_sort_key).key


def caca_group_reward(group: GroupNode, cfg: PolicyConfig) -> float:
    """Frequency-only reward: the full reward with the value factor removed."""
    return group_reward(group, cfg, include_value=False)


class LruPolicy:
    """Classic LRU behind the same policy interface as the bandit policies."""

    name = "lru"

    def admit(self, coords: GroupCoords, cache_full: bool = True) -> AdmissionDecision:
        return AdmissionDecision(True, (), math.inf, 1)

    def observe(self, coords: GroupCoords, hit: bool, value: float) -> None:
        pass

    def choose_victim(self, entries: Iterable[CacheEntry]):
        return lru_select_victim(entries)


def make_policy(name: str, cfg: PolicyConfig, max_depth: int = 3):
    """Build a policy instance from its CLI selection string."""
    if name == "vaac":
        return BanditPolicy(cfg, "vaac", value_in_reward=True,
                            value_aware_eviction=True, max_depth=max_depth)
    if name == "caca":
        return BanditPolicy(cfg, "caca", value_in_reward=False,
                            value_aware_eviction=False, max_depth=max_depth)
    if name == "lru":
        return LruPolicy()
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
