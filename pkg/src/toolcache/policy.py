"""Value-aware adaptive admission and eviction.

Admission: cacheable misses are partitioned into a tool -> parameter-category
-> user tree that is rebuilt from a rolling window every ``regroup_interval``
requests; a node subdivides only while it is busy (frequency at or above
``split_min_accesses``) yet unrewarding (hit ratio at or below
``split_max_hit_ratio``), and undersized subgroups are pooled into a residual
sibling instead of becoming arms of their own. Each leaf is a UCB bandit arm
whose reward blends hit ratio, depth, and (optionally) average caching value;
a request is admitted when its leaf ranks in the top ``admit_fraction`` of
arms, or unconditionally while its arm is unexplored or the warm-up window
is still running.

Eviction: expired entries go first; otherwise the candidate set is the
least-recently-used ~10% of residents and the lowest scoring candidate
(log of value + per-entry hit ratio) is dropped.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .model import CacheEntry, GroupNode, PolicyConfig

# Pooled bucket for undersized subgroups. Real labels (tool names, parameter
# values, user ids) are assumed never to collide with it.
RESIDUAL_LABEL = "*"
NO_CATEGORY = ""

# Fraction of residents (by recency) eligible for eviction.
RECENCY_CANDIDATE_FRACTION = 0.1


class EmptyCache(LookupError):
    """Victim selection requested on an empty cache."""


@dataclass(frozen=True)
class GroupCoords:
    """Grouping coordinates of one request."""

    tool: str
    category: str | None
    user: str

    def labels(self) -> tuple[str, str, str]:
        return (self.tool, self.category if self.category is not None else NO_CATEGORY, self.user)


@dataclass(frozen=True)
class BufferedRequest:
    """One windowed observation: where the request grouped and how it went."""

    labels: tuple[str, str, str]
    hit: bool
    value: float


@dataclass
class AdmissionDecision:
    admitted: bool
    group_path: tuple[str, ...]
    ucb_score: float
    rank: int


@dataclass
class GroupingState:
    """The grouping tree plus the bandit's window and round bookkeeping."""

    max_depth: int = 3
    root: GroupNode = field(default_factory=GroupNode)
    request_buffer: deque = field(default_factory=deque)
    round_counter: int = 0
    seen_count: int = 0
    warmup_active: bool = True


def locate_group(state: GroupingState, coords: GroupCoords) -> GroupNode:
    """Walk the tree as deep as it extends for this request; total and
    single-valued. Unseen labels get a fresh leaf unless a residual bucket
    exists at that split, in which case they pool there."""
    labels = coords.labels()[: state.max_depth]
    node = state.root
    for label in labels:
        if node is not state.root and not node.children:
            break
        nxt = node.children.get(label)
        if nxt is None and node is not state.root:
            nxt = node.children.get(RESIDUAL_LABEL)
        if nxt is None:
            nxt = GroupNode(path=node.path + (label,), level=node.level + 1)
            node.children[label] = nxt
        node = nxt
    return node


def _assign_stats(node: GroupNode, records: list[BufferedRequest]) -> None:
    node.access_count = len(records)
    node.hit_count = sum(1 for r in records if r.hit)
    node.value_sum = sum(r.value for r in records)
    node.member_count = len(records)


def _grouping(node: GroupNode, records: list[BufferedRequest], cfg: PolicyConfig,
              max_depth: int) -> None:
    _assign_stats(node, records)
    if node.level >= max_depth:
        return
    if node.level > 0 and len(records) < cfg.min_group_size:
        return
    buckets: dict[str, list[BufferedRequest]] = {}
    for record in records:
        buckets.setdefault(record.labels[node.level], []).append(record)
    named: list[tuple[str, list[BufferedRequest], bool]] = []
    pooled: list[BufferedRequest] = []
    for label, recs in buckets.items():
        freq = len(recs)
        hit_ratio = sum(1 for r in recs if r.hit) / freq
        if freq >= cfg.split_min_accesses and hit_ratio <= cfg.split_max_hit_ratio:
            named.append((label, recs, True))
        elif freq < cfg.min_group_size:
            pooled.extend(recs)
        else:
            named.append((label, recs, False))
    if not named:
        return  # every subgroup undersized: the node absorbs them and stays a leaf
    for label, recs, descend in named:
        child = GroupNode(path=node.path + (label,), level=node.level + 1)
        node.children[label] = child
        if descend:
            _grouping(child, recs, cfg, max_depth)
        else:
            _assign_stats(child, recs)
    if pooled:
        rest = GroupNode(path=node.path + (RESIDUAL_LABEL,), level=node.level + 1)
        _assign_stats(rest, pooled)
        node.children[RESIDUAL_LABEL] = rest


def regroup(state: GroupingState, cfg: PolicyConfig) -> None:
    """Rebuild the tree from the buffered window; bandit counters reset."""
    window = list(state.request_buffer)
    root = GroupNode()
    if window:
        _grouping(root, window, cfg, state.max_depth)
    state.root = root
    state.warmup_active = False


def group_reward(group: GroupNode, cfg: PolicyConfig, include_value: bool = True) -> float:
    """Bandit reward: grows with hit ratio, depth, and (optionally) average
    caching value; shrinks as the group accumulates admissions."""
    reward = math.log(group.hit_ratio + cfg.hit_offset) * math.log(group.level + cfg.level_offset)
    if include_value:
        reward *= math.log(max(group.mean_value, 0.0) + cfg.value_offset)
    return reward / math.log(group.admitted_count + cfg.admit_count_offset)


def ucb_score(group: GroupNode, t: int, cfg: PolicyConfig, include_value: bool = True) -> float:
    if group.selection_count == 0:
        return math.inf  # unexplored arms are always tried first
    bonus = cfg.explore_coeff * math.sqrt(math.log(t) / group.selection_count)
    return group_reward(group, cfg, include_value) + bonus


def decide_admission(state: GroupingState, leaf: GroupNode, cfg: PolicyConfig,
                     include_value: bool = True, cache_full: bool = True) -> AdmissionDecision:
    """One decision round for a cacheable miss belonging to ``leaf``.

    Warm-up admits unconditionally; after warm-up, free space still admits
    and the bandit cutoff only arbitrates once admitting would force an
    eviction. Unranked decisions carry rank 1 and an infinite score.
    """
    state.round_counter += 1
    t = state.round_counter
    if state.warmup_active or not cache_full:
        leaf.admitted_count += 1
        leaf.selection_count += 1
        return AdmissionDecision(True, leaf.path, math.inf, 1)
    ordered = sorted(state.root.iter_leaves(),
                     key=lambda g: (-ucb_score(g, t, cfg, include_value), -g.mean_value, g.path))
    rank = ordered.index(leaf) + 1
    top_k = max(1, math.ceil(cfg.admit_fraction * len(ordered)))
    admitted = rank <= top_k or leaf.selection_count == 0
    if admitted:
        leaf.admitted_count += 1
        leaf.selection_count += 1
    return AdmissionDecision(admitted, leaf.path, ucb_score(leaf, t, cfg, include_value), rank)


def recency_sort_key(entry: CacheEntry):
    return (entry.last_access_time, entry.insert_time, entry.key.digest)


def eviction_score(entry: CacheEntry, cfg: PolicyConfig) -> float:
    """Multi-factor eviction score; the per-entry hit ratio counts the
    insertion miss as the one miss of the entry's lifetime."""
    hit_ratio = entry.hit_count / (entry.hit_count + 1)
    return math.log(entry.value_score + hit_ratio + cfg.evict_offset)


def select_victim(entries: Iterable[CacheEntry], cfg: PolicyConfig):
    """Lowest-scoring entry among the least-recently-used ~10% of residents."""
    pool = sorted(entries, key=recency_sort_key)
    if not pool:
        raise EmptyCache("cannot evict from an empty cache")
    candidates = pool[: math.ceil(RECENCY_CANDIDATE_FRACTION * len(pool))]
    victim = min(candidates,
                 key=lambda e: (eviction_score(e, cfg), e.insert_time, e.key.digest))
    return victim.key


def purge_expired(entries: dict, now: float) -> list:
    """Drop every entry whose expiry has passed; returns keys by expiry order."""
    expired = sorted((e for e in entries.values() if e.expiry_time <= now),
                     key=lambda e: (e.expiry_time, e.key.digest))
    for entry in expired:
        del entries[entry.key]
    return [entry.key for entry in expired]


class BanditPolicy:
    """Grouped UCB admission plus scored eviction.

    ``value_in_reward`` and ``value_aware_eviction`` switch the caching-value
    terms off; with both off the policy reduces exactly to the frequency-only
    baseline (bandit admission, plain LRU eviction).
    """

    def __init__(self, cfg: PolicyConfig, name: str = "vaac", *,
                 value_in_reward: bool = True, value_aware_eviction: bool = True,
                 max_depth: int = 3):
        self.cfg = cfg
        self.name = name
        self.value_in_reward = value_in_reward
        self.value_aware_eviction = value_aware_eviction
        self.state = GroupingState(max_depth=max_depth,
                                   request_buffer=deque(maxlen=cfg.regroup_interval))

    def admit(self, coords: GroupCoords, cache_full: bool = True) -> AdmissionDecision:
        leaf = locate_group(self.state, coords)
        return decide_admission(self.state, leaf, self.cfg, self.value_in_reward, cache_full)

    def observe(self, coords: GroupCoords, hit: bool, value: float) -> None:
        leaf = locate_group(self.state, coords)
        leaf.access_count += 1
        if hit:
            leaf.hit_count += 1
        leaf.value_sum += value
        leaf.member_count += 1
        self.state.request_buffer.append(BufferedRequest(coords.labels(), hit, value))
        self.state.seen_count += 1
        if self.state.seen_count % self.cfg.regroup_interval == 0:
            regroup(self.state, self.cfg)

    def choose_victim(self, entries: Iterable[CacheEntry]):
        if self.value_aware_eviction:
            return select_victim(entries, self.cfg)
        pool = list(entries)
        if not pool:
            raise EmptyCache("cannot evict from an empty cache")
        return min(pool, key=recency_sort_key).key
