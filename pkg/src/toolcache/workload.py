"""Synthetic tool-call workloads: a six-tool catalog and four request
distributions (zipf, hotspot shifting, uniform, multi-user).

Every generated request carries complete annotation fields, so simulation
never needs a live annotator. Identical (catalog, config, seed) inputs
produce byte-identical traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .annotator import CATEGORY_FIRST_PARAM, CATEGORY_NONE, ToolManifest, ToolRule
from .model import RequestType, SemanticFeatures, ToolCallRequest, TTL_CLASSES
from .traceio import TraceRecord

DISTRIBUTIONS = ("zipf", "hotspot", "uniform", "multiuser")

# Share of each hotspot phase drawn from the active region; the rest is
# spread uniformly over the remaining templates.
HOTSPOT_ACTIVE_SHARE = 0.8


class InvalidPhasing(ValueError):
    """Hotspot phase count incompatible with the population."""


@dataclass(frozen=True)
class ToolSpec:
    name: str
    request_type: RequestType
    ttl_class: str
    latency_range_ms: tuple[float, float]
    cost_per_call: float
    size_range_bytes: tuple[int, int]
    primary_param: str
    param_space: int
    secondary_param: str | None = None
    secondary_param_space: int = 0
    popularity_weight: float = 1.0  # biases how high this tool's templates rank

    @property
    def ttl_seconds(self) -> float:
        return TTL_CLASSES[self.ttl_class]


def default_catalog() -> list[ToolSpec]:
    """Six tools spanning the four lifetime classes, with latency/cost figures
    typical of public search, wiki, map, and weather APIs plus one command
    tool and one computational tool."""
    info = RequestType.INFORMATIONAL
    return [
        ToolSpec("search", info, "static", (700.0, 2000.0), 0.005,
                 (12_000, 20_000), "query", 60, "page", 3, popularity_weight=2.5),
        ToolSpec("wiki_fetch", info, "static", (200.0, 1000.0), 0.0,
                 (20_000, 60_000), "title", 350, "section", 2, popularity_weight=0.6),
        ToolSpec("map_planning", info, "computational", (50.0, 1000.0), 0.005,
                 (10_000, 16_000), "origin", 30, "mode", 3, popularity_weight=1.5),
        ToolSpec("weather", info, "realtime", (180.0, 220.0), 0.0016,
                 (200, 1_000), "location", 12, "date", 4, popularity_weight=2.0),
        ToolSpec("message_send", RequestType.COMMAND, "command", (100.0, 300.0), 0.001,
                 (100, 300), "recipient", 10, "text", 2, popularity_weight=1.0),
        ToolSpec("doc_retrieval", info, "static", (400.0, 1600.0), 0.02,
                 (6_000, 10_000), "case_id", 30, popularity_weight=3.0),
    ]


def validate_catalog(catalog: list[ToolSpec]) -> None:
    if not catalog:
        raise ValueError("catalog is empty")
    for tool in catalog:
        if tool.latency_range_ms[0] > tool.latency_range_ms[1]:
            raise ValueError(f"tool {tool.name!r}: latency range lo > hi")
        if tool.size_range_bytes[0] > tool.size_range_bytes[1]:
            raise ValueError(f"tool {tool.name!r}: size range lo > hi")
        if tool.param_space < 1:
            raise ValueError(f"tool {tool.name!r}: param_space must be >= 1")


def manifest_from_catalog(catalog: list[ToolSpec]) -> ToolManifest:
    rules = {}
    for tool in catalog:
        rule = CATEGORY_FIRST_PARAM if tool.secondary_param else CATEGORY_NONE
        rules[tool.name] = ToolRule(tool.request_type, tool.ttl_seconds, rule)
    return ToolManifest(rules)


def catalog_to_dicts(catalog: list[ToolSpec]) -> list[dict]:
    dicts = []
    for tool in catalog:
        entry = asdict(tool)
        entry["request_type"] = tool.request_type.value
        entry["latency_range_ms"] = list(tool.latency_range_ms)
        entry["size_range_bytes"] = list(tool.size_range_bytes)
        dicts.append(entry)
    return dicts


def catalog_from_dicts(raw: list[dict]) -> list[ToolSpec]:
    catalog = []
    for entry in raw:
        entry = dict(entry)
        entry["request_type"] = RequestType(entry["request_type"])
        entry["latency_range_ms"] = tuple(entry["latency_range_ms"])
        entry["size_range_bytes"] = tuple(entry["size_range_bytes"])
        catalog.append(ToolSpec(**entry))
    validate_catalog(catalog)
    return catalog


def load_catalog(path: str | Path) -> list[ToolSpec]:
    return catalog_from_dicts(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class WorkloadConfig:
    distribution: str = "zipf"
    n_requests: int = 1000
    zipf_alpha: float = 1.1
    n_phases: int = 4
    phase_length: int | None = None
    n_users: int = 4
    user_overlap: float = 0.3
    seed: int = 0
    latency_jitter: float = 0.05
    inter_arrival_s: float = 1.0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.n_requests < 1:
            raise ValueError("n_requests must be >= 1")
        if self.zipf_alpha <= 1.0:
            raise ValueError("zipf_alpha must be > 1")
        if not 0 <= self.user_overlap <= 1:
            raise ValueError("user_overlap must be in [0, 1]")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if not 0 <= self.latency_jitter < 1:
            raise ValueError("latency_jitter must be in [0, 1)")


@dataclass(frozen=True)
class Template:
    """One unique (tool, parameters) combination with its ground truth."""

    tool: str
    params: tuple[tuple[str, Any], ...]
    category: str | None
    request_type: RequestType
    ttl_seconds: float
    latency_ms: float
    cost_units: float
    size_bytes: int
    weight: float = 1.0


def build_population(catalog: list[ToolSpec], cfg: WorkloadConfig) -> list[Template]:
    """Enumerate all tool/parameter combinations; ground truth is drawn once
    per template from the tool's ranges."""
    validate_catalog(catalog)
    rng = np.random.default_rng([cfg.seed, 0])
    population: list[Template] = []
    for tool in catalog:
        primary_values = [f"{tool.primary_param}-{i:02d}" for i in range(tool.param_space)]
        if tool.secondary_param and tool.secondary_param_space > 0:
            secondary_values = [f"{tool.secondary_param}-{j}" for j in range(tool.secondary_param_space)]
        else:
            secondary_values = [None]
        for primary in primary_values:
            for secondary in secondary_values:
                latency = round(float(rng.uniform(*tool.latency_range_ms)), 3)
                size = int(rng.integers(tool.size_range_bytes[0], tool.size_range_bytes[1] + 1))
                if secondary is None:
                    params = ((tool.primary_param, primary),)
                    category = None  # single-parameter calls carry no category
                else:
                    params = ((tool.primary_param, primary), (tool.secondary_param, secondary))
                    category = primary
                population.append(Template(tool.name, params, category, tool.request_type,
                                           tool.ttl_seconds, latency, tool.cost_per_call, size,
                                           tool.popularity_weight))
    return population


def _zipf_weights(n: int, alpha: float) -> np.ndarray:
    weights = np.arange(1, n + 1, dtype=float) ** -alpha
    return weights / weights.sum()


def _rank_order(rng: np.random.Generator, population: list[Template]) -> np.ndarray:
    """Seeded rank permutation, biased so higher-weight tools concentrate in
    the top ranks (weighted random order via u^(1/w) keys)."""
    weights = np.array([max(t.weight, 1e-9) for t in population])
    keys = rng.random(len(population)) ** (1.0 / weights)
    return np.argsort(-keys, kind="stable")


def _emit(rng: np.random.Generator, cfg: WorkloadConfig,
          chosen: list[Template], users: list[str]) -> list[TraceRecord]:
    records = []
    for seq, (template, user) in enumerate(zip(chosen, users)):
        jitter = float(rng.uniform(1.0 - cfg.latency_jitter, 1.0 + cfg.latency_jitter))
        request = ToolCallRequest(
            seq=seq, user_id=user, tool_name=template.tool,
            params=list(template.params),
            true_latency_ms=round(template.latency_ms * jitter, 3),
            true_cost_units=template.cost_units,
            true_size_bytes=template.size_bytes)
        features = SemanticFeatures(template.request_type, template.ttl_seconds,
                                    template.category)
        records.append(TraceRecord(request, features, cfg.inter_arrival_s))
    return records


def _uniform_users(rng: np.random.Generator, cfg: WorkloadConfig) -> list[str]:
    return [f"u{u:02d}" for u in rng.integers(0, cfg.n_users, size=cfg.n_requests)]


def gen_zipf(population: list[Template], cfg: WorkloadConfig) -> list[TraceRecord]:
    """Popularity-ranked sampling; the rank order is a seeded permutation."""
    if not population:
        raise ValueError("population is empty")
    rng = np.random.default_rng([cfg.seed, 1])
    order = _rank_order(rng, population)
    weights = _zipf_weights(len(population), cfg.zipf_alpha)
    ranks = rng.choice(len(population), size=cfg.n_requests, p=weights)
    users = _uniform_users(rng, cfg)
    chosen = [population[order[r]] for r in ranks]
    return _emit(rng, cfg, chosen, users)


def gen_hotspot(population: list[Template], cfg: WorkloadConfig) -> list[TraceRecord]:
    """Phased locality: each phase samples mostly from its own region."""
    if not population:
        raise ValueError("population is empty")
    if cfg.n_phases < 1 or cfg.n_phases > len(population):
        raise InvalidPhasing(f"n_phases={cfg.n_phases} for population of {len(population)}")
    rng = np.random.default_rng([cfg.seed, 2])
    order = _rank_order(rng, population)
    regions = np.array_split(order, cfg.n_phases)
    complements = [np.setdiff1d(np.arange(len(population)), region) for region in regions]
    region_weights = [_zipf_weights(len(region), cfg.zipf_alpha) for region in regions]
    phase_length = cfg.phase_length or math.ceil(cfg.n_requests / cfg.n_phases)
    users = _uniform_users(rng, cfg)
    in_active = rng.random(cfg.n_requests)
    chosen = []
    for i in range(cfg.n_requests):
        phase = (i // phase_length) % cfg.n_phases
        region, complement = regions[phase], complements[phase]
        if in_active[i] < HOTSPOT_ACTIVE_SHARE or len(complement) == 0:
            idx = int(region[rng.choice(len(region), p=region_weights[phase])])
        else:
            idx = int(complement[rng.integers(0, len(complement))])
        chosen.append(population[idx])
    return _emit(rng, cfg, chosen, users)


def gen_uniform(population: list[Template], cfg: WorkloadConfig) -> list[TraceRecord]:
    """Independent uniform draws over the whole population."""
    if not population:
        raise ValueError("population is empty")
    rng = np.random.default_rng([cfg.seed, 3])
    idx = rng.integers(0, len(population), size=cfg.n_requests)
    users = _uniform_users(rng, cfg)
    chosen = [population[int(i)] for i in idx]
    return _emit(rng, cfg, chosen, users)


def gen_multiuser(population: list[Template], cfg: WorkloadConfig) -> list[TraceRecord]:
    """Round-robin users with partially overlapping interest sets.

    Each user's interest set mixes a shared pool (``user_overlap`` fraction)
    with private templates; a user's popularity ranking is a fixed global
    priority order restricted to their own set, so full overlap makes every
    user sample the same distribution.
    """
    if not population:
        raise ValueError("population is empty")
    if cfg.n_users < 2:
        raise ValueError("multiuser workloads need n_users >= 2")
    rng = np.random.default_rng([cfg.seed, 4])
    n_pop = len(population)
    overlap = cfg.user_overlap
    interest_size = int(n_pop / (cfg.n_users * (1.0 - overlap) + overlap))
    interest_size = max(4, min(interest_size, n_pop))
    shared_size = round(overlap * interest_size)
    order = _rank_order(rng, population)
    priority = np.empty(n_pop, dtype=int)  # rank of each template in the global order
    priority[order] = np.arange(n_pop)
    shared = order[:shared_size]
    private_size = interest_size - shared_size
    cursor = shared_size
    interests: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    for _ in range(cfg.n_users):
        private = order[cursor:min(cursor + private_size, n_pop)]
        cursor += private_size
        pool = np.concatenate([shared, private]).astype(int)
        ranked = pool[np.argsort(priority[pool])]
        interests.append(ranked)
        weights.append(_zipf_weights(len(ranked), cfg.zipf_alpha))
    chosen, users = [], []
    for seq in range(cfg.n_requests):
        user = seq % cfg.n_users
        pick = rng.choice(len(interests[user]), p=weights[user])
        chosen.append(population[int(interests[user][pick])])
        users.append(f"u{user:02d}")
    return _emit(rng, cfg, chosen, users)


GENERATORS = {
    "zipf": gen_zipf,
    "hotspot": gen_hotspot,
    "uniform": gen_uniform,
    "multiuser": gen_multiuser,
}


def generate(catalog: list[ToolSpec], cfg: WorkloadConfig) -> tuple[dict, list[TraceRecord]]:
    """Build the population, run the configured generator, and return the
    trace together with a reproducibility header."""
    population = build_population(catalog, cfg)
    records = GENERATORS[cfg.distribution](population, cfg)
    header = {
        "workload": asdict(cfg),
        "population_size": len(population),
        "catalog": catalog_to_dicts(catalog),
    }
    return header, records
