"""Sweep harness: replays a trace through one fresh engine per
(policy, cache size) cell and renders comparable reports.

Cells share nothing, so they may run on worker threads; results are always
assembled in (policy, fraction) order, never completion order. Reports omit
wall-clock timings by default so identical inputs yield identical bytes.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields as dataclass_fields, replace
from pathlib import Path
from typing import Mapping

from .annotator import is_cacheable
from .baselines import POLICY_NAMES, make_policy
from .engine import CacheEngine
from .keying import make_key
from .model import PolicyConfig
from .traceio import TraceRecord, read_trace

DEFAULT_FRACTIONS = (0.10, 0.20, 0.35, 0.50, 0.90)
CSV_COLUMNS = ("policy", "fraction", "hit_ratio", "total_latency_ms", "total_cost", "total_bytes")


class ConfigError(ValueError):
    """Bad sweep/policy configuration, detected before any cell runs."""


class UnsupportedFormat(ValueError):
    """Unknown report output format."""


def policy_config_from_dict(overrides: Mapping, base: PolicyConfig | None = None) -> PolicyConfig:
    """Apply configuration-file overrides; keys match PolicyConfig fields."""
    base = base if base is not None else PolicyConfig()
    known = {f.name for f in dataclass_fields(PolicyConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        return replace(base, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class SweepSpec:
    trace_path: str
    policies: tuple = POLICY_NAMES
    cache_fractions: tuple = DEFAULT_FRACTIONS
    config: PolicyConfig = field(default_factory=PolicyConfig)
    seed: int | None = None
    max_depth: int = 3
    include_timings: bool = False
    parallelism: int | None = None


def unique_cacheable_keys(records: list[TraceRecord]) -> int:
    """Distinct keys among cacheable requests; capacities derive from this."""
    keys = set()
    for record in records:
        if record.features is None:
            raise ConfigError(
                f"trace record seq={record.request.seq} lacks annotation fields; "
                "run the annotate command first")
        if is_cacheable(record.features):
            keys.add(make_key(record.request.tool_name, record.request.params))
    return len(keys)


def run_cell(records: list[TraceRecord], policy_name: str, capacity: int,
             cfg: PolicyConfig | None = None, max_depth: int = 3) -> dict:
    """Replay the whole trace through a fresh engine + policy instance."""
    if policy_name not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {policy_name!r}; expected one of {POLICY_NAMES}")
    if capacity < 1:
        raise ConfigError("capacity must be >= 1")
    cfg = replace(cfg if cfg is not None else PolicyConfig(), capacity=capacity)
    engine = CacheEngine(cfg, make_policy(policy_name, cfg, max_depth=max_depth))
    started = time.perf_counter()
    for record in records:
        engine.process(record.request, record.features, record.inter_arrival_s)
    runtime_ms = (time.perf_counter() - started) * 1000.0
    stats = engine.stats_snapshot()
    return {
        "policy": policy_name,
        "capacity": capacity,
        "requests": stats["requests"],
        "hits": stats["hits"],
        "hit_ratio": stats["hit_ratio"],
        "total_latency_ms": stats["total_served_latency_ms"],
        "total_cost": stats["total_cost"],
        "total_bytes": stats["total_bytes_fetched"],
        "evictions": stats["evictions"],
        "expirations": stats["expirations"],
        "runtime_ms": runtime_ms,
    }


def run_sweep(spec: SweepSpec, records: list[TraceRecord] | None = None) -> dict:
    """Run every (policy x fraction) cell and assemble the report."""
    unknown = [name for name in spec.policies if name not in POLICY_NAMES]
    if unknown:
        raise ConfigError(f"unknown policies: {unknown}")
    if not spec.policies or not spec.cache_fractions:
        raise ConfigError("sweep needs at least one policy and one cache fraction")
    for fraction in spec.cache_fractions:
        if not 0 < fraction <= 1:
            raise ConfigError(f"cache fraction {fraction} outside (0, 1]")
    if records is None:
        _, records = read_trace(spec.trace_path)
    uniques = unique_cacheable_keys(records)

    jobs = [(policy, fraction) for policy in spec.policies for fraction in spec.cache_fractions]

    def one(job):
        policy, fraction = job
        capacity = max(1, math.ceil(fraction * uniques))
        return job, run_cell(records, policy, capacity, spec.config, spec.max_depth)

    workers = spec.parallelism or os.cpu_count() or 1
    cells: dict[tuple, dict] = {}
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for job, cell in pool.map(one, jobs):
                cells[job] = cell
    else:
        for job in jobs:
            cells[job] = one(job)[1]

    rows = []
    for policy in spec.policies:
        for fraction in spec.cache_fractions:
            cell = dict(cells[(policy, fraction)])
            cell["cache_fraction"] = fraction
            if not spec.include_timings:
                del cell["runtime_ms"]  # wall clock would break byte-identical reports
            rows.append(cell)
    return {
        "spec": {
            "trace": str(spec.trace_path),
            "policies": list(spec.policies),
            "cache_fractions": list(spec.cache_fractions),
            "seed": spec.seed,
            "max_depth": spec.max_depth,
            "config": asdict(spec.config),
        },
        "trace": {"n_requests": len(records), "unique_cacheable_keys": uniques},
        "cells": rows,
    }


def compare_grouping(records: list[TraceRecord], fractions: tuple = (0.10, 0.20, 0.30),
                     cfg: PolicyConfig | None = None) -> dict:
    """Run the adaptive policy with and without the user grouping level."""
    uniques = unique_cacheable_keys(records)
    rows = []
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ConfigError(f"cache fraction {fraction} outside (0, 1]")
        capacity = max(1, math.ceil(fraction * uniques))
        for mode, depth in (("with_user", 3), ("without_user", 2)):
            cell = run_cell(records, "vaac", capacity, cfg, max_depth=depth)
            rows.append({
                "cache_fraction": fraction,
                "mode": mode,
                "hit_ratio": cell["hit_ratio"],
                "mean_latency_ms": cell["total_latency_ms"] / max(cell["requests"], 1),
            })
    return {"fractions": list(fractions), "rows": rows}


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_to_csv(report: dict) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for cell in report["cells"]:
        lines.append(",".join(str(v) for v in (
            cell["policy"], cell["cache_fraction"], cell["hit_ratio"],
            cell["total_latency_ms"], cell["total_cost"], cell["total_bytes"])))
    return "\n".join(lines) + "\n"


def report_to_plotdata(report: dict) -> dict:
    """Per-fraction series per policy, ready for external plotting."""
    metrics = ("hit_ratio", "total_latency_ms", "total_cost", "total_bytes")
    series: dict[str, dict[str, list]] = {
        metric: {policy: [] for policy in report["spec"]["policies"]} for metric in metrics}
    for cell in report["cells"]:
        for metric in metrics:
            series[metric][cell["policy"]].append(cell[metric])
    return {"cache_fractions": list(report["spec"]["cache_fractions"]), "series": series}


def report_render(report: dict, fmt: str, out_path: str | Path) -> Path:
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "plotdata":
        text = json.dumps(report_to_plotdata(report), indent=2, sort_keys=True) + "\n"
    else:
        raise UnsupportedFormat(f"unknown report format {fmt!r}")
    out = Path(out_path)
    out.write_text(text, encoding="utf-8")
    return out
