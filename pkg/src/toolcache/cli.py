"""Command line interface: generate workloads, annotate traces, run sweeps.

Exit codes: 0 success, 2 configuration error, 3 trace error, 4 remote
annotator failure without a fallback.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .annotator import (EndpointUnavailable, MalformedLLMResponse, RemoteAnnotator,
                        RemoteConfig, StaticAnnotator, ToolManifest, UnknownTool)
from .engine import MissingAnnotation
from .model import PolicyConfig
from .simulate import (DEFAULT_FRACTIONS, ConfigError, SweepSpec, UnsupportedFormat,
                       compare_grouping, policy_config_from_dict, report_render,
                       report_to_csv, run_cell, run_sweep, unique_cacheable_keys)
from .traceio import TraceParseError, read_trace, write_trace
from .workload import (DISTRIBUTIONS, WorkloadConfig, default_catalog, generate,
                       load_catalog, manifest_from_catalog)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_REMOTE = 4


def _load_policy_config(args) -> PolicyConfig:
    if not getattr(args, "config", None):
        return PolicyConfig()
    try:
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {args.config}: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError("config file must hold a JSON object")
    return policy_config_from_dict(overrides)


def _fractions(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in raw.split(",") if x)
    except ValueError as exc:
        raise ConfigError(f"bad fractions list {raw!r}") from exc


def cmd_generate(args) -> int:
    try:
        catalog = load_catalog(args.catalog) if args.catalog else default_catalog()
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot load catalog: {exc}") from exc
    cfg = WorkloadConfig(
        distribution=args.distribution,
        n_requests=args.n_requests,
        zipf_alpha=args.alpha,
        n_phases=args.phases,
        phase_length=args.phase_length,
        n_users=args.users,
        user_overlap=args.overlap,
        seed=args.seed,
    )
    header, records = generate(catalog, cfg)
    write_trace(args.out, records, header)
    print(f"wrote {len(records)} requests to {args.out}")
    return EXIT_OK


def cmd_annotate(args) -> int:
    header, records = read_trace(args.trace)
    manifest = None
    if args.manifest:
        manifest = ToolManifest.from_file(args.manifest)
    elif not args.remote_config:
        manifest = manifest_from_catalog(default_catalog())
    if args.remote_config:
        annotator = RemoteAnnotator(RemoteConfig.from_file(args.remote_config), manifest)
    else:
        annotator = StaticAnnotator(manifest)
    annotated = []
    for record in records:
        features = record.features
        if features is None or args.force:
            features = annotator.annotate(record.request)
        annotated.append(replace(record, features=features))
    write_trace(args.out, annotated, header)
    print(f"annotated {len(annotated)} requests into {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    _, records = read_trace(args.trace)
    cfg = _load_policy_config(args)
    if args.capacity:
        capacity = args.capacity
    elif args.fraction:
        capacity = max(1, math.ceil(args.fraction * unique_cacheable_keys(records)))
    else:
        raise ConfigError("run needs --capacity or --fraction")
    cell = run_cell(records, args.policy, capacity, cfg, max_depth=args.max_depth)
    text = json.dumps(cell, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_policy_config(args)
    spec = SweepSpec(
        trace_path=args.trace,
        policies=tuple(p for p in args.policies.split(",") if p),
        cache_fractions=_fractions(args.fractions),
        config=cfg,
        seed=args.seed,
        max_depth=args.max_depth,
        include_timings=args.timings,
        parallelism=args.parallelism,
    )
    report = run_sweep(spec)
    out = args.out or "report.json"
    report_render(report, "json", out)
    print(f"wrote report to {out}")
    if args.csv:
        Path(args.csv).write_text(report_to_csv(report), encoding="utf-8")
        print(f"wrote table to {args.csv}")
    for cell in report["cells"]:
        print(f"  {cell['policy']:>4} @ {cell['cache_fraction']:.2f}: "
              f"hit_ratio={cell['hit_ratio']:.4f} latency={cell['total_latency_ms']:.0f}ms "
              f"cost={cell['total_cost']:.4f}")
    return EXIT_OK


def cmd_compare_grouping(args) -> int:
    _, records = read_trace(args.trace)
    cfg = _load_policy_config(args)
    result = compare_grouping(records, _fractions(args.fractions), cfg)
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    for row in result["rows"]:
        print(f"  {row['mode']:>12} @ {row['cache_fraction']:.2f}: "
              f"hit_ratio={row['hit_ratio']:.4f} mean_latency={row['mean_latency_ms']:.2f}ms")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse report {args.report}: {exc}") from exc
    out = report_render(report, args.format, args.out or f"report.{args.format}")
    print(f"wrote {args.format} to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toolcache",
                                     description="Value-aware tool-call cache simulator")
    parser.add_argument("--seed", type=int, default=0, help="generator seed")
    parser.add_argument("--config", help="JSON file of policy config overrides")
    parser.add_argument("--out", help="output path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic annotated trace")
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="zipf")
    p.add_argument("--n-requests", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=1.1)
    p.add_argument("--phases", type=int, default=4)
    p.add_argument("--phase-length", type=int, default=None)
    p.add_argument("--users", type=int, default=4)
    p.add_argument("--overlap", type=float, default=0.3)
    p.add_argument("--catalog", help="JSON catalog file (defaults to the built-in six tools)")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("annotate", help="fill annotation fields of a raw trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--manifest", help="JSON tool manifest")
    p.add_argument("--remote-config", help="JSON remote annotator config")
    p.add_argument("--force", action="store_true", help="re-annotate even when fields exist")
    p.set_defaults(handler=cmd_annotate)

    p = sub.add_parser("run", help="run one (policy, capacity) cell")
    p.add_argument("--trace", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--capacity", type=int)
    p.add_argument("--fraction", type=float)
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("sweep", help="run the full policy x cache-size grid")
    p.add_argument("--trace", required=True)
    p.add_argument("--policies", default="vaac,caca,lru")
    p.add_argument("--fractions", default=",".join(str(f) for f in DEFAULT_FRACTIONS))
    p.add_argument("--csv", help="also write the CSV table here")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock runtimes (breaks byte determinism)")
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("compare-grouping", help="adaptive policy with vs without user grouping")
    p.add_argument("--trace", required=True)
    p.add_argument("--fractions", default="0.1,0.2,0.3")
    p.set_defaults(handler=cmd_compare_grouping)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("--report", required=True)
    p.add_argument("--format", choices=("json", "csv", "plotdata"), default="csv")
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (TraceParseError, MissingAnnotation) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except (EndpointUnavailable, MalformedLLMResponse) as exc:
        print(f"remote annotator error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (ConfigError, UnsupportedFormat, UnknownTool, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
