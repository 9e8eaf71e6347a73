"""JSON Lines trace files: one request per line, optional header line.

Record schema: ``{"seq", "user", "tool", "params": {..}, "latency_ms",
"cost", "size_bytes"}`` plus, in annotated traces, ``"request_type"``,
``"ttl_s"``, ``"param_category"`` and optionally ``"inter_arrival_s"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import (MalformedRequest, RequestType, SemanticFeatures,
                    ToolCallRequest, validate_request)


class TraceParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"trace line {line_no}: {reason}")


@dataclass
class TraceRecord:
    request: ToolCallRequest
    features: SemanticFeatures | None = None
    inter_arrival_s: float = 1.0


def record_to_dict(record: TraceRecord) -> dict:
    request = record.request
    obj = {
        "seq": request.seq,
        "user": request.user_id,
        "tool": request.tool_name,
        "params": {name: value for name, value in request.params},
        "latency_ms": request.true_latency_ms,
        "cost": request.true_cost_units,
        "size_bytes": request.true_size_bytes,
    }
    if record.features is not None:
        obj["request_type"] = record.features.request_type.value
        obj["ttl_s"] = record.features.ttl_seconds
        if record.features.parameter_category is not None:
            obj["param_category"] = record.features.parameter_category
    if record.inter_arrival_s != 1.0:
        obj["inter_arrival_s"] = record.inter_arrival_s
    return obj


def record_from_dict(obj: dict, line_no: int = 0) -> TraceRecord:
    try:
        params_obj = obj.get("params", {})
        if not isinstance(params_obj, dict):
            raise TraceParseError(line_no, "params must be a JSON object")
        request = ToolCallRequest(
            seq=obj["seq"],
            user_id=obj["user"],
            tool_name=obj["tool"],
            params=list(params_obj.items()),
            true_latency_ms=float(obj["latency_ms"]),
            true_cost_units=float(obj["cost"]),
            true_size_bytes=int(obj["size_bytes"]),
        )
    except KeyError as exc:
        raise TraceParseError(line_no, f"missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise TraceParseError(line_no, str(exc)) from exc
    try:
        validate_request(request)
    except MalformedRequest as exc:
        raise TraceParseError(line_no, str(exc)) from exc
    features = None
    if "request_type" in obj and "ttl_s" in obj:
        try:
            features = SemanticFeatures(RequestType(obj["request_type"]),
                                        float(obj["ttl_s"]),
                                        obj.get("param_category"))
        except (TypeError, ValueError) as exc:
            raise TraceParseError(line_no, str(exc)) from exc
    try:
        inter_arrival = float(obj.get("inter_arrival_s", 1.0))
    except (TypeError, ValueError) as exc:
        raise TraceParseError(line_no, "inter_arrival_s must be a number") from exc
    return TraceRecord(request, features, inter_arrival)


def write_trace(path: str | Path, records: list[TraceRecord], header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record_to_dict(record)) + "\n")


def read_trace(path: str | Path) -> tuple[dict | None, list[TraceRecord]]:
    """Parse a trace file; enforces strictly increasing seq numbers."""
    header: dict | None = None
    records: list[TraceRecord] = []
    prev_seq: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if line_no == 1 and isinstance(obj, dict) and "header" in obj:
                header = obj["header"]
                continue
            record = record_from_dict(obj, line_no)
            if prev_seq is not None and record.request.seq <= prev_seq:
                raise TraceParseError(line_no, "seq must be strictly increasing")
            prev_seq = record.request.seq
            records.append(record)
    return header, records
