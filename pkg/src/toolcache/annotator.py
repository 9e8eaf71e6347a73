"""Semantic annotation of tool calls and the rule-based cacheability gate.

Annotations come from a static per-tool manifest or from an OpenAI-compatible
chat endpoint. Cacheability itself is never delegated to the model: it is a
deterministic rule over the extracted features.
"""

from __future__ import annotations

import json
import math
import os
import time
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import requests

from .keying import render_value
from .model import RequestType, SemanticFeatures, ToolCallRequest, TTL_CLASSES


class UnknownTool(KeyError):
    """Tool has no manifest entry."""


class EndpointUnavailable(RuntimeError):
    """Remote annotator could not be reached or answered with an error."""


class MalformedLLMResponse(ValueError):
    """Remote annotator answered, but not with the required schema."""


CATEGORY_FIRST_PARAM = "first_param"
CATEGORY_NONE = "none"


@dataclass(frozen=True)
class ToolRule:
    request_type: RequestType
    ttl_seconds: float
    category_rule: str = CATEGORY_FIRST_PARAM  # "first_param" | "none" | "named:<param>"


@dataclass
class ToolManifest:
    """Static per-tool annotation rules, loadable from a JSON map."""

    rules: dict[str, ToolRule]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ToolManifest":
        rules: dict[str, ToolRule] = {}
        for tool, entry in raw.items():
            rtype = RequestType(entry["request_type"])
            if "ttl_seconds" in entry:
                ttl = float(entry["ttl_seconds"])
            elif "ttl_class" in entry:
                ttl = TTL_CLASSES[entry["ttl_class"]]
            else:
                raise ValueError(f"tool {tool!r}: needs ttl_class or ttl_seconds")
            if rtype is RequestType.COMMAND:
                ttl = 0.0
            rule = entry.get("category_rule", CATEGORY_FIRST_PARAM)
            if isinstance(rule, Mapping):
                rule = f"named:{rule['named_param']}"
            rules[tool] = ToolRule(rtype, ttl, rule)
        return cls(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "ToolManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def rule_for(self, tool_name: str) -> ToolRule:
        try:
            return self.rules[tool_name]
        except KeyError:
            raise UnknownTool(tool_name) from None


def _category(params: list[tuple[str, Any]], rule: str) -> str | None:
    # Single-parameter calls get no parameter-based grouping.
    if rule == CATEGORY_NONE or len(params) < 2:
        return None
    if rule.startswith("named:"):
        wanted = rule.split(":", 1)[1]
        for name, value in params:
            if name == wanted:
                return render_value(value)
        return None
    return render_value(params[0][1])


def annotate_static(request: ToolCallRequest, manifest: ToolManifest) -> SemanticFeatures:
    """Annotate from the manifest; the first parameter is the default category."""
    rule = manifest.rule_for(request.tool_name)
    return SemanticFeatures(rule.request_type, rule.ttl_seconds,
                            _category(request.params, rule.category_rule))


def is_cacheable(features: SemanticFeatures) -> bool:
    """COMMAND calls and short-lived results (ttl <= 60 s) never enter the cache."""
    if features.request_type is RequestType.COMMAND:
        return False
    return features.ttl_seconds > 60.0


@dataclass
class StaticAnnotator:
    """Annotator facade over a manifest, for injection into the engine."""

    manifest: ToolManifest

    def annotate(self, request: ToolCallRequest) -> SemanticFeatures:
        return annotate_static(request, self.manifest)


DEFAULT_PROMPT = """You classify tool-calling requests for a result cache.

Tool name: {tool_name}
Parameters: {parameters}

Decide whether the call retrieves information or performs an action, pick
the primary grouping value (normally the first parameter), and suggest how
long the result stays valid (0 seconds for actions, 60 for real-time data,
300 for computed results, 3600 for static knowledge).

Reply with a single JSON object and nothing else:
{{"request_type": "INFORMATIONAL" or "COMMAND", "parameter_category": string or null, "ttl_seconds": number}}
"""


@dataclass
class RemoteConfig:
    """Connection settings for an OpenAI-compatible chat-completions endpoint."""

    base_url: str
    model: str
    api_key_env: str = "TOOLCACHE_API_KEY"
    prompt_path: str | None = None
    timeout_s: float = 30.0
    max_retries: int = 2

    @classmethod
    def from_file(cls, path: str | Path) -> "RemoteConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def parse_llm_response(body: Mapping[str, Any]) -> SemanticFeatures:
    """Extract SemanticFeatures from a chat-completions response body."""
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedLLMResponse("missing chat completion content") from exc
    text = str(content).strip()
    start, end = text.find("{"), text.rfind("}")  # tolerate code fences around the JSON
    if start < 0 or end <= start:
        raise MalformedLLMResponse("no JSON object in response")
    try:
        parsed = json.loads(text[start:end + 1])
    except json.JSONDecodeError as exc:
        raise MalformedLLMResponse(f"unparseable JSON: {exc.msg}") from exc
    if not isinstance(parsed, dict) or "request_type" not in parsed or "ttl_seconds" not in parsed:
        raise MalformedLLMResponse("response lacks request_type or ttl_seconds")
    try:
        rtype = RequestType(parsed["request_type"])
        ttl = float(parsed["ttl_seconds"])
    except (ValueError, TypeError) as exc:
        raise MalformedLLMResponse(str(exc)) from exc
    if not math.isfinite(ttl) or ttl < 0:
        raise MalformedLLMResponse("ttl_seconds must be finite and >= 0")
    if rtype is RequestType.COMMAND:
        ttl = 0.0  # COMMAND results never persist, whatever the model said
    category = parsed.get("parameter_category")
    if category is not None:
        category = str(category)
    return SemanticFeatures(rtype, ttl, category)


class RemoteAnnotator:
    """Annotates via a remote LLM, memoizing per (tool, parameter shape).

    Memo hits re-derive the category locally with the first-parameter
    heuristic so repeated calls with new values stay consistent. When a
    manifest is supplied, remote failures fall back to static annotation.
    """

    def __init__(self, config: RemoteConfig, manifest: ToolManifest | None = None,
                 transport: Callable[[dict], dict] | None = None):
        self._config = config
        self._manifest = manifest
        self._post = transport or self._http_post
        self._memo: dict[tuple, tuple[RequestType, float]] = {}
        if config.prompt_path:
            self._prompt = Path(config.prompt_path).read_text(encoding="utf-8")
        else:
            self._prompt = DEFAULT_PROMPT

    def annotate(self, request: ToolCallRequest) -> SemanticFeatures:
        shape = (request.tool_name,
                 tuple((name, type(value).__name__) for name, value in request.params))
        memo = self._memo.get(shape)
        if memo is not None:
            rtype, ttl = memo
            return SemanticFeatures(rtype, ttl, _category(request.params, CATEGORY_FIRST_PARAM))
        try:
            features = self._annotate_remote(request)
        except (EndpointUnavailable, MalformedLLMResponse):
            if self._manifest is None:
                raise
            return annotate_static(request, self._manifest)
        self._memo[shape] = (features.request_type, features.ttl_seconds)
        return features

    def _annotate_remote(self, request: ToolCallRequest) -> SemanticFeatures:
        prompt = self._prompt.format(tool_name=request.tool_name,
                                     parameters=json.dumps(dict(request.params)))
        payload = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        delay = 1.0
        for attempt in range(self._config.max_retries + 1):
            try:
                return parse_llm_response(self._post(payload))
            except EndpointUnavailable:
                if attempt == self._config.max_retries:
                    raise
                time.sleep(delay)
                delay *= 2
        raise EndpointUnavailable("retries exhausted")  # unreachable

    def _http_post(self, payload: dict) -> dict:
        url = self._config.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self._config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = requests.post(url, json=payload, headers=headers,
                                     timeout=self._config.timeout_s)
        except requests.RequestException as exc:
            raise EndpointUnavailable(str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(f"HTTP {response.status_code}")
        return response.json()
