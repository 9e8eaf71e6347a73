"""Order-invariant, collision-resistant cache keys for tool calls.

The canonical form is ``tool:{k1=v1,k2=v2,...}``: map keys are sorted at
every nesting depth, list order is preserved, and scalars use a fixed
locale-free rendering (no trailing zeros on numbers, ``true``/``false``
booleans, NFC-normalized strings with structural characters escaped).
The digest is a pure function of the canonical string.
"""

from __future__ import annotations

import hashlib
import math
import unicodedata
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any


class UnsupportedValue(TypeError):
    """Parameter value outside the canonical domain (scalar, map, or list)."""


_ESCAPES = {ord(c): "\\" + c for c in "\\{}[],="}


def render_value(value: Any) -> str:
    """Canonical string form of a parameter value (maps sorted recursively)."""
    if isinstance(value, Mapping):
        items = []
        for key in value:
            if not isinstance(key, str):
                raise UnsupportedValue(f"map keys must be strings, got {type(key).__name__}")
            items.append((unicodedata.normalize("NFC", key).translate(_ESCAPES), value[key]))
        items.sort(key=lambda kv: kv[0])
        return "{" + ",".join(f"{k}={render_value(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(render_value(v) for v in value) + "]"
    return _render_scalar(value)


def _render_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise UnsupportedValue(f"non-finite number {value!r}")
        # Integral floats key identically to the matching int (1.0 == 1).
        if value == int(value) and abs(value) < 1e16:
            return str(int(value))
        return repr(value)
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value).translate(_ESCAPES)
    raise UnsupportedValue(f"cannot canonicalize {type(value).__name__}")


def canonicalize(tool_name: str, params: Mapping[str, Any] | Iterable[tuple[str, Any]]) -> str:
    """Build the canonical ``tool:{...}`` string for a tool call."""
    if not tool_name:
        raise ValueError("tool_name must be non-empty")
    if not isinstance(params, Mapping):
        pairs = list(params)
        names = [name for name, _ in pairs]
        if len(names) != len(set(names)):
            raise UnsupportedValue("duplicate parameter names")
        params = dict(pairs)
    tool = unicodedata.normalize("NFC", tool_name)
    return f"{tool}:{render_value(params)}"


@dataclass(frozen=True)
class CacheKey:
    """A 256-bit digest plus the canonical string it was derived from."""

    digest: bytes
    debug_form: str = field(compare=False)

    def hex(self) -> str:
        return self.digest.hex()


def make_key(tool_name: str, params: Mapping[str, Any] | Iterable[tuple[str, Any]]) -> CacheKey:
    """Key a tool call; permutations of map keys at any depth key identically."""
    canonical = canonicalize(tool_name, params)
    return CacheKey(hashlib.sha256(canonical.encode("utf-8")).digest(), canonical)
