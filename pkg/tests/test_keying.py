"""Canonical form and digest properties of cache keys."""

import random
import string

import pytest

from toolcache.keying import CacheKey, UnsupportedValue, canonicalize, make_key


def test_canonical_form_sorts_map_keys():
    got = canonicalize("weather", {"location": "NewYork", "date": "2024-05-01"})
    assert got == "weather:{date=2024-05-01,location=NewYork}"


def test_canonical_form_is_order_invariant():
    a = canonicalize("weather", {"location": "NewYork", "date": "2024-05-01"})
    b = canonicalize("weather", {"date": "2024-05-01", "location": "NewYork"})
    assert a == b


def test_nested_maps_sorted_at_every_depth():
    # recursive sort oracle applied by hand
    assert canonicalize("f", {"a": {"y": 2, "x": 1}}) == "f:{a={x=1,y=2}}"


def test_lists_preserve_order():
    assert canonicalize("f", {"a": [2, 1]}) == "f:{a=[2,1]}"
    assert canonicalize("f", {"a": [2, 1]}) != canonicalize("f", {"a": [1, 2]})


def test_scalar_rendering():
    assert canonicalize("t", {"a": True, "b": False}) == "t:{a=true,b=false}"
    assert canonicalize("t", {"x": 1.5}) == "t:{x=1.5}"
    # integral floats collapse onto the int rendering
    assert canonicalize("t", {"x": 1.0}) == canonicalize("t", {"x": 1})


def test_structural_characters_escaped():
    got = canonicalize("t", {"a": "x={1,2}"})
    assert got == "t:{a=x\\=\\{1\\,2\\}}"


def test_empty_tool_name_rejected():
    with pytest.raises(ValueError):
        canonicalize("", {"a": 1})


def test_unsupported_values_rejected():
    with pytest.raises(UnsupportedValue):
        canonicalize("t", {"a": object()})
    with pytest.raises(UnsupportedValue):
        canonicalize("t", {"a": float("nan")})
    with pytest.raises(UnsupportedValue):
        canonicalize("t", [("a", 1), ("a", 2)])


def test_make_key_permutation_invariant():
    k1 = make_key("search", {"q": "cats", "page": 2, "opts": {"lang": "en", "safe": True}})
    k2 = make_key("search", {"opts": {"safe": True, "lang": "en"}, "page": 2, "q": "cats"})
    assert k1 == k2
    assert k1.digest == k2.digest


def test_tool_name_separates_keys():
    assert make_key("a", {"x": 1}) != make_key("b", {"x": 1})


def test_digest_width_at_least_128_bits():
    assert len(make_key("t", {"a": 1}).digest) >= 16


def test_key_usable_as_dict_key():
    store = {make_key("t", {"a": 1}): "v"}
    assert store[make_key("t", {"a": 1})] == "v"


def _random_value(rng, depth=0):
    kind = rng.randrange(6 if depth < 2 else 4)
    if kind == 0:
        return rng.randrange(-1000, 1000)
    if kind == 1:
        return round(rng.uniform(-100, 100), 3)
    if kind == 2:
        return rng.random() < 0.5
    if kind == 3:
        return "".join(rng.choice(string.ascii_letters + "{}=,[]\\") for _ in range(rng.randrange(1, 9)))
    if kind == 4:
        return [_random_value(rng, depth + 1) for _ in range(rng.randrange(0, 4))]
    return {f"k{i}": _random_value(rng, depth + 1) for i in range(rng.randrange(1, 4))}


def _random_params(rng):
    return {f"p{i}": _random_value(rng) for i in range(rng.randrange(1, 5))}


def _shuffled(rng, value):
    """Deep copy with map insertion order randomly permuted at every depth."""
    if isinstance(value, dict):
        keys = list(value)
        rng.shuffle(keys)
        return {k: _shuffled(rng, value[k]) for k in keys}
    if isinstance(value, list):
        return [_shuffled(rng, v) for v in value]
    return value


def test_fuzz_permutation_invariance_and_no_collisions():
    rng = random.Random(1234)
    seen = {}
    for i in range(10_000):
        params = _random_params(rng)
        key = make_key("fuzz", params)
        permuted = make_key("fuzz", _shuffled(rng, params))
        assert key.digest == permuted.digest
        if key.debug_form in seen:
            assert seen[key.debug_form] == key.digest
        else:
            seen[key.debug_form] = key.digest
    digests = set(seen.values())
    assert len(digests) == len(seen)  # distinct canonical strings never collide


def test_large_scale_digest_uniqueness():
    # 10^5 distinct canonical strings -> 10^5 distinct digests
    digests = {make_key("t", {"i": i, "s": str(i * 7)}).digest for i in range(100_000)}
    assert len(digests) == 100_000


def test_determinism_across_calls():
    # no randomized hashing seed in the digest path
    expected = make_key("weather", {"location": "NewYork", "date": "2024-05-01"})
    assert expected.digest.hex() == (
        make_key("weather", {"date": "2024-05-01", "location": "NewYork"}).digest.hex())
    assert expected.debug_form == "weather:{date=2024-05-01,location=NewYork}"
