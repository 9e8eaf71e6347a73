"""Domain type invariants and request validation."""

import math

import pytest

from toolcache.model import (GroupNode, MalformedRequest, PolicyConfig, RequestType,
                             SemanticFeatures, ToolCallRequest, TTL_CLASSES,
                             validate_request)


def _request(**overrides):
    base = dict(seq=1, user_id="u1", tool_name="weather",
                params=[("location", "NewYork"), ("date", "2024-05-01")],
                true_latency_ms=200.0, true_cost_units=0.0016, true_size_bytes=512)
    base.update(overrides)
    return ToolCallRequest(**base)


def test_wellformed_request_passes():
    validate_request(_request())


def test_empty_tool_name_rejected():
    with pytest.raises(MalformedRequest) as err:
        validate_request(_request(tool_name=""))
    assert err.value.field_name == "tool_name"


def test_negative_latency_rejected():
    with pytest.raises(MalformedRequest) as err:
        validate_request(_request(true_latency_ms=-1.0))
    assert err.value.field_name == "true_latency_ms"


@pytest.mark.parametrize("field,value", [
    ("seq", -1),
    ("true_cost_units", float("nan")),
    ("true_cost_units", float("inf")),
    ("true_size_bytes", -5),
    ("true_size_bytes", 1.5),
])
def test_invariant_violations_rejected(field, value):
    with pytest.raises(MalformedRequest):
        validate_request(_request(**{field: value}))


def test_ttl_classes():
    assert TTL_CLASSES == {"command": 0.0, "realtime": 60.0,
                           "computational": 300.0, "static": 3600.0}


def test_command_forces_zero_ttl():
    with pytest.raises(ValueError):
        SemanticFeatures(RequestType.COMMAND, 60.0)
    SemanticFeatures(RequestType.COMMAND, 0.0)  # fine


def test_negative_or_nonfinite_ttl_rejected():
    with pytest.raises(ValueError):
        SemanticFeatures(RequestType.INFORMATIONAL, -1.0)
    with pytest.raises(ValueError):
        SemanticFeatures(RequestType.INFORMATIONAL, float("inf"))


def test_group_node_derived_stats():
    node = GroupNode(path=("weather",), level=1, access_count=10, hit_count=3,
                     value_sum=4.0, member_count=8)
    assert node.hit_ratio == pytest.approx(0.3)
    assert node.mean_value == pytest.approx(0.5)
    # zero-count guards
    empty = GroupNode(path=("x",), level=1)
    assert empty.hit_ratio == 0.0
    assert empty.mean_value == 0.0


def test_group_node_leaf_iteration():
    root = GroupNode()
    a = GroupNode(path=("a",), level=1)
    b = GroupNode(path=("b",), level=1)
    b1 = GroupNode(path=("b", "1"), level=2)
    root.children = {"a": a, "b": b}
    b.children = {"1": b1}
    leaves = list(root.iter_leaves())
    assert leaves == [a, b1]


def test_policy_config_defaults_match_documented_values():
    cfg = PolicyConfig()
    assert cfg.latency_weight == 0.8
    assert cfg.cost_weight == 0.2
    assert cfg.staleness_weight == 0.2
    assert cfg.tau_s == 300.0
    assert cfg.split_min_accesses == 20
    assert cfg.split_max_hit_ratio == 0.5
    assert cfg.min_group_size == 5
    assert cfg.regroup_interval == 200
    assert cfg.explore_coeff == pytest.approx(math.sqrt(2))
    assert cfg.admit_fraction == 0.5
    assert cfg.hit_offset == cfg.level_offset == cfg.value_offset == cfg.evict_offset == 1.0
    assert cfg.admit_count_offset == pytest.approx(math.e)
    assert cfg.norm_floor == 0.01


@pytest.mark.parametrize("field,value", [
    ("capacity", 0),
    ("latency_weight", -0.1),
    ("norm_floor", 0.0),
    ("norm_floor", 0.2),
    ("admit_count_offset", 1.0),  # denominator would dip below 1
    ("admit_fraction", 0.0),
    ("admit_fraction", 1.5),
    ("tau_s", 0.0),
])
def test_policy_config_validation(field, value):
    with pytest.raises(ValueError):
        PolicyConfig(**{field: value})
