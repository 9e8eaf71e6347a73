"""Normalization ranges and the caching value formula."""

import math
import random

import pytest

from toolcache.model import PolicyConfig
from toolcache.value import EmptyRange, FeatureRanges, NonFiniteFeature, caching_value


def test_first_observation_pins_both_bounds():
    ranges = FeatureRanges()
    ranges.observe(200.0, 1.6, 1024)
    for feature, x in (("latency", 200.0), ("cost", 1.6), ("size", 1024)):
        fr = getattr(ranges, feature)
        assert fr.running_min == fr.running_max == x
        assert fr.observation_count == 1


def test_bounds_extend_monotonically():
    ranges = FeatureRanges()
    ranges.observe(100.0, 1.0, 10)
    ranges.observe(500.0, 1.0, 10)
    assert ranges.latency.running_min == 100.0
    assert ranges.latency.running_max == 500.0
    ranges.observe(700.0, 1.0, 10)
    assert ranges.latency.running_max == 700.0
    ranges.observe(300.0, 1.0, 10)  # interior point changes nothing
    assert (ranges.latency.running_min, ranges.latency.running_max) == (100.0, 700.0)


def test_observe_rejects_bad_inputs():
    ranges = FeatureRanges()
    with pytest.raises(NonFiniteFeature):
        ranges.observe(float("nan"), 1.0, 10)
    with pytest.raises(NonFiniteFeature):
        ranges.observe(100.0, -1.0, 10)


def test_normalize_requires_observations():
    with pytest.raises(EmptyRange):
        FeatureRanges().normalize("latency", 5.0)


def test_normalize_examples():
    ranges = FeatureRanges()
    ranges.observe(100.0, 0.0, 42)
    ranges.observe(500.0, 1.0, 42)
    # minimum clamps up to the floor
    assert ranges.normalize("latency", 100.0, 0.01) == 0.01
    # direct evaluation of the min-max formula
    assert ranges.normalize("latency", 300.0, 0.01) == pytest.approx(0.5)
    # degenerate range maps to 1
    assert ranges.normalize("size", 42, 0.01) == 1.0
    # values outside the seen range clamp into [floor, 1]
    assert ranges.normalize("latency", 1e9, 0.01) == 1.0


def test_caching_value_direct_evaluation():
    cfg = PolicyConfig()
    got = caching_value(cfg, 1.0, 0.5, 0.5, 3600.0)
    expected = 0.8 * 1.0 + 0.2 * (0.5 / 0.5) - 0.2 * math.exp(-3600.0 / 300.0)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.99999, abs=1e-5)


def test_caching_value_can_go_negative():
    cfg = PolicyConfig()
    got = caching_value(cfg, 0.01, 0.01, 1.0, 300.0)
    expected = 0.8 * 0.01 + 0.2 * 0.01 - 0.2 * math.exp(-1.0)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(-0.0636, abs=5e-5)
    assert got < 0


def test_zero_staleness_weight_decouples_ttl():
    cfg = PolicyConfig(staleness_weight=0.0)
    values = {caching_value(cfg, 0.5, 0.5, 0.5, ttl) for ttl in (0.0, 60.0, 3600.0)}
    assert len(values) == 1


def test_ttl_boundary_behavior():
    cfg = PolicyConfig()
    at_zero = caching_value(cfg, 0.5, 0.5, 0.5, 0.0)
    far_out = caching_value(cfg, 0.5, 0.5, 0.5, 1e9)
    base = 0.8 * 0.5 + 0.2 * 1.0
    assert at_zero == pytest.approx(base - 0.2)  # penalty is exactly the weight at ttl=0
    assert far_out == pytest.approx(base)        # and fades to nothing as ttl grows


def test_monotonicity_and_bounds_on_random_inputs():
    cfg = PolicyConfig()
    rng = random.Random(7)
    lo = 0.8 * 0.01 + 0.2 * 0.01 - 0.2
    hi = 0.8 + 0.2 / 0.01
    for _ in range(300):
        nl, nc, ns = (rng.uniform(0.01, 1.0) for _ in range(3))
        ttl = rng.uniform(0, 7200)
        v = caching_value(cfg, nl, nc, ns, ttl)
        assert lo <= v <= hi
        eps = 0.01
        assert caching_value(cfg, min(nl + eps, 1.0), nc, ns, ttl) >= v - 1e-12
        assert caching_value(cfg, nl, min(nc + eps, 1.0), ns, ttl) >= v - 1e-12
        assert caching_value(cfg, nl, nc, min(ns + eps, 1.0), ttl) <= v + 1e-12
        assert caching_value(cfg, nl, nc, ns, ttl + 60) >= v - 1e-12


def test_tau_override_takes_effect():
    cfg = PolicyConfig()
    shorter = caching_value(cfg, 0.5, 0.5, 0.5, 300.0, tau_s=60.0)
    longer = caching_value(cfg, 0.5, 0.5, 0.5, 300.0, tau_s=3000.0)
    assert shorter > longer  # small tau discounts the staleness risk faster
