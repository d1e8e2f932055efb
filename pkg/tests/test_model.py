"""Configuration cache correctness, weight invariances, statistic identities."""

import math

import numpy as np
import pytest

from cwsoc.model import RECOMPUTE_EVERY, Configuration


def test_from_values_caches():
    c = Configuration.from_values([1.0, -2.0, 3.0])
    assert c.n == 3
    assert c.cached_s == 2.0
    assert c.cached_t == 14.0
    assert abs(c.log_weight() - 0.5 * 4.0 / 14.0) < 1e-15


def test_zero_t_conventions():
    c = Configuration.from_values([0.0, 0.0])
    assert c.log_weight() == -math.inf
    with pytest.raises(ValueError):
        c.self_normalized_stat()
    assert c.scaled_sum_stat() == 0.0


@pytest.mark.parametrize("lam", [1e-3, 7.0, 1e3])
def test_weight_scale_invariance(lam):
    rng = np.random.default_rng(12)
    for _ in range(20):
        x = rng.normal(size=rng.integers(2, 40))
        a = Configuration.from_values(x).log_weight()
        b = Configuration.from_values(lam * x).log_weight()
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_stat_scale_invariance_and_antisymmetry():
    rng = np.random.default_rng(5)
    x = rng.normal(size=17)
    base = Configuration.from_values(x)
    assert abs(Configuration.from_values(3.5 * x).self_normalized_stat()
               - base.self_normalized_stat()) < 1e-12
    flipped = Configuration.from_values(-x)
    assert abs(flipped.self_normalized_stat() + base.self_normalized_stat()) < 1e-15
    assert abs(flipped.scaled_sum_stat() + base.scaled_sum_stat()) < 1e-15
    assert flipped.log_weight() == base.log_weight()


def test_stat_relation():
    x = np.array([0.3, -1.2, 0.7, 2.0, -0.1])
    c = Configuration.from_values(x)
    want = c.self_normalized_stat() * math.sqrt(c.cached_t / c.n)
    assert abs(c.scaled_sum_stat() - want) < 1e-14


def test_update_site_delta_and_cache():
    rng = np.random.default_rng(9)
    c = Configuration.from_values(rng.normal(size=8))
    for _ in range(300):
        i = int(rng.integers(0, 8))
        v = float(rng.normal())
        before = c.log_weight()
        s, t, delta = c.update_site(i, v)
        assert abs(delta - (c.log_weight() - before)) < 1e-9
        assert s == c.cached_s and t == c.cached_t
    c.validate()


def test_update_into_and_out_of_t_zero():
    c = Configuration.from_values([1.0, 0.0])
    _, t, delta = c.update_site(0, 0.0)
    assert t == 0.0 and delta == -math.inf
    # both sides at T = 0: delta is 0, not nan
    _, _, delta = c.update_site(1, 0.0)
    assert delta == 0.0
    _, t, delta = c.update_site(0, 2.0)
    assert t == 4.0 and delta == math.inf


def test_periodic_recompute_resets_counter():
    c = Configuration.from_values(np.ones(4))
    for k in range(RECOMPUTE_EVERY + 5):
        c.update_site(k % 4, 1.0)
    assert 0 < c.update_count <= RECOMPUTE_EVERY
    c.validate()


def test_validate_catches_drift():
    c = Configuration.from_values([1.0, 2.0])
    c.cached_s = 99.0
    with pytest.raises(AssertionError):
        c.validate()


def test_round_trip_serialization():
    c = Configuration.from_values([0.5, -1.5, 2.5])
    c.update_site(1, 0.25)
    again = Configuration.from_list(c.to_list())
    assert np.array_equal(again.values, c.values)
    assert again.cached_s == c.cached_s
    assert again.cached_t == c.cached_t
    assert again.update_count == c.update_count
    with pytest.raises(ValueError):
        Configuration.from_list([2.0, 0.0, 1.0, 0.0, 1.0])


def test_rejects_empty():
    with pytest.raises(ValueError):
        Configuration.from_values([])
