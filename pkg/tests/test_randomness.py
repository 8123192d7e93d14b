"""Keyed-hash tape: determinism, range correctness, uniformity."""

from __future__ import annotations

import math

import pytest

from localmech.randomness import RandomTape, derive_uniform, sample_without_replacement


def test_same_seed_same_stream():
    a = RandomTape(42)
    b = RandomTape(42)
    for i in range(200):
        assert a.u64("x", i) == b.u64("x", i)
        assert a.unit("y", i) == b.unit("y", i)


def test_different_seeds_disagree():
    a = RandomTape(1)
    b = RandomTape(2)
    hits = sum(a.u64("k", i) == b.u64("k", i) for i in range(200))
    assert hits == 0


def test_key_order_matters():
    t = RandomTape(0)
    assert t.u64("a", 1) != t.u64(1, "a")
    assert t.u64("ab") != t.u64("a", "b")


def test_unit_in_range():
    t = RandomTape(3)
    for i in range(1000):
        u = t.unit("u", i)
        assert 0.0 <= u < 1.0


def test_derive_uniform_range_and_determinism():
    t = RandomTape(11)
    vals = [derive_uniform(t, ("v", i), 7) for i in range(500)]
    assert all(0 <= v < 7 for v in vals)
    assert vals == [derive_uniform(t, ("v", i), 7) for i in range(500)]


def test_derive_uniform_rejects_bad_range():
    t = RandomTape(0)
    with pytest.raises(ValueError):
        derive_uniform(t, ("x",), 0)
    with pytest.raises(ValueError):
        derive_uniform(t, ("x",), -3)


def test_chi_square_buckets():
    # 10^4 draws into 10 buckets: every bucket within 5 sigma of its mean.
    t = RandomTape(7)
    counts = [0] * 10
    for i in range(10_000):
        counts[derive_uniform(t, ("x", i), 10)] += 1
    sigma = math.sqrt(10_000 * 0.1 * 0.9)
    for c in counts:
        assert abs(c - 1000) <= 5 * sigma, counts


def test_sample_without_replacement_properties():
    t = RandomTape(5)
    for i in range(50):
        got = sample_without_replacement(t, ("s", i), 20, 8)
        assert len(got) == 8
        assert len(set(got)) == 8
        assert all(0 <= x < 20 for x in got)
    # full draw is a permutation
    perm = sample_without_replacement(t, ("p",), 12, 12)
    assert sorted(perm) == list(range(12))


def test_sample_without_replacement_errors():
    t = RandomTape(0)
    with pytest.raises(ValueError):
        sample_without_replacement(t, ("q",), 5, 6)
    with pytest.raises(ValueError):
        sample_without_replacement(t, ("q",), 0, 1)
