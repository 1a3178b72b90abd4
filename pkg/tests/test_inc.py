import itertools
from math import prod

import pytest
from hypothesis import given, settings, strategies as st

from freeboolean.inc import (
    compose,
    decompose,
    down_set_filter,
    enumerate_inc,
    enumerate_inc_bruteforce,
    inc_context,
    inc_join,
    inc_meet,
    interval_down,
    is_inc,
)
from freeboolean.partitions import Partition, leq, noncrossing_partitions

from oracles import catalan, inc_brute, inc_predicate, join_brute, meet_brute, refines, segment_sizes

chi_strategy = st.integers(1, 7).flatmap(lambda n: st.text("FB", min_size=n, max_size=n))


def all_chis(max_n):
    for n in range(1, max_n + 1):
        for t in itertools.product("FB", repeat=n):
            yield "".join(t)


def test_worked_example_count():
    assert len(enumerate_inc("FBFFFBB")) == 168
    assert inc_context("FBFFFBB").segments == ((1, 2), (2, 6), (6, 7))


def test_small_cases():
    assert len(enumerate_inc("FF")) == 2
    assert len(enumerate_inc("FBF")) == 4
    assert Partition.from_string("1,3/2") not in enumerate_inc("FBF")
    assert Partition.from_string("1,3/2") in enumerate_inc("FFF")


def test_all_b_interior_gives_interval_partitions():
    # 2^(n-1) interval partitions
    for n in range(1, 8):
        assert len(enumerate_inc("F" + "B" * max(n - 2, 0) + "F"[: n - 1])) == 2 ** (n - 1)


@pytest.mark.parametrize("chi", list(all_chis(5)))
def test_enumeration_matches_oracle(chi):
    assert [p.blocks for p in enumerate_inc(chi)] == inc_brute(chi)


def test_library_bruteforce_agrees():
    for chi in all_chis(6):
        assert enumerate_inc(chi) == enumerate_inc_bruteforce(chi)


def test_is_inc_validates_length():
    with pytest.raises(ValueError):
        is_inc(Partition.one(3), "FF")


def test_size_cap():
    with pytest.raises(ValueError):
        enumerate_inc("F" * 13)
    with pytest.raises(ValueError):
        enumerate_inc("F" * 5, cap=4)


@settings(max_examples=80, deadline=None)
@given(chi_strategy)
def test_count_is_product_of_segment_catalans(chi):
    assert len(enumerate_inc(chi)) == prod(catalan(s) for s in segment_sizes(chi))


@settings(max_examples=80, deadline=None)
@given(chi_strategy)
def test_endpoint_labels_do_not_matter(chi):
    for first, last in itertools.product("FB", repeat=2):
        flipped = first + chi[1:-1] + last if len(chi) > 1 else first
        assert enumerate_inc(flipped) == enumerate_inc(chi)


@settings(max_examples=60, deadline=None)
@given(chi_strategy, st.data())
def test_decompose_compose_round_trip(chi, data):
    elems = enumerate_inc(chi)
    p = elems[data.draw(st.integers(0, len(elems) - 1))]
    parts = decompose(p, chi)
    ctx = inc_context(chi)
    assert len(parts) == len(ctx.segments)
    for part, (lo, hi) in zip(parts, ctx.segments):
        assert part in noncrossing_partitions(hi - lo + 1)
    assert compose(parts, chi) == p


def test_compose_is_bijection():
    chi = "FBFFBF"
    ctx = inc_context(chi)
    factors = [noncrossing_partitions(hi - lo + 1) for lo, hi in ctx.segments]
    composed = {compose(c, ctx) for c in itertools.product(*factors)}
    assert composed == set(enumerate_inc(chi))


def test_compose_rejects_bad_parts():
    with pytest.raises(ValueError):
        compose([Partition.one(2)], "FBF")
    with pytest.raises(ValueError):
        compose([Partition.one(3), Partition.one(2)], "FBF")
    with pytest.raises(ValueError):
        decompose(Partition.from_string("1,3/2"), "FBF")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.text("FB", min_size=n, max_size=n)), st.data())
def test_meet_and_join_are_lattice_operations(chi, data):
    elems = enumerate_inc(chi)
    a = elems[data.draw(st.integers(0, len(elems) - 1))]
    b = elems[data.draw(st.integers(0, len(elems) - 1))]
    assert inc_meet(a, b, chi).blocks == meet_brute(a.blocks, b.blocks, chi)
    assert inc_join(a, b, chi).blocks == join_brute(a.blocks, b.blocks, chi)


@settings(max_examples=60, deadline=None)
@given(chi_strategy, st.data())
def test_down_set_matches_filter(chi, data):
    elems = enumerate_inc(chi)
    p = elems[data.draw(st.integers(0, len(elems) - 1))]
    down = interval_down(p, chi)
    assert down == down_set_filter(p, chi)
    assert down == tuple(sorted(s for s in elems if refines(s.blocks, p.blocks)))
    assert all(inc_predicate([set(b) for b in s.blocks], chi) for s in down)
    assert all(leq(s, p) for s in down)
