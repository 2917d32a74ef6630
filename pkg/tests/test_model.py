from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spmech.model import (
    CapacityError,
    OpposingProfile,
    StrictOrder,
    all_orders,
    assignment_pareto_dominates,
    build_table,
    check_budget,
    check_top_rich,
    enumerate_orders,
    enumerate_profiles,
    format_order,
    format_profile,
    is_assignment,
    order_index,
    parse_order,
    parse_profile,
    profile_count,
    proper_submatchings,
    rank_table,
    submatching_key,
    submatching_le,
    sweep_budget,
    unmatched_agents,
    unmatched_objects,
)


def test_orders_of_one_object():
    assert list(enumerate_orders(1)) == [(0,)]


def test_orders_of_three_objects_lexicographic():
    orders = list(enumerate_orders(3))
    assert len(orders) == 6
    assert orders[0] == (0, 1, 2)
    assert orders[-1] == (2, 1, 0)


def test_orders_of_four_objects_distinct():
    orders = list(enumerate_orders(4))
    assert len(set(orders)) == len(orders) == 24
    assert all(sorted(o) == [0, 1, 2, 3] for o in orders)


@pytest.mark.parametrize("n,m,count", [(1, 2, 2), (3, 3, 216), (4, 4, 331776)])
def test_profile_counts(n, m, count):
    assert profile_count(n, m) == count


def test_enumerate_small_profiles():
    assert list(enumerate_profiles(1, 2)) == [((0, 1),), ((1, 0),)]
    assert sum(1 for _ in enumerate_profiles(3, 3)) == 216


def test_enumerate_profiles_slices_cover_range():
    whole = list(enumerate_profiles(3, 3))
    parts = list(enumerate_profiles(3, 3, stop=100)) + list(enumerate_profiles(3, 3, start=100))
    assert parts == whole


def test_budget_is_enforced():
    with pytest.raises(CapacityError) as info:
        check_budget(100, budget=10)
    assert info.value.required == 100
    with pytest.raises(CapacityError):
        list(enumerate_profiles(3, 3, budget=10))


def test_budget_environment_override(monkeypatch):
    monkeypatch.setenv("SPMECH_BUDGET", "5")
    assert sweep_budget() == 5
    with pytest.raises(CapacityError):
        check_budget(6)
    monkeypatch.setenv("SPMECH_BUDGET", "0")
    with pytest.raises(ValueError):
        sweep_budget()


def test_top_rich_domains():
    assert check_top_rich(all_orders(3), 3)
    assert not check_top_rich([(0, 1, 2), (1, 0, 2)], 3)
    assert check_top_rich([(0, 1), (1, 0)], 2)
    with pytest.raises(ValueError):
        check_top_rich([], 3)


def test_assignment_pareto_dominance():
    same = (0, 1, 2)
    profile = [(0, 1, 2)] * 3
    assert not assignment_pareto_dominates(same, same, profile)
    assert not assignment_pareto_dominates((0, 1, 2), (1, 0, 2), profile)
    assert assignment_pareto_dominates((1, 0), (0, 1), [(1, 0), (0, 1)])


def test_letters_round_trip():
    assert parse_order("acb") == (0, 2, 1)
    assert format_order((0, 2, 1)) == "acb"
    profile = parse_profile("abc,bca,cab")
    assert format_profile(profile) == "abc,bca,cab"


@pytest.mark.parametrize("bad", ["", "aab", "abd", "ab1", "ABC"])
def test_bad_orders_rejected(bad):
    with pytest.raises(ValueError):
        parse_order(bad)


def test_profile_with_mixed_lengths_rejected():
    with pytest.raises(ValueError):
        parse_profile("abc,ab")


@given(st.permutations(range(5)))
def test_strict_order_queries(perm):
    order = StrictOrder(perm)
    assert order.top == perm[0]
    for x in range(5):
        assert order.rank_of(x) == perm.index(x)
    for x, y in itertools.permutations(range(5), 2):
        assert order.prefers(x, y) == (perm.index(x) < perm.index(y))
    promoted = order.promote(perm[3])
    assert promoted[0] == perm[3]
    assert [v for v in promoted[1:]] == [v for v in perm if v != perm[3]]


@given(st.permutations(range(4)))
def test_order_index_matches_enumeration(perm):
    assert all_orders(4)[order_index(perm)] == tuple(perm)


def test_rank_table_inverts_orders():
    ranks = rank_table(3)
    for r, order in enumerate(all_orders(3)):
        for pos, x in enumerate(order):
            assert ranks[r, x] == pos


def test_opposing_profile_completion():
    opp = OpposingProfile(1, ((0, 1, 2), (2, 1, 0)))
    full = opp.complete((1, 0, 2))
    assert full == ((0, 1, 2), (1, 0, 2), (2, 1, 0))
    assert OpposingProfile.from_profile(full, 1) == opp
    assert opp.report_of(2) == (2, 1, 0)


def test_submatchings():
    key = submatching_key([(2, 0), (0, 1)])
    assert key == ((0, 1), (2, 0))
    assert unmatched_agents(key, 3) == [1]
    assert unmatched_objects(key, 3) == [2]
    assert submatching_le(((0, 1),), key)
    assert not submatching_le(key, ((0, 1),))
    with pytest.raises(ValueError):
        submatching_key([(0, 1), (0, 2)])


def test_proper_submatching_count():
    # partial bijections with fewer than n pairs
    n = 3
    expected = sum(math.comb(n, k) ** 2 * math.factorial(k) for k in range(n))
    assert len(proper_submatchings(n)) == expected


def test_is_assignment():
    assert is_assignment((2, 0, 1), 3)
    assert not is_assignment((0, 0, 1), 3)
    assert not is_assignment((0, 3, 1), 3)


def test_outcome_table_views_agree_with_function():
    def fn(profile):
        # agent i gets the top of agent (i + 1) mod n, as a toy relevant outcome
        return tuple(profile[(i + 1) % 3][0] for i in range(3))

    table = build_table(3, all_orders(3), rank_table(3), fn)
    for s in range(table.size):
        profile = table.profile_at(s)
        assert tuple(table.flat()[s]) == fn(profile)
    for i in range(3):
        view = table.view(i)
        for p in range(view.shape[1]):
            opp = table.opposing(i, p)
            for r, report in enumerate(table.reports):
                assert tuple(view[r, p]) == fn(opp.complete(report))
        values = np.arange(view.shape[1])
        expanded = table.expand(values, i)
        for s in range(table.size):
            opp = OpposingProfile.from_profile(table.profile_at(s), i)
            assert expanded[s] == table.opp_index(opp)
