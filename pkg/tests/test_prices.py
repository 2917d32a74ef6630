from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from spmech.menus import menu_self
from spmech.model import OpposingProfile, all_orders, parse_profile
from spmech.prices import (
    PriceConstraintSystem,
    PriceError,
    budget_intersection,
    clearing_order_relation,
    feasible,
    holds_universally,
    price_report,
    sample_price_vector,
    support_constraints,
    verify_cor_menu_budget,
    verify_prop_freedom_prices,
)
from spmech.rules import evaluate, top_trading_cycles

ENDOW = (0, 1, 2)
TTC3 = top_trading_cycles(ENDOW)
SELF = parse_profile("abc,bac,cab")  # everyone wants their own object
GRAND = parse_profile("bac,cab,abc")  # 0 -> 1 -> 2 -> 0


def system_for(profile, endowment=ENDOW):
    return support_constraints(profile, evaluate(top_trading_cycles(endowment), profile), endowment)


def test_self_pointing_system():
    system = system_for(SELF)
    assert system.strict == ()
    assert all(u == v for u, v in system.weak)
    assert not holds_universally(system, 0, 1) and not holds_universally(system, 1, 0)
    for i in range(3):
        assert budget_intersection(system, i, ENDOW).objects == {i}


def test_grand_cycle_system():
    system = system_for(GRAND)
    for a, b in itertools.product(range(3), repeat=2):
        assert holds_universally(system, a, b)
    assert budget_intersection(system, 0, ENDOW).objects == {0, 1, 2}
    prices = sample_price_vector(system)
    assert len(set(prices)) == 1


def test_two_cycle_plus_singleton():
    # 0 and 1 swap; 2 wanted 0's object first but keeps its own
    profile = parse_profile("bac,abc,acb")
    assert evaluate(TTC3, profile) == (1, 0, 2)
    system = system_for(profile)
    assert holds_universally(system, 0, 1) and holds_universally(system, 1, 0)
    assert (2, 0) in system.strict
    assert holds_universally(system, 2, 0) and not holds_universally(system, 0, 2)


def test_wrong_assignment_rejected():
    with pytest.raises(PriceError):
        support_constraints(SELF, (1, 0, 2), ENDOW)
    with pytest.raises(PriceError):
        PriceConstraintSystem(2, weak=((0, 5),))


def test_feasibility_basics():
    assert feasible(PriceConstraintSystem(3))
    assert not feasible(PriceConstraintSystem(2, strict=((0, 1), (1, 0))))
    assert not feasible(PriceConstraintSystem(2, weak=((0, 1),), strict=((1, 0),)))
    assert holds_universally(PriceConstraintSystem(3), 1, 1)


def test_sample_vectors():
    assert sample_price_vector(PriceConstraintSystem(3)) == (0, 0, 0)
    chain = PriceConstraintSystem(3, strict=((0, 1), (1, 2)))
    assert sample_price_vector(chain) == (Fraction(0), Fraction(1), Fraction(2))
    with pytest.raises(PriceError):
        sample_price_vector(PriceConstraintSystem(2, strict=((0, 1), (1, 0))))


def all_profiles(n):
    return (tuple(map(tuple, p)) for p in itertools.product(all_orders(n), repeat=n))


def test_every_profile_feasible_and_budget_equals_menu():
    for profile in all_profiles(3):
        system = system_for(profile)
        assert feasible(system)
        prices = sample_price_vector(system)
        assert all(prices[u] <= prices[v] for u, v in system.weak)
        assert all(prices[u] < prices[v] for u, v in system.strict)
        for i in range(3):
            budget = budget_intersection(system, i, ENDOW).objects
            assert i in budget
            assert budget == menu_self(TTC3, i, OpposingProfile.from_profile(profile, i))


def test_clearing_relation_matches_prices():
    # matched no later than b exactly when a's endowment is never cheaper than b's
    for profile in all_profiles(3):
        relation = clearing_order_relation(TTC3, profile)
        system = system_for(profile)
        for a, b in itertools.product(range(3), repeat=2):
            assert ((a, b) in relation) == holds_universally(system, ENDOW[b], ENDOW[a])


def test_clearing_relation_examples():
    assert clearing_order_relation(TTC3, GRAND) == {(a, b) for a in range(3) for b in range(3)}
    relation = clearing_order_relation(TTC3, SELF)
    assert {(a, b) for a, b in relation if (b, a) not in relation} == set()


@pytest.mark.parametrize("endowment", [(0, 1, 2), (2, 0, 1)])
def test_sweeps_n3(endowment):
    assert verify_cor_menu_budget(endowment).passed
    assert verify_prop_freedom_prices(endowment).passed


def test_sweeps_n4():
    assert verify_cor_menu_budget((0, 1, 2, 3)).passed


def test_degenerate_single_agent():
    assert verify_cor_menu_budget((0,)).passed


def test_price_report():
    report = price_report(ENDOW, GRAND)
    assert report["menus_match"] and report["feasible"]
    assert report["assignment"] == [1, 2, 0]
    assert all(a["menu"] == [0, 1, 2] for a in report["agents"])
