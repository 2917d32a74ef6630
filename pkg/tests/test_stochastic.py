from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spmech.catalog import catalog
from spmech.model import OpposingProfile, parse_profile
from spmech.rules import imposed, serial_dictatorship, top_trading_cycles
from spmech.stochastic import (
    ExactDistribution,
    apply,
    closed_form_conditional,
    empirical_conditional,
    exact_delta_distribution,
    exact_rank_distribution,
    expected_average_delta,
    fosd_compare,
    invert_apply,
    monte_carlo_delta,
    own_rank_law,
    rank_matrix,
    sweep_prop_delta_rank,
    verify_conditional_law,
    verify_cor_top_probability,
    verify_expected_avg_delta,
    verify_fosd_transfer,
    verify_prop_delta_rank,
)

F = Fraction
SD3 = serial_dictatorship((0, 1, 2))
TTC3 = top_trading_cycles((0, 1, 2))


def test_closed_form_examples():
    assert closed_form_conditional(3, 1, 1) == F(2, 3)
    assert closed_form_conditional(4, 2, 2) == F(1, 6)
    assert closed_form_conditional(4, 3, 2) == 0
    assert closed_form_conditional(3, 3, 1) == 0
    with pytest.raises(ValueError):
        closed_form_conditional(3, 0, 1)


@given(st.integers(2, 9).flatmap(lambda m: st.tuples(st.just(m), st.integers(1, m), st.integers(1, m))))
def test_closed_form_matches_counting(args):
    m, r, s = args
    # best menu item ranks below r iff the top r objects all miss the menu
    assert closed_form_conditional(m, r, s) == F(math.comb(m - s, r), math.comb(m, r))


def test_distribution_validation():
    with pytest.raises(ValueError):
        ExactDistribution((1, 2), (F(1, 2),))
    with pytest.raises(ValueError):
        ExactDistribution((2, 1), (F(1, 2), F(1, 2)))
    with pytest.raises(ValueError):
        ExactDistribution((1,), (F(1, 2),))
    with pytest.raises(ValueError):
        ExactDistribution.point(1, better="up")
    d = ExactDistribution.from_counts({1: 1, 3: 3})
    assert d.prob(3) == F(3, 4) and d.cdf(2) == F(1, 4) and d.tail(1) == F(3, 4)
    assert d.mean() == F(5, 2)
    assert d.rows()[0] == (1, 1, 4, 0.25)


def test_fosd_orientation():
    big, small = ExactDistribution.point(3), ExactDistribution.point(1)
    assert fosd_compare(big, small) == "dominates"
    assert fosd_compare(small, big) == "dominated"
    assert fosd_compare(big, big) == "equal"
    top, second = ExactDistribution.point(1, "smaller"), ExactDistribution.point(2, "smaller")
    assert fosd_compare(top, second) == "dominates"
    spread = ExactDistribution((1, 3), (F(1, 2), F(1, 2)))
    assert fosd_compare(spread, ExactDistribution.point(2)) == "incomparable"
    with pytest.raises(ValueError):
        fosd_compare(big, top)


def test_sd_laws():
    # the first dictator always has everything and gets its top
    assert exact_delta_distribution(SD3, 0) == ExactDistribution.point(3)
    assert exact_rank_distribution(SD3, 0) == ExactDistribution.point(1, "smaller")
    assert exact_delta_distribution(SD3, 2) == ExactDistribution.point(1)
    # the last one gets a uniformly random rank
    assert exact_rank_distribution(SD3, 2) == ExactDistribution((1, 2, 3), (F(1, 3),) * 3, "smaller")


def test_average_delta():
    assert expected_average_delta(SD3) == 2
    assert expected_average_delta(serial_dictatorship(range(4))) == F(5, 2)
    assert verify_expected_avg_delta(TTC3).passed
    assert not verify_expected_avg_delta(imposed((0, 1, 2))).passed


@pytest.mark.parametrize("entry", [e for e in catalog(3) if e.expects("sp")], ids=lambda e: e.key)
def test_conditional_and_top_laws(entry):
    for i in range(3):
        assert verify_conditional_law(entry.rule, i).passed
        assert verify_cor_top_probability(entry.rule, i).passed


def test_empirical_conditional_of_last_dictator():
    assert empirical_conditional(SD3, 2) == {(1, 1): F(2, 3), (2, 1): F(1, 3), (3, 1): 0}


def test_matrix_round_trip():
    matrix = rank_matrix(3)
    assert matrix.size == 2 and matrix.entry(1, 1) == F(2, 3) and matrix.entry(2, 2) == 0
    for entry in catalog(3):
        for i in range(3):
            law = exact_delta_distribution(entry.rule, i)
            tails = apply(matrix, law)
            assert invert_apply(matrix, tails) == law
            if entry.expects("sp"):
                rank_law = exact_rank_distribution(entry.rule, i)
                assert list(tails) == [rank_law.tail(r) for r in (1, 2)]
    with pytest.raises(ValueError):
        rank_matrix(1)
    with pytest.raises(ValueError):
        invert_apply(matrix, [F(1)])


def test_own_rank_law_and_pointwise_dominance():
    opp = OpposingProfile(0, parse_profile("abc,abc"))
    assert own_rank_law(SD3, 0, opp) == ExactDistribution.point(1, "smaller")
    opp2 = OpposingProfile(2, parse_profile("abc,abc"))
    assert own_rank_law(SD3, 2, opp2) == ExactDistribution((1, 2, 3), (F(1, 3),) * 3, "smaller")
    assert verify_prop_delta_rank(SD3, 0, opp, SD3, 2, opp2).passed


def test_sweeps_agree_between_rules():
    assert sweep_prop_delta_rank(SD3, TTC3).passed
    assert verify_fosd_transfer(SD3, 0, TTC3, 0).passed


def test_monte_carlo_is_close():
    assert abs(monte_carlo_delta(SD3, 1, 200, seed=3) - 2) < 1e-9
    value = monte_carlo_delta(TTC3, 0, 2000, seed=3)
    assert abs(value - float(exact_delta_distribution(TTC3, 0).mean())) < 0.15
