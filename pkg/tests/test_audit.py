from __future__ import annotations

import itertools

import pytest

from spmech.audit import (
    CHECKS,
    audit_catalog,
    bilateral_at,
    check_balanced,
    check_efficiency,
    check_group_sp,
    check_hammond,
    check_nonautarkic,
    check_nonbossy,
    check_power_transitivity,
    check_reallocation_proof,
    check_same_rule,
    check_strategy_proof,
    failing_transitivity_profiles,
    freedom_dominates,
    full_power_profile,
    max_bilateral_power,
    pareto_dominates_rule,
    rotational_profile,
    run_checks,
    verify_broker_nontransitivity,
    verify_extreme_menus,
    verify_lemma_fibers,
    verify_lemma_inclusion_power,
    verify_prop_menu_superset,
    verify_sd_chain,
    verify_sd_power,
    verify_thm_menu_pareto,
    verify_ttc_full_bilateral,
    verify_ttc_fullmenu,
)
from spmech.catalog import broker_rule, catalog
from spmech.model import all_orders
from spmech.rules import (
    ControlRightsTable,
    CustomRule,
    evaluate,
    hierarchical_exchange,
    imposed,
    serial_dictatorship,
    top_trading_cycles,
)


def inverted_middle(profile):
    """Agent 1 gets the object it reports last; then 0 and 2 pick in turn."""
    worst = profile[1][-1]
    first = next(x for x in profile[0] if x != worst)
    last = ({0, 1, 2} - {worst, first}).pop()
    return (first, worst, last)


INVERTED = CustomRule(3, inverted_middle, name="inverted")


def sp_oracle(rule):
    n = rule.n
    for profile in itertools.product(all_orders(n), repeat=n):
        truth = evaluate(rule, profile)
        for i in range(n):
            for lie in all_orders(n):
                moved = list(profile)
                moved[i] = lie
                got = evaluate(rule, moved)[i]
                if list(profile[i]).index(got) < list(profile[i]).index(truth[i]):
                    return False
    return True


def eff_oracle(rule):
    n = rule.n
    for profile in itertools.product(all_orders(n), repeat=n):
        mu = evaluate(rule, profile)
        for nu in itertools.permutations(range(n)):
            ranks = [(list(profile[a]).index(nu[a]), list(profile[a]).index(mu[a])) for a in range(n)]
            if all(x <= y for x, y in ranks) and any(x < y for x, y in ranks):
                return False
    return True


RULES3 = [e.rule for e in catalog(3)] + [INVERTED]


@pytest.mark.parametrize("rule", RULES3, ids=lambda r: r.label())
def test_sp_matches_oracle(rule):
    assert check_strategy_proof(rule).passed == sp_oracle(rule)


@pytest.mark.parametrize("rule", RULES3, ids=lambda r: r.label())
def test_menu_based_check_agrees_with_sp(rule):
    assert check_hammond(rule).passed == check_strategy_proof(rule).passed


@pytest.mark.parametrize("rule", RULES3, ids=lambda r: r.label())
def test_efficiency_matches_oracle(rule):
    assert check_efficiency(rule).passed == eff_oracle(rule)


@pytest.mark.parametrize("rule", RULES3, ids=lambda r: r.label())
def test_direct_group_sp_agrees_with_shortcut(rule):
    assert check_group_sp(rule, mode="direct").passed == check_group_sp(rule).passed


def test_negative_control_fails_with_replayable_counterexample():
    report = check_strategy_proof(INVERTED)
    assert not report.passed
    assert report.counterexample is not None
    assert not check_hammond(INVERTED).passed
    assert not check_efficiency(INVERTED).passed


def test_imposed_rule_inefficient():
    report = check_efficiency(imposed((0, 1, 2)))
    assert not report.passed and report.counterexample


def test_bad_group_mode():
    with pytest.raises(ValueError):
        check_group_sp(serial_dictatorship((0, 1)), mode="nope")


def test_catalog_matches_expectations_n3():
    results = audit_catalog(3)
    bad = [(r.key, r.check) for r in results if not r.matches]
    assert bad == []


def test_catalog_matches_expectations_n2():
    assert all(r.matches for r in audit_catalog(2))


def test_reallocation_verdicts():
    assert check_reallocation_proof(top_trading_cycles((0, 1, 2))).passed
    assert not check_reallocation_proof(broker_rule(3)).passed
    # without the unilateral-invariance clause even serial dictatorship fails
    assert not check_reallocation_proof(serial_dictatorship((0, 1, 2)), reading="literal").passed
    with pytest.raises(ValueError):
        check_reallocation_proof(serial_dictatorship((0, 1)), reading="other")


def test_nonbossy_and_nonautarkic_controls():
    sd = serial_dictatorship((0, 1, 2))
    assert check_nonbossy(sd).passed and check_nonautarkic(sd).passed
    bossy = next(e.rule for e in catalog(3) if e.key == "bossy_demo")
    assert not check_nonbossy(bossy).passed


def test_run_checks_rejects_unknown():
    with pytest.raises(ValueError):
        run_checks(serial_dictatorship((0, 1)), ["sp", "bogus"])
    assert set(CHECKS) >= {"sp", "gsp", "eff", "realloc", "transitivity"}


@pytest.mark.parametrize("entry", catalog(3), ids=lambda e: e.key)
def test_fibers_for_sp_rules(entry):
    if entry.expects("sp"):
        assert verify_lemma_fibers(entry.rule).passed


@pytest.mark.parametrize("entry", [e for e in catalog(3) if e.expects("hierarchical")], ids=lambda e: e.key)
def test_hierarchical_menu_structure(entry):
    assert verify_extreme_menus(entry.rule).passed
    assert verify_prop_menu_superset(entry.rule).passed
    assert verify_lemma_inclusion_power(entry.rule).passed
    assert check_power_transitivity(entry.rule).passed


def test_full_menu_only_for_ttc():
    assert verify_ttc_fullmenu(top_trading_cycles((0, 1, 2))).passed
    assert not verify_ttc_fullmenu(serial_dictatorship((0, 1, 2))).passed


def test_balancedness():
    assert check_balanced(top_trading_cycles((0, 1, 2))).passed
    assert not check_balanced(serial_dictatorship((0, 1, 2))).passed


def test_broker_transitivity_failures():
    assert not check_power_transitivity(broker_rule(3)).passed
    assert len(failing_transitivity_profiles(broker_rule(3))) == 24
    assert verify_broker_nontransitivity(3).passed


def test_sd_bilateral_power():
    assert verify_sd_power(serial_dictatorship((0, 1, 2))).passed
    assert max_bilateral_power(serial_dictatorship((0, 1, 2))).value == 2


@pytest.mark.parametrize("n", [3, 4])
def test_ttc_full_bilateral_power(n):
    assert verify_ttc_full_bilateral(n).passed
    assert max_bilateral_power(top_trading_cycles(range(n))).value == n


def test_full_power_profile_shape():
    profile = full_power_profile(4, 2, 0)
    assert sorted(map(sorted, profile)) == [list(range(4))] * 4
    assert bilateral_at(top_trading_cycles(range(4)), profile)[2][0] == 4
    with pytest.raises(ValueError):
        full_power_profile(3, 1, 1)


def test_rotational_profile_gives_only_two():
    ttc = top_trading_cycles(range(4))
    matrix = bilateral_at(ttc, rotational_profile(4))
    assert {matrix[i][j] for i in range(4) for j in range(4) if i != j} == {2}


def test_menu_pareto_equivalence_pairs():
    ttc, imp = top_trading_cycles((0, 1, 2)), imposed((0, 1, 2))
    assert pareto_dominates_rule(ttc, imp).passed
    assert freedom_dominates(ttc, imp) == (True, True)
    assert verify_thm_menu_pareto(ttc, imp).passed
    assert verify_thm_menu_pareto(imp, ttc).passed
    sd = serial_dictatorship((0, 1, 2))
    assert not pareto_dominates_rule(sd, ttc).passed
    assert verify_thm_menu_pareto(sd, ttc).passed


def test_sd_chain_exhaustive_small():
    assert verify_sd_chain(3).passed


def test_sd_chain_sampled():
    report = verify_sd_chain(5, samples=300, seed=7)
    assert report.passed and report.work == 300


def test_same_rule_is_pointwise():
    # TTC written as a hierarchical exchange table is the same rule
    table = ControlRightsTable.from_priorities(3, [[0, 1, 2], [1, 0, 2], [2, 0, 1]])
    assert check_same_rule(hierarchical_exchange(table), top_trading_cycles((0, 1, 2))).passed
    report = check_same_rule(serial_dictatorship((0, 1, 2)), top_trading_cycles((0, 1, 2)))
    assert not report.passed and report.counterexample["outcome_a"] != report.counterexample["outcome_b"]
    with pytest.raises(ValueError):
        check_same_rule(serial_dictatorship((0, 1)), serial_dictatorship((0, 1, 2)))
