"""Exhaustive property checks on tabulated rules.

Each check sweeps every profile of a rule's outcome table and returns an
:class:`AuditReport`.  When a check fails, the counterexample is the one at the
lowest profile index (ties broken by lowest agent), so reports are
reproducible and can be replayed through ``evaluate``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .menus import bilateral_deltas, delta_self_all, freedom_geq, mask_to_set, menu_masks
from .model import (
    CapacityError,
    OpposingProfile,
    StrictOrder,
    OutcomeTable,
    check_budget,
    distinct_count,
    encode_columns,
)
from .rules import tabulate


@dataclass
class AuditReport:
    property: str
    passed: bool
    counterexample: dict | None = None
    work: int = 0
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "counterexample": self.counterexample,
            "work": self.work,
            "details": self.details,
        }


def as_table(rule) -> OutcomeTable:
    return rule if isinstance(rule, OutcomeTable) else tabulate(rule)


def _check_env(table: OutcomeTable, n: int | None, m: int | None) -> None:
    if n is not None and n != table.n:
        raise ValueError(f"rule has {table.n} agents, audit asked for {n}")
    if m is not None and m != table.outcome_count:
        raise ValueError(f"rule has {table.outcome_count} outcomes, audit asked for {m}")


def report_json(report) -> Any:
    """Plain JSON form of a report (orders become lists, voting reports stay ints)."""
    if isinstance(report, (tuple, list)):
        return [int(x) for x in report]
    return int(report)


def _profile_json(table: OutcomeTable, flat: int) -> list:
    return [report_json(r) for r in table.profile_at(flat)]


def _flat(table: OutcomeTable, i: int, r: int, p: int) -> int:
    """Full profile index for agent ``i`` reporting ``r`` at opposing index ``p``."""
    low_size = table.k ** (table.n - 1 - i)
    high, low = divmod(p, low_size)
    return (high * table.k + r) * low_size + low


def _report_indices(table: OutcomeTable) -> np.ndarray:
    """``(k^n, n)`` report index of each agent in each profile."""
    return np.indices((table.k,) * table.n).reshape(table.n, -1).T


def _true_ranks(table: OutcomeTable) -> np.ndarray:
    """Rank of each agent's outcome under her own report, per profile."""
    reps = _report_indices(table)
    return table.ranks[reps, table.flat()]


def _first(candidates: list[tuple]) -> tuple | None:
    return min(candidates, key=lambda c: c[:2]) if candidates else None


# -- incentives ---------------------------------------------------------------------------


def check_strategy_proof(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """No agent gains by misreporting at any profile."""
    table = as_table(rule)
    _check_env(table, n, m)
    k = table.k
    found = []
    for i in range(table.n):
        own = table.view(i)[:, :, i]
        alt = table.ranks[:, own]  # [r, r', p]: rank under r of what r' obtains
        got = alt[np.arange(k), np.arange(k)]
        bad_r, bad_p = np.nonzero(alt.min(axis=1) < got)
        if bad_r.size:
            flats = [_flat(table, i, int(r), int(p)) for r, p in zip(bad_r, bad_p)]
            j = int(np.argmin(flats))
            r, p = int(bad_r[j]), int(bad_p[j])
            found.append((flats[j], i, r, p, int(np.argmin(alt[r, :, p]))))
    work = table.n * k * table.size
    if not found:
        return AuditReport("strategy_proofness", True, work=work)
    flat, i, r, p, lie = _first(found)
    own = table.view(i)[:, p, i]
    return AuditReport(
        "strategy_proofness",
        False,
        {
            "agent": i,
            "profile": _profile_json(table, flat),
            "misreport": report_json(table.reports[lie]),
            "truthful_outcome": int(own[r]),
            "manipulated_outcome": int(own[lie]),
        },
        work,
    )


def check_hammond(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Every agent gets a best element of her menu under her own report."""
    table = as_table(rule)
    _check_env(table, n, m)
    k, outcomes = table.k, table.outcome_count
    big = np.int16(outcomes + 1)
    found = []
    for i in range(table.n):
        masks = menu_masks(table, i)
        in_menu = (masks[:, None] >> np.arange(outcomes)) & 1 == 1  # (P, O)
        best = np.where(in_menu[None], table.ranks[:, None, :].astype(np.int16), big).min(axis=2)
        own = table.view(i)[:, :, i]
        got = table.ranks[np.arange(k)[:, None], own]
        bad_r, bad_p = np.nonzero(got > best)
        if bad_r.size:
            flats = [_flat(table, i, int(r), int(p)) for r, p in zip(bad_r, bad_p)]
            j = int(np.argmin(flats))
            found.append((flats[j], i, int(bad_r[j]), int(bad_p[j])))
    work = table.n * table.size
    if not found:
        return AuditReport("hammond", True, work=work)
    flat, i, r, p = _first(found)
    masks = menu_masks(table, i)
    menu = sorted(mask_to_set(int(masks[p])))
    ranks = table.ranks[r]
    return AuditReport(
        "hammond",
        False,
        {
            "agent": i,
            "profile": _profile_json(table, flat),
            "menu": menu,
            "assigned": int(table.view(i)[r, p, i]),
            "best_in_menu": min(menu, key=lambda x: ranks[x]),
        },
        work,
    )


def _codes(table: OutcomeTable, i: int, columns: Sequence[int]) -> np.ndarray:
    view = table.view(i)[:, :, list(columns)].astype(np.int64)
    return encode_columns(view, table.outcome_count)


def _fiber_failure(table, i, key_cols, value_cols, name):
    """Opposing profiles where ``value_cols`` is not a function of ``key_cols``
    over agent i's reports; returns the first witness pair."""
    key = _codes(table, i, key_cols)
    value = _codes(table, i, value_cols)
    full = encode_columns(np.stack([key, value], axis=-1), int(max(key.max(), value.max())) + 1)
    bad = np.nonzero(distinct_count(full, 0) != distinct_count(key, 0))[0]
    if bad.size == 0:
        return None
    best = None
    for p in bad[:64]:
        p = int(p)
        for r in range(table.k):
            partners = np.nonzero((key[:, p] == key[r, p]) & (value[:, p] != value[r, p]))[0]
            if partners.size:
                cand = (_flat(table, i, r, p), i, r, int(partners[0]), p)
                if best is None or cand < best:
                    best = cand
                break
    return best


def _fiber_report(table, prop, key_of, value_of):
    found = []
    for i in range(table.n):
        hit = _fiber_failure(table, i, key_of(i), value_of(i), prop)
        if hit:
            found.append(hit)
    work = table.n * table.size
    if not found:
        return AuditReport(prop, True, work=work)
    flat, i, r, r2, p = _first(found)
    view = table.view(i)[:, p]
    return AuditReport(
        prop,
        False,
        {
            "agent": i,
            "profile": _profile_json(table, flat),
            "alternative_report": report_json(table.reports[r2]),
            "outcome": [int(x) for x in view[r]],
            "alternative_outcome": [int(x) for x in view[r2]],
        },
        work,
    )


def check_nonbossy(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Whenever a report change leaves an agent's own object fixed, nothing changes."""
    table = as_table(rule)
    _check_env(table, n, m)
    everyone = list(range(table.n))
    return _fiber_report(table, "nonbossiness", lambda i: [i], lambda i: everyone)


def check_nonautarkic(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Whenever a report change leaves the others' objects fixed, the agent's is fixed too."""
    table = as_table(rule)
    _check_env(table, n, m)

    def others(i):
        return [a for a in range(table.n) if a != i]

    if table.n == 1:
        # a lone agent can only be autarkic if her outcome moves at all
        own = table.view(0)[:, :, 0]
        if np.all(own == own[0]):
            return AuditReport("nonautarky", True, work=table.size)
        return AuditReport("nonautarky", False, {"agent": 0}, table.size)
    return _fiber_report(table, "nonautarky", others, lambda i: [i])


def _group_budget(table: OutcomeTable) -> int:
    return sum(
        math.comb(table.n, g) * table.size * table.k**g for g in range(1, table.n + 1)
    )


def check_group_sp(
    rule, n: int | None = None, m: int | None = None, mode: str = "papai", budget: int | None = None
) -> AuditReport:
    """Group strategy-proofness.

    ``mode="papai"`` tests strategy-proofness plus non-bossiness, which is
    equivalent on this domain.  ``mode="direct"`` searches every coalition and
    joint misreport for one that leaves all members weakly better off and one
    strictly; it is only affordable for three agents.
    """
    table = as_table(rule)
    _check_env(table, n, m)
    if mode == "papai":
        sp = check_strategy_proof(table)
        nb = check_nonbossy(table)
        failed = sp if not sp.passed else nb
        return AuditReport(
            "group_strategy_proofness",
            sp.passed and nb.passed,
            None if sp.passed and nb.passed else {"via": failed.property, **failed.counterexample},
            sp.work + nb.work,
            {"mode": "papai", "sp": sp.passed, "nonbossy": nb.passed},
        )
    if mode != "direct":
        raise ValueError(f"unknown mode {mode!r}")
    check_budget(_group_budget(table), budget)
    k, size = table.k, table.n
    for g in range(1, size + 1):
        for group in itertools.combinations(range(size), g):
            rest = [a for a in range(size) if a not in group]
            moved = np.transpose(table.data, list(group) + rest + [size])
            data = moved.reshape(k**g, k ** (size - g), size)
            reps = np.indices((k,) * g).reshape(g, -1).T  # (k^g, g)
            cols = list(group)
            outcome = data[:, :, cols]  # (k^g, z, g)
            true = table.ranks[reps[:, None, :], outcome]  # (k^g, z, g)
            alt = table.ranks[reps[:, None, None, :], outcome[None, :, :, :]]  # (t, t', z, g)
            weak = (alt <= true[:, None]).all(axis=-1)
            strict = (alt < true[:, None]).any(axis=-1)
            hits = np.argwhere(weak & strict)
            if hits.size:
                candidates = []
                for t, t2, z in hits:
                    digits = [0] * size
                    for a, r in zip(group, reps[t]):
                        digits[a] = int(r)
                    zdig = np.unravel_index(int(z), (k,) * (size - g)) if rest else ()
                    for a, r in zip(rest, zdig):
                        digits[a] = int(r)
                    flat = int(np.ravel_multi_index(digits, (k,) * size))
                    candidates.append((flat, int(t2), digits))
                flat, t2, digits = min(candidates)
                lie = [report_json(table.reports[int(r)]) for r in reps[t2]]
                return AuditReport(
                    "group_strategy_proofness",
                    False,
                    {
                        "coalition": list(group),
                        "profile": _profile_json(table, flat),
                        "joint_misreport": lie,
                    },
                    _group_budget(table),
                    {"mode": "direct"},
                )
    return AuditReport("group_strategy_proofness", True, work=_group_budget(table), details={"mode": "direct"})


# -- efficiency ---------------------------------------------------------------------------------


def check_efficiency(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """No assignment Pareto-dominates the rule's choice (brute force over bijections)."""
    table = as_table(rule)
    _check_env(table, n, m)
    reps = _report_indices(table)
    pref = table.ranks[reps]  # (S, n, O)
    current = _true_ranks(table)
    agents = np.arange(table.n)
    first = None
    count = 0
    for perm in itertools.permutations(range(table.outcome_count), table.n):
        count += 1
        alt = pref[:, agents, list(perm)]
        dominated = (alt <= current).all(axis=1) & (alt < current).any(axis=1)
        hits = np.nonzero(dominated)[0]
        if hits.size and (first is None or hits[0] < first[0]):
            first = (int(hits[0]), perm)
    work = count * table.size
    if first is None:
        return AuditReport("efficiency", True, work=work)
    flat, perm = first
    return AuditReport(
        "efficiency",
        False,
        {
            "profile": _profile_json(table, flat),
            "assignment": [int(x) for x in table.flat()[flat]],
            "dominating_assignment": list(perm),
        },
        work,
    )


# -- reallocation-proofness -----------------------------------------------------------------------


_kernel = None


def _realloc_kernel():
    global _kernel
    if _kernel is None:
        import numba

        @numba.njit(cache=True)
        def kernel(data, ranks, n, k, literal):
            size = data.shape[0]
            strides = np.empty(n, dtype=np.int64)
            s = 1
            for a in range(n - 1, -1, -1):
                strides[a] = s
                s *= k
            work = 0
            for p in range(size):
                for i in range(n):
                    ri = (p // strides[i]) % k
                    xi = data[p, i]
                    for j in range(n):
                        if j == i:
                            continue
                        rj = (p // strides[j]) % k
                        xj = data[p, j]
                        for ri2 in range(k):
                            if ri2 == ri:
                                continue
                            shift_i = (ri2 - ri) * strides[i]
                            if not literal and data[p + shift_i, i] != xi:
                                continue
                            for rj2 in range(k):
                                if rj2 == rj:
                                    continue
                                work += 1
                                shift_j = (rj2 - rj) * strides[j]
                                if not literal and data[p + shift_j, j] != xj:
                                    continue
                                q = p + shift_i + shift_j
                                yi = data[q, i]
                                yj = data[q, j]
                                if yi == xi or yj == xj:
                                    continue
                                if ranks[ri, yj] <= ranks[ri, xi] and ranks[rj, yi] < ranks[rj, xj]:
                                    return np.array([1, p, i, j, ri2, rj2, work])
            return np.array([0, 0, 0, 0, 0, 0, work])

        _kernel = kernel
    return _kernel


def check_reallocation_proof(
    rule, n: int | None = None, m: int | None = None, reading: str = "standard"
) -> AuditReport:
    """No pair can misreport jointly and then gain by swapping objects.

    A violation is a pair ``(i, j)``, a profile ``R`` and misreports
    ``R'_i != R_i``, ``R'_j != R_j`` such that after the joint misreport ``i``
    weakly prefers ``j``'s new object to her own old one, ``j`` strictly
    prefers ``i``'s new object to her old one, and each misreport alone
    leaves its author's object unchanged while the joint one changes it.
    ``reading="literal"`` drops the unilateral-invariance clause.
    """
    table = as_table(rule)
    _check_env(table, n, m)
    if reading not in ("standard", "literal"):
        raise ValueError(f"unknown reading {reading!r}")
    if table.n < 2:
        return AuditReport("reallocation_proofness", True, details={"reading": reading})
    data = np.ascontiguousarray(table.flat().astype(np.int64))
    ranks = np.ascontiguousarray(table.ranks.astype(np.int64))
    found, p, i, j, ri2, rj2, work = (
        int(v) for v in _realloc_kernel()(data, ranks, table.n, table.k, reading == "literal")
    )
    details = {"reading": reading}
    if not found:
        return AuditReport("reallocation_proofness", True, work=work, details=details)
    profile = list(table.profile_at(p))
    lied = list(profile)
    lied[i], lied[j] = table.reports[ri2], table.reports[rj2]
    lied_index = int(np.ravel_multi_index(table.profile_index(lied), (table.k,) * table.n))
    return AuditReport(
        "reallocation_proofness",
        False,
        {
            "pair": [i, j],
            "profile": [report_json(r) for r in profile],
            "misreports": [report_json(table.reports[ri2]), report_json(table.reports[rj2])],
            "outcome": [int(x) for x in table.flat()[p]],
            "misreported_outcome": [int(x) for x in table.flat()[lied_index]],
        },
        work,
        details,
    )


# -- comparing rules --------------------------------------------------------------------------------


def check_same_rule(rule_a, rule_b) -> AuditReport:
    """Two rules agree at every profile (equivalence is checked pointwise only)."""
    ta, tb = as_table(rule_a), as_table(rule_b)
    if ta.reports != tb.reports or ta.n != tb.n:
        raise ValueError("rules live on different environments")
    diff = np.nonzero((ta.flat() != tb.flat()).any(axis=1))[0]
    if diff.size:
        s = int(diff[0])
        return AuditReport(
            "same_rule",
            False,
            {
                "profile": _profile_json(ta, s),
                "outcome_a": [int(x) for x in ta.flat()[s]],
                "outcome_b": [int(x) for x in tb.flat()[s]],
            },
            ta.size,
        )
    return AuditReport("same_rule", True, work=ta.size)


def pareto_dominates_rule(rule_a, rule_b, n: int | None = None, m: int | None = None) -> AuditReport:
    """``rule_a`` is weakly better for everyone everywhere, strictly somewhere."""
    ta, tb = as_table(rule_a), as_table(rule_b)
    _check_env(ta, n, m)
    if ta.reports != tb.reports or ta.n != tb.n:
        raise ValueError("rules live on different environments")
    ra, rb = _true_ranks(ta), _true_ranks(tb)
    worse = np.argwhere(ra > rb)
    work = ta.size * ta.n
    if worse.size:
        flat, agent = (int(v) for v in worse[0])
        return AuditReport(
            "pareto_dominance",
            False,
            {
                "reason": "worse somewhere",
                "profile": _profile_json(ta, flat),
                "agent": agent,
                "outcome_a": int(ta.flat()[flat, agent]),
                "outcome_b": int(tb.flat()[flat, agent]),
            },
            work,
        )
    if not (ra < rb).any():
        return AuditReport("pareto_dominance", False, {"reason": "never strictly better"}, work)
    return AuditReport("pareto_dominance", True, work=work)


def freedom_dominates(rule_a, rule_b) -> tuple[bool, bool]:
    """(weakly larger menus for all agents everywhere, strictly larger somewhere)."""
    ta, tb = as_table(rule_a), as_table(rule_b)
    weak = all(freedom_geq(ta, tb, i)[0] for i in range(ta.n))
    strict = any(np.any(menu_masks(ta, i) != menu_masks(tb, i)) for i in range(ta.n))
    return weak, strict


def verify_thm_menu_pareto(rule_a, rule_b, n: int | None = None, m: int | None = None) -> AuditReport:
    """Pareto dominance holds exactly when menus are weakly larger for all and
    strictly larger for someone."""
    dominance = pareto_dominates_rule(rule_a, rule_b, n, m)
    weak, strict = freedom_dominates(rule_a, rule_b)
    freedom = weak and strict
    return AuditReport(
        "menu_pareto_equivalence",
        dominance.passed == freedom,
        None
        if dominance.passed == freedom
        else {"pareto_dominates": dominance.passed, "freedom_dominates": freedom},
        dominance.work,
        {"pareto_dominates": dominance.passed, "freedom_dominates": freedom},
    )


def check_constrained_efficiency(rule, alternatives: Sequence) -> AuditReport:
    """Flag ``rule`` if some alternative grants everyone weakly larger menus and
    someone a strictly larger one (which means it is Pareto-improvable)."""
    table = as_table(rule)
    for alt in alternatives:
        other = as_table(alt)
        if other is table or other.reports != table.reports or other.n != table.n:
            continue
        weak, strict = freedom_dominates(other, table)
        if weak and strict:
            return AuditReport(
                "constrained_efficiency", False, {"more_freedom_under": other.name}
            )
    return AuditReport("constrained_efficiency", True, details={"compared": len(alternatives)})


# -- menus and power -----------------------------------------------------------------------------


def verify_lemma_fibers(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Freedom versus power over everybody else, per agent and opposing profile.

    Where an agent is non-bossy her power over the rest is at most her
    freedom; where she is non-autarkic it is at least her freedom; and any two
    of non-bossy, non-autarkic and equality imply the third.
    """
    table = as_table(rule)
    _check_env(table, n, m)
    everywhere_equal = True
    excess = 0
    for i in range(table.n):
        others = [a for a in range(table.n) if a != i]
        own = distinct_count(table.view(i)[:, :, i], 0)
        full = distinct_count(_codes(table, i, range(table.n)), 0)
        rest = distinct_count(_codes(table, i, others), 0) if others else np.ones_like(own)
        nonbossy = full == own
        nonautarkic = full == rest
        equal = rest == own
        problems = (
            (nonbossy & (rest > own))
            | (nonautarkic & (rest < own))
            | (nonbossy & nonautarkic & ~equal)
            | (nonbossy & equal & ~nonautarkic)
            | (nonautarkic & equal & ~nonbossy)
        )
        everywhere_equal &= bool(equal.all())
        excess = max(excess, int((rest - own).max()))
        bad = np.nonzero(problems)[0]
        if bad.size:
            p = int(bad[0])
            return AuditReport(
                "freedom_power_fibers",
                False,
                {
                    "agent": i,
                    "opposing": [report_json(r) for r in table.opposing(i, p).orders],
                    "delta_self": int(own[p]),
                    "delta_others": int(rest[p]),
                },
                table.size * table.n,
            )
    return AuditReport(
        "freedom_power_fibers",
        True,
        work=table.size * table.n,
        details={"equal_everywhere": everywhere_equal, "max_excess_of_power": excess},
    )


def extreme_profile(n: int) -> tuple[tuple[int, ...], ...]:
    """Everyone ranks objects ``n-1, ..., 0``."""
    return (tuple(range(n - 1, -1, -1)),) * n


def verify_extreme_menus(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """At the identical-preference profile, whoever gets the k-th least
    preferred object has exactly the k least preferred objects as her menu."""
    table = as_table(rule)
    _check_env(table, n, m)
    size = table.n
    profile = extreme_profile(size)
    outcome = table.outcome(profile)
    sizes = []
    for i in range(size):
        opp = OpposingProfile.from_profile(profile, i)
        menu = mask_to_set(int(menu_masks(table, i)[table.opp_index(opp)]))
        sizes.append(len(menu))
        expected = frozenset(range(outcome[i] + 1))
        if menu != expected:
            return AuditReport(
                "extreme_menus",
                False,
                {"agent": i, "menu": sorted(menu), "expected": sorted(expected)},
                details={"sizes": sizes},
            )
    return AuditReport(
        "extreme_menus",
        sorted(sizes) == list(range(1, size + 1)),
        details={"sizes": sizes},
    )


def _power_by_profile(table: OutcomeTable) -> np.ndarray:
    """``P[i, j, s]``: at profile s, agent i can change agent j's object."""
    deltas = bilateral_deltas(table)
    power = np.zeros((table.n, table.n, table.size), dtype=bool)
    for i in range(table.n):
        for j in range(table.n):
            if i != j:
                power[i, j] = table.expand(deltas[i, j] > 1, i)
    return power


def _masks_by_profile(table: OutcomeTable) -> np.ndarray:
    return np.stack([table.expand(menu_masks(table, i), i) for i in range(table.n)])


def check_power_transitivity(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Power over power implies power, at every profile."""
    table = as_table(rule)
    _check_env(table, n, m)
    power = _power_by_profile(table)
    failing = np.zeros(table.size, dtype=bool)
    first = None
    for i, j, k in itertools.permutations(range(table.n), 3):
        bad = power[i, j] & power[j, k] & ~power[i, k]
        failing |= bad
        hits = np.nonzero(bad)[0]
        if hits.size and (first is None or hits[0] < first[0]):
            first = (int(hits[0]), (i, j, k))
    details = {"failing_profiles": int(failing.sum())}
    if first is None:
        return AuditReport("power_transitivity", True, work=table.size, details=details)
    flat, triple = first
    return AuditReport(
        "power_transitivity",
        False,
        {"profile": _profile_json(table, flat), "agents": list(triple)},
        table.size,
        details,
    )


def failing_transitivity_profiles(rule) -> list[tuple]:
    """Every (profile, triple) where power fails to be transitive."""
    table = as_table(rule)
    power = _power_by_profile(table)
    out = []
    for i, j, k in itertools.permutations(range(table.n), 3):
        for s in np.nonzero(power[i, j] & power[j, k] & ~power[i, k])[0]:
            out.append((table.profile_at(int(s)), (i, j, k)))
    return out


def _superset(masks: np.ndarray, i: int, j: int) -> np.ndarray:
    return (masks[j] & ~masks[i]) == 0


def verify_prop_menu_superset(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Power over j holds exactly when one's menu contains j's menu."""
    table = as_table(rule)
    _check_env(table, n, m)
    power = _power_by_profile(table)
    masks = _masks_by_profile(table)
    for i, j in itertools.permutations(range(table.n), 2):
        bad = np.nonzero(power[i, j] != _superset(masks, i, j))[0]
        if bad.size:
            s = int(bad[0])
            return AuditReport(
                "menu_superset_power",
                False,
                {
                    "profile": _profile_json(table, s),
                    "agents": [i, j],
                    "power": bool(power[i, j, s]),
                    "menus": [sorted(mask_to_set(int(masks[i, s]))), sorted(mask_to_set(int(masks[j, s])))],
                },
                table.size,
            )
    return AuditReport("menu_superset_power", True, work=table.size)


def verify_lemma_inclusion_power(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Containing another agent's menu implies power over her."""
    table = as_table(rule)
    _check_env(table, n, m)
    power = _power_by_profile(table)
    masks = _masks_by_profile(table)
    for i, j in itertools.permutations(range(table.n), 2):
        bad = np.nonzero(_superset(masks, i, j) & ~power[i, j])[0]
        if bad.size:
            return AuditReport(
                "inclusion_implies_power",
                False,
                {"profile": _profile_json(table, int(bad[0])), "agents": [i, j]},
                table.size,
            )
    return AuditReport("inclusion_implies_power", True, work=table.size)


def verify_ttc_fullmenu(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Does every agent get the full object set as her menu at some opposing profile?"""
    table = as_table(rule)
    _check_env(table, n, m)
    full = (1 << table.outcome_count) - 1
    reached, witnesses = [], {}
    for i in range(table.n):
        hits = np.nonzero(menu_masks(table, i) == full)[0]
        if hits.size:
            reached.append(i)
            witnesses[str(i)] = [report_json(r) for r in table.opposing(i, int(hits[0])).orders]
    never = [i for i in range(table.n) if i not in reached]
    return AuditReport(
        "full_menu_for_everyone",
        not never,
        None if not never else {"agents_never_full": never},
        table.size,
        {"full_menu_agents": reached, "witnesses": witnesses},
    )


def check_balanced(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Each agent receives her k-th choice equally often, for every k."""
    table = as_table(rule)
    _check_env(table, n, m)
    ranks = _true_ranks(table)
    counts = np.stack(
        [np.bincount(ranks[:, i], minlength=table.outcome_count) for i in range(table.n)]
    )
    equal = bool((counts == counts[0]).all())
    return AuditReport(
        "balancedness",
        equal,
        None if equal else {"counts": counts.tolist()},
        table.size,
        {"counts": counts.tolist()},
    )


@dataclass(frozen=True)
class BilateralPower:
    value: int
    agent: int
    target: int
    opposing: OpposingProfile
    max_matrix: list
    min_matrix: list


def max_bilateral_power(rule, n: int | None = None, m: int | None = None) -> BilateralPower:
    """Largest menu any agent has for any other single agent, with a witness."""
    table = as_table(rule)
    _check_env(table, n, m)
    deltas = bilateral_deltas(table)
    top = deltas.max(axis=2)
    for i in range(table.n):
        top[i, i] = 0
    i, j = (int(v) for v in np.unravel_index(int(np.argmax(top)), top.shape))
    p = int(np.argmax(deltas[i, j]))
    low = deltas.min(axis=2)
    return BilateralPower(
        int(top[i, j]), i, j, table.opposing(i, p), top.tolist(), low.tolist()
    )


def verify_sd_power(rule, n: int | None = None, m: int | None = None) -> AuditReport:
    """Under serial dictatorship an earlier agent always has a menu of exactly
    two objects for a later one, and a later agent never affects an earlier one."""
    if getattr(rule, "kind", None) != "sd":
        raise ValueError("needs a serial dictatorship")
    table = as_table(rule)
    _check_env(table, n, m)
    deltas = bilateral_deltas(table)
    order = rule.order
    for a, b in itertools.permutations(range(table.n), 2):
        i, j = order[a], order[b]
        want = 2 if a < b else 1
        bad = np.nonzero(deltas[i, j] != want)[0]
        if bad.size:
            p = int(bad[0])
            return AuditReport(
                "sd_bilateral_power",
                False,
                {
                    "agents": [i, j],
                    "opposing": [report_json(r) for r in table.opposing(i, p).orders],
                    "delta": int(deltas[i, j, p]),
                    "expected": want,
                },
                table.size,
            )
    return AuditReport("sd_bilateral_power", True, work=table.size)


# -- catalog ------------------------------------------------------------------------------------------


CHECKS = {
    "sp": check_strategy_proof,
    "hammond": check_hammond,
    "gsp": check_group_sp,
    "eff": check_efficiency,
    "nonbossy": check_nonbossy,
    "nonautarky": check_nonautarkic,
    "realloc": check_reallocation_proof,
    "transitivity": check_power_transitivity,
    "balanced": check_balanced,
    "fibers": verify_lemma_fibers,
    "extreme": verify_extreme_menus,
    "superset": verify_prop_menu_superset,
    "fullmenu": verify_ttc_fullmenu,
}

CATALOG_PROPERTIES = {
    "sp": "sp",
    "gsp": "gsp",
    "eff": "efficient",
    "nonbossy": "nonbossy",
    "nonautarky": "nonautarkic",
    "realloc": "realloc",
}


def run_checks(rule, checks: Sequence[str]) -> list[AuditReport]:
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)}")
    return [CHECKS[c](rule) for c in checks]


@dataclass
class CatalogResult:
    key: str
    check: str
    expected: bool | None
    report: AuditReport

    @property
    def matches(self) -> bool:
        return self.expected is None or self.expected == self.report.passed


def audit_catalog(n: int, checks: Sequence[str] = tuple(CATALOG_PROPERTIES)) -> list[CatalogResult]:
    """Run ``checks`` on every catalog rule and pair each verdict with its expectation."""
    from .catalog import catalog

    results = []
    for entry in catalog(n):
        for check in checks:
            report = CHECKS[check](entry.rule)
            results.append(CatalogResult(entry.key, check, entry.expects(CATALOG_PROPERTIES[check]), report))
    return results


__all__ = [name for name in dir() if name.startswith(("check_", "verify_"))] + [
    "AuditReport",
    "BilateralPower",
    "CapacityError",
    "audit_catalog",
    "max_bilateral_power",
    "pareto_dominates_rule",
    "run_checks",
]


# -- harnesses over specific rules ---------------------------------------------------------


def verify_broker_nontransitivity(n: int) -> AuditReport:
    """The broker rule's transitivity failures are exactly the broker pattern."""
    from .catalog import broker_configuration_triples, broker_rule

    table = as_table(broker_rule(n))
    observed = {(tuple(map(tuple, p)), t) for p, t in failing_transitivity_profiles(table)}
    predicted = set()
    for s in range(table.size):
        profile = tuple(map(tuple, table.profile_at(s)))
        for triple in broker_configuration_triples(profile):
            predicted.add((profile, triple))
    ok = observed == predicted and bool(observed)
    extra = sorted(observed ^ predicted)
    return AuditReport(
        "broker_nontransitivity_pattern",
        ok,
        None if ok else {"mismatch": [[list(map(list, p)), list(t)] for p, t in extra[:1]]},
        table.size,
        {"failures": len(observed)},
    )


def rotational_profile(n: int) -> tuple[tuple[int, ...], ...]:
    """Agent i ranks objects i+1, i+2, ..., i cyclically."""
    return tuple(tuple((i + 1 + t) % n for t in range(n)) for i in range(n))


def bilateral_at(rule, profile) -> list[list[int]]:
    """``D[i][j]``: size of i's menu for j's object at ``profile`` (0 on the diagonal)."""
    table = as_table(rule)
    deltas = bilateral_deltas(table)
    out = [[0] * table.n for _ in range(table.n)]
    for i in range(table.n):
        p = table.opp_index(OpposingProfile.from_profile(tuple(profile), i))
        for j in range(table.n):
            if i != j:
                out[i][j] = int(deltas[i, j, p])
    return out


def full_power_profile(n: int, i: int, j: int) -> tuple[tuple[int, ...], ...]:
    """Profile at which ``i`` can give ``j`` any object under TTC with agent
    ``a`` endowed with object ``a``.

    List the agents as ``i``, the others ascending, then ``j``.  Every agent
    but ``i`` ranks ``i``'s object first, then the object of the agent after
    her in the list, then the rest in list order.
    """
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError("need two distinct agents")
    seq = [i] + [a for a in range(n) if a not in (i, j)] + [j]
    profile: list[tuple[int, ...]] = [tuple(seq)] * n
    for t in range(1, n):
        first = [i] + ([seq[t + 1]] if t < n - 1 else [])
        profile[seq[t]] = tuple(first + [x for x in seq if x not in first])
    return tuple(profile)


def verify_ttc_full_bilateral(n: int) -> AuditReport:
    """Under TTC (agent a endowed with object a) every agent can give every
    other agent any object at some profile; witnesses included."""
    from .rules import top_trading_cycles

    table = as_table(top_trading_cycles(range(n)))
    deltas = bilateral_deltas(table)
    witnesses = {}
    for i, j in itertools.permutations(range(n), 2):
        profile = full_power_profile(n, i, j)
        value = int(deltas[i, j, table.opp_index(OpposingProfile.from_profile(profile, i))])
        if value != n:
            return AuditReport(
                "ttc_full_bilateral_power",
                False,
                {"agents": [i, j], "profile": [list(r) for r in profile], "delta": value},
                table.size,
            )
        witnesses[f"{i}->{j}"] = [list(r) for r in profile]
    return AuditReport("ttc_full_bilateral_power", True, work=table.size, details={"witnesses": witnesses})


def verify_sd_chain(
    n: int, *, samples: int | None = None, seed: int = 0, all_dictator_orders: bool = True
) -> AuditReport:
    """Closed-form reallocation after the first dictator changes her pick
    against re-running serial dictatorship.

    Exhaustive over profiles, new picks and (optionally) dictator orders, or
    ``samples`` random draws of all three.
    """
    from .rules import evaluate, sd_chain_reallocation, serial_dictatorship

    orders = list(itertools.permutations(range(n))) if all_dictator_orders else [tuple(range(n))]
    identity = as_table(serial_dictatorship(range(n))) if samples is None else None
    checked = 0

    def direct(order, profile, x):
        changed = list(profile)
        changed[order[0]] = tuple(StrictOrder(profile[order[0]]).promote(x))
        if identity is None:
            return evaluate(serial_dictatorship(order), changed)
        # relabel agents so that the dictator order becomes 0, 1, ..., n-1
        got = identity.outcome([changed[a] for a in order])
        result = [0] * n
        for pos, a in enumerate(order):
            result[a] = got[pos]
        return tuple(result)

    def cases():
        if samples is None:
            for order in orders:
                for s in range(identity.size):
                    profile = identity.profile_at(s)
                    for x in range(n):
                        yield order, profile, x
        else:
            rng = np.random.default_rng(seed)
            for _ in range(samples):
                order = tuple(int(a) for a in rng.permutation(n))
                profile = tuple(tuple(int(x) for x in rng.permutation(n)) for _ in range(n))
                yield order, profile, int(rng.integers(n))

    for order, profile, x in cases():
        checked += 1
        closed = sd_chain_reallocation(order, profile, x)
        if closed != direct(order, profile, x):
            return AuditReport(
                "sd_chain_closed_form",
                False,
                {"order": list(order), "profile": [list(r) for r in profile], "new_top": x},
                checked,
            )
    return AuditReport(
        "sd_chain_closed_form", True, work=checked, details={"seed": seed if samples else None}
    )
