"""Exact laws of ranks and menu sizes under impartial culture.

Preferences are drawn independently and uniformly from all strict orders.
Every probability is a :class:`fractions.Fraction` obtained from integer
counts over the full profile space; nothing here uses floating point except
the explicitly approximate Monte Carlo helper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .audit import AuditReport, as_table, report_json
from .menus import delta_self, delta_self_all
from .model import OpposingProfile, OutcomeTable, all_orders


@dataclass(frozen=True)
class ExactDistribution:
    """Finite law with rational masses.

    ``better`` says which direction is favourable: ``"larger"`` for menu
    sizes, ``"smaller"`` for ranks (rank 1 is the top).  Stochastic dominance
    is read in that direction.
    """

    support: tuple[int, ...]
    mass: tuple[Fraction, ...]
    better: str = "larger"

    def __post_init__(self):
        if len(self.support) != len(self.mass):
            raise ValueError("support and mass differ in length")
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be strictly increasing")
        if any(p < 0 for p in self.mass) or sum(self.mass, Fraction(0)) != 1:
            raise ValueError("masses must be non-negative and sum to one")
        if self.better not in ("larger", "smaller"):
            raise ValueError("better must be 'larger' or 'smaller'")

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], better: str = "larger") -> ExactDistribution:
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("no observations")
        support = tuple(sorted(v for v, c in counts.items() if c))
        return cls(support, tuple(Fraction(counts[v], total) for v in support), better)

    @classmethod
    def point(cls, value: int, better: str = "larger") -> ExactDistribution:
        return cls((value,), (Fraction(1),), better)

    def prob(self, value: int) -> Fraction:
        return dict(zip(self.support, self.mass)).get(value, Fraction(0))

    def cdf(self, value: int) -> Fraction:
        return sum((p for v, p in zip(self.support, self.mass) if v <= value), Fraction(0))

    def tail(self, value: int) -> Fraction:
        """P[X > value]."""
        return 1 - self.cdf(value)

    def mean(self) -> Fraction:
        return sum((v * p for v, p in zip(self.support, self.mass)), Fraction(0))

    def rows(self) -> list[tuple[int, int, int, float]]:
        return [(v, p.numerator, p.denominator, float(p)) for v, p in zip(self.support, self.mass)]


def fosd_compare(d1: ExactDistribution, d2: ExactDistribution) -> str:
    """``dominates``, ``dominated``, ``equal`` or ``incomparable``, reading
    dominance in the favourable direction of ``d1``."""
    if d1.better != d2.better:
        raise ValueError("cannot compare laws with different orientations")
    points = sorted(set(d1.support) | set(d2.support))
    if d1.better == "larger":
        good1 = [d1.tail(v - 1) for v in points]  # P[X >= v]
        good2 = [d2.tail(v - 1) for v in points]
    else:
        good1 = [d1.cdf(v) for v in points]  # P[X <= v]
        good2 = [d2.cdf(v) for v in points]
    weak12 = all(a >= b for a, b in zip(good1, good2))
    weak21 = all(b >= a for a, b in zip(good1, good2))
    if weak12 and weak21:
        return "equal"
    if weak12:
        return "dominates"
    if weak21:
        return "dominated"
    return "incomparable"


# -- laws from full sweeps ---------------------------------------------------------------


def rank_of(rule, profile: Sequence[Sequence[int]], i: int) -> int:
    """Position (1 = top) of agent i's object in her own order."""
    outcome = rule.relevant(tuple(profile))[i]
    return list(profile[i]).index(outcome) + 1


def _rank_matrix_by_profile(table: OutcomeTable, i: int) -> np.ndarray:
    """``(k, P)``: rank (1-based) of i's object for each own report and opposing profile."""
    own = table.view(i)[:, :, i]
    return table.ranks[np.arange(table.k)[:, None], own].astype(np.int64) + 1


def exact_rank_distribution(rule, i: int) -> ExactDistribution:
    table = as_table(rule)
    ranks = _rank_matrix_by_profile(table, i).ravel()
    counts = np.bincount(ranks, minlength=table.outcome_count + 1)
    return ExactDistribution.from_counts(
        {v: int(c) for v, c in enumerate(counts) if v}, better="smaller"
    )


def exact_delta_distribution(rule, i: int) -> ExactDistribution:
    table = as_table(rule)
    counts = np.bincount(delta_self_all(table, i), minlength=table.outcome_count + 1)
    return ExactDistribution.from_counts({v: int(c) for v, c in enumerate(counts) if v})


def closed_form_conditional(m: int, r: int, s: int) -> Fraction:
    """P[rank > r | menu size s] when the own order is uniform."""
    if not (1 <= r <= m and 1 <= s <= m):
        raise ValueError(f"need 1 <= r, s <= {m}")
    if r + s > m:
        return Fraction(0)
    f = math.factorial
    return Fraction(f(m - r) * f(m - s), f(m) * f(m - r - s))


def empirical_conditional(rule, i: int) -> dict[tuple[int, int], Fraction]:
    """P[rank > r | menu size s] from the sweep, for every s that occurs."""
    table = as_table(rule)
    m = table.outcome_count
    ranks = _rank_matrix_by_profile(table, i)  # (k, P)
    deltas = delta_self_all(table, i)  # (P,)
    out = {}
    for s in range(1, m + 1):
        cols = deltas == s
        total = int(cols.sum()) * table.k
        if total == 0:
            continue
        chosen = ranks[:, cols]
        for r in range(1, m + 1):
            out[(r, s)] = Fraction(int((chosen > r).sum()), total)
    return out


def verify_conditional_law(rule, i: int) -> AuditReport:
    table = as_table(rule)
    m = table.outcome_count
    empirical = empirical_conditional(table, i)
    for (r, s), value in sorted(empirical.items()):
        expected = closed_form_conditional(m, r, s)
        if value != expected:
            return AuditReport(
                "conditional_rank_law",
                False,
                {"agent": i, "r": r, "s": s, "empirical": str(value), "closed_form": str(expected)},
                table.size,
            )
    sizes = sorted({s for _, s in empirical})
    return AuditReport("conditional_rank_law", True, work=table.size, details={"agent": i, "sizes": sizes})


# -- the linear map between menu-size and rank laws ---------------------------------------


@dataclass(frozen=True)
class RankMatrix:
    """``entries[r-1][s-1] = P[rank > r | menu size s]`` for r, s in 1..m-1."""

    m: int
    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def size(self) -> int:
        return self.m - 1

    def entry(self, r: int, s: int) -> Fraction:
        return self.entries[r - 1][s - 1]


def rank_matrix(m: int) -> RankMatrix:
    if m < 2:
        raise ValueError("need at least two objects")
    return RankMatrix(
        m,
        tuple(
            tuple(closed_form_conditional(m, r, s) for s in range(1, m))
            for r in range(1, m)
        ),
    )


def apply(matrix: RankMatrix, delta_law: ExactDistribution) -> tuple[Fraction, ...]:
    """Rank tails ``(P[rank > r])_{r=1..m-1}`` implied by a menu-size law."""
    probs = [delta_law.prob(s) for s in range(1, matrix.m)]
    return tuple(
        sum((matrix.entry(r, s) * probs[s - 1] for s in range(1, matrix.m)), Fraction(0))
        for r in range(1, matrix.m)
    )


def invert_apply(matrix: RankMatrix, tails: Sequence[Fraction]) -> ExactDistribution:
    """Recover the menu-size law from rank tails.

    Row r only involves sizes ``s <= m - r``, so the last row fixes
    ``P[size = 1]`` and each earlier row adds one new unknown.
    """
    m = matrix.m
    if len(tails) != m - 1:
        raise ValueError(f"expected {m - 1} tail probabilities")
    probs: dict[int, Fraction] = {}
    for r in range(m - 1, 0, -1):
        s_new = m - r
        known = sum((matrix.entry(r, s) * probs[s] for s in range(1, s_new)), Fraction(0))
        probs[s_new] = (Fraction(tails[r - 1]) - known) / matrix.entry(r, s_new)
    probs[m] = 1 - sum(probs.values(), Fraction(0))
    support = tuple(s for s in range(1, m + 1) if probs[s] != 0)
    return ExactDistribution(support, tuple(probs[s] for s in support))


# -- menu size versus rank ---------------------------------------------------------------------


def own_rank_law(rule, i: int, opp: OpposingProfile) -> ExactDistribution:
    """Law of i's rank when only her own order is random."""
    if isinstance(rule, OutcomeTable):
        ranks = _rank_matrix_by_profile(rule, i)[:, rule.opp_index(opp)]
        counts: dict[int, int] = {}
        for v in ranks:
            counts[int(v)] = counts.get(int(v), 0) + 1
        return ExactDistribution.from_counts(counts, better="smaller")
    counts = {}
    for order in all_orders(rule.m):
        v = rank_of(rule, opp.complete(order), i)
        counts[v] = counts.get(v, 0) + 1
    return ExactDistribution.from_counts(counts, better="smaller")


def verify_prop_delta_rank(rule_a, i: int, opp_a, rule_b, j: int, opp_b) -> AuditReport:
    """A larger menu size is equivalent to a stochastically better rank law."""
    if getattr(rule_a, "m", None) != getattr(rule_b, "m", None):
        raise ValueError("menu sizes are only comparable with equally many objects")
    da, db = delta_self(rule_a, i, opp_a), delta_self(rule_b, j, opp_b)
    verdict = fosd_compare(own_rank_law(rule_a, i, opp_a), own_rank_law(rule_b, j, opp_b))
    left = da >= db
    right = verdict in ("dominates", "equal")
    return AuditReport(
        "menu_size_rank_dominance",
        left == right,
        None if left == right else {"delta_a": da, "delta_b": db, "rank_comparison": verdict},
        details={"delta_a": da, "delta_b": db, "rank_comparison": verdict},
    )


def _rank_cdfs(table: OutcomeTable, i: int) -> np.ndarray:
    """``(P, m)`` counts of own reports with rank <= t, per opposing profile."""
    ranks = _rank_matrix_by_profile(table, i)
    m = table.outcome_count
    return np.stack([(ranks <= t).sum(axis=0) for t in range(1, m + 1)], axis=1)


def _distinct_laws(table: OutcomeTable, i: int):
    """Distinct (menu size, rank cdf) pairs over opposing profiles, with one
    representative opposing profile each."""
    rows = np.column_stack([delta_self_all(table, i), _rank_cdfs(table, i)])
    _, first = np.unique(rows, axis=0, return_index=True)
    return rows[first, 0], rows[first, 1:], first


def sweep_prop_delta_rank(rule_a, rule_b) -> AuditReport:
    """The menu-size/rank equivalence for every pair of (agent, opposing
    profile) across the two rules."""
    ta, tb = as_table(rule_a), as_table(rule_b)
    if ta.outcome_count != tb.outcome_count or ta.k != tb.k:
        raise ValueError("menu sizes are only comparable with equally many objects")
    checked = 0
    for i in range(ta.n):
        da, ca, pa = _distinct_laws(ta, i)
        for j in range(tb.n):
            db, cb, pb = _distinct_laws(tb, j)
            left = da[:, None] >= db[None, :]
            right = (ca[:, None, :] >= cb[None, :, :]).all(axis=2)
            bad = np.argwhere(left != right)
            checked += left.size
            if bad.size:
                p, q = (int(v) for v in bad[0])
                return AuditReport(
                    "menu_size_rank_dominance",
                    False,
                    {
                        "agents": [i, j],
                        "opposing_a": [report_json(r) for r in ta.opposing(i, int(pa[p])).orders],
                        "opposing_b": [report_json(r) for r in tb.opposing(j, int(pb[q])).orders],
                    },
                    checked,
                )
    return AuditReport("menu_size_rank_dominance", True, work=checked)


def expected_average_delta(rule) -> Fraction:
    table = as_table(rule)
    total = Fraction(0)
    for i in range(table.n):
        total += Fraction(int(delta_self_all(table, i).sum()), table.k ** (table.n - 1))
    return total / table.n


def verify_expected_avg_delta(rule, n: int | None = None) -> AuditReport:
    """Average expected menu size equals (n + 1) / 2."""
    table = as_table(rule)
    if n is not None and n != table.n:
        raise ValueError(f"rule has {table.n} agents")
    value = expected_average_delta(table)
    target = Fraction(table.n + 1, 2)
    return AuditReport(
        "expected_average_menu_size",
        value == target,
        None if value == target else {"value": str(value), "expected": str(target)},
        table.size,
        {"value": str(value)},
    )


def verify_cor_top_probability(rule, i: int) -> AuditReport:
    """Expected menu size equals m times the probability of getting one's top."""
    table = as_table(rule)
    m = table.outcome_count
    expected_delta = exact_delta_distribution(table, i).mean()
    top = exact_rank_distribution(table, i).prob(1)
    ok = expected_delta == m * top
    return AuditReport(
        "expected_menu_size_top_probability",
        ok,
        None if ok else {"agent": i, "expected_delta": str(expected_delta), "p_top": str(top)},
        table.size,
        {"agent": i, "expected_delta": str(expected_delta), "p_top": str(top)},
    )


def verify_fosd_transfer(rule_a, i: int, rule_b, j: int) -> AuditReport:
    """If one menu-size law dominates another, so does the matching rank law."""
    sa, sb = exact_delta_distribution(rule_a, i), exact_delta_distribution(rule_b, j)
    ra, rb = exact_rank_distribution(rule_a, i), exact_rank_distribution(rule_b, j)
    size_cmp, rank_cmp = fosd_compare(sa, sb), fosd_compare(ra, rb)
    ok = size_cmp not in ("dominates", "equal") or rank_cmp in ("dominates", "equal")
    return AuditReport(
        "menu_size_dominance_transfers",
        ok,
        None if ok else {"size": size_cmp, "rank": rank_cmp},
        details={"size": size_cmp, "rank": rank_cmp},
    )


def monte_carlo_delta(rule, i: int, samples: int, seed: int = 0) -> float:
    """Approximate E[menu size] by sampling opposing profiles.  Approximate:
    for smoke tests at sizes too large to enumerate, never for acceptance."""
    rng = np.random.default_rng(seed)
    m = rule.m
    total = 0
    for _ in range(samples):
        orders = tuple(tuple(int(x) for x in rng.permutation(m)) for _ in range(rule.n - 1))
        total += delta_self(rule, i, OpposingProfile(i, orders))
    return total / samples
