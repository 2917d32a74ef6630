"""Binary voting rules as two-outcome mechanisms.

Each voter reports which of the outcomes 0 and 1 she prefers.  A voter's menu
has two elements exactly when she is decisive, so her expected menu size is
one plus her probability of being decisive; under the two classical random
electorates this gives the Banzhaf and Shapley-Shubik indices.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .audit import AuditReport, freedom_dominates, pareto_dominates_rule
from .model import StrictOrder, all_orders

MAX_VOTERS = 20


class VotingError(ValueError):
    """Malformed game description."""


@dataclass(frozen=True)
class BinaryRule:
    """Truth table of a binary rule.

    ``table[index]`` is the outcome when voter ``i`` votes bit
    ``(index >> (n - 1 - i)) & 1``, so indices follow lexicographic order of
    vote profiles with voter 0 most significant.
    """

    n: int
    table: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VOTERS:
            raise VotingError(f"between 1 and {MAX_VOTERS} voters supported")
        if len(self.table) != 2**self.n or any(v not in (0, 1) for v in self.table):
            raise VotingError(f"truth table must hold {2 ** self.n} zeros and ones")

    @property
    def m(self) -> int:
        return 2

    @classmethod
    def from_function(cls, n: int, fn: Callable[[tuple[int, ...]], int], name: str = "") -> BinaryRule:
        return cls(n, tuple(int(fn(v)) for v in itertools.product((0, 1), repeat=n)), name)

    def outcome(self, votes: Sequence[int]) -> int:
        index = 0
        for v in votes:
            index = index * 2 + int(v)
        return self.table[index]

    # generic mechanism interface: reports are the two strict orders over {0, 1}
    def reports(self) -> tuple[StrictOrder, ...]:
        return all_orders(2)

    def relevant(self, profile) -> tuple[int, ...]:
        outcome = self.outcome([order[0] for order in profile])
        return (outcome,) * self.n

    def label(self) -> str:
        return self.name or "binary"

    def is_monotone(self) -> bool:
        for index in range(2**self.n):
            for i in range(self.n):
                bit = 1 << (self.n - 1 - i)
                if not index & bit and self.table[index] > self.table[index | bit]:
                    return False
        return True

    def is_surjective(self) -> bool:
        return set(self.table) == {0, 1}


def weighted(quota: int, weights: Sequence[int], name: str = "") -> BinaryRule:
    """Outcome 1 iff the weight of the 1-voters reaches ``quota``."""
    weights = tuple(weights)
    return BinaryRule.from_function(
        len(weights),
        lambda v: sum(w for w, x in zip(weights, v) if x) >= quota,
        name or f"[{quota};{','.join(map(str, weights))}]",
    )


def majority(n: int) -> BinaryRule:
    return BinaryRule.from_function(n, lambda v: 2 * sum(v) > n, f"majority{n}")


def dictator(n: int, d: int) -> BinaryRule:
    return BinaryRule.from_function(n, lambda v: v[d], f"dictator{d}")


def unanimity(n: int) -> BinaryRule:
    """Outcome 1 only if everybody prefers it."""
    return BinaryRule.from_function(n, lambda v: all(v), "unanimity")


def constant(n: int, value: int) -> BinaryRule:
    return BinaryRule.from_function(n, lambda v: value, f"constant{value}")


_GAME = re.compile(r"^\[\s*(\d+)\s*;\s*(\d+(?:\s*,\s*\d+)*)\s*\]$")


def parse_game(text: str) -> BinaryRule:
    """Weighted game in the usual ``[quota; w1, w2, ...]`` notation."""
    match = _GAME.match(text.strip())
    if not match:
        raise VotingError(f"cannot parse weighted game {text!r}")
    weights = [int(w) for w in match.group(2).split(",")]
    return weighted(int(match.group(1)), weights)


def table_from_text(text: str, name: str = "") -> BinaryRule:
    """Truth table as a string of 0/1 characters (whitespace ignored)."""
    bits = [c for c in text if not c.isspace()]
    if not bits or any(c not in "01" for c in bits):
        raise VotingError("truth table must be a string of 0s and 1s")
    n = len(bits).bit_length() - 1
    if 2**n != len(bits):
        raise VotingError(f"truth table length {len(bits)} is not a power of two")
    return BinaryRule(n, tuple(int(c) for c in bits), name)


def monotone_games(n: int) -> list[BinaryRule]:
    """Every monotone truth table on ``n <= 4`` voters."""
    if n > 4:
        raise VotingError("monotone game enumeration is limited to four voters")
    games = []
    for table in itertools.product((0, 1), repeat=2**n):
        rule = BinaryRule(n, table)
        if rule.is_monotone():
            games.append(rule)
    return games


# -- decisiveness and indices -------------------------------------------------------------


def _full(i: int, opp: Sequence[int], vote: int) -> list[int]:
    return list(opp[:i]) + [vote] + list(opp[i:])


def _check_opp(rule: BinaryRule, i: int, opp: Sequence[int]) -> None:
    if not 0 <= i < rule.n or len(opp) != rule.n - 1 or any(v not in (0, 1) for v in opp):
        raise VotingError(f"need voter in range and {rule.n - 1} opposing votes")


def menu_binary(rule: BinaryRule, i: int, opp: Sequence[int]) -> frozenset[int]:
    _check_opp(rule, i, opp)
    return frozenset(rule.outcome(_full(i, opp, v)) for v in (0, 1))


def decisive(rule: BinaryRule, i: int, opp: Sequence[int]) -> bool:
    _check_opp(rule, i, opp)
    return rule.outcome(_full(i, opp, 0)) != rule.outcome(_full(i, opp, 1))


def swing_profiles(rule: BinaryRule, i: int) -> list[tuple[int, ...]]:
    return [
        opp for opp in itertools.product((0, 1), repeat=rule.n - 1) if decisive(rule, i, opp)
    ]


def banzhaf(rule: BinaryRule, i: int) -> Fraction:
    return Fraction(len(swing_profiles(rule, i)), 2 ** (rule.n - 1))


def shapley_shubik_formula(rule: BinaryRule, i: int) -> Fraction:
    """Sum over swing profiles of ``a! (n-1-a)! / n!`` with ``a`` the number of
    other voters voting 1 (the coalition before the pivot)."""
    n = rule.n
    f = math.factorial
    return sum(
        (Fraction(f(sum(opp)) * f(n - 1 - sum(opp)), f(n)) for opp in swing_profiles(rule, i)),
        Fraction(0),
    )


def shapley_shubik_literal(rule: BinaryRule, i: int) -> Fraction | None:
    """The same sum with ``(a - 1)! (n - a)!``; ``None`` when some swing has
    ``a = 0`` and the expression is undefined."""
    n = rule.n
    f = math.factorial
    total = Fraction(0)
    for opp in swing_profiles(rule, i):
        a = sum(opp)
        if a == 0:
            return None
        total += Fraction(f(a - 1) * f(n - a), f(n))
    return total


def shapley_shubik_pivot(rule: BinaryRule, i: int) -> Fraction:
    """Share of voter orderings in which ``i`` flips the outcome when she
    joins the 1-voters ahead of her."""
    if rule.n > 9:
        raise VotingError("pivot enumeration is limited to nine voters")
    hits = 0
    for perm in itertools.permutations(range(rule.n)):
        ahead = perm[: perm.index(i)]
        votes = [1 if a in ahead else 0 for a in range(rule.n)]
        before = rule.outcome(votes)
        votes[i] = 1
        hits += rule.outcome(votes) != before
    return Fraction(hits, math.factorial(rule.n))


def shapley_shubik(rule: BinaryRule, i: int) -> Fraction:
    value = shapley_shubik_formula(rule, i)
    if rule.n <= 9:
        pivot = shapley_shubik_pivot(rule, i)
        assert value == pivot, f"Shapley-Shubik sum {value} disagrees with pivot count {pivot}"
    return value


def _integral_monomial(a: int, b: int) -> Fraction:
    """Integral over [0, 1] of p^a (1 - p)^b, by expanding the binomial."""
    return sum(
        (Fraction(math.comb(b, k) * (-1) ** k, a + k + 1) for k in range(b + 1)), Fraction(0)
    )


def decisive_probability(rule: BinaryRule, i: int, model: str = "bernoulli", p: Fraction = Fraction(1, 2)) -> Fraction:
    """Probability that voter ``i`` is decisive.

    ``bernoulli``: others vote 1 independently with probability ``p``.
    ``homogeneity``: ``p`` is first drawn uniformly from [0, 1].
    """
    others = rule.n - 1
    total = Fraction(0)
    for opp in swing_profiles(rule, i):
        a = sum(opp)
        if model == "bernoulli":
            total += Fraction(p) ** a * (1 - Fraction(p)) ** (others - a)
        elif model == "homogeneity":
            total += _integral_monomial(a, others - a)
        else:
            raise VotingError(f"unknown model {model!r}")
    return total


def expected_delta(rule: BinaryRule, i: int, model: str = "bernoulli", p: Fraction = Fraction(1, 2)) -> Fraction:
    return 1 + decisive_probability(rule, i, model, p)


@dataclass(frozen=True)
class PowerIndexReport:
    game: str
    banzhaf: tuple[Fraction, ...]
    shapley_shubik: tuple[Fraction, ...]
    delta_bernoulli: tuple[Fraction, ...]
    delta_homogeneity: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "game": self.game,
            "voters": [
                {
                    "voter": i,
                    "banzhaf": str(self.banzhaf[i]),
                    "shapley_shubik": str(self.shapley_shubik[i]),
                    "expected_delta_bernoulli": str(self.delta_bernoulli[i]),
                    "expected_delta_homogeneity": str(self.delta_homogeneity[i]),
                }
                for i in range(len(self.banzhaf))
            ],
        }

    def csv_rows(self) -> list[list[str]]:
        rows = [["voter", "banzhaf", "shapley_shubik", "expected_delta_bernoulli", "expected_delta_homogeneity"]]
        for item in self.to_json()["voters"]:
            rows.append([str(v) for v in item.values()])
        return rows


def power_indices(rule: BinaryRule) -> PowerIndexReport:
    voters = range(rule.n)
    return PowerIndexReport(
        rule.label(),
        tuple(banzhaf(rule, i) for i in voters),
        tuple(shapley_shubik(rule, i) for i in voters),
        tuple(expected_delta(rule, i, "bernoulli") for i in voters),
        tuple(expected_delta(rule, i, "homogeneity") for i in voters),
    )


def verify_straffin(rule: BinaryRule) -> AuditReport:
    """Expected menu size minus one equals Banzhaf under fair coins and
    Shapley-Shubik under a uniformly drawn common bias."""
    for i in range(rule.n):
        b = expected_delta(rule, i, "bernoulli") - 1
        h = expected_delta(rule, i, "homogeneity") - 1
        if b != banzhaf(rule, i) or h != shapley_shubik(rule, i):
            return AuditReport(
                "straffin_identities",
                False,
                {"voter": i, "bernoulli": str(b), "homogeneity": str(h)},
            )
    return AuditReport("straffin_identities", True, work=rule.n * 2 ** (rule.n - 1))


def verify_example_imposition(n: int = 2) -> AuditReport:
    """Constant outcome 0 against 'outcome 1 iff everyone prefers it'.

    The second rule Pareto-dominates the first and gives everyone weakly
    larger menus, strictly larger for someone.
    """
    imposed_rule = constant(n, 0)
    unanimous = unanimity(n)
    dominance = pareto_dominates_rule(unanimous, imposed_rule)
    weak, strict = freedom_dominates(unanimous, imposed_rule)
    reverse = pareto_dominates_rule(imposed_rule, unanimous)
    ok = dominance.passed and weak and strict and not reverse.passed
    return AuditReport(
        "imposition_example",
        ok,
        None if ok else {"dominates": dominance.passed, "weak": weak, "strict": strict},
        dominance.work,
        {"pareto": dominance.passed, "menus_weakly_larger": weak, "strictly_somewhere": strict},
    )
