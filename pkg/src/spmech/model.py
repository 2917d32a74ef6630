"""Finite assignment environments.

Objects and agents are dense integer indices.  A strict order is a ranking of
all ``m`` objects, most preferred first; a profile is one order per agent and
an assignment is a tuple giving the object of each agent.  Letters
(``a`` = 0, ``b`` = 1, ...) are only used for parsing and printing.
"""

from __future__ import annotations

import itertools
import math
import os
import string
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

MAX_OBJECTS = 8
DEFAULT_BUDGET = 10**9

Assignment = tuple  # agent -> object
Pair = tuple  # (agent, object)
SubmatchingKey = tuple  # sorted tuple of (agent, object) pairs


class CapacityError(ValueError):
    """An enumeration would exceed the configured desk-scale budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


def sweep_budget() -> int:
    """Profile budget, overridable through ``SPMECH_BUDGET``."""
    raw = os.environ.get("SPMECH_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    budget = int(raw)
    if budget <= 0:
        raise ValueError("SPMECH_BUDGET must be positive")
    return budget


class StrictOrder(tuple):
    """A strict ranking of objects ``0..m-1``; position 0 is the top."""

    __slots__ = ()

    def __new__(cls, ranking: Iterable[int]):
        ranking = tuple(int(x) for x in ranking)
        if sorted(ranking) != list(range(len(ranking))):
            raise ValueError(f"not a permutation of 0..{len(ranking) - 1}: {ranking}")
        return super().__new__(cls, ranking)

    @property
    def m(self) -> int:
        return len(self)

    @property
    def ranking(self) -> tuple[int, ...]:
        return tuple(self)

    @property
    def top(self) -> int:
        return self[0]

    def rank_of(self, x: int) -> int:
        """Zero-based position of object ``x``."""
        return self.index(x)

    def prefers(self, x: int, y: int) -> bool:
        """Strict preference of ``x`` over ``y``."""
        return self.index(x) < self.index(y)

    def weakly_prefers(self, x: int, y: int) -> bool:
        return self.index(x) <= self.index(y)

    def promote(self, x: int) -> StrictOrder:
        """Same order with ``x`` moved to the top, the tail order preserved."""
        return StrictOrder((x,) + tuple(y for y in self if y != x))

    def letters(self) -> str:
        return format_order(self)

    def __repr__(self) -> str:
        return f"StrictOrder({format_order(self)!r})"

    @classmethod
    def parse(cls, text: str) -> StrictOrder:
        return parse_order(text)


Profile = tuple  # tuple of StrictOrder, one per agent


@dataclass(frozen=True)
class OpposingProfile:
    """Reports of every agent except ``excluded``, in ascending agent order."""

    excluded: int
    orders: tuple

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(self.orders))

    @property
    def n(self) -> int:
        return len(self.orders) + 1

    def complete(self, own: Any) -> tuple:
        """Full profile with ``own`` inserted for the excluded agent."""
        i = self.excluded
        return self.orders[:i] + (own,) + self.orders[i:]

    def report_of(self, agent: int) -> Any:
        if agent == self.excluded:
            raise ValueError(f"agent {agent} is the excluded agent")
        return self.orders[agent if agent < self.excluded else agent - 1]

    @classmethod
    def from_profile(cls, profile: Sequence, i: int) -> OpposingProfile:
        return cls(i, tuple(profile[:i]) + tuple(profile[i + 1 :]))


# -- letters --------------------------------------------------------------------


def object_letter(x: int) -> str:
    return string.ascii_lowercase[x]


def format_order(order: Sequence[int]) -> str:
    return "".join(object_letter(x) for x in order)


def format_objects(objects: Iterable[int]) -> str:
    return "".join(object_letter(x) for x in sorted(objects))


def parse_order(text: str) -> StrictOrder:
    """``"acb"`` -> a > c > b."""
    text = text.strip()
    if not text or len(text) > 26:
        raise ValueError(f"bad order string {text!r}")
    try:
        ranking = [string.ascii_lowercase.index(ch) for ch in text]
    except ValueError:
        raise ValueError(f"order {text!r} must use lowercase letters") from None
    if len(set(ranking)) != len(ranking):
        raise ValueError(f"order {text!r} repeats an object")
    return StrictOrder(ranking)


def parse_profile(text: str) -> tuple[StrictOrder, ...]:
    """``"abc,bca,cab"`` -> one order per agent, all over the same objects."""
    orders = tuple(parse_order(part) for part in text.split(","))
    if len({o.m for o in orders}) != 1:
        raise ValueError(f"profile {text!r} mixes object counts")
    return orders


def format_profile(profile: Sequence[Sequence[int]]) -> str:
    return ",".join(format_order(o) for o in profile)


# -- enumeration ----------------------------------------------------------------


def _check_object_count(m: int) -> None:
    if not 1 <= m <= MAX_OBJECTS:
        raise CapacityError(f"object count {m} outside 1..{MAX_OBJECTS}", required=m)


@lru_cache(maxsize=None)
def all_orders(m: int) -> tuple[StrictOrder, ...]:
    """Every strict order over ``m`` objects, lexicographic by ranking."""
    _check_object_count(m)
    return tuple(StrictOrder(p) for p in itertools.permutations(range(m)))


def enumerate_orders(m: int) -> Iterator[StrictOrder]:
    _check_object_count(m)
    return iter(all_orders(m))


@lru_cache(maxsize=None)
def rank_table(m: int) -> np.ndarray:
    """``rank_table(m)[k, x]`` is the position of object ``x`` in order ``k``."""
    table = np.empty((math.factorial(m), m), dtype=np.int8)
    for k, order in enumerate(all_orders(m)):
        table[k, list(order)] = np.arange(m)
    return table


def order_index(order: Sequence[int]) -> int:
    """Lexicographic index of an order among ``all_orders(len(order))``."""
    # Lehmer code
    remaining = sorted(order)
    index = 0
    for pos, x in enumerate(order):
        k = remaining.index(x)
        index += k * math.factorial(len(order) - 1 - pos)
        remaining.pop(k)
    return index


def profile_count(n: int, m: int) -> int:
    return math.factorial(m) ** n


def check_budget(required: int, budget: int | None = None) -> None:
    budget = sweep_budget() if budget is None else budget
    if required > budget:
        raise CapacityError(
            f"sweep needs {required} evaluations, budget is {budget}", required=required
        )


def enumerate_profiles(
    n: int,
    m: int,
    *,
    budget: int | None = None,
    start: int = 0,
    stop: int | None = None,
) -> Iterator[tuple[StrictOrder, ...]]:
    """All ``(m!)^n`` profiles, agent 0 varying slowest.

    ``start``/``stop`` select a slice of the index range so sweeps can be
    split between workers.
    """
    _check_object_count(m)
    check_budget(profile_count(n, m), budget)
    product = itertools.product(all_orders(m), repeat=n)
    return itertools.islice(product, start, stop)


# -- domains and assignments -----------------------------------------------------


def check_top_rich(domain: Iterable[Sequence[int]], m: int) -> bool:
    """True iff every object is the top of some order in ``domain``."""
    domain = list(domain)
    if not domain:
        raise ValueError("empty preference domain")
    return {order[0] for order in domain} == set(range(m))


def is_assignment(mu: Sequence[int], m: int) -> bool:
    return len(set(mu)) == len(mu) and all(0 <= x < m for x in mu)


def assignment_pareto_dominates(
    mu1: Sequence[int], mu2: Sequence[int], profile: Sequence[Sequence[int]]
) -> bool:
    """Every agent weakly prefers her object in ``mu1``, someone strictly."""
    strict = False
    for order, x, y in zip(profile, mu1, mu2):
        rx, ry = order.index(x), order.index(y)
        if rx > ry:
            return False
        strict = strict or rx < ry
    return strict


# -- submatchings -----------------------------------------------------------------


def submatching_key(pairs: Iterable[Pair]) -> SubmatchingKey:
    """Canonical sorted form of a set of (agent, object) pairs."""
    key = tuple(sorted((int(a), int(x)) for a, x in pairs))
    agents = [a for a, _ in key]
    objects = [x for _, x in key]
    if len(set(agents)) != len(agents) or len(set(objects)) != len(objects):
        raise ValueError(f"not a partial bijection: {key}")
    return key


def submatching_le(a: SubmatchingKey, b: SubmatchingKey) -> bool:
    """``a`` is a submatching of ``b``."""
    return set(a) <= set(b)


def unmatched_agents(key: SubmatchingKey, n: int) -> list[int]:
    matched = {a for a, _ in key}
    return [i for i in range(n) if i not in matched]


def unmatched_objects(key: SubmatchingKey, m: int) -> list[int]:
    matched = {x for _, x in key}
    return [x for x in range(m) if x not in matched]


@lru_cache(maxsize=None)
def proper_submatchings(n: int, m: int | None = None) -> tuple[SubmatchingKey, ...]:
    """Every partial bijection with fewer than ``n`` pairs, canonical keys."""
    m = n if m is None else m
    keys = []
    for size in range(n):
        for agents in itertools.combinations(range(n), size):
            for objects in itertools.permutations(range(m), size):
                keys.append(tuple(zip(agents, objects)))
    return tuple(sorted(keys, key=lambda k: (len(k), k)))


# -- tabulated mechanisms -----------------------------------------------------------


@dataclass(eq=False)
class OutcomeTable:
    """A mechanism evaluated on every report profile.

    ``data[r_0, ..., r_{n-1}, i]`` is agent ``i``'s relevant outcome when
    agent ``a`` submits report index ``r_a``.  ``ranks[r, x]`` is the position
    of outcome ``x`` under report ``r`` (0 = best), so a report doubles as the
    agent's true preference in welfare comparisons.
    """

    n: int
    reports: tuple
    ranks: np.ndarray
    data: np.ndarray
    name: str = ""

    @property
    def k(self) -> int:
        return len(self.reports)

    @property
    def outcome_count(self) -> int:
        return self.ranks.shape[1]

    @property
    def size(self) -> int:
        return self.k**self.n

    def flat(self) -> np.ndarray:
        """``(k^n, n)`` view, rows in lexicographic profile order."""
        return self.data.reshape(self.size, self.n)

    def view(self, i: int) -> np.ndarray:
        """``(k, k^(n-1), n)``: agent i's report first, opposing profiles after."""
        moved = np.moveaxis(self.data, i, 0)
        return moved.reshape(self.k, self.k ** (self.n - 1), self.n)

    def report_index(self, report: Any) -> int:
        return self.reports.index(report)

    def profile_index(self, profile: Sequence) -> tuple[int, ...]:
        return tuple(self.report_index(r) for r in profile)

    def outcome(self, profile: Sequence) -> tuple[int, ...]:
        return tuple(int(x) for x in self.data[self.profile_index(profile)])

    def opp_index(self, opp: OpposingProfile) -> int:
        index = 0
        for r in opp.orders:
            index = index * self.k + self.report_index(r)
        return index

    def opposing(self, i: int, index: int) -> OpposingProfile:
        digits = []
        for _ in range(self.n - 1):
            index, r = divmod(index, self.k)
            digits.append(self.reports[r])
        return OpposingProfile(i, tuple(reversed(digits)))

    def profile_at(self, flat_index: int) -> tuple:
        digits = []
        for _ in range(self.n):
            flat_index, r = divmod(flat_index, self.k)
            digits.append(self.reports[r])
        return tuple(reversed(digits))

    def expand(self, values: np.ndarray, i: int) -> np.ndarray:
        """Broadcast per-opposing-profile ``values`` of agent i to full profiles."""
        shaped = values.reshape((self.k,) * (self.n - 1))
        shaped = np.expand_dims(shaped, i)
        return np.broadcast_to(shaped, (self.k,) * self.n).reshape(self.size)


def build_table(
    n: int,
    reports: Sequence,
    ranks: np.ndarray,
    outcome: Callable[[tuple], Sequence[int]],
    *,
    name: str = "",
    budget: int | None = None,
) -> OutcomeTable:
    """Evaluate ``outcome`` on every profile of ``reports`` (reference path)."""
    reports = tuple(reports)
    check_budget(len(reports) ** n, budget)
    data = np.empty((len(reports) ** n, n), dtype=np.int8)
    for row, profile in enumerate(itertools.product(reports, repeat=n)):
        data[row] = outcome(profile)
    return OutcomeTable(n, reports, ranks, data.reshape((len(reports),) * n + (n,)), name)


def distinct_count(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Number of distinct entries along ``axis``."""
    ordered = np.sort(values, axis=axis)
    changes = np.diff(ordered, axis=axis) != 0
    return changes.sum(axis=axis) + 1


def encode_columns(columns: np.ndarray, base: int) -> np.ndarray:
    """Pack the last axis of small non-negative ints into one int64 code."""
    code = np.zeros(columns.shape[:-1], dtype=np.int64)
    for c in range(columns.shape[-1]):
        code = code * base + columns[..., c]
    return code
