"""Named rules used by the audits, with the properties each is expected to have.

Besides the textbook rules the catalog holds a broker rule (one agent brokers
an object at the start) and four hierarchical exchange rules that are neither
TTC nor bipolar serial dictatorships, one for each way a rule can leave that
class: three initial owners, two owners twice in a row, one owner followed by
two, and an owner sequence that depends on what the first owner took.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rules import (
    BROKER,
    ControlRight,
    ControlRightsTable,
    RuleSpec,
    bipolar_serial_dictatorship,
    bossy_demo,
    hierarchical_exchange,
    imposed,
    serial_dictatorship,
    top_trading_cycles,
    trading_cycles,
)
from .model import unmatched_agents, unmatched_objects

PROPERTIES = (
    "sp",
    "gsp",
    "efficient",
    "nonbossy",
    "nonautarkic",
    "realloc",
    "hierarchical",
    "ttc",
    "bipolar",
)


@dataclass(frozen=True)
class CatalogEntry:
    """A rule and its expected property vector; ``None`` means no claim."""

    key: str
    rule: RuleSpec
    expected: dict = field(default_factory=dict)

    def expects(self, prop: str):
        return self.expected.get(prop)


def _vector(*values) -> dict:
    return dict(zip(PROPERTIES, values))


def broker_rule(n: int) -> RuleSpec:
    """Agents 3, 4, ... pick serially first; then agent 0 brokers the lowest
    remaining object while agents 1 and 2 own the middle and highest one.

    Brokerage ends as soon as one of the last three is matched: an unmatched
    owner keeps her object, and everything else (the brokered object
    included) goes to the lowest unmatched agent other than 0, or to 0 when
    she is alone.  For three agents this is agent 0 brokering ``a`` with 1
    owning ``b`` and 2 owning ``c``.
    """
    if n < 3:
        raise ValueError("the broker rule needs at least three agents")

    def control(key):
        free = unmatched_agents(key, n)
        objects = unmatched_objects(key, n)
        leaders = [a for a in free if a >= 3]
        if leaders:
            return {x: ControlRight(leaders[0]) for x in objects}
        matched = dict(key)
        # objects left when the last three agents started, by initial holder
        base = sorted(set(objects) | {matched[a] for a in (0, 1, 2) if a in matched})
        holder = dict(zip(base, (0, 1, 2)))
        heirs = [a for a in free if a != 0] or free
        rights = {}
        for x in objects:
            h = holder[x]
            if len(free) == 3:
                rights[x] = ControlRight(0, BROKER) if h == 0 else ControlRight(h)
            elif h != 0 and h in free:
                rights[x] = ControlRight(h)
            else:
                rights[x] = ControlRight(heirs[0])
        return rights

    return trading_cycles(ControlRightsTable.from_function(n, control), name="broker")


def three_owner_rule(n: int) -> RuleSpec:
    """Agent 0 owns objects 0 and n-1, agents 1 and 2 own objects 1 and 2."""
    if n < 4:
        raise ValueError("needs at least four agents")
    rest = list(range(n))

    def plist(first):
        return [first] + [a for a in rest if a != first]

    priorities = [plist(0), plist(1), plist(2)] + [plist(0) if x == n - 1 else plist(3) for x in range(3, n)]
    return hierarchical_exchange(ControlRightsTable.from_priorities(n, priorities), name="three_owners")


def two_pairs_rule(n: int) -> RuleSpec:
    """Agents 0 and 1 split the objects; each one's leftovers go to a fresh agent.

    Agent 0 owns the lower half, agent 1 the upper half.  When agent 0 leaves,
    her objects pass to agent 2; agent 1's pass to agent 3.
    """
    if n < 4:
        raise ValueError("needs at least four agents")
    half = n // 2
    low = [0, 2, 1, 3] + list(range(4, n))
    high = [1, 3, 0, 2] + list(range(4, n))
    priorities = [low if x < half else high for x in range(n)]
    return hierarchical_exchange(ControlRightsTable.from_priorities(n, priorities), name="two_pairs")


def split_after_first_rule(n: int) -> RuleSpec:
    """Agent 0 owns everything; then agent 1 owns the lowest remaining object
    and agent 2 the rest.  Leftovers go to the lowest unmatched agent."""
    if n < 4:
        raise ValueError("needs at least four agents")

    def control(key):
        free = unmatched_agents(key, n)
        objects = unmatched_objects(key, n)
        if 0 in free:
            return {x: ControlRight(0) for x in objects}
        first_pick = dict(key)[0]
        remaining = [x for x in range(n) if x != first_pick]
        rights = {}
        for x in objects:
            designated = 1 if x == remaining[0] else 2
            rights[x] = ControlRight(designated if designated in free else free[0])
        return rights

    return hierarchical_exchange(ControlRightsTable.from_function(n, control), name="split_after_first")


def choice_dependent_rule(n: int) -> RuleSpec:
    """Agent 0 owns everything; if she takes object 0 the next owners are
    1, 2, 3, ... and otherwise 2, 1, 3, ..."""
    if n < 4:
        raise ValueError("needs at least four agents")

    def control(key):
        free = unmatched_agents(key, n)
        objects = unmatched_objects(key, n)
        if 0 in free:
            return {x: ControlRight(0) for x in objects}
        if dict(key)[0] == 0:
            sequence = [1, 2] + list(range(3, n))
        else:
            sequence = [2, 1] + list(range(3, n))
        owner = next(a for a in sequence if a in free)
        return {x: ControlRight(owner) for x in objects}

    return hierarchical_exchange(ControlRightsTable.from_function(n, control), name="choice_dependent")


HIERARCHICAL = _vector(True, True, True, True, True, True, True, False, False)


def catalog(n: int) -> list[CatalogEntry]:
    """The audit catalog for ``n`` agents (the broker and bossy rules need
    ``n >= 3``, the case rules ``n >= 4``)."""
    agents = tuple(range(n))
    half = max(1, n // 2)
    entries = [
        CatalogEntry(
            "sd",
            serial_dictatorship(agents, name="sd"),
            _vector(True, True, True, True, True, True, True, False, True),
        ),
        CatalogEntry(
            "bipolar_sd",
            bipolar_serial_dictatorship(agents, [range(half), range(half, n)], name="bipolar_sd"),
            _vector(True, True, True, True, True, True, True, False, True),
        ),
        CatalogEntry(
            "ttc",
            top_trading_cycles(agents, name="ttc"),
            _vector(True, True, True, True, True, True, True, True, n <= 2),
        ),
        CatalogEntry(
            "imposed",
            imposed(agents, name="imposed"),
            _vector(True, True, False, True, True, True, False, False, False),
        ),
    ]
    if n >= 3:
        entries.insert(
            3,
            CatalogEntry(
                "broker",
                broker_rule(n),
                _vector(True, True, True, True, True, False, False, False, False),
            ),
        )
        entries.append(
            CatalogEntry(
                "bossy_demo",
                bossy_demo(agents, name="bossy_demo"),
                _vector(True, False, True, False, True, None, False, False, False),
            )
        )
    if n >= 4:
        entries += [
            CatalogEntry("case_three_owners", three_owner_rule(n), dict(HIERARCHICAL)),
            CatalogEntry("case_two_pairs", two_pairs_rule(n), dict(HIERARCHICAL)),
            CatalogEntry("case_split_after_first", split_after_first_rule(n), dict(HIERARCHICAL)),
            CatalogEntry("case_choice_dependent", choice_dependent_rule(n), dict(HIERARCHICAL)),
        ]
    return entries


def catalog_entry(n: int, key: str) -> CatalogEntry:
    for entry in catalog(n):
        if entry.key == key:
            return entry
    raise KeyError(key)


def broker_configuration_triples(profile) -> list[tuple[int, int, int]]:
    """Triples ``(0, j, k)`` for which the broker rule's profile has the
    non-transitive pattern: ``j`` most wants the object ``k`` owns, ``k``
    most wants the brokered object, and the broker prefers ``j``'s object to
    ``k``'s.  Preferences are read over the objects left to agents 0, 1, 2
    once the serial leaders have picked."""
    n = len(profile)
    taken: list[int] = []
    for a in range(n - 1, 2, -1):
        taken.append(next(x for x in profile[a] if x not in taken))
    base = sorted(set(range(n)) - set(taken))

    def best(a):
        return next(x for x in profile[a] if x in base)

    rank = list(profile[0]).index
    return [
        (0, j, k)
        for j, k in ((1, 2), (2, 1))
        if best(j) == base[k] and best(k) == base[0] and rank(base[j]) < rank(base[k])
    ]
