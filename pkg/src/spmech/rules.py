"""Assignment rules: serial dictatorship, bipolar SD, top trading cycles and
trading-cycles mechanisms driven by a table of control rights.

Every rule maps a profile (one strict order per agent over ``n`` objects) to
an assignment tuple.  ``evaluate`` is the reference path; ``tabulate``
evaluates a rule on every profile at once and is what the sweeps use.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .model import (
    OutcomeTable,
    StrictOrder,
    SubmatchingKey,
    all_orders,
    build_table,
    check_budget,
    is_assignment,
    proper_submatchings,
    rank_table,
    submatching_key,
    submatching_le,
    unmatched_agents,
    unmatched_objects,
)

OWNER = "owner"
BROKER = "broker"

KINDS = ("sd", "bipolar_sd", "ttc", "he", "tc", "imposed", "bossy_demo")
TC_KINDS = ("sd", "bipolar_sd", "ttc", "he", "tc")


class RuleError(ValueError):
    """Malformed rule specification."""


class SpecificationIncompleteError(LookupError):
    """A control-rights table has no entry for a submatching that was reached."""

    def __init__(self, key: SubmatchingKey):
        super().__init__(f"no control rights listed for submatching {list(map(list, key))}")
        self.key = key


class UnsupportedConfigurationError(RuntimeError):
    """Three brokers among three remaining agents (avoidance matching)."""


@dataclass(frozen=True)
class ControlRight:
    agent: int
    role: str = OWNER

    def __post_init__(self):
        if self.role not in (OWNER, BROKER):
            raise RuleError(f"role must be owner or broker, got {self.role!r}")


def _as_right(value: Any) -> ControlRight:
    if isinstance(value, ControlRight):
        return value
    if isinstance(value, int):
        return ControlRight(value)
    agent, role = value
    return ControlRight(int(agent), str(role))


class ControlRightsTable:
    """Control rights per proper submatching: object -> (agent, role).

    Tables may be partial.  Reaching an unlisted submatching while running the
    trading-cycles algorithm raises :class:`SpecificationIncompleteError`.
    """

    def __init__(self, n: int, entries: Mapping[Iterable, Mapping[int, Any]]):
        self.n = n
        self._entries: dict[SubmatchingKey, dict[int, ControlRight]] = {}
        for key, rights in entries.items():
            key = submatching_key(key)
            self._entries[key] = {int(x): _as_right(r) for x, r in sorted(rights.items())}
        self._frozen = frozenset(
            (key, tuple(sorted(r.items(), key=lambda kv: kv[0])))
            for key, r in self._entries.items()
        )

    def __getitem__(self, key: SubmatchingKey) -> dict[int, ControlRight]:
        try:
            return self._entries[key]
        except KeyError:
            raise SpecificationIncompleteError(key) from None

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def keys(self):
        return self._entries.keys()

    def __eq__(self, other) -> bool:
        return isinstance(other, ControlRightsTable) and self._frozen == other._frozen

    def __hash__(self) -> int:
        return hash(self._frozen)

    def __repr__(self) -> str:
        return f"ControlRightsTable(n={self.n}, entries={len(self)})"

    @property
    def owners_only(self) -> bool:
        return all(r.role == OWNER for rights in self._entries.values() for r in rights.values())

    @classmethod
    def from_function(
        cls, n: int, control: Callable[[SubmatchingKey], Mapping[int, Any]]
    ) -> ControlRightsTable:
        """Tabulate ``control(sigma)`` over every proper submatching."""
        return cls(n, {key: control(key) for key in proper_submatchings(n)})

    @classmethod
    def from_priorities(cls, n: int, priorities: Sequence[Sequence[int]]) -> ControlRightsTable:
        """Each object is owned by the first unmatched agent in its priority list.

        Ownership persists automatically: the first unmatched agent of a list
        stays first until she is matched.
        """
        for x, plist in enumerate(priorities):
            if sorted(plist) != list(range(n)):
                raise RuleError(f"priority list of object {x} must rank all {n} agents")

        def control(key):
            matched = {a for a, _ in key}
            return {
                x: ControlRight(next(a for a in priorities[x] if a not in matched))
                for x in unmatched_objects(key, n)
            }

        return cls.from_function(n, control)

    def to_json(self) -> list[dict]:
        return [
            {
                "matched": [list(p) for p in key],
                "rights": {str(x): [r.agent, r.role] for x, r in rights.items()},
            }
            for key, rights in sorted(self._entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
        ]

    @classmethod
    def from_json(cls, n: int, data: Sequence[Mapping]) -> ControlRightsTable:
        entries = {}
        for item in data:
            key = submatching_key(tuple(p) for p in item["matched"])
            if key in entries:
                raise RuleError(f"duplicate control entry for {item['matched']}")
            entries[key] = {int(x): _as_right(v) for x, v in item["rights"].items()}
        return cls(n, entries)


@dataclass(frozen=True)
class RuleSpec:
    """Declarative description of an assignment rule.

    Parameters by kind: ``sd`` and ``bossy_demo`` take an agent ``order``;
    ``bipolar_sd`` an ``order`` plus ``owner_split`` (objects initially owned
    by the first and by the second agent of the order); ``ttc`` an
    ``endowment``; ``he`` and ``tc`` a ``control`` table (``he`` owners only);
    ``imposed`` a fixed ``assignment``.
    """

    kind: str
    n: int
    order: tuple | None = None
    endowment: tuple | None = None
    owner_split: tuple | None = None
    control: ControlRightsTable | None = None
    assignment: tuple | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        _validate_spec(self)

    @property
    def m(self) -> int:
        return self.n

    def reports(self) -> tuple[StrictOrder, ...]:
        return all_orders(self.n)

    def relevant(self, profile: Sequence[Sequence[int]]) -> tuple[int, ...]:
        return evaluate(self, profile)

    def label(self) -> str:
        return self.name or self.kind

    def to_json(self) -> dict:
        data: dict[str, Any] = {"n": self.n, "kind": self.kind}
        if self.name:
            data["name"] = self.name
        if self.order is not None:
            data["order"] = list(self.order)
        if self.endowment is not None:
            data["endowment"] = list(self.endowment)
        if self.owner_split is not None:
            data["owner_split"] = [list(part) for part in self.owner_split]
        if self.assignment is not None:
            data["assignment"] = list(self.assignment)
        if self.control is not None:
            data["control"] = self.control.to_json()
        return data


def _validate_spec(spec: RuleSpec) -> None:
    n = spec.n
    if spec.kind not in KINDS:
        raise RuleError(f"unknown rule kind {spec.kind!r}")
    if n < 1:
        raise RuleError("n must be positive")

    def need(attr):
        if getattr(spec, attr) is None:
            raise RuleError(f"{spec.kind} rule needs {attr!r}")

    if spec.kind in ("sd", "bipolar_sd", "bossy_demo"):
        need("order")
        if sorted(spec.order) != list(range(n)):
            raise RuleError(f"order must list agents 0..{n - 1} once: {spec.order}")
    if spec.kind == "bipolar_sd":
        need("owner_split")
        if n < 2 or len(spec.owner_split) != 2:
            raise RuleError("bipolar_sd needs two owner groups and n >= 2")
        objects = sorted(itertools.chain(*spec.owner_split))
        if objects != list(range(n)):
            raise RuleError(f"owner_split must partition objects 0..{n - 1}")
    if spec.kind == "ttc":
        need("endowment")
        if not (len(spec.endowment) == n and is_assignment(spec.endowment, n)):
            raise RuleError(f"endowment must be a bijection onto 0..{n - 1}")
    if spec.kind == "imposed":
        need("assignment")
        if not (len(spec.assignment) == n and is_assignment(spec.assignment, n)):
            raise RuleError(f"imposed assignment must be a bijection onto 0..{n - 1}")
    if spec.kind in ("he", "tc"):
        need("control")
        if spec.control.n != n:
            raise RuleError("control table built for a different n")
        report = validate_control_rights(spec.control, n, n)
        if not report.valid:
            first = report.violations[0]
            raise RuleError(f"invalid control table: {first.condition} at {first.submatching}: {first.detail}")
        if spec.kind == "he" and not spec.control.owners_only:
            raise RuleError("hierarchical exchange tables admit owners only")


# -- constructors ------------------------------------------------------------------


def serial_dictatorship(order: Sequence[int], name: str = "") -> RuleSpec:
    return RuleSpec("sd", len(order), order=tuple(order), name=name)


def bipolar_serial_dictatorship(
    order: Sequence[int], owner_split: Sequence[Sequence[int]], name: str = ""
) -> RuleSpec:
    split = (tuple(sorted(owner_split[0])), tuple(sorted(owner_split[1])))
    return RuleSpec("bipolar_sd", len(order), order=tuple(order), owner_split=split, name=name)


def top_trading_cycles(endowment: Sequence[int], name: str = "") -> RuleSpec:
    return RuleSpec("ttc", len(endowment), endowment=tuple(endowment), name=name)


def hierarchical_exchange(table: ControlRightsTable, name: str = "") -> RuleSpec:
    return RuleSpec("he", table.n, control=table, name=name)


def trading_cycles(table: ControlRightsTable, name: str = "") -> RuleSpec:
    return RuleSpec("tc", table.n, control=table, name=name)


def imposed(assignment: Sequence[int], name: str = "") -> RuleSpec:
    return RuleSpec("imposed", len(assignment), assignment=tuple(assignment), name=name)


def bossy_demo(order: Sequence[int], name: str = "") -> RuleSpec:
    """First agent takes her top; the rest pick serially in ``order[1:]``,
    reversed when the first agent ranks object 0 last.

    Strategy-proof (nobody's report affects the picking order she faces) but
    bossy: the first agent's tail reorders everyone else.
    """
    return RuleSpec("bossy_demo", len(order), order=tuple(order), name=name)


@dataclass(eq=False)
class CustomRule:
    """An arbitrary assignment function, for negative controls and toys."""

    n: int
    fn: Callable[[tuple], Sequence[int]]
    m: int | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.m is None:
            self.m = self.n

    def reports(self) -> tuple[StrictOrder, ...]:
        return all_orders(self.m)

    def relevant(self, profile) -> tuple[int, ...]:
        return tuple(self.fn(tuple(profile)))

    def label(self) -> str:
        return self.name


# -- JSON --------------------------------------------------------------------------


def spec_from_json(data: Mapping) -> RuleSpec:
    try:
        kind = data["kind"]
        name = data.get("name", "")
        if kind == "sd":
            spec = serial_dictatorship(data["order"], name)
        elif kind == "bossy_demo":
            spec = bossy_demo(data["order"], name)
        elif kind == "bipolar_sd":
            spec = bipolar_serial_dictatorship(data["order"], data["owner_split"], name)
        elif kind == "ttc":
            spec = top_trading_cycles(data["endowment"], name)
        elif kind == "imposed":
            spec = imposed(data["assignment"], name)
        elif kind in ("he", "tc"):
            n = int(data["n"])
            table = ControlRightsTable.from_json(n, data["control"])
            spec = RuleSpec(kind, n, control=table, name=name)
        else:
            raise RuleError(f"unknown rule kind {kind!r}")
    except KeyError as exc:
        raise RuleError(f"rule spec missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, RuleError):
            raise
        raise RuleError(str(exc)) from None
    if "n" in data and int(data["n"]) != spec.n:
        raise RuleError(f"declared n={data['n']} but parameters describe n={spec.n}")
    return spec


def load_spec(path) -> RuleSpec:
    with open(path) as fh:
        return spec_from_json(json.load(fh))


# -- validation ------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    condition: str
    submatching: SubmatchingKey
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def valid(self) -> bool:
        return not self.violations

    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}


def validate_control_rights(table: ControlRightsTable, n: int, m: int) -> ValidationReport:
    """Check the structural conditions on a control-rights table.

    Conditions: rights cover exactly the unmatched objects and go to unmatched
    agents; no agent is broker of one object and owner of another; at most one
    broker, brokering a single object (three brokers are rejected as
    unsupported); the last agent owns the last object; ownership persists
    across every listed pair of nested submatchings.
    """
    found: list[Violation] = []
    for key, rights in table.items():
        if len(key) >= n or any(not (0 <= a < n and 0 <= x < m) for a, x in key):
            found.append(Violation("submatching", key, "not a proper submatching"))
            continue
        free_agents = set(unmatched_agents(key, n))
        free_objects = set(unmatched_objects(key, m))
        if set(rights) != free_objects:
            missing = sorted(free_objects - set(rights))
            extra = sorted(set(rights) - free_objects)
            found.append(Violation("object-domain", key, f"missing {missing}, matched {extra}"))
        for x, right in rights.items():
            if right.agent not in free_agents:
                found.append(
                    Violation("agent-domain", key, f"object {x} controlled by matched agent {right.agent}")
                )
        owners = {r.agent for r in rights.values() if r.role == OWNER}
        brokered: dict[int, list[int]] = {}
        for x, r in rights.items():
            if r.role == BROKER:
                brokered.setdefault(r.agent, []).append(x)
        for agent in sorted(owners & set(brokered)):
            found.append(Violation("broker-and-owner", key, f"agent {agent}"))
        for agent, objs in sorted(brokered.items()):
            if len(objs) > 1:
                found.append(Violation("broker-multiple-objects", key, f"agent {agent} brokers {objs}"))
        if len(brokered) == 3 and len(free_agents) == 3:
            found.append(Violation("three-brokers", key, "avoidance matchings are not supported"))
        elif len(brokered) > 1:
            found.append(Violation("multiple-brokers", key, f"brokers {sorted(brokered)}"))
        if len(free_agents) == 1 and any(r.role != OWNER for r in rights.values()):
            found.append(Violation("last-agent-owner", key, "last agent must own the last object"))

    keys = list(table.keys())
    listed = set(keys)
    for big in keys:
        big_free = set(unmatched_agents(big, n))
        for size in range(len(big)):
            for small in itertools.combinations(big, size):
                if small not in listed:
                    continue
                for x, right in table[small].items():
                    if right.role != OWNER or right.agent not in big_free:
                        continue
                    if x not in table[big]:
                        continue
                    if table[big][x] != right:
                        found.append(
                            Violation(
                                "persistence",
                                big,
                                f"agent {right.agent} owned object {x} at {list(map(list, small))}"
                                f" but not here",
                            )
                        )
    return ValidationReport(found)


# -- control tables for the structured kinds -----------------------------------------


def control_table(spec: RuleSpec) -> ControlRightsTable:
    """Control rights representing a trading-cycles kind."""
    n = spec.n
    if spec.kind in ("he", "tc"):
        return spec.control
    if spec.kind == "sd":
        return ControlRightsTable.from_priorities(n, [spec.order] * n)
    if spec.kind == "bipolar_sd":
        first, second = spec.order[0], spec.order[1]
        priorities = []
        for x in range(n):
            owner = first if x in spec.owner_split[0] else second
            priorities.append([owner] + [a for a in spec.order if a != owner])
        return ControlRightsTable.from_priorities(n, priorities)
    if spec.kind == "ttc":
        holder = {x: a for a, x in enumerate(spec.endowment)}
        return ControlRightsTable.from_priorities(
            n, [[holder[x]] + [a for a in range(n) if a != holder[x]] for x in range(n)]
        )
    raise RuleError(f"{spec.kind} is not a trading-cycles rule")


_table_cache: dict[RuleSpec, ControlRightsTable] = {}


def _cached_control(spec: RuleSpec) -> ControlRightsTable:
    table = _table_cache.get(spec)
    if table is None:
        table = _table_cache[spec] = control_table(spec)
    return table


# -- evaluation ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    """One cleared cycle: (agent, object) pairs starting at the least agent."""

    cycle: tuple
    round: int
    step_index: int


def _check_profile(n: int, profile: Sequence[Sequence[int]]) -> None:
    if len(profile) != n:
        raise RuleError(f"profile has {len(profile)} orders, rule has {n} agents")
    for order in profile:
        if len(order) != n or sorted(order) != list(range(n)):
            raise RuleError(f"order {tuple(order)} is not a strict order over {n} objects")


def _serial(order: Sequence[int], profile, taken: set | None = None) -> dict[int, int]:
    taken = set() if taken is None else taken
    picks = {}
    for agent in order:
        for x in profile[agent]:
            if x not in taken:
                picks[agent] = x
                taken.add(x)
                break
    return picks


def _cycles(pointer: dict[int, int]) -> list[list[int]]:
    """Cycles of a functional graph on agents, each rotated to its least agent."""
    state: dict[int, int] = {}
    found = []
    for start in sorted(pointer):
        if start in state:
            continue
        path = []
        a = start
        while a not in state:
            state[a] = 1
            path.append(a)
            a = pointer[a]
        if state[a] == 1 and a in path:
            cyc = path[path.index(a) :]
            k = cyc.index(min(cyc))
            found.append(cyc[k:] + cyc[:k])
        for b in path:
            state[b] = 2
    return sorted(found, key=lambda c: c[0])


def _tc_pointers(rights: Mapping[int, ControlRight], profile, free: Iterable[int]):
    """Each unmatched agent's target object and the agent controlling it."""
    brokers = [r for r in rights.values() if r.role == BROKER]
    if len(brokers) == 3 and len(rights) == 3:
        raise UnsupportedConfigurationError("three brokers among three remaining agents")
    target = {}
    for a in free:
        for x in profile[a]:
            if x in rights:
                r = rights[x]
                if r.agent == a and r.role == BROKER:
                    continue
                target[a] = x
                break
        else:
            raise RuleError(f"agent {a} has nothing to point at")
    return target, {a: rights[x].agent for a, x in target.items()}


def _present_cycles(table: ControlRightsTable, profile, matched: dict[int, int], n: int):
    key = tuple(sorted(matched.items()))
    rights = table[key]
    free = [a for a in range(n) if a not in matched]
    for x, r in rights.items():
        if r.agent in matched:
            raise RuleError(f"object {x} controlled by matched agent {r.agent} at {list(key)}")
    target, pointer = _tc_pointers(rights, profile, free)
    return [tuple((a, target[a]) for a in cyc) for cyc in _cycles(pointer)]


def _run_tc(table: ControlRightsTable, profile, n: int):
    matched: dict[int, int] = {}
    steps: list[TraceStep] = []
    rnd = 0
    while len(matched) < n:
        cycles = _present_cycles(table, profile, matched, n)
        if not cycles:
            raise RuleError("no trading cycle formed")
        for cyc in cycles:
            steps.append(TraceStep(cyc, rnd, len(steps)))
            matched.update(cyc)
        rnd += 1
    return tuple(matched[a] for a in range(n)), steps


def _run_ttc(endowment: Sequence[int], profile, n: int):
    """Shapley-Scarf top trading cycles with fixed endowments."""
    holder = {x: a for a, x in enumerate(endowment)}
    matched: dict[int, int] = {}
    steps: list[TraceStep] = []
    rnd = 0
    while len(matched) < n:
        gone = set(matched.values())
        target = {}
        for a in range(n):
            if a in matched:
                continue
            target[a] = next(x for x in profile[a] if x not in gone)
        for cyc in _cycles({a: holder[x] for a, x in target.items()}):
            pairs = tuple((a, target[a]) for a in cyc)
            steps.append(TraceStep(pairs, rnd, len(steps)))
            matched.update(pairs)
        rnd += 1
    return tuple(matched[a] for a in range(n)), steps


def _run_serial(order, profile, n: int):
    picks = _serial(order, profile)
    steps = [TraceStep(((a, picks[a]),), k, k) for k, a in enumerate(order)]
    return tuple(picks[a] for a in range(n)), steps


def _bossy_order(spec: RuleSpec, profile) -> list[int]:
    first, rest = spec.order[0], list(spec.order[1:])
    if profile[first][-1] == 0:
        rest.reverse()
    return [first] + rest


def evaluate_with_trace(spec: RuleSpec, profile: Sequence[Sequence[int]]):
    """Assignment plus the cleared cycles in canonical order.

    Trading-cycles kinds clear every present cycle each round, cycles within a
    round ordered by least agent.  Serial kinds report singleton cycles in
    picking order.
    """
    n = spec.n
    _check_profile(n, profile)
    if spec.kind == "sd":
        return _run_serial(spec.order, profile, n)
    if spec.kind == "bossy_demo":
        return _run_serial(_bossy_order(spec, profile), profile, n)
    if spec.kind == "ttc":
        return _run_ttc(spec.endowment, profile, n)
    if spec.kind == "imposed":
        mu = spec.assignment
        return mu, [TraceStep(((a, mu[a]),), 0, a) for a in range(n)]
    return _run_tc(_cached_control(spec), profile, n)


def evaluate(spec: RuleSpec | CustomRule, profile: Sequence[Sequence[int]]) -> tuple[int, ...]:
    if isinstance(spec, CustomRule):
        return spec.relevant(tuple(tuple(r) for r in profile))
    if spec.kind == "sd":
        _check_profile(spec.n, profile)
        picks = _serial(spec.order, profile)
        return tuple(picks[a] for a in range(spec.n))
    return evaluate_with_trace(spec, profile)[0]


def all_clearing_orders(spec: RuleSpec, profile: Sequence[Sequence[int]]) -> set[tuple]:
    """Every maximal sequence of one-cycle-at-a-time clearings.

    Raises ``AssertionError`` if two sequences end in different assignments.
    """
    if spec.kind not in TC_KINDS:
        raise RuleError(f"{spec.kind} is not a trading-cycles rule")
    n = spec.n
    _check_profile(n, profile)
    table = _cached_control(spec)
    orders: set[tuple] = set()
    finals: set[tuple] = set()

    def walk(matched: dict[int, int], done: tuple):
        if len(matched) == n:
            orders.add(done)
            finals.add(tuple(matched[a] for a in range(n)))
            return
        for cyc in _present_cycles(table, profile, matched, n):
            walk({**matched, **dict(cyc)}, done + (cyc,))

    walk({}, ())
    assert len(finals) == 1, f"clearing order changed the assignment: {sorted(finals)}"
    return orders


# -- chain construction for serial dictatorship ---------------------------------------


def sd_chain_reallocation(
    order: Sequence[int], profile: Sequence[Sequence[int]], new_top: int
) -> tuple[int, ...]:
    """SD assignment after the first dictator switches to ``new_top``.

    Built from the original assignment through the upgrading chain (agents who
    want the object just freed), the downgrading successor of each agent (the
    holder of her favourite among later agents' objects) and the displacement
    map combining them, without re-running the dictatorship.  Positions below
    are positions in ``order``.
    """
    n = len(order)
    _check_profile(n, profile)
    if not 0 <= new_top < n:
        raise ValueError(f"object {new_top} out of range")
    spec = serial_dictatorship(order)
    mu = evaluate(spec, profile)
    held = [mu[order[p]] for p in range(n)]
    prefs = [profile[order[p]] for p in range(n)]

    def prefers(p, x, y):
        return prefs[p].index(x) < prefs[p].index(y)

    start = held.index(new_top)
    if start == 0:
        return mu

    chain = [0]
    while True:
        last = chain[-1]
        nxt = next((p for p in range(last + 1, n) if prefers(p, held[last], held[p])), None)
        if nxt is None:
            break
        chain.append(nxt)

    def successor(p):
        best = min(range(p + 1, n), key=lambda k: prefs[p].index(held[k]))
        return best

    def displaced_to(p):
        w = max(c for c in chain if c < p)
        if all(prefers(p, held[w], held[k]) for k in range(p + 1, n)):
            return w
        return successor(p)

    seq = [start]
    while seq[-1] != 0:
        if len(seq) > 2 * n:
            raise AssertionError(f"displacement sequence does not terminate: {seq}")
        seq.append(displaced_to(seq[-1]))
    peak = seq.index(max(seq))
    rising, falling = seq[: peak + 1], seq[peak:]
    assert all(a < b for a, b in zip(rising, rising[1:])), seq
    assert all(a > b for a, b in zip(falling, falling[1:])), seq

    new_held = list(held)
    new_held[0] = held[start]
    for p, q in zip(seq, seq[1:]):
        new_held[p] = held[q]
    result = [0] * n
    for p in range(n):
        result[order[p]] = new_held[p]
    return tuple(result)


# -- tabulation ------------------------------------------------------------------------------


_tabulated: dict[Any, OutcomeTable] = {}


def _encode_control(table: ControlRightsTable, n: int):
    base = n + 1
    size = base**n
    agent = np.full((size, n), -1, dtype=np.int8)
    broker = np.zeros((size, n), dtype=bool)
    listed = np.zeros(size, dtype=bool)
    for key, rights in table.items():
        slots = [0] * n
        for a, x in key:
            slots[a] = x + 1
        code = 0
        for a in range(n):
            code += slots[a] * base**a
        listed[code] = True
        for x, r in rights.items():
            agent[code, x] = r.agent
            broker[code, x] = r.role == BROKER
    return agent, broker, listed


def _tabulate_tc(table: ControlRightsTable, n: int) -> np.ndarray:
    """Run the trading-cycles algorithm on all profiles in lockstep."""
    k = len(all_orders(n))
    ranks = rank_table(n)
    idx = np.indices((k,) * n).reshape(n, -1).T
    prof_ranks = ranks[idx]  # (P, n agents, n objects)
    count = idx.shape[0]
    ctrl_agent, ctrl_broker, listed = _encode_control(table, n)
    weights = (n + 1) ** np.arange(n)
    held = np.full((count, n), -1, dtype=np.int64)
    agents = np.arange(n)
    unsolved = np.arange(count)
    big = np.int8(n + 1)
    for _ in range(n):
        if unsolved.size == 0:
            break
        h = held[unsolved]
        code = (h + 1) @ weights
        if not listed[code].all():
            row = unsolved[np.argmin(listed[code])]
            key = tuple((a, int(x)) for a, x in enumerate(held[row]) if x >= 0)
            raise SpecificationIncompleteError(key)
        ca = ctrl_agent[code]
        cb = ctrl_broker[code]
        taken = np.zeros((unsolved.size, n), dtype=bool)
        rows, cols = np.nonzero(h >= 0)
        taken[rows, h[rows, cols]] = True
        brokers = cb.sum(axis=1)
        if np.any((brokers == 3) & ((h < 0).sum(axis=1) == 3)):
            raise UnsupportedConfigurationError("three brokers among three remaining agents")
        own_broker = cb[:, None, :] & (ca[:, None, :] == agents[None, :, None])
        blocked = taken[:, None, :] | own_broker
        score = np.where(blocked, big, prof_ranks[unsolved])
        target = score.argmin(axis=2)
        pointer = np.take_along_axis(ca, target, axis=1).astype(np.int64)
        free = h < 0
        pointer = np.where(free, pointer, agents)
        on_cycle = np.zeros_like(free)
        walk = pointer.copy()
        for _ in range(n):
            on_cycle |= walk == agents
            walk = np.take_along_axis(pointer, walk, axis=1)
        on_cycle &= free
        h = np.where(on_cycle, target, h)
        held[unsolved] = h
        unsolved = unsolved[(h < 0).any(axis=1)]
    if unsolved.size:
        raise RuleError("trading cycles did not terminate")
    return held.astype(np.int8).reshape((k,) * n + (n,))


def _tabulate_bossy(rule: RuleSpec) -> np.ndarray:
    """Both picking orders tabulated as serial dictatorships, then selected
    by the first agent's last-ranked object."""
    n, first, rest = rule.n, rule.order[0], list(rule.order[1:])
    forward = _tabulate_tc(_cached_control(serial_dictatorship([first] + rest)), n)
    backward = _tabulate_tc(_cached_control(serial_dictatorship([first] + rest[::-1])), n)
    last_is_zero = np.array([order[-1] == 0 for order in all_orders(n)])
    shape = [1] * n + [1]
    shape[first] = len(last_is_zero)
    return np.where(last_is_zero.reshape(shape), backward, forward)


def tabulate(rule, *, engine: str = "auto", budget: int | None = None) -> OutcomeTable:
    """Evaluate ``rule`` on every profile.

    ``engine="auto"`` runs trading-cycles kinds (SD included) through
    a vectorised version of the algorithm and everything else through
    ``evaluate``; ``engine="python"`` forces the per-profile reference path.
    Results for :class:`RuleSpec` are cached.
    """
    n = rule.n
    m = getattr(rule, "m", n)
    orders = all_orders(m)
    check_budget(len(orders) ** n, budget)
    cacheable = isinstance(rule, RuleSpec)
    key = (rule, engine)
    if cacheable and key in _tabulated:
        return _tabulated[key]
    if engine not in ("auto", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    data = None
    if cacheable and engine == "auto":
        if rule.kind in TC_KINDS:
            data = _tabulate_tc(_cached_control(rule), n)
        elif rule.kind == "imposed":
            data = np.broadcast_to(np.array(rule.assignment, dtype=np.int8), (len(orders),) * n + (n,))
        elif rule.kind == "bossy_demo":
            data = _tabulate_bossy(rule)
    if data is not None:
        table = OutcomeTable(n, orders, rank_table(m), data, rule.label())
    else:
        table = build_table(n, orders, rank_table(m), rule.relevant, name=rule.label(), budget=budget)
    if cacheable:
        _tabulated[key] = table
    return table
