"""Supporting prices for top trading cycles.

At a TTC outcome the prices that support it form a system of order
constraints: each agent's object costs at most her endowment, and everything
she prefers to it costs strictly more than her endowment.  Such a system is
feasible iff no directed cycle of constraints contains a strict one, and
``p_a <= p_b`` holds for every solution iff adding ``p_b < p_a`` makes it
infeasible.  Non-negativity never matters since solutions can be shifted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .audit import AuditReport, as_table
from .menus import menu_masks
from .model import OpposingProfile
from .rules import all_clearing_orders, evaluate, top_trading_cycles


class PriceError(ValueError):
    """Constraint system requested for something other than a TTC outcome."""


@dataclass(frozen=True)
class PriceConstraintSystem:
    """``weak`` holds pairs ``(u, v)`` meaning ``p_u <= p_v``; ``strict`` pairs mean ``p_u < p_v``."""

    m: int
    weak: tuple[tuple[int, int], ...] = ()
    strict: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for u, v in self.weak + self.strict:
            if not (0 <= u < self.m and 0 <= v < self.m):
                raise PriceError(f"edge ({u}, {v}) outside 0..{self.m - 1}")

    def with_strict(self, u: int, v: int) -> PriceConstraintSystem:
        return PriceConstraintSystem(self.m, self.weak, self.strict + ((u, v),))

    def reach(self) -> list[int]:
        """``reach[u]`` is the bitmask of v with a constraint path from u to v."""
        succ = [1 << u for u in range(self.m)]
        for u, v in self.weak + self.strict:
            succ[u] |= 1 << v
        for k in range(self.m):
            bit = 1 << k
            for u in range(self.m):
                if succ[u] & bit:
                    succ[u] |= succ[k]
        return succ


@dataclass(frozen=True)
class BudgetSet:
    agent: int
    objects: frozenset[int]


def support_constraints(
    profile: Sequence[Sequence[int]], assignment: Sequence[int], endowment: Sequence[int]
) -> PriceConstraintSystem:
    """Order constraints on prices supporting ``assignment`` at ``profile``."""
    assignment = tuple(assignment)
    if evaluate(top_trading_cycles(endowment), profile) != assignment:
        raise PriceError("assignment is not the TTC outcome for this endowment and profile")
    weak, strict = [], []
    for i, order in enumerate(profile):
        weak.append((assignment[i], endowment[i]))
        for x in order[: list(order).index(assignment[i])]:
            strict.append((endowment[i], x))
    return PriceConstraintSystem(len(endowment), tuple(weak), tuple(strict))


def feasible(system: PriceConstraintSystem) -> bool:
    reach = system.reach()
    return not any(reach[v] >> u & 1 for u, v in system.strict)


def holds_universally(system: PriceConstraintSystem, a: int, b: int) -> bool:
    """``p_a <= p_b`` for every solution of ``system``."""
    return not feasible(system.with_strict(b, a))


def budget_intersection(system: PriceConstraintSystem, i: int, endowment: Sequence[int]) -> BudgetSet:
    """Objects affordable to agent ``i`` under every supporting price vector."""
    home = endowment[i]
    return BudgetSet(
        i, frozenset(x for x in range(system.m) if holds_universally(system, x, home))
    )


def sample_price_vector(system: PriceConstraintSystem) -> tuple[Fraction, ...]:
    """A solution: each price is the length of the longest strict chain below it."""
    if not feasible(system):
        raise PriceError("constraint system has no solution")
    level = [0] * system.m
    edges = [(u, v, 0) for u, v in system.weak] + [(u, v, 1) for u, v in system.strict]
    changed = True
    while changed:
        changed = False
        for u, v, step in edges:
            if level[v] < level[u] + step:
                level[v] = level[u] + step
                changed = True
    prices = tuple(Fraction(x) for x in level)
    assert all(prices[u] <= prices[v] for u, v in system.weak)
    assert all(prices[u] < prices[v] for u, v in system.strict)
    return prices


def clearing_order_relation(rule, profile: Sequence[Sequence[int]]) -> frozenset[tuple[int, int]]:
    """Pairs ``(a, b)`` such that ``a`` is matched no later than ``b`` in every
    order of clearing cycles one at a time."""
    orders = all_clearing_orders(rule, profile)
    n = rule.n
    relation = {(a, b) for a in range(n) for b in range(n)}
    for sequence in orders:
        step = {}
        for t, cycle in enumerate(sequence):
            for agent, _ in cycle:
                step[agent] = t
        relation = {(a, b) for a, b in relation if step[a] <= step[b]}
    return frozenset(relation)


# -- sweeps ------------------------------------------------------------------------------


def _closure_all(table, endowment: Sequence[int]):
    """Reachability of every profile's constraint graph, plus feasibility."""
    n, m = table.n, table.outcome_count
    flat = table.flat().astype(np.int64)
    reps = np.indices((table.k,) * n).reshape(n, -1).T
    ranks = table.ranks[reps]  # (S, n, m): rank of each object for each agent
    size = flat.shape[0]
    adj = np.zeros((size, m, m), dtype=bool)
    strict = np.zeros((size, m, m), dtype=bool)
    rows = np.arange(size)
    for i in range(n):
        home = endowment[i]
        adj[rows, flat[:, i], home] = True
        got = ranks[rows, i, flat[:, i]]
        better = ranks[:, i, :] < got[:, None]  # (S, m)
        strict[:, home, :] |= better
    reach = adj | strict | np.eye(m, dtype=bool)[None]
    for _ in range(max(1, m.bit_length())):
        reach = reach | (reach[:, :, :, None] & reach[:, None, :, :]).any(axis=2)
    ok = ~(strict & reach.transpose(0, 2, 1)).any(axis=(1, 2))
    return reach, ok


def verify_cor_menu_budget(endowment: Sequence[int], n: int | None = None) -> AuditReport:
    """At every profile each agent's menu equals her budget-set intersection."""
    rule = top_trading_cycles(endowment)
    if n is not None and n != rule.n:
        raise ValueError("endowment length differs from n")
    table = as_table(rule)
    reach, ok = _closure_all(table, endowment)
    if not ok.all():
        s = int(np.argmin(ok))
        return AuditReport("menu_budget_identity", False, {"infeasible_profile": s}, table.size)
    weights = 1 << np.arange(table.outcome_count)
    for i in range(table.n):
        budget = (reach[:, :, endowment[i]] * weights).sum(axis=1)
        menus = table.expand(menu_masks(table, i), i)
        bad = np.nonzero(budget != menus)[0]
        if bad.size:
            s = int(bad[0])
            return AuditReport(
                "menu_budget_identity",
                False,
                {"agent": i, "profile": [list(r) for r in table.profile_at(s)]},
                table.size,
            )
    return AuditReport("menu_budget_identity", True, work=table.size * table.n)


def verify_prop_freedom_prices(endowment: Sequence[int], n: int | None = None) -> AuditReport:
    """Menu inclusion between two agents matches the universal price comparison
    of their endowments, for every profile and pair."""
    rule = top_trading_cycles(endowment)
    if n is not None and n != rule.n:
        raise ValueError("endowment length differs from n")
    table = as_table(rule)
    reach, _ = _closure_all(table, endowment)
    masks = np.stack([table.expand(menu_masks(table, i), i) for i in range(table.n)])
    for i in range(table.n):
        for j in range(table.n):
            included = (masks[i] & ~masks[j]) == 0
            cheaper = reach[:, endowment[i], endowment[j]]
            bad = np.nonzero(included != cheaper)[0]
            if bad.size:
                s = int(bad[0])
                return AuditReport(
                    "freedom_price_order",
                    False,
                    {"agents": [i, j], "profile": [list(r) for r in table.profile_at(s)]},
                    table.size,
                )
    return AuditReport("freedom_price_order", True, work=table.size * table.n**2)


def price_report(endowment: Sequence[int], profile: Sequence[Sequence[int]]) -> dict:
    """Everything the price view says about one profile, with the menu cross-check."""
    rule = top_trading_cycles(endowment)
    assignment = evaluate(rule, profile)
    system = support_constraints(profile, assignment, endowment)
    from .menus import menu_self

    agents = []
    for i in range(rule.n):
        budget = budget_intersection(system, i, endowment).objects
        menu = menu_self(rule, i, OpposingProfile.from_profile(tuple(profile), i))
        agents.append({"agent": i, "budget_intersection": sorted(budget), "menu": sorted(menu)})
    return {
        "assignment": list(assignment),
        "weak": [list(e) for e in system.weak],
        "strict": [list(e) for e in system.strict],
        "feasible": feasible(system),
        "witness": [str(p) for p in sample_price_vector(system)],
        "agents": agents,
        "menus_match": all(a["budget_intersection"] == a["menu"] for a in agents),
    }
