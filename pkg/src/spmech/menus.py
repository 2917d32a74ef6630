"""Menus, cardinal indices and bilateral power.

An agent's menu at an opposing profile is the set of relevant outcomes she
can obtain by varying her own report; her menu for a group ``S`` is the set of
outcome tuples she can impose on ``S`` that way.  Everything here works by
enumerating the agent's reports, so it applies to any rule object exposing
``n``, ``reports()`` and ``relevant(profile)``, or to a precomputed
:class:`OutcomeTable`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import OpposingProfile, OutcomeTable, distinct_count, encode_columns


class MenuError(ValueError):
    """Bad agent or group arguments."""


def _reports(rule) -> tuple:
    return rule.reports if isinstance(rule, OutcomeTable) else rule.reports()


def _outcomes_over_reports(rule, opp: OpposingProfile) -> list[tuple[int, ...]]:
    if not isinstance(opp, OpposingProfile):
        raise MenuError("expected an OpposingProfile")
    if len(opp.orders) != rule.n - 1 or not 0 <= opp.excluded < rule.n:
        raise MenuError(f"opposing profile does not fit {rule.n} agents")
    if isinstance(rule, OutcomeTable):
        view = rule.view(opp.excluded)[:, rule.opp_index(opp)]
        return [tuple(int(x) for x in row) for row in view]
    return [tuple(rule.relevant(opp.complete(r))) for r in rule.reports()]


def menu_self(rule, i: int, opp: OpposingProfile) -> frozenset[int]:
    """Objects agent ``i`` can obtain against ``opp``."""
    _check_excluded(i, opp)
    return frozenset(out[i] for out in _outcomes_over_reports(rule, opp))


def menu_group(rule, i: int, group: Iterable[int], opp: OpposingProfile) -> frozenset[tuple]:
    """Tuples of objects agent ``i`` can impose on ``group`` (ascending agent order)."""
    _check_excluded(i, opp)
    members = sorted(set(group))
    if i in members:
        raise MenuError(f"agent {i} cannot be in her own target group")
    if any(not 0 <= j < rule.n for j in members):
        raise MenuError(f"group {members} out of range")
    return frozenset(tuple(out[j] for j in members) for out in _outcomes_over_reports(rule, opp))


def delta_self(rule, i: int, opp: OpposingProfile) -> int:
    return len(menu_self(rule, i, opp))


def delta_group(rule, i: int, group: Iterable[int], opp: OpposingProfile) -> int:
    return len(menu_group(rule, i, group, opp))


def has_power_over(rule, i: int, j: int, opp: OpposingProfile) -> bool:
    if i == j:
        raise MenuError("power is defined between distinct agents")
    return delta_group(rule, i, [j], opp) > 1


def _check_excluded(i: int, opp: OpposingProfile) -> None:
    if opp.excluded != i:
        raise MenuError(f"opposing profile excludes agent {opp.excluded}, not {i}")


# -- whole-table versions, one value per opposing profile ------------------------------


def menu_masks(table: OutcomeTable, i: int) -> np.ndarray:
    """Bitmask of agent ``i``'s menu at every opposing profile (index order)."""
    own = table.view(i)[:, :, i].astype(np.int64)
    masks = np.zeros(own.shape[1], dtype=np.int64)
    for row in own:
        masks |= np.left_shift(1, row)
    return masks


def delta_self_all(table: OutcomeTable, i: int) -> np.ndarray:
    return distinct_count(table.view(i)[:, :, i], axis=0)


def delta_group_all(table: OutcomeTable, i: int, group: Sequence[int]) -> np.ndarray:
    members = sorted(group)
    if not members:
        return np.ones(table.k ** (table.n - 1), dtype=np.int64)
    columns = table.view(i)[:, :, members].astype(np.int64)
    return distinct_count(encode_columns(columns, table.outcome_count), axis=0)


def bilateral_deltas(table: OutcomeTable) -> np.ndarray:
    """``D[i, j, p]`` = size of agent i's menu for agent j at opposing profile p."""
    n = table.n
    out = np.ones((n, n, table.k ** (n - 1)), dtype=np.int64)
    for i in range(n):
        view = table.view(i)
        for j in range(n):
            if j != i:
                out[i, j] = distinct_count(view[:, :, j], axis=0)
    return out


def popcount(masks: np.ndarray) -> np.ndarray:
    counts = np.zeros(masks.shape, dtype=np.int64)
    work = masks.copy()
    while np.any(work):
        counts += work & 1
        work >>= 1
    return counts


def mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(x for x in range(int(mask).bit_length()) if mask >> x & 1)


# -- freedom comparison ---------------------------------------------------------------------


@dataclass(frozen=True)
class FreedomWitness:
    """An opposing profile where one rule's menu misses an object of the other's."""

    agent: int
    opposing: OpposingProfile
    missing: int


def freedom_geq(rule_a, rule_b, i: int) -> tuple[bool, FreedomWitness | None]:
    """Whether ``rule_a`` offers agent ``i`` a superset menu at every opposing
    profile; otherwise the first witness in opposing-profile order."""
    from .rules import tabulate

    table_a = rule_a if isinstance(rule_a, OutcomeTable) else tabulate(rule_a)
    table_b = rule_b if isinstance(rule_b, OutcomeTable) else tabulate(rule_b)
    if table_a.reports != table_b.reports or table_a.n != table_b.n:
        raise MenuError("freedom comparison needs rules on the same environment")
    masks_a, masks_b = menu_masks(table_a, i), menu_masks(table_b, i)
    lacking = masks_b & ~masks_a
    bad = np.nonzero(lacking)[0]
    if bad.size == 0:
        return True, None
    p = int(bad[0])
    missing = min(mask_to_set(int(lacking[p])))
    return False, FreedomWitness(i, table_a.opposing(i, p), missing)
