"""Threshold allocations, refund menus, payments and revenue.

A deterministic refund mechanism is described here by a threshold vector
``S`` with one 0-based grid index per buyer type: a type-``i`` buyer is
offered refund ``values[S[i]]`` and keeps the item iff her value is at
least that refund.  Incentive compatibility requires ``S`` to be weakly
decreasing in the type.

Prices are pinned by consecutive-type indifference, anchored so the lowest
type is left with zero expected utility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from refundmech.model import DiscreteInstance, as_rat, cdf_strict

ThresholdAllocation = tuple[int, ...]


class MenuOption(NamedTuple):
    price: Fraction
    refund: Fraction


@dataclass(frozen=True)
class RefundMenu:
    options: tuple[MenuOption, ...]
    assignment: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "options",
            tuple(MenuOption(as_rat(p), as_rat(r)) for p, r in self.options),
        )
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))

    def __len__(self) -> int:
        return len(self.options)

    def assigned(self, i: int) -> MenuOption:
        return self.options[self.assignment[i]]

    def deduplicated(self) -> "RefundMenu":
        """Merge identical options, keeping first-appearance order."""
        seen: dict[MenuOption, int] = {}
        remap = []
        for opt in self.options:
            remap.append(seen.setdefault(opt, len(seen)))
        return RefundMenu(tuple(seen), tuple(remap[a] for a in self.assignment))


@dataclass(frozen=True)
class ReturnPolicyTable:
    r: tuple[tuple[Fraction, ...], ...]
    z: tuple[tuple[int, ...], ...]


def check_allocation(inst: DiscreteInstance, S: Sequence[int]) -> ThresholdAllocation:
    """Normalise ``S`` to a tuple and reject wrong length, range or ordering."""
    S = tuple(int(s) for s in S)
    if len(S) != inst.m:
        raise ValueError(f"allocation has {len(S)} thresholds, instance has {inst.m} types")
    for i, s in enumerate(S):
        if not 0 <= s < inst.n:
            raise ValueError(f"threshold S[{i}] = {s} outside 0..{inst.n - 1}")
    for i in range(1, len(S)):
        if S[i] > S[i - 1]:
            raise ValueError(f"allocation not monotone: S[{i - 1}] = {S[i - 1]} < S[{i}] = {S[i]}")
    return S


def q_value(inst: DiscreteInstance, i: int, refund) -> Fraction:
    """Expected second-phase utility E[max(v, refund)] of a type-``i`` buyer."""
    if not 0 <= i < inst.m:
        raise IndexError(f"type index {i} out of range for m={inst.m}")
    refund = as_rat(refund)
    return sum(
        (p * max(v, refund) for v, p in zip(inst.values, inst.pmf[i])), Fraction(0)
    )


def utility(inst: DiscreteInstance, i: int, option: MenuOption) -> Fraction:
    return q_value(inst, i, option.refund) - option.price


def seller_value(inst: DiscreteInstance, i: int, option: MenuOption) -> Fraction:
    """Expected net revenue from a type-``i`` buyer who takes ``option``."""
    return option.price - option.refund * cdf_strict(inst, i, option.refund)


def _scaled_payments(inst: DiscreteInstance, S: ThresholdAllocation) -> list[int]:
    tab = inst.tables
    prices = [tab.q_at(0, S[0])]
    for i in range(1, len(S)):
        prices.append(prices[-1] + tab.q_at(i, S[i]) - tab.q_at(i, S[i - 1]))
    return prices


def payments_from_allocation(inst: DiscreteInstance, S: Sequence[int]) -> tuple[Fraction, ...]:
    """Upfront prices implementing ``S`` with zero utility for the lowest type.

    ``p[0] = Q(0, 0)`` and each step adds the type's gain from its own
    refund over the previous type's refund.
    """
    S = check_allocation(inst, S)
    scale = inst.tables.scale
    return tuple(Fraction(p, scale) for p in _scaled_payments(inst, S))


def menu_from_allocation(inst: DiscreteInstance, S: Sequence[int]) -> RefundMenu:
    S = check_allocation(inst, S)
    prices = payments_from_allocation(inst, S)
    options: list[MenuOption] = []
    assignment = []
    for p, s in zip(prices, S):
        opt = MenuOption(p, inst.values[s])
        if not options or options[-1] != opt:
            options.append(opt)
        assignment.append(len(options) - 1)
    return RefundMenu(tuple(options), tuple(assignment))


def scaled_revenue_terms(inst: DiscreteInstance, S: ThresholdAllocation) -> list[int]:
    """Per-type net payments (price minus expected refund) over ``tables.scale``."""
    tab = inst.tables
    prices = _scaled_payments(inst, S)
    out = []
    for i, (p, s) in enumerate(zip(prices, S)):
        below = int(tab.cdf[i, s - 1]) if s > 0 else 0
        out.append(p - int(tab.vals[s]) * below)
    return out


def revenue(inst: DiscreteInstance, S: Sequence[int]) -> Fraction:
    """Expected seller revenue of the mechanism implementing ``S``.

    A buyer returns the item only when her value is strictly below the
    refund, so the expected refund uses the strict CDF.
    """
    S = check_allocation(inst, S)
    total = sum(scaled_revenue_terms(inst, S))
    return Fraction(total, inst.tables.scale * inst.m)


def menu_revenue(inst: DiscreteInstance, menu: RefundMenu) -> Fraction:
    """Expected revenue when each type takes its assigned option."""
    total = sum(
        (seller_value(inst, i, menu.assigned(i)) for i in range(inst.m)), Fraction(0)
    )
    return total / inst.m


def return_policy_table(inst: DiscreteInstance, S: Sequence[int]) -> ReturnPolicyTable:
    """Second-phase transfers generated from the value-side payment identity.

    The transfer at the lowest value is the refund actually paid there; the
    rest of each row follows from accumulating keep-indicator increments.
    """
    S = check_allocation(inst, S)
    vals = inst.values
    r_rows, z_rows = [], []
    for s in S:
        z = tuple(int(j >= s) for j in range(inst.n))
        anchor = vals[s] if vals[0] < vals[s] else Fraction(0)
        acc = Fraction(0)
        row = []
        for j in range(inst.n):
            if j > 0:
                acc += z[j] * (vals[j] - vals[j - 1])
            row.append(anchor + z[0] * vals[0] - z[j] * vals[j] + acc)
        r_rows.append(tuple(row))
        z_rows.append(z)
    return ReturnPolicyTable(tuple(r_rows), tuple(z_rows))


def monotone_allocations(m: int, n: int, cap: int | None = None):
    """Yield every weakly decreasing ``S`` in ``{0..n-1}^m`` in lexicographic order.

    With ``cap`` set, only vectors using at most ``cap`` distinct thresholds.
    """
    S = [0] * m

    def rec(i: int, hi: int, used: int):
        if i == m:
            yield tuple(S)
            return
        for s in range(hi + 1):
            nu = used + (i == 0 or s != S[i - 1])
            if cap is not None and nu > cap:
                continue
            S[i] = s
            yield from rec(i + 1, s, nu)

    yield from rec(0, n - 1, 0)


def count_monotone(m: int, n: int) -> int:
    return math.comb(m + n - 1, m)


