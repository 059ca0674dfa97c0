"""Independent checks on menus and allocations, plus an exhaustive oracle.

The oracle prices every candidate allocation through the payment identity
using Q values summed directly from the pmfs; it never touches virtual
values, so agreement with the solvers compares two separate revenue paths.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from refundmech.mechanism import (
    MenuOption,
    RefundMenu,
    count_monotone,
    monotone_allocations,
    q_value,
    revenue,
)
from refundmech.model import DiscreteInstance, cdf_strict
from refundmech.virtual import VirtualTable, virtual_welfare, weighted_virtual

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: Any = None


@dataclass
class AuditReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    def __iadd__(self, other: "AuditReport") -> "AuditReport":
        self.checks.extend(other.checks)
        return self

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "checks": [
                {"name": c.name, "pass": c.passed, "witness": _jsonable(c.witness)}
                for c in self.checks
            ]
        }


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


class _Utilities:
    """Memoised Q values, keyed by (type, refund)."""

    def __init__(self, inst: DiscreteInstance):
        self.inst = inst
        self._q: dict[tuple[int, Fraction], Fraction] = {}

    def q(self, i: int, refund: Fraction) -> Fraction:
        key = (i, refund)
        if key not in self._q:
            self._q[key] = q_value(self.inst, i, refund)
        return self._q[key]

    def utility(self, i: int, opt: MenuOption) -> Fraction:
        return self.q(i, opt.refund) - opt.price

    def seller(self, i: int, opt: MenuOption) -> Fraction:
        return opt.price - opt.refund * cdf_strict(self.inst, i, opt.refund)


def _check_menu_shape(inst: DiscreteInstance, menu: RefundMenu) -> None:
    if len(menu.assignment) != inst.m:
        raise ValueError(f"menu assigns {len(menu.assignment)} types, instance has {inst.m}")
    for a in menu.assignment:
        if not 0 <= a < len(menu.options):
            raise ValueError(f"assignment {a} refers to a missing option")


def check_ic(inst: DiscreteInstance, menu: RefundMenu) -> AuditReport:
    """No type gains by taking another type's option.

    Also reports whether, among the options a type is indifferent between,
    the assigned one is the best for the seller.
    """
    _check_menu_shape(inst, menu)
    u = _Utilities(inst)
    worst = None
    not_preferred = None
    for i, a in enumerate(menu.assignment):
        own = u.utility(i, menu.options[a])
        for o, opt in enumerate(menu.options):
            if o == a:
                continue
            gap = u.utility(i, opt) - own
            if gap > 0 and (worst is None or gap > worst["gap"]):
                worst = {"type": i, "assigned": a, "deviation": o, "gap": gap}
            elif gap == 0 and not_preferred is None:
                if u.seller(i, opt) > u.seller(i, menu.options[a]):
                    not_preferred = {"type": i, "assigned": a, "preferred": o}
    return AuditReport([
        Check("ic", worst is None, worst),
        Check("ic_seller_preferred", not_preferred is None, not_preferred),
    ])


def check_ir(inst: DiscreteInstance, menu: RefundMenu, lowest_zero: bool = False) -> AuditReport:
    """Every type's assigned option leaves it nonnegative expected utility.

    With ``lowest_zero`` the lowest type must be left with exactly zero.
    """
    _check_menu_shape(inst, menu)
    u = _Utilities(inst)
    utils = [u.utility(i, menu.assigned(i)) for i in range(inst.m)]
    bad = next(({"type": i, "utility": x} for i, x in enumerate(utils) if x < 0), None)
    report = AuditReport([Check("ir", bad is None, bad)])
    if lowest_zero:
        report.checks.append(
            Check("ir_lowest_zero", utils[0] == 0, None if utils[0] == 0 else {"utility": utils[0]})
        )
    return report


def check_monotonicity(S: Sequence[int]) -> AuditReport:
    for i in range(1, len(S)):
        if S[i] > S[i - 1]:
            return AuditReport([Check("monotonicity", False, {"types": [i - 1, i], "thresholds": [S[i - 1], S[i]]})])
    return AuditReport([Check("monotonicity", True)])


def check_q_condition(inst: DiscreteInstance, S: Sequence[int]) -> AuditReport:
    """Q(t,t) + Q(t',t') >= Q(t,t') + Q(t',t) for every pair of types."""
    u = _Utilities(inst)
    refunds = [inst.values[s] for s in S]
    for t in range(inst.m):
        for t2 in range(t + 1, inst.m):
            lhs = u.q(t, refunds[t]) + u.q(t2, refunds[t2])
            rhs = u.q(t, refunds[t2]) + u.q(t2, refunds[t])
            if lhs < rhs:
                return AuditReport([Check("q_condition", False, {"types": [t, t2], "deficit": rhs - lhs})])
    return AuditReport([Check("q_condition", True)])


def check_menu_size(menu: RefundMenu, bound: int) -> AuditReport:
    size = len(menu.deduplicated())
    return AuditReport([Check("menu_size", size <= bound, None if size <= bound else {"size": size, "bound": bound})])


def brute_force(
    inst: DiscreteInstance, cap: int | None = None, budget: int = DEFAULT_BUDGET
) -> tuple[tuple[int, ...], Fraction]:
    """Exhaustive search over weakly decreasing threshold vectors.

    Returns the lexicographically smallest optimal vector and its revenue.
    """
    m, n = inst.m, inst.n
    total = count_monotone(m, n)
    if total > budget:
        raise BudgetExceeded(f"{total} monotone allocations exceed budget {budget}")
    if cap is not None and cap < 1:
        raise ValueError(f"cap must be at least 1, got {cap}")
    q = [[q_value(inst, i, v) for v in inst.values] for i in range(m)]
    below = [[cdf_strict(inst, i, v) for v in inst.values] for i in range(m)]
    scale = math.lcm(*(x.denominator for row in q for x in row))
    scale = math.lcm(scale, *(x.denominator for row in below for x in row), *(v.denominator for v in inst.values))
    qi = [[int(x * scale) for x in row] for row in q]
    # expected refund paid out, scaled
    ri = [[int(v * g * scale) for v, g in zip(inst.values, row)] for row in below]

    best = [None, None]
    S = [0] * m

    def rec(i: int, price: int, acc: int, used: int):
        prev = S[i - 1]
        for s in range(prev + 1):
            nu = used + (s != prev)
            if cap is not None and nu > cap:
                continue
            p = price + qi[i][s] - qi[i][prev]
            S[i] = s
            a = acc + p - ri[i][s]
            if i + 1 == m:
                if best[0] is None or a > best[0]:
                    best[0], best[1] = a, tuple(S)
            else:
                rec(i + 1, p, a, nu)

    for s0 in range(n):
        S[0] = s0
        p0 = qi[0][s0]
        a0 = p0 - ri[0][s0]
        if m == 1:
            if best[0] is None or a0 > best[0]:
                best[0], best[1] = a0, (s0,)
        else:
            rec(1, p0, a0, 1)
    return best[1], Fraction(best[0], scale * m)


def random_monotone(rng: random.Random, m: int, n: int) -> tuple[int, ...]:
    return tuple(sorted((rng.randrange(n) for _ in range(m)), reverse=True))


def check_virtual_identity(
    inst: DiscreteInstance,
    table: VirtualTable | None = None,
    exhaustive_limit: int = 10**4,
    samples: int = 10**3,
    seed: int = 0,
) -> AuditReport:
    """Virtual welfare equals payment-identity revenue for monotone allocations.

    Every allocation is checked when there are at most ``exhaustive_limit``
    of them; otherwise ``samples`` random ones.
    """
    table = table if table is not None else weighted_virtual(inst)
    if count_monotone(inst.m, inst.n) <= exhaustive_limit:
        candidates = monotone_allocations(inst.m, inst.n)
    else:
        rng = random.Random(seed)
        candidates = (random_monotone(rng, inst.m, inst.n) for _ in range(samples))
    for S in candidates:
        vw = virtual_welfare(inst, S, table)
        rev = revenue(inst, S)
        if vw != rev:
            return AuditReport([Check("virtual_identity", False, {"allocation": list(S), "virtual_welfare": vw, "revenue": rev})])
    return AuditReport([Check("virtual_identity", True)])


def audit_menu(
    inst: DiscreteInstance,
    menu: RefundMenu,
    allocation: Sequence[int] | None = None,
    bound: int | None = None,
    lowest_zero: bool = False,
    identity: bool = True,
) -> AuditReport:
    report = check_ic(inst, menu)
    report += check_ir(inst, menu, lowest_zero=lowest_zero)
    report += check_menu_size(menu, inst.n if bound is None else bound)
    if allocation is not None:
        report += check_monotonicity(allocation)
        if all(a >= b for a, b in zip(allocation, allocation[1:])):
            report += check_q_condition(inst, allocation)
        if identity:
            report += check_virtual_identity(inst)
    return report


def audit_result(result, bound: int | None = None) -> AuditReport:
    """Full audit of a solver result on its (induced) discrete instance."""
    return audit_menu(
        result.instance,
        result.menu,
        result.allocation,
        bound=bound,
        lowest_zero=True,
        identity=False,
    )
