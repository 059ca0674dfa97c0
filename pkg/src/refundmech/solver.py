"""Dynamic programs for revenue-optimal deterministic refund menus.

All solvers maximise the average of weighted-virtual suffix sums over weakly
decreasing threshold vectors.  The programs run over types from the highest
down, so a forward pass can recover the lexicographically smallest optimal
threshold vector: each type greedily takes the smallest threshold that still
admits an optimal completion.

The ordered- and uniform-item solvers reduce to the value grid induced by
the item table and report thresholds both on that grid and in item-quality
space.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from refundmech.mechanism import RefundMenu, ThresholdAllocation, menu_from_allocation
from refundmech.model import (
    DiscreteInstance,
    InvalidInstanceError,
    OrderedItemInstance,
    UniformItemInstance,
    require_valid,
    sort_rows,
    to_discrete,
    validate_ordered,
)
from refundmech.virtual import weighted_virtual


@dataclass(frozen=True)
class SolveResult:
    allocation: ThresholdAllocation
    menu: RefundMenu
    revenue: Fraction
    instance: DiscreteInstance
    stats: dict = field(default_factory=dict, compare=False)
    quality_thresholds: tuple[int, ...] | None = None
    permutations: tuple[tuple[int, ...], ...] | None = None


def _first_argmax(row: np.ndarray, stop: int | None = None) -> int:
    # np.argmax returns the first maximal index, which is the tie-break we want
    return int(np.argmax(row if stop is None else row[:stop]))


def _optimal_thresholds(suf: np.ndarray) -> tuple[ThresholdAllocation, int, int]:
    """Unconstrained DP; returns (S, best scaled total, table cells)."""
    m, n = suf.shape
    V = np.empty_like(suf)
    V[m - 1] = suf[m - 1]
    for i in range(m - 2, -1, -1):
        V[i] = suf[i] + np.maximum.accumulate(V[i + 1])
    S = [_first_argmax(V[0])]
    for i in range(1, m):
        S.append(_first_argmax(V[i], S[-1] + 1))
    return tuple(S), int(V[0, S[0]]), V.size


def _optimal_capped(suf: np.ndarray, cap: int) -> tuple[ThresholdAllocation, int, int]:
    """DP restricted to at most ``cap`` distinct thresholds.

    ``V[i, r, j]`` is the best total for types ``i..m-1`` when type ``i``
    uses threshold ``j`` and at most ``r`` distinct thresholds appear among
    those types.  A type either repeats the next-lower threshold's option
    or opens a new one with a strictly smaller threshold.
    """
    m, n = suf.shape
    width = max(int(np.max(np.abs(suf))), 1)
    neg = -2 * (m + 1) * width - 1
    V = np.full((m, cap + 1, n), neg, dtype=suf.dtype)
    V[m - 1, 1:] = suf[m - 1]
    for i in range(m - 2, -1, -1):
        nxt = V[i + 1]
        prefix = np.maximum.accumulate(nxt, axis=1)
        shifted = np.full_like(prefix, neg)
        shifted[:, 1:] = prefix[:, :-1]  # best over strictly smaller thresholds
        best = np.maximum(nxt[1:], shifted[:-1])
        V[i, 1:] = suf[i][None, :] + best
    S = [_first_argmax(V[0, cap])]
    budget = cap
    for i in range(1, m):
        j = S[-1]
        target = V[i - 1, budget, j] - suf[i - 1, j]
        lower = np.flatnonzero(V[i, budget - 1, :j] == target) if budget > 1 else []
        if len(lower):
            S.append(int(lower[0]))
            budget -= 1
        else:
            S.append(j)
    return tuple(S), int(V[0, cap, S[0]]), V.size


def _finish(inst: DiscreteInstance, S, total: int, scale: int, cells: int, started: float, **extra) -> SolveResult:
    menu = menu_from_allocation(inst, S)
    stats = {"m": inst.m, "n": inst.n, "dp_cells": cells, "menu_size": len(menu)}
    stats.update(extra)
    stats["seconds"] = time.perf_counter() - started
    return SolveResult(S, menu, Fraction(total, scale * inst.m), inst, stats)


def solve_general(inst: DiscreteInstance) -> SolveResult:
    started = time.perf_counter()
    require_valid(inst)
    table = weighted_virtual(inst)
    S, total, cells = _optimal_thresholds(table.suffix_scaled[:, :-1])
    return _finish(inst, S, total, table.scale, cells, started)


def solve_capped(inst: DiscreteInstance, c: int) -> SolveResult:
    if c < 1:
        raise ValueError(f"menu size cap must be at least 1, got {c}")
    started = time.perf_counter()
    require_valid(inst)
    table = weighted_virtual(inst)
    cap = min(c, inst.n, inst.m)
    S, total, cells = _optimal_capped(table.suffix_scaled[:, :-1], cap)
    return _finish(inst, S, total, table.scale, cells, started, cap=c)


def quality_thresholds(inst: OrderedItemInstance, values, S) -> tuple[int, ...]:
    """Per type, the lowest item quality kept; ``k`` means nothing is kept."""
    out = []
    for row, s in zip(inst.value_table, S):
        refund = values[s]
        out.append(sum(1 for v in row if v < refund))
    return tuple(out)


def _solve_items(inst: OrderedItemInstance, c: int | None) -> SolveResult:
    report = validate_ordered(inst)
    if not report.ok:
        raise InvalidInstanceError(report)
    grid = to_discrete(inst)
    res = solve_general(grid) if c is None else solve_capped(grid, c)
    res.stats["k"] = inst.k
    return SolveResult(
        res.allocation,
        res.menu,
        res.revenue,
        grid,
        res.stats,
        quality_thresholds(inst, grid.values, res.allocation),
    )


def solve_ordered(inst: OrderedItemInstance) -> SolveResult:
    """Optimal menu when values rise with item quality.

    Each type keeps exactly the qualities whose value reaches its refund.
    Refunds are searched over the whole induced value grid: a type sharing
    an option with a lower type may need a refund that is not one of its
    own values.
    """
    return _solve_items(inst, None)


def solve_ordered_capped(inst: OrderedItemInstance, c: int) -> SolveResult:
    if c < 1:
        raise ValueError(f"menu size cap must be at least 1, got {c}")
    return _solve_items(inst, c)


def solve_uniform(inst: UniformItemInstance, c: int | None = None) -> SolveResult:
    """Sort each buyer's values, then solve the resulting ordered instance."""
    if c is not None and c < 1:
        raise ValueError(f"menu size cap must be at least 1, got {c}")
    sorted_rows = sort_rows(inst)
    if not sorted_rows.report.ok:
        raise InvalidInstanceError(sorted_rows.report)
    res = _solve_items(sorted_rows.instance, c)
    return SolveResult(
        res.allocation,
        res.menu,
        res.revenue,
        res.instance,
        res.stats,
        res.quality_thresholds,
        sorted_rows.permutations,
    )


def solve(inst, c: int | None = None) -> SolveResult:
    """Dispatch on the instance kind."""
    if isinstance(inst, DiscreteInstance):
        return solve_general(inst) if c is None else solve_capped(inst, c)
    if isinstance(inst, OrderedItemInstance):
        return solve_ordered(inst) if c is None else solve_ordered_capped(inst, c)
    if isinstance(inst, UniformItemInstance):
        return solve_uniform(inst, c)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")
