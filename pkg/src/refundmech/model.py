"""Problem instances for single-buyer refund mechanism design.

Three instance kinds are supported:

* :class:`DiscreteInstance` -- a value grid plus one conditional pmf per
  buyer type.  Types are indexed ``0..m-1`` from lowest to highest and are
  equally likely.
* :class:`OrderedItemInstance` -- buyer values depend on an item quality
  ``s`` drawn from ``item_pmf``; values rise with both type and quality.
* :class:`UniformItemInstance` -- like the ordered kind but with uniformly
  distributed item types and no ordering requirement within a row.

All numbers are :class:`fractions.Fraction`.  Validation never raises: it
returns a :class:`ValidationReport` listing every violated constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Sequence, Union

import numpy as np

Rat = Fraction


def as_rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError(f"refusing to convert float {x!r} to an exact rational")
    return Fraction(x)


def _rat_tuple(xs) -> tuple[Fraction, ...]:
    return tuple(as_rat(x) for x in xs)


def _rat_matrix(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(_rat_tuple(r) for r in rows)


class Violation(NamedTuple):
    kind: str  # pmf-nonneg | row-sum | FOSD | value-ordering | shape | item-order | type-order
    row: int | None
    col: int | None
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(
            f"{v.kind} at row={v.row} col={v.col}: {v.detail}" for v in self.violations
        )


class InvalidInstanceError(ValueError):
    """Raised by solvers when handed an instance that fails validation."""

    def __init__(self, report: ValidationReport):
        super().__init__(report.describe())
        self.report = report


@dataclass(frozen=True)
class DiscreteInstance:
    values: tuple[Fraction, ...]
    pmf: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _rat_tuple(self.values))
        object.__setattr__(self, "pmf", _rat_matrix(self.pmf))

    @property
    def m(self) -> int:
        return len(self.pmf)

    @property
    def n(self) -> int:
        return len(self.values)

    @cached_property
    def tables(self):
        """Integer-scaled prefix tables shared by the fast solver paths."""
        from refundmech._tables import ScaledTables

        return ScaledTables.build(self)


@dataclass(frozen=True)
class OrderedItemInstance:
    item_pmf: tuple[Fraction, ...]
    value_table: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "item_pmf", _rat_tuple(self.item_pmf))
        object.__setattr__(self, "value_table", _rat_matrix(self.value_table))

    @property
    def m(self) -> int:
        return len(self.value_table)

    @property
    def k(self) -> int:
        return len(self.item_pmf)


@dataclass(frozen=True)
class UniformItemInstance:
    value_table: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "value_table", _rat_matrix(self.value_table))

    @property
    def m(self) -> int:
        return len(self.value_table)

    @property
    def k(self) -> int:
        return len(self.value_table[0]) if self.value_table else 0


Instance = Union[DiscreteInstance, OrderedItemInstance, UniformItemInstance]


# ---------------------------------------------------------------------------
# validation


def validate_discrete(inst: DiscreteInstance) -> ValidationReport:
    out: list[Violation] = []
    m, n = inst.m, inst.n
    if m < 1:
        out.append(Violation("shape", None, None, "need at least one buyer type"))
    if n < 1:
        out.append(Violation("shape", None, None, "need at least one value"))
    for j in range(1, n):
        if not inst.values[j - 1] < inst.values[j]:
            out.append(
                Violation(
                    "value-ordering", None, j,
                    f"{inst.values[j - 1]} is not below {inst.values[j]}",
                )
            )
    for i, row in enumerate(inst.pmf):
        if len(row) != n:
            out.append(Violation("shape", i, None, f"row has {len(row)} entries, expected {n}"))
    if any(v.kind == "shape" for v in out):
        return ValidationReport(tuple(out))

    tab = inst.tables
    for i, j in np.argwhere(tab.pmf < 0):
        out.append(Violation("pmf-nonneg", int(i), int(j), f"probability {inst.pmf[i][j]} is negative"))
    for i in np.flatnonzero(tab.cdf[:, -1] != tab.prob_scale):
        out.append(Violation("row-sum", int(i), None, f"row sums to {sum(inst.pmf[i], Fraction(0))}"))
    cdf_t = inst.tables.cdf
    bad = np.argwhere(cdf_t[1:] > cdf_t[:-1])
    for i, j in bad:
        i, j = int(i) + 1, int(j)
        hi = Fraction(int(cdf_t[i, j]), inst.tables.prob_scale)
        lo = Fraction(int(cdf_t[i - 1, j]), inst.tables.prob_scale)
        out.append(Violation("FOSD", i, j, f"CDF of type {i} is {hi} > {lo} of type {i - 1}"))
    return ValidationReport(tuple(out))


def validate_ordered(inst: OrderedItemInstance) -> ValidationReport:
    out: list[Violation] = []
    k = inst.k
    if inst.m < 1 or k < 1:
        out.append(Violation("shape", None, None, "need at least one buyer type and item type"))
        return ValidationReport(tuple(out))
    for s, p in enumerate(inst.item_pmf):
        if p < 0:
            out.append(Violation("pmf-nonneg", None, s, f"item probability {p} is negative"))
    total = sum(inst.item_pmf, Fraction(0))
    if total != 1:
        out.append(Violation("row-sum", None, None, f"item_pmf sums to {total}"))
    for t, row in enumerate(inst.value_table):
        if len(row) != k:
            out.append(Violation("shape", t, None, f"row has {len(row)} entries, expected {k}"))
    if any(v.kind == "shape" for v in out):
        return ValidationReport(tuple(out))
    out.extend(_table_order_violations(inst.value_table))
    return ValidationReport(tuple(out))


def _table_order_violations(table) -> list[Violation]:
    out = []
    for t, row in enumerate(table):
        for s in range(1, len(row)):
            if row[s] < row[s - 1]:
                out.append(Violation("item-order", t, s, f"v({t},{s}) = {row[s]} < v({t},{s - 1}) = {row[s - 1]}"))
    for t in range(1, len(table)):
        for s, (lo, hi) in enumerate(zip(table[t - 1], table[t])):
            if hi < lo:
                out.append(Violation("type-order", t, s, f"v({t},{s}) = {hi} < v({t - 1},{s}) = {lo}"))
    return out


def require_valid(inst: DiscreteInstance) -> None:
    report = validate_discrete(inst)
    if not report.ok:
        raise InvalidInstanceError(report)


# ---------------------------------------------------------------------------
# distribution queries


def _check_type(inst: DiscreteInstance, i: int) -> None:
    if not 0 <= i < inst.m:
        raise IndexError(f"type index {i} out of range for m={inst.m}")


def cdf(inst: DiscreteInstance, i: int, value) -> Fraction:
    """P(v <= value) for a type-``i`` buyer."""
    _check_type(inst, i)
    value = as_rat(value)
    return sum((p for v, p in zip(inst.values, inst.pmf[i]) if v <= value), Fraction(0))


def cdf_strict(inst: DiscreteInstance, i: int, value) -> Fraction:
    """P(v < value); the probability that a refund of ``value`` is taken."""
    _check_type(inst, i)
    value = as_rat(value)
    return sum((p for v, p in zip(inst.values, inst.pmf[i]) if v < value), Fraction(0))


# ---------------------------------------------------------------------------
# item-type reductions


def to_discrete(inst: OrderedItemInstance) -> DiscreteInstance:
    """Collapse an item-type instance to its per-type value distributions.

    Item types a buyer values equally merge into one grid point, since only
    the value drives behaviour.
    """
    grid = sorted({v for row in inst.value_table for v in row})
    index = {v: j for j, v in enumerate(grid)}
    pmf = []
    for row in inst.value_table:
        out = [Fraction(0)] * len(grid)
        for v, p in zip(row, inst.item_pmf):
            out[index[v]] += p
        pmf.append(out)
    return DiscreteInstance(tuple(grid), pmf)


class SortedRows(NamedTuple):
    instance: OrderedItemInstance
    permutations: tuple[tuple[int, ...], ...]
    report: ValidationReport


def sort_rows(inst: UniformItemInstance) -> SortedRows:
    """Sort each buyer's values ascending and check the result is ordered.

    ``permutations[t][s]`` is the original item index that lands in sorted
    position ``s`` for type ``t`` (0-based).  Python's sort is stable, so
    equal values keep their original relative order.
    """
    k = inst.k
    shape = [
        Violation("shape", t, None, f"row has {len(row)} entries, expected {k}")
        for t, row in enumerate(inst.value_table)
        if len(row) != k
    ]
    if inst.m < 1 or k < 1:
        shape.append(Violation("shape", None, None, "need at least one buyer type and item type"))
    if shape:
        return SortedRows(OrderedItemInstance((), ()), (), ValidationReport(tuple(shape)))
    perms = tuple(
        tuple(sorted(range(k), key=lambda s, row=row: row[s])) for row in inst.value_table
    )
    table = tuple(tuple(row[s] for s in perm) for row, perm in zip(inst.value_table, perms))
    ordered = OrderedItemInstance((Fraction(1, k),) * k, table)
    return SortedRows(ordered, perms, ValidationReport(tuple(_table_order_violations(table))))


# ---------------------------------------------------------------------------
# random generation


@dataclass(frozen=True)
class GridSpec:
    """Controls the rationals drawn by the generators.

    Values are distinct integers in ``[1, max_value]`` divided by
    ``value_denominator``; probabilities are multiples of ``1/pmf_denominator``.
    """

    max_value: int = 20
    value_denominator: int = 1
    pmf_denominator: int = 12

    def check(self, n: int | None = None) -> None:
        if self.max_value < 1 or self.value_denominator < 1 or self.pmf_denominator < 1:
            raise ValueError(f"grid spec fields must be positive: {self}")
        if n is not None and n > self.max_value:
            raise ValueError(f"cannot draw {n} distinct values from 1..{self.max_value}")


def _random_counts(rng: np.random.Generator, n: int, total: int) -> list[int]:
    # uniform weak composition of `total` into n parts via stars and bars
    cuts = np.sort(rng.choice(total + n - 1, size=n - 1, replace=False)) if n > 1 else np.array([], dtype=int)
    edges = np.concatenate(([-1], cuts, [total + n - 1]))
    return [int(x) for x in np.diff(edges) - 1]


def gen_random(seed: int, m: int, n: int, grid_spec: GridSpec = GridSpec()) -> DiscreteInstance:
    """Seeded random instance satisfying the FOSD ordering by construction.

    Independent pmfs are drawn, turned into CDFs, and each CDF column is
    sorted in descending order across types; the rows stay valid CDFs and
    differencing recovers pmfs.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    grid_spec.check(n)
    rng = np.random.default_rng(seed)
    ints = np.sort(rng.choice(grid_spec.max_value, size=n, replace=False) + 1)
    values = tuple(Fraction(int(x), grid_spec.value_denominator) for x in ints)
    d = grid_spec.pmf_denominator
    counts = np.array([_random_counts(rng, n, d) for _ in range(m)], dtype=np.int64)
    cdfs = np.cumsum(counts, axis=1)
    cdfs = -np.sort(-cdfs, axis=0)
    pmf_int = np.diff(np.concatenate([np.zeros((m, 1), dtype=np.int64), cdfs], axis=1), axis=1)
    # only d + 1 distinct probabilities exist; share them across cells
    probs = [Fraction(c, d) for c in range(d + 1)]
    pmf = tuple(tuple(probs[x] for x in row) for row in pmf_int.tolist())
    return DiscreteInstance(values, pmf)


def gen_ordered(seed: int, m: int, k: int, grid_spec: GridSpec = GridSpec()) -> OrderedItemInstance:
    """Seeded random ordered-item instance.

    Rows are built as cumulative sums of nonnegative increments so the
    table rises in quality, and each column is then sorted across types so
    it rises in type as well.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be at least 1")
    grid_spec.check()
    rng = np.random.default_rng(seed)
    step = max(1, grid_spec.max_value // max(k, 1))
    incr = rng.integers(0, step + 1, size=(m, k))
    incr[:, 0] += 1
    table = np.sort(np.cumsum(incr, axis=1), axis=0)
    vd = grid_spec.value_denominator
    item = _random_counts(rng, k, grid_spec.pmf_denominator)
    return OrderedItemInstance(
        tuple(Fraction(c, grid_spec.pmf_denominator) for c in item),
        tuple(tuple(Fraction(int(x), vd) for x in row) for row in table),
    )


def gen_uniform(seed: int, m: int, k: int, grid_spec: GridSpec = GridSpec()) -> UniformItemInstance:
    """Seeded uniform-item instance: an ordered table with each row shuffled."""
    base = gen_ordered(seed, m, k, grid_spec)
    rng = np.random.default_rng([seed, 1])
    rows = []
    for row in base.value_table:
        perm = rng.permutation(k)
        rows.append(tuple(row[int(s)] for s in perm))
    return UniformItemInstance(tuple(rows))


def common_denominator(xs: Sequence[Fraction]) -> int:
    return math.lcm(*(x.denominator for x in xs)) if xs else 1
