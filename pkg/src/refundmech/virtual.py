"""Probability-weighted virtual values for the discrete model.

``w[i][j]`` is ``g_i(v_j) * phi(i, v_j)``: the value ``v_j`` weighted by its
probability, minus the information rent that type ``i`` keeping at ``v_j``
concedes to the ``m - 1 - i`` higher types.  The rent for a keep threshold
at ``v_j`` comes from the gap up to the next grid value, weighted by how
much more likely type ``i`` is than type ``i + 1`` to sit at or below
``v_j``.

Working with the weighted form avoids dividing by zero-probability cells.
Summing ``w`` from a threshold upward gives a type's net revenue
contribution, so for every monotone threshold vector the average of those
suffix sums is exactly the mechanism's revenue.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from refundmech.mechanism import check_allocation
from refundmech.model import DiscreteInstance


@dataclass(frozen=True, eq=False)
class VirtualTable:
    scale: int
    w_scaled: np.ndarray  # (m, n)
    suffix_scaled: np.ndarray  # (m, n + 1), last column zero

    @property
    def m(self) -> int:
        return self.w_scaled.shape[0]

    @property
    def w(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(Fraction(int(x), self.scale) for x in row) for row in self.w_scaled)

    @property
    def suffix(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(Fraction(int(x), self.scale) for x in row) for row in self.suffix_scaled)

    def weighted(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.w_scaled[i, j]), self.scale)

    @classmethod
    def from_weighted(cls, w_scaled: np.ndarray, scale: int) -> "VirtualTable":
        m, n = w_scaled.shape
        suffix = np.zeros((m, n + 1), dtype=w_scaled.dtype)
        suffix[:, :n] = np.cumsum(w_scaled[:, ::-1], axis=1)[:, ::-1]
        return cls(scale, w_scaled, suffix)

    @classmethod
    def from_fractions(cls, w: Sequence[Sequence[Fraction]]) -> "VirtualTable":
        """Build a table from explicit rationals (used for tampered tables in audits)."""
        import math

        scale = math.lcm(*(Fraction(x).denominator for row in w for x in row))
        arr = np.array(
            [[int(Fraction(x) * scale) for x in row] for row in w], dtype=object
        )
        return cls.from_weighted(arr, scale)


def weighted_virtual(inst: DiscreteInstance) -> VirtualTable:
    tab = inst.tables
    m, n = tab.m, tab.n
    w = tab.vals[None, :] * tab.pmf
    if m > 1 and n > 1:
        gaps = np.diff(tab.vals)  # (n-1,)
        cdf_gap = tab.cdf[:-1, :-1] - tab.cdf[1:, :-1]  # (m-1, n-1)
        higher = np.arange(m - 1, 0, -1, dtype=np.int64).astype(tab.dtype)  # m-1-i
        w[:-1, :-1] -= higher[:, None] * gaps[None, :] * cdf_gap
    return VirtualTable.from_weighted(w, tab.scale)


def virtual_value(inst: DiscreteInstance, i: int, j: int, table: VirtualTable | None = None) -> Fraction:
    """Unweighted virtual value; only defined where the cell has positive mass."""
    p = inst.pmf[i][j]
    if p == 0:
        raise ZeroDivisionError(f"type {i} puts no mass on value index {j}")
    table = table or weighted_virtual(inst)
    return table.weighted(i, j) / p


def virtual_welfare(inst: DiscreteInstance, S: Sequence[int], table: VirtualTable | None = None) -> Fraction:
    S = check_allocation(inst, S)
    table = table or weighted_virtual(inst)
    total = sum(int(table.suffix_scaled[i, s]) for i, s in enumerate(S))
    return Fraction(total, table.scale * inst.m)
