"""Exact integer-scaled tables for the fast solver paths.

Values are stored as integers over ``value_scale`` and probabilities over
``prob_scale``.  Every derived quantity (CDFs, partial expectations, Q,
weighted virtual values) is then an integer over a known common scale, so
comparisons in the dynamic programs are exact and cheap.  Arrays use int64
when a conservative magnitude bound allows it and fall back to Python ints
(object dtype) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_INT64_SAFE = 2**62


def pick_dtype(bound: int):
    return np.int64 if bound < _INT64_SAFE else object


@dataclass(frozen=True, eq=False)
class ScaledTables:
    m: int
    n: int
    value_scale: int
    prob_scale: int
    vals: np.ndarray  # (n,)
    pmf: np.ndarray  # (m, n)
    cdf: np.ndarray  # (m, n) inclusive cumulative pmf
    mass: np.ndarray  # (m, n) inclusive cumulative pmf * value
    dtype: object

    @classmethod
    def build(cls, inst) -> "ScaledTables":
        values = inst.values
        m, n = inst.m, inst.n
        sv = math.lcm(*(v.denominator for v in values)) if values else 1
        # one pass over the pmf; Fraction's numerator/denominator properties are slow in bulk
        ratios = [p.as_integer_ratio() for row in inst.pmf for p in row]
        sp = math.lcm(*{d for _, d in ratios}) if ratios else 1
        vals_py = [v.numerator * (sv // v.denominator) for v in values]
        vmax = max((abs(v) for v in vals_py), default=1) or 1
        bound = 8 * (m + 1) * (m + 1) * (n + 1) * vmax * sp
        dtype = pick_dtype(bound)
        vals = np.array(vals_py, dtype=dtype)
        pmf = np.array([a * (sp // d) for a, d in ratios], dtype=dtype).reshape(m, n)
        cdf = np.cumsum(pmf, axis=1)
        mass = np.cumsum(pmf * vals[None, :], axis=1)
        return cls(m, n, sv, sp, vals, pmf, cdf, mass, dtype)

    @property
    def scale(self) -> int:
        """Common denominator of Q values, weighted virtual values and revenues."""
        return self.value_scale * self.prob_scale

    def cdf_strict(self) -> np.ndarray:
        """(m, n) table of P(v < v_j), scaled by ``prob_scale``."""
        out = np.zeros_like(self.cdf)
        out[:, 1:] = self.cdf[:, :-1]
        return out

    def q_table(self) -> np.ndarray:
        """(m, n) table of E[max(v, v_j)] for each type, scaled by ``scale``."""
        below = self.cdf_strict()
        mass_below = np.zeros_like(self.mass)
        mass_below[:, 1:] = self.mass[:, :-1]
        return self.vals[None, :] * below + (self.mass[:, -1:] - mass_below)

    def q_at(self, i: int, j: int) -> int:
        below = self.cdf[i, j - 1] if j > 0 else 0
        mass_below = self.mass[i, j - 1] if j > 0 else 0
        return int(self.vals[j] * below + (self.mass[i, -1] - mass_below))

    def to_fraction(self, x, scale: int | None = None) -> Fraction:
        return Fraction(int(x), self.scale if scale is None else scale)
