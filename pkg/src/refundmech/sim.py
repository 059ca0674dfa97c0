"""Monte Carlo estimate of menu revenue from simulated buyers.

Each trial draws a type uniformly, lets that type pick its best option
(exact rational utilities, ties to the option the seller prefers, opting
out when every option has negative utility), draws a value, and returns
the item iff the value is strictly below the refund.

Randomness comes from numpy's PCG64.  Trials are cut into fixed-size
shards; shard ``s`` draws from ``SeedSequence(seed, spawn_key=(s,))``, so a
run is reproducible regardless of how many threads process the shards.
Sampling is exact: probabilities are integers over a common denominator
and values are located by integer search.  Shards only produce integer
counts per (type, value) cell, so merging is exact and order-free.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from refundmech.audit import check_ic
from refundmech.mechanism import RefundMenu, q_value
from refundmech.model import DiscreteInstance, cdf_strict

SHARD_SIZE = 1 << 16


class NotIncentiveCompatible(ValueError):
    pass


@dataclass(frozen=True)
class SimResult:
    trials: int
    empirical_revenue: float
    std_error: float
    take_rates: tuple[float, ...]  # one per option, then the opt-out share
    return_rates: tuple[float, ...]  # per option, among buyers who took it
    exact_mean: Fraction  # sample mean as a rational, before rounding

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "empirical_revenue": repr(self.empirical_revenue),
            "std_error": repr(self.std_error),
            "take_rates": [repr(x) for x in self.take_rates],
            "return_rates": [repr(x) for x in self.return_rates],
        }


def choose_options(inst: DiscreteInstance, menu: RefundMenu) -> list[int | None]:
    """Option picked by each type, or None when the type opts out."""
    picks: list[int | None] = []
    for i in range(inst.m):
        best = None
        for o, opt in enumerate(menu.options):
            u = q_value(inst, i, opt.refund) - opt.price
            seller = opt.price - opt.refund * cdf_strict(inst, i, opt.refund)
            key = (u, seller)
            if best is None or key > best[0]:
                best = (key, o)
        picks.append(best[1] if best[0][0] >= 0 else None)
    return picks


def _shard_counts(inst: DiscreteInstance, seed: int, shard: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(shard,))))
    m, n = inst.m, inst.n
    tab = inst.tables
    types = rng.integers(0, m, size=size)
    if tab.dtype is np.int64 and m * tab.prob_scale < 2**62:
        sp = tab.prob_scale
        flat = (tab.cdf + np.arange(m, dtype=np.int64)[:, None] * sp).ravel()
        keys = types * sp + rng.integers(0, sp, size=size)
        cells = np.searchsorted(flat, keys, side="right")
    else:
        cdf = np.array([[float(c) for c in row] for row in np.cumsum(np.array(inst.pmf, dtype=object), axis=1)])
        flat = (cdf + np.arange(m)[:, None]).ravel()
        cells = np.searchsorted(flat, types + rng.random(size), side="right")
    cells = np.minimum(cells, (types + 1) * n - 1)
    return np.bincount(cells, minlength=m * n).reshape(m, n)


def simulate(
    inst: DiscreteInstance,
    menu: RefundMenu,
    trials: int,
    seed: int,
    force: bool = False,
    threads: int = 1,
) -> SimResult:
    if trials < 1:
        raise ValueError("trials must be positive")
    if not force:
        ic = check_ic(inst, menu)
        if not ic.checks[0].passed:
            raise NotIncentiveCompatible(f"menu is not incentive compatible: {ic.checks[0].witness}")
    picks = choose_options(inst, menu)

    shards = [(s, min(SHARD_SIZE, trials - s * SHARD_SIZE)) for s in range(math.ceil(trials / SHARD_SIZE))]
    if threads > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _shard_counts(inst, seed, *a), shards))
    else:
        parts = [_shard_counts(inst, seed, s, size) for s, size in shards]
    counts = sum(parts)

    k = len(menu.options)
    taken = [0] * (k + 1)
    returned = [0] * k
    total = Fraction(0)
    total_sq = Fraction(0)
    for i in range(inst.m):
        row = counts[i]
        n_i = int(row.sum())
        o = picks[i]
        if o is None:
            taken[k] += n_i
            continue
        taken[o] += n_i
        opt = menu.options[o]
        for j, c in enumerate(row):
            c = int(c)
            if not c:
                continue
            back = inst.values[j] < opt.refund
            pay = opt.price - (opt.refund if back else 0)
            returned[o] += c if back else 0
            total += c * pay
            total_sq += c * pay * pay
    mean = total / trials
    var = total_sq / trials - mean * mean
    # sample variance with Bessel's correction
    var = var * trials / (trials - 1) if trials > 1 else Fraction(0)
    return SimResult(
        trials=trials,
        empirical_revenue=float(mean),
        std_error=math.sqrt(var / trials),
        take_rates=tuple(t / trials for t in taken),
        return_rates=tuple(r / t if t else 0.0 for r, t in zip(returned, taken)),
        exact_mean=mean,
    )
