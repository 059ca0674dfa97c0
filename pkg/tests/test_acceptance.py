"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in pytest's terminal summary.
"""

import gc
import statistics
import time
from fractions import Fraction as F

import numpy as np
import pytest

from refundmech.audit import audit_result, brute_force, check_menu_size, check_virtual_identity
from refundmech.mechanism import RefundMenu, monotone_allocations, revenue
from refundmech.model import DiscreteInstance, GridSpec, gen_ordered, gen_random, gen_uniform, sort_rows, to_discrete
from refundmech.sim import simulate
from refundmech.solver import solve_capped, solve_general, solve_ordered, solve_uniform
from refundmech.virtual import VirtualTable, virtual_welfare

from conftest import ACCEPTANCE_LINES, small_random
from oracles import lagged_weighted_virtual

INST_A = DiscreteInstance((1, 2), ((F(1, 2), F(1, 2)), (F(1, 4), F(3, 4))))
INST_B = DiscreteInstance((1, 10), ((F(9, 10), F(1, 10)), (F(1, 10), F(9, 10))))


def report(num, name, ok, detail=""):
    line = f"criterion {num} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def general_instances():
    return [small_random(seed, 8, 8) for seed in range(200)]


def capped_instances():
    return [small_random(1000 + seed, 6, 6) for seed in range(100)]


def item_instances():
    out = []
    for seed in range(100):
        rng = np.random.default_rng([seed, 3])
        m, k = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        out.append((gen_ordered(seed, m, k), gen_uniform(seed, m, k)))
    return out


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    bad = [i for i, inst in enumerate(general_instances()) if solve_general(inst).revenue != brute_force(inst)[1]]
    report(1, "oracle equivalence", not bad, f"200 instances, mismatches {bad}, {time.perf_counter() - t0:.1f}s")


def test_criterion_2_capped_oracle_equivalence():
    t0 = time.perf_counter()
    bad = []
    for idx, inst in enumerate(capped_instances()):
        revs = []
        for c in range(1, inst.n + 1):
            got = solve_capped(inst, c).revenue
            if got != brute_force(inst, cap=c)[1]:
                bad.append((idx, c))
            revs.append(got)
        if revs != sorted(revs) or revs[-1] != solve_general(inst).revenue:
            bad.append((idx, "shape"))
    report(2, "capped oracle equivalence", not bad, f"100 instances, mismatches {bad}, {time.perf_counter() - t0:.1f}s")


def test_criterion_3_ordered_and_uniform():
    t0 = time.perf_counter()
    bad = []
    for idx, (oi, ui) in enumerate(item_instances()):
        for kind, res, grid in (
            ("ordered", solve_ordered(oi), to_discrete(oi)),
            ("uniform", solve_uniform(ui), to_discrete(sort_rows(ui).instance)),
        ):
            if res.revenue != brute_force(grid)[1] or len(res.menu) > oi.k + 1:
                bad.append((kind, idx))
    report(3, "ordered/uniform equivalence", not bad, f"200 instances, mismatches {bad}, {time.perf_counter() - t0:.1f}s")


def test_criterion_4_virtual_identity():
    insts = [INST_A, INST_B] + [small_random(5000 + s) for s in range(200)]
    shifted_ok = all(check_virtual_identity(inst, exhaustive_limit=10**9).ok for inst in insts)
    lagged_fails = [
        any(
            virtual_welfare(inst, S, VirtualTable.from_fractions(lagged_weighted_virtual(inst))) != revenue(inst, S)
            for S in monotone_allocations(inst.m, inst.n)
        )
        for inst in (INST_A, INST_B)
    ]
    report(
        4,
        "virtual-welfare identity",
        shifted_ok and all(lagged_fails),
        f"shifted index holds on {len(insts)} instances, lagged index fails on A and B: {all(lagged_fails)}",
    )


def test_criterion_5_golden_examples():
    a, b, b1 = solve_general(INST_A), solve_general(INST_B), solve_capped(INST_B, 1)
    ok = (
        a.revenue == F(3, 2)
        and a.menu.options == ((F(3, 2), 1),)
        and b.revenue == F(101, 20)
        and b.menu.options == ((10, 10), (F(91, 10), 1))
        and b1.revenue == 5
    )
    report(5, "golden examples", ok, f"A {a.revenue}, B {b.revenue}, B capped {b1.revenue}")


def test_criterion_6_ic_ir_audit():
    results = [solve_general(INST_A), solve_general(INST_B), solve_capped(INST_B, 1)]
    results += [solve_general(inst) for inst in general_instances()]
    for inst in capped_instances():
        results += [solve_capped(inst, c) for c in range(1, inst.n + 1)]
    for oi, ui in item_instances():
        results += [solve_ordered(oi), solve_uniform(ui)]
    failures = []
    for res in results:
        audit = audit_result(res, bound=res.instance.n)
        failures += [c.name for c in audit.failures()]
    report(6, "IC/IR audit", not failures, f"{len(results)} menus, failed checks {sorted(set(failures))}")


def test_criterion_7_menu_size():
    over = [i for i, inst in enumerate(general_instances()) if len(solve_general(inst).menu) > inst.n]
    a = solve_general(INST_A)
    constant = len(set(a.allocation)) == 1 and INST_A.m > 1
    raw = RefundMenu(tuple(a.menu.assigned(i) for i in range(INST_A.m)), tuple(range(INST_A.m)))
    deduped = len(a.menu) == 1 and len(raw.deduplicated()) == 1 and check_menu_size(raw, 1).ok
    report(7, "menu-size bound", not over and constant and deduped, f"oversized {over}, constant-S dedup {deduped}")


def test_criterion_8_simulation_consistency():
    menu = solve_general(INST_B).menu
    t0 = time.perf_counter()
    hits = 0
    for seed in range(100):
        res = simulate(INST_B, menu, 10**5, seed)
        hits += abs(res.empirical_revenue - 101 / 20) <= 3 * res.std_error
    report(8, "simulation consistency", hits >= 99, f"{hits}/100 within 3 SE, {time.perf_counter() - t0:.1f}s")


@pytest.mark.slow
def test_criterion_9_scaling():
    spec = GridSpec(max_value=1000)

    # sizes are interleaved so drift in machine load hits both alike
    times = {5000: [], 10000: []}
    for seed in range(5):
        for m, bucket in times.items():
            inst = gen_random(seed, m, 200, spec)
            gc.collect()
            t0 = time.perf_counter()
            solve_general(inst)
            bucket.append(time.perf_counter() - t0)
    base, doubled = statistics.median(times[5000]), statistics.median(times[10000])
    ratio = doubled / base
    report(9, "scaling", base < 5 and ratio <= 2.5, f"m=5000 n=200 {base:.2f}s, doubling ratio {ratio:.2f}")
