"""Command-line interface: gen | solve | audit | oracle | simulate | bench.

Machine-readable output (JSON, CSV) goes to stdout or ``--out``; short
human-readable summaries go to stderr.

Exit codes: 0 success, 1 a check failed, 2 usage or I/O error, 3 oracle
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import statistics
import sys
import time
from pathlib import Path

from refundmech.audit import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    audit_menu,
    brute_force,
)
from refundmech.mechanism import menu_revenue
from refundmech.model import (
    DiscreteInstance,
    GridSpec,
    InvalidInstanceError,
    UniformItemInstance,
    gen_ordered,
    gen_random,
    gen_uniform,
    sort_rows,
    to_discrete,
)
from refundmech.serialize import (
    ParseError,
    dumps,
    emit_instance,
    format_rat,
    parse_instance,
    parse_menu,
    result_to_json,
)
from refundmech.sim import NotIncentiveCompatible, simulate
from refundmech.solver import solve, solve_general
from refundmech.virtual import weighted_virtual

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(out).write_bytes(data)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from None


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_instance(path: str):
    return parse_instance(_read(path))


def _grid(inst) -> tuple[DiscreteInstance, int]:
    """Discrete instance to audit against, with its menu-size bound."""
    if isinstance(inst, DiscreteInstance):
        return inst, inst.n
    if isinstance(inst, UniformItemInstance):
        sorted_rows = sort_rows(inst)
        if not sorted_rows.report.ok:
            raise InvalidInstanceError(sorted_rows.report)
        inst = sorted_rows.instance
    return to_discrete(inst), inst.k + 1


def cmd_gen(args) -> int:
    spec = GridSpec(args.max_value, args.value_denominator, args.pmf_denominator)
    try:
        if args.kind == "discrete":
            inst = gen_random(args.seed, args.m, args.n, spec)
        elif args.kind == "ordered":
            inst = gen_ordered(args.seed, args.m, args.k, spec)
        else:
            inst = gen_uniform(args.seed, args.m, args.k, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(emit_instance(inst), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    result = solve(inst, args.max_menu_size)
    virtual = weighted_virtual(result.instance) if args.emit_virtual else None
    _write(dumps(result_to_json(result, timing=args.timing, virtual=virtual)), args.out)
    _note(f"revenue {format_rat(result.revenue)} with {len(result.menu)} option(s)")
    return EXIT_OK


def cmd_audit(args) -> int:
    inst = _load_instance(args.instance)
    grid, bound = _grid(inst)
    menu, allocation, _ = parse_menu(_read(args.menu))
    if len(menu.assignment) != grid.m:
        raise UsageError(f"menu assigns {len(menu.assignment)} types, instance has {grid.m}")
    if allocation is not None and (len(allocation) != grid.m or not all(0 <= s < grid.n for s in allocation)):
        raise UsageError("allocation does not fit the instance")
    report = audit_menu(grid, menu, allocation, bound=bound)
    _write(dumps(report.to_json()), args.out)
    for c in report.failures():
        _note(f"FAIL {c.name}: {c.witness}")
    _note("all checks pass" if report.ok else f"{len(report.failures())} check(s) failed")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    grid, _ = _grid(inst)
    try:
        S, best = brute_force(grid, cap=args.cap, budget=args.budget)
    except BudgetExceeded as exc:
        _note(str(exc))
        return EXIT_BUDGET
    result = solve(inst, args.cap)
    doc = {
        "oracle": {"allocation": list(S), "revenue": format_rat(best)},
        "solver": {"allocation": list(result.allocation), "revenue": format_rat(result.revenue)},
        "match": result.revenue == best,
    }
    ok = doc["match"]
    if args.menu:
        menu, _, _ = parse_menu(_read(args.menu))
        got = menu_revenue(grid, menu)
        doc["menu"] = {"revenue": format_rat(got), "match": got == best}
        ok = ok and got == best
    _write(dumps(doc), args.out)
    _note(f"oracle {format_rat(best)}  solver {format_rat(result.revenue)}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    inst = _load_instance(args.instance)
    grid, _ = _grid(inst)
    menu, _, _ = parse_menu(_read(args.menu))
    if len(menu.assignment) != grid.m:
        raise UsageError(f"menu assigns {len(menu.assignment)} types, instance has {grid.m}")
    try:
        res = simulate(grid, menu, args.trials, args.seed, force=args.force, threads=args.threads)
    except NotIncentiveCompatible as exc:
        _note(f"{exc} (use --force to simulate anyway)")
        return EXIT_FAIL
    _write(dumps(res.to_json()), args.out)
    _note(f"empirical revenue {res.empirical_revenue:.6g} +/- {res.std_error:.3g}")
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def bench_rows(ms, ns, seeds: int, max_value: int | None = None):
    """Median solve_general wall time per (m, n) over ``seeds`` instances."""
    for n in ns:
        spec = GridSpec(max_value=max_value or max(20, 5 * n))
        for m in ms:
            times = []
            for seed in range(seeds):
                inst = gen_random(seed, m, n, spec)
                t0 = time.perf_counter()
                solve_general(inst)
                times.append(time.perf_counter() - t0)
            yield m, n, statistics.median(times) if times else 0.0


def cmd_bench(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "n", "seconds"])
    for m, n, sec in bench_rows(args.m, args.n, args.seeds):
        writer.writerow([m, n, f"{sec:.6f}"])
    _write(buf.getvalue().encode(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="refundmech", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("kind", choices=["discrete", "ordered", "uniform"])
    g.add_argument("--m", type=int, required=True, help="number of buyer types")
    g.add_argument("--n", type=int, default=4, help="grid size (discrete)")
    g.add_argument("--k", type=int, default=3, help="number of item types (ordered/uniform)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-value", type=int, default=20)
    g.add_argument("--value-denominator", type=int, default=1)
    g.add_argument("--pmf-denominator", type=int, default=12)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="compute the optimal menu")
    s.add_argument("instance")
    s.add_argument("--max-menu-size", type=int, default=None, metavar="C")
    s.add_argument("--emit-virtual", action="store_true", help="include the weighted virtual value table")
    s.add_argument("--timing", action="store_true", help="include wall time in stats (breaks bit-identical output)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("audit", help="check a menu for IC, IR and size")
    a.add_argument("instance")
    a.add_argument("menu", help="menu document or solve output")
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    o = sub.add_parser("oracle", help="brute-force optimum and cross-check")
    o.add_argument("instance")
    o.add_argument("--cap", type=int, default=None)
    o.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    o.add_argument("--menu", help="optional menu or solve output to compare")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    m = sub.add_parser("simulate", help="Monte Carlo revenue of a menu")
    m.add_argument("instance")
    m.add_argument("menu")
    m.add_argument("--trials", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--force", action="store_true", help="simulate even if the menu fails IC")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="time solve_general over a grid of sizes")
    b.add_argument("--m", type=_int_list, default=[], help="comma-separated type counts")
    b.add_argument("--n", type=_int_list, default=[], help="comma-separated grid sizes")
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except InvalidInstanceError as exc:
        _note(f"invalid instance: {exc}")
        return EXIT_FAIL
    except ValueError as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
