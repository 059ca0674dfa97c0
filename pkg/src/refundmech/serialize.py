"""JSON documents for instances, menus and solve results.

Rationals are always strings, ``"a/b"`` or ``"a"``.  Parsing is strict and
errors name the offending field (``pmf[1][0]``) or, for malformed JSON, the
line and column.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction

from refundmech.mechanism import RefundMenu
from refundmech.model import (
    DiscreteInstance,
    Instance,
    OrderedItemInstance,
    UniformItemInstance,
)

_RAT = re.compile(r"-?\d+(?:/\d+)?")

KINDS = ("discrete", "ordered_items", "uniform_items")


class ParseError(ValueError):
    pass


def parse_rat(x, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ParseError(f"{where}: expected a rational string, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if not _RAT.fullmatch(x):
        raise ParseError(f"{where}: malformed rational {x!r}")
    num, _, den = x.partition("/")
    if den and int(den) == 0:
        raise ParseError(f"{where}: zero denominator in {x!r}")
    return Fraction(int(num), int(den) if den else 1)


def format_rat(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _load(data) -> dict:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level: expected a JSON object")
    return doc


def _field(doc: dict, key: str, kind: str):
    if key not in doc:
        raise ParseError(f"{key}: missing (required for kind {kind!r})")
    return doc[key]


def _rat_list(xs, where: str) -> list[Fraction]:
    if not isinstance(xs, list):
        raise ParseError(f"{where}: expected a list")
    return [parse_rat(x, f"{where}[{i}]") for i, x in enumerate(xs)]


def _rat_matrix(rows, where: str, width: int | None) -> list[list[Fraction]]:
    if not isinstance(rows, list) or not rows:
        raise ParseError(f"{where}: expected a non-empty list of rows")
    out = []
    for i, row in enumerate(rows):
        parsed = _rat_list(row, f"{where}[{i}]")
        if width is None:
            width = len(parsed)
        if len(parsed) != width:
            raise ParseError(f"{where}[{i}]: row has {len(parsed)} entries, expected {width}")
        out.append(parsed)
    return out


def parse_instance(data) -> Instance:
    doc = _load(data)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    if kind == "discrete":
        values = _rat_list(_field(doc, "values", kind), "values")
        if not values:
            raise ParseError("values: need at least one value")
        for j in range(1, len(values)):
            if values[j] <= values[j - 1]:
                raise ParseError(f"values[{j}]: grid must be strictly ascending ({values[j - 1]} then {values[j]})")
        pmf = _rat_matrix(_field(doc, "pmf", kind), "pmf", len(values))
        return DiscreteInstance(tuple(values), pmf)
    table = _rat_matrix(_field(doc, "value_table", kind), "value_table", None)
    if kind == "ordered_items":
        item_pmf = _rat_list(_field(doc, "item_pmf", kind), "item_pmf")
        if len(item_pmf) != len(table[0]):
            raise ParseError(f"item_pmf: has {len(item_pmf)} entries, value_table rows have {len(table[0])}")
        return OrderedItemInstance(tuple(item_pmf), table)
    return UniformItemInstance(table)


def instance_to_json(inst: Instance) -> dict:
    if isinstance(inst, DiscreteInstance):
        return {
            "kind": "discrete",
            "values": [format_rat(v) for v in inst.values],
            "pmf": [[format_rat(p) for p in row] for row in inst.pmf],
        }
    if isinstance(inst, OrderedItemInstance):
        return {
            "kind": "ordered_items",
            "item_pmf": [format_rat(p) for p in inst.item_pmf],
            "value_table": [[format_rat(v) for v in row] for row in inst.value_table],
        }
    if isinstance(inst, UniformItemInstance):
        return {
            "kind": "uniform_items",
            "value_table": [[format_rat(v) for v in row] for row in inst.value_table],
        }
    raise TypeError(f"not an instance: {type(inst).__name__}")


def dumps(doc) -> bytes:
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def emit_instance(inst: Instance) -> bytes:
    return dumps(instance_to_json(inst))


def menu_to_json(menu: RefundMenu, revenue: Fraction | None = None) -> dict:
    doc = {
        "options": [{"price": format_rat(o.price), "refund": format_rat(o.refund)} for o in menu.options],
        "assignment": list(menu.assignment),
    }
    if revenue is not None:
        doc["revenue"] = format_rat(revenue)
    return doc


def parse_menu_doc(doc: dict, where: str = "") -> RefundMenu:
    opts = doc.get("options")
    if not isinstance(opts, list) or not opts:
        raise ParseError(f"{where}options: expected a non-empty list")
    options = []
    for i, o in enumerate(opts):
        if not isinstance(o, dict) or "price" not in o or "refund" not in o:
            raise ParseError(f"{where}options[{i}]: expected an object with price and refund")
        options.append((parse_rat(o["price"], f"{where}options[{i}].price"), parse_rat(o["refund"], f"{where}options[{i}].refund")))
    assignment = doc.get("assignment")
    if not isinstance(assignment, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in assignment):
        raise ParseError(f"{where}assignment: expected a list of integers")
    for i, a in enumerate(assignment):
        if not 0 <= a < len(options):
            raise ParseError(f"{where}assignment[{i}]: option {a} does not exist")
    return RefundMenu(tuple(options), tuple(assignment))


def parse_menu(data) -> tuple[RefundMenu, list[int] | None, Fraction | None]:
    """Read a menu document or a solve-result document.

    Returns the menu, the threshold allocation if present, and the recorded
    revenue if present.
    """
    doc = _load(data)
    if "menu" in doc:
        menu = parse_menu_doc(doc["menu"], "menu.")
        alloc = doc.get("allocation")
        if alloc is not None and (
            not isinstance(alloc, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in alloc)
        ):
            raise ParseError("allocation: expected a list of integers")
        rev = parse_rat(doc["revenue"], "revenue") if "revenue" in doc else None
        return menu, alloc, rev
    menu = parse_menu_doc(doc)
    rev = parse_rat(doc["revenue"], "revenue") if "revenue" in doc else None
    return menu, None, rev


def result_to_json(result, timing: bool = False, virtual=None) -> dict:
    stats = {k: v for k, v in result.stats.items() if timing or k != "seconds"}
    doc = {
        "menu": menu_to_json(result.menu, result.revenue),
        "allocation": list(result.allocation),
        "revenue": format_rat(result.revenue),
        "stats": stats,
    }
    if result.quality_thresholds is not None:
        doc["quality_thresholds"] = list(result.quality_thresholds)
    if result.permutations is not None:
        doc["permutations"] = [list(p) for p in result.permutations]
    if virtual is not None:
        doc["virtual"] = [[format_rat(x) for x in row] for row in virtual.w]
    return doc
