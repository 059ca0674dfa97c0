import json
from fractions import Fraction as F

import pytest

from refundmech.model import gen_ordered, gen_random, gen_uniform
from refundmech.serialize import (
    ParseError,
    emit_instance,
    format_rat,
    menu_to_json,
    parse_instance,
    parse_menu,
    parse_rat,
)
from refundmech.solver import solve_general


def doc(**kw):
    return json.dumps(kw)


@pytest.mark.parametrize("inst", [gen_random(3, 3, 4), gen_ordered(3, 3, 2), gen_uniform(3, 2, 3)])
def test_round_trip(inst):
    text = emit_instance(inst)
    assert parse_instance(text) == inst
    assert emit_instance(parse_instance(text)) == text


def test_emit_canonicalises_rationals():
    src = doc(kind="discrete", values=["2/2", "4"], pmf=[["2/4", "1/2"]])
    out = json.loads(emit_instance(parse_instance(src)))
    assert out == {"kind": "discrete", "values": ["1", "4"], "pmf": [["1/2", "1/2"]]}


def test_parse_rat_forms():
    assert parse_rat("3", "x") == 3
    assert parse_rat("-6/4", "x") == F(-3, 2)
    assert format_rat(F(-3, 2)) == "-3/2"
    assert format_rat(F(4, 2)) == "2"


@pytest.mark.parametrize("bad", ["1/0", "1.5", "a", "", "1/-2", " 1"])
def test_parse_rat_rejects(bad):
    with pytest.raises(ParseError):
        parse_rat(bad, "values[0]")


def test_zero_denominator_names_field():
    with pytest.raises(ParseError, match=r"pmf\[0\]\[1\]"):
        parse_instance(doc(kind="discrete", values=["1", "2"], pmf=[["1", "1/0"]]))


def test_wrong_row_length_names_row():
    with pytest.raises(ParseError, match=r"pmf\[1\]"):
        parse_instance(doc(kind="discrete", values=["1", "2"], pmf=[["1/2", "1/2"], ["1"]]))


def test_non_ascending_grid():
    with pytest.raises(ParseError, match=r"values\[1\]"):
        parse_instance(doc(kind="discrete", values=["2", "1"], pmf=[["1/2", "1/2"]]))


def test_json_syntax_error_has_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_instance('{\n  "kind": }')


def test_unknown_kind_and_missing_field():
    with pytest.raises(ParseError, match="kind"):
        parse_instance(doc(kind="other"))
    with pytest.raises(ParseError, match="item_pmf"):
        parse_instance(doc(kind="ordered_items", value_table=[["1"]]))


def test_menu_round_trip(inst_b):
    res = solve_general(inst_b)
    menu, alloc, rev = parse_menu(json.dumps(menu_to_json(res.menu, res.revenue)))
    assert menu == res.menu and alloc is None and rev == F(101, 20)


def test_menu_bad_assignment():
    with pytest.raises(ParseError, match=r"assignment\[0\]"):
        parse_menu(json.dumps({"options": [{"price": "1", "refund": "0"}], "assignment": [3]}))
