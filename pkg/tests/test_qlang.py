"""Query frontend: parsing, normalization, and typechecking."""

import pytest

from treeq.errors import QuerySyntaxError, QueryTypeError, UnknownIdentifier
from treeq.exprs import Bin, Cmp, Lit, Unary, to_source
from treeq.qlang import (
    Agg,
    Extremum,
    Filter,
    JoinMap,
    MapQ,
    Product,
    Quantifier,
    Reduce,
    SourceRef,
    parse_query,
    typecheck,
)
from treeq.values import F64, I64, PairType, Schema, SetType

ITEM = "schema Item { x: i64, id: i64 }\n"
PT = "schema Pt { x: f64, y: f64 }\n"


def front(text):
    return typecheck(parse_query(text))


def test_parse_filter_query():
    m = front(ITEM + "query q(xs: Set<Item>, lo: i64, hi: i64) = "
                     "filter(|t| lo <= t.x && t.x <= hi, xs)")
    q = m.query
    assert q.name == "q"
    assert [n for n, _ in q.params] == ["xs", "lo", "hi"]
    assert isinstance(q.root, Filter)
    assert q.root.vars == ("t",)
    assert isinstance(q.root.src, SourceRef)
    assert isinstance(q.result_type, SetType)
    assert q.result_type.elem.name == "Item"


def test_comparison_normalization():
    m = front(ITEM + "query q(xs: Set<Item>) = filter(|t| t.x > 3, xs)")
    # `a > b` becomes `b < a`; only lt/le/eq survive parsing.
    p = m.query.root.pred
    assert isinstance(p, Cmp) and p.op == "lt"
    assert to_source(p) == "3 < t.x"
    m2 = front(ITEM + "query q(xs: Set<Item>) = filter(|t| t.x != 3, xs)")
    assert isinstance(m2.query.root.pred, Unary)


def test_operator_precedence_and_literals():
    m = front(ITEM + "query q(xs: Set<Item>) = "
                     "filter(|t| t.x * 2 + 1 < 10 || t.x == -3, xs)")
    assert isinstance(m.query.root.pred, Bin)
    assert m.query.root.pred.op == "or"
    m2 = front(PT + "query q(ps: Set<Pt>) = filter(|p| p.x < 1.5e3, ps)")
    lit = m2.query.root.pred.b
    assert isinstance(lit, Lit) and lit.value == 1500.0


def test_map_and_aggregates():
    m = front(ITEM + "query q(xs: Set<Item>) = map(|t| t.x * t.x, xs)")
    assert isinstance(m.query.root, MapQ)
    assert m.query.result_type == SetType(I64)

    m2 = front(ITEM + "query q(xs: Set<Item>) = sum(map(|t| t.x, xs))")
    assert isinstance(m2.query.root, Agg) and m2.query.root.op == "sum"
    assert m2.query.result_type == I64

    m3 = front(ITEM + "query q(xs: Set<Item>) = count(filter(|t| t.x < 0, xs))")
    assert m3.query.root.op == "count"
    assert m3.query.result_type == I64

    m4 = front(PT + "query q(ps: Set<Pt>) = avg(map(|p| p.y, ps))")
    assert m4.query.root.op == "avg"
    assert m4.query.result_type == F64


def test_reduce_forms():
    m = front(ITEM + "query q(xs: Set<Item>) = reduce(+, map(|t| t.x, xs))")
    assert isinstance(m.query.root, Reduce) and m.query.root.op == "sum"
    m2 = front(ITEM + "query q(xs: Set<Item>) = reduce(min, map(|t| t.x, xs))")
    assert m2.query.root.op == "min"
    m3 = front(ITEM + "query q(xs: Set<Item>) = reduce(*, map(|t| t.x, xs))")
    assert m3.query.root.op == "prod"


def test_extrema_and_arg_extrema():
    m = front(ITEM + "query q(xs: Set<Item>) = min(map(|t| t.x, xs))")
    assert m.query.result_type == I64
    m2 = front(ITEM + "query q(xs: Set<Item>) = argmin(|t| t.x, xs)")
    assert isinstance(m2.query.root, Extremum) and m2.query.root.op == "argmin"
    assert m2.query.result_type.name == "Item"
    m3 = front(PT + "query q(ps: Set<Pt>) = argmax(|p| p.x + p.y, ps)")
    assert m3.query.root.op == "argmax"


def test_quantifiers():
    m = front(ITEM + "query q(xs: Set<Item>) = any(|t| t.x == 0, xs)")
    assert isinstance(m.query.root, Quantifier)
    assert str(m.query.result_type) == "bool"
    m2 = front(ITEM + "query q(xs: Set<Item>) = all(|t| 0 <= t.x, xs)")
    assert m2.query.root.op == "all"


def test_scalar_set_elements_bind_directly():
    m = front("query q(s: Set<i64>) = filter(|i| i < 5, s)")
    assert m.query.result_type == SetType(I64)
    m2 = front("query q(s: Set<f64>) = sum(s)")
    assert m2.query.result_type == F64


def test_product_and_pair_results():
    m = front(ITEM + PT +
              "query q(xs: Set<Item>, ps: Set<Pt>) = "
              "filter(|t, p| t.x < 3 && p.x < 0.0, product(xs, ps))")
    assert isinstance(m.query.root, Filter)
    assert isinstance(m.query.root.src, Product)
    assert isinstance(m.query.result_type.elem, PairType)


def test_join_map_shape():
    m = front(ITEM + PT +
              "query q(xs: Set<Item>, ps: Set<Pt>) = "
              "map(|t| (t, filter(|p| p.x < 1.0 * t.x, ps)), xs)")
    assert isinstance(m.query.root, JoinMap)
    assert m.query.root.var == "t"
    inner = m.query.root.inner
    assert isinstance(inner, Filter)
    # The join result is the flattened stream of matching pairs.
    rt = m.query.result_type
    assert isinstance(rt.elem, PairType)
    assert rt.elem.first.name == "Item"
    assert rt.elem.second.name == "Pt"


def test_two_var_lambda_over_product():
    m = front(ITEM + "query q(a: Set<Item>, b: Set<Item>) = "
                     "count(filter(|t, s| t.x < s.x, product(a, b)))")
    assert m.query.result_type == I64


def test_geometry_predicates_parse():
    text = ("schema Obj { box: Aabb2, id: i64 }\n"
            "query q(os: Set<Obj>, probe: Aabb2) = "
            "filter(|o| intersects(o.box, probe), os)")
    m = front(text)
    assert isinstance(m.query.root, Filter)
    m2 = front("schema P { pos: Point2 }\n"
               "query q(ps: Set<P>, c: Point2) = "
               "filter(|p| distmin(p.pos, c) <= 5.0, ps)")
    assert isinstance(m2.query.root.pred, Cmp)


def test_enum_declarations():
    text = ("enum Color { red, green, blue }\n"
            "schema Thing { c: Color, v: i64 }\n"
            "query q(ts: Set<Thing>) = filter(|t| t.c == Color.red, ts)")
    m = front(text)
    assert "Color" in m.enums


def test_let_if_and_builtins_in_bodies():
    m = front(PT + "query q(ps: Set<Pt>) = "
                   "filter(|p| let d = p.x * p.x + p.y * p.y in d < 10.0, ps)")
    assert isinstance(m.query.root, Filter)
    m2 = front(PT + "query q(ps: Set<Pt>) = "
                    "map(|p| if p.x < 0.0 then -p.x else p.x, ps)")
    assert m2.query.result_type == SetType(F64)
    m3 = front(ITEM + "query q(xs: Set<Item>) = filter(|t| t.x mod 7 == 0, xs)")
    assert isinstance(m3.query.root.pred, Cmp)


def test_comments_and_whitespace():
    m = front("# items\n" + ITEM +
              "query q(xs: Set<Item>) = # trailing\n"
              "  filter(|t| t.x < 1, # inline\n  xs)")
    assert m.query.name == "q"


# --------------------------------------------------------------------------
# Rejections: syntax.


@pytest.mark.parametrize("text", [
    "query q(xs: Set<Item>) =",                            # missing body
    ITEM + "query q(xs Set<Item>) = count(xs)",            # missing colon
    ITEM + "query q(xs: Set<Item>) = filter(t.x < 1, xs)", # missing lambda
    ITEM + "query q(xs: Set<Item>) = filter(|t| t.x <, xs)",
    ITEM + "query (xs: Set<Item>) = count(xs)",            # missing name
    ITEM + "query q(xs: Set<Item>) = count(xs) query r(xs: Set<Item>) = count(xs)",
    ITEM + "query q(xs: Set<Item>) = reduce(-, map(|t| t.x, xs))",
    "schema Item { x: i64,, }\nquery q(xs: Set<Item>) = count(xs)",
    ITEM + "query q(xs: Set<Item>, xs: i64) = count(xs)",  # dup param
    "query q(xs: Set<Nope>) = count(xs)",                  # unknown type
])
def test_syntax_rejections(text):
    with pytest.raises(QuerySyntaxError):
        parse_query(text)


# --------------------------------------------------------------------------
# Rejections: types.


@pytest.mark.parametrize("text", [
    ITEM + "query q(xs: Set<Item>) = filter(|t| t.x + 1, xs)",   # not bool
    ITEM + "query q(xs: Set<Item>) = filter(|t| t.nope < 1, xs)",
    ITEM + "query q(xs: Set<Item>) = sum(xs)",                   # schema sum
    ITEM + "query q(xs: Set<Item>) = filter(|t| t.x < 0.5 && t, xs)",
    ITEM + PT + "query q(xs: Set<Item>, ps: Set<Pt>) = "
                "filter(|t| t.x < 1, product(xs, ps))",          # arity 1 != 2
    ITEM + "query q(xs: Set<Item>) = any(|t| t.x, xs)",          # not bool
    ITEM + "query q(xs: Set<Item>) = argmin(|t| t, xs)",         # key not scalar
    PT + "query q(ps: Set<Pt>) = filter(|p| p.x mod 2.0 == 0.0, ps)",
    "schema Obj { box: Aabb2 }\nquery q(os: Set<Obj>) = sum(map(|o| o.box, os))",
])
def test_type_rejections(text):
    with pytest.raises(QueryTypeError):
        front(text)


def test_unknown_names_are_flagged():
    with pytest.raises(UnknownIdentifier):
        front(ITEM + "query q(xs: Set<Item>) = filter(|t| t.x < lo, xs)")


def test_error_positions_are_reported():
    try:
        parse_query(ITEM + "query q(xs: Set<Item>) = filter(|t| t.x <, xs)")
    except QuerySyntaxError as err:
        assert "line" in str(err) or ":" in str(err)
    else:
        pytest.fail("expected a syntax error")
