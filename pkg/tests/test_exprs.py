"""Expression compilation and evaluation semantics.

compile_expr emits a Python closure; eval_expr is the one-shot wrapper.
The checks compare against hand-evaluated results using the saturating
value-layer primitives, and pin the printer/parser-facing helpers
(free_refs, substitute, node_count, to_source round-trips).
"""

import pytest

from treeq.errors import QueryTypeError
from treeq.exprs import (
    FALSE,
    TRUE,
    Bin,
    Call,
    Cmp,
    FieldRef,
    Ite,
    Let,
    Lit,
    Ref,
    Unary,
    compile_expr,
    eval_expr,
    free_refs,
    infer_type,
    node_count,
    substitute,
    to_source,
)
from treeq.values import (
    BOOL,
    F64,
    I64,
    I64_MAX,
    I64_MIN,
    Aabb,
    GeomType,
    Point,
    Schema,
    ScalarType,
)


def i(v):
    return Lit(v, I64)


def f(v):
    return Lit(v, F64)


X = Ref("x")
Y = Ref("y")
TENV_II = {"x": I64, "y": I64}
TENV_FF = {"x": F64, "y": F64}


def run(e, tenv, env):
    return eval_expr(e, tenv, env)


def test_arithmetic_follows_saturating_semantics():
    e = Bin("add", X, Bin("mul", Y, i(3)))
    assert run(e, TENV_II, {"x": 4, "y": 5}) == 19
    assert run(e, TENV_II, {"x": I64_MAX, "y": 1}) == I64_MAX
    e2 = Bin("div", X, Y)
    assert run(e2, TENV_II, {"x": -7, "y": 2}) == -4  # euclidean
    assert run(e2, TENV_II, {"x": 5, "y": 0}) == 0  # total
    e3 = Bin("mod", X, Y)
    assert run(e3, TENV_II, {"x": -7, "y": 3}) == 2
    assert run(e3, TENV_II, {"x": 7, "y": 0}) == 0


def test_float_arithmetic_and_division():
    e = Bin("div", X, Y)
    assert run(e, TENV_FF, {"x": 1.0, "y": 4.0}) == 0.25
    assert run(e, TENV_FF, {"x": 1.0, "y": 0.0}) == 0.0
    assert run(Bin("mul", f(1e200), f(1e200)), {}, {}) == pytest.approx(
        1.7976931348623157e308
    )


def test_mixed_int_float_promotes():
    e = Bin("add", X, f(0.5))
    assert infer_type(e, TENV_II) == F64
    assert run(e, TENV_II, {"x": 2}) == 2.5


def test_comparisons_and_boolean_ops():
    e = Bin("and", Cmp("le", X, Y), Unary("not", Cmp("eq", X, Y)))
    assert run(e, TENV_II, {"x": 1, "y": 2}) is True
    assert run(e, TENV_II, {"x": 2, "y": 2}) is False
    assert run(Bin("or", FALSE, TRUE), {}, {}) is True


def test_short_circuit_still_total():
    # x != 0 and 10/x > 2 — with total division there is nothing to guard,
    # but short-circuiting must not change the value.
    e = Bin("and", Unary("not", Cmp("eq", X, i(0))), Cmp("lt", i(2), Bin("div", i(10), X)))
    assert run(e, TENV_II, {"x": 3}) is True
    assert run(e, TENV_II, {"x": 0}) is False


def test_calls_abs_min_max_sqrt():
    assert run(Call("abs", (X,)), TENV_II, {"x": -5}) == 5
    assert run(Call("abs", (X,)), {"x": F64}, {"x": -5.5}) == 5.5
    assert run(Call("abs", (i(I64_MIN),)), {}, {}) == I64_MAX  # saturates
    assert run(Call("min", (X, Y)), TENV_II, {"x": 3, "y": -2}) == -2
    assert run(Call("max", (X, Y)), TENV_FF, {"x": 3.0, "y": -2.0}) == 3.0
    assert run(Call("sqrt", (f(-4.0),)), {}, {}) == 0.0
    assert run(Call("sqrt", (f(9.0),)), {}, {}) == 3.0


def test_field_access_on_schema_elements():
    pt = Schema("Pt", (("x", F64), ("tag", I64)))
    elem = {"x": 2.5, "tag": 7}
    e = Bin("add", FieldRef(Ref("p"), "x"), f(1.0))
    assert run(e, {"p": pt}, {"p": elem}) == 3.5


def test_let_binding_and_shadowing():
    e = Let("t", Bin("mul", X, X), Bin("add", Ref("t"), Ref("t")))
    assert run(e, TENV_II, {"x": 3}) == 18
    shadow = Let("x", i(10), Bin("add", Ref("x"), i(1)))
    assert run(shadow, TENV_II, {"x": 1}) == 11


def test_ite_expression():
    e = Ite(Cmp("lt", X, i(0)), Unary("neg", X), X)
    assert run(e, TENV_II, {"x": -4}) == 4
    assert run(e, TENV_II, {"x": 4}) == 4


def test_geometry_constructors_and_relations():
    box = Call("aabb2", (f(0.0), f(0.0), f(2.0), f(2.0)))
    inside = Call("point2", (X, Y))
    e = Call("contains", (box, inside))
    assert run(e, TENV_FF, {"x": 1.0, "y": 1.0}) is True
    assert run(e, TENV_FF, {"x": 3.0, "y": 1.0}) is False
    d = Call("distmin", (inside, Call("point2", (f(0.0), f(0.0)))))
    assert run(d, TENV_FF, {"x": 3.0, "y": 4.0}) == 5.0


def test_geometry_values_flow_through_refs():
    gt = GeomType("aabb", 2)
    e = Call("intersects", (Ref("a"), Ref("b")))
    env = {
        "a": Aabb((0.0, 0.0), (1.0, 1.0)),
        "b": Aabb((0.5, 0.5), (2.0, 2.0)),
    }
    assert run(e, {"a": gt, "b": gt}, env) is True


def test_compiled_closure_is_reusable():
    fn = compile_expr(Bin("add", X, Y), TENV_II)
    assert fn({"x": 1, "y": 2}) == 3
    assert fn({"x": -5, "y": 5}) == 0


def test_awkward_variable_names_compile():
    # Internal bound-analysis names are not Python identifiers.
    e = Cmp("lt", Ref("$e0"), FieldRef(Ref("$e1"), "v"))
    tenv = {"$e0": I64, "$e1": Schema("S", (("v", I64),))}
    fn = compile_expr(e, tenv)
    assert fn({"$e0": 1, "$e1": {"v": 2}}) is True
    # Distinct source names never collide after mangling.
    e2 = Bin("sub", Ref("a$b"), Ref("a_b"))
    assert eval_expr(e2, {"a$b": I64, "a_b": I64}, {"a$b": 10, "a_b": 4}) == 6


def test_type_errors_are_reported():
    with pytest.raises(QueryTypeError):
        infer_type(Bin("add", TRUE, i(1)), {})
    with pytest.raises(QueryTypeError):
        infer_type(Bin("mod", f(1.0), f(2.0)), {})  # mod is integer-only
    with pytest.raises(QueryTypeError):
        infer_type(Call("sqrt", (TRUE,)), {})
    with pytest.raises(QueryTypeError):
        infer_type(Ref("nope"), {})
    with pytest.raises(QueryTypeError):
        infer_type(FieldRef(Ref("p"), "zz"), {"p": Schema("P", (("x", I64),))})


def test_free_refs_and_substitute():
    e = Let("t", Bin("add", X, i(1)), Bin("mul", Ref("t"), Y))
    assert free_refs(e) == {"x", "y"}
    swapped = substitute(e, {"x": Ref("z")})
    assert free_refs(swapped) == {"z", "y"}
    # let-bound names are not substituted
    inner = substitute(e, {"t": i(99)})
    assert run(inner, TENV_II, {"x": 2, "y": 3}) == 9


def test_node_count_shares_let_bindings():
    big = Bin("add", X, Bin("mul", X, X))
    chained = Let("a", big, Bin("add", Ref("a"), Ref("a")))
    assert node_count(chained) < 2 * node_count(big) + 2


def test_to_source_round_trips_precedence():
    e = Bin("mul", Bin("add", X, Y), i(2))
    s = to_source(e)
    assert s == "(x + y) * 2"
    e2 = Bin("add", X, Bin("mul", Y, i(2)))
    assert to_source(e2) == "x + y * 2"
    assert to_source(Unary("not", Cmp("eq", X, Y))) == "!(x == y)"
    assert "mod" in to_source(Bin("mod", X, i(3)))


def test_to_source_geometry_literals():
    b = Lit(Aabb((0.0, 0.0), (1.0, 2.0)), GeomType("aabb", 2))
    s = to_source(b)
    assert "0" in s and "2" in s
    p = Lit(Point((1.5, -2.0)), GeomType("point", 2))
    assert to_source(p)
