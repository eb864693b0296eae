"""Scalar/geometry expression trees shared by queries and derived bounds.

The same little language serves three roles: predicate and key expressions
inside queries, node-annotation expressions in tree declarations, and the
machine-derived bound expressions that guard traversal decisions. Keeping one
AST means bounds can be printed, simplified, and executed with the same code
paths as user predicates.

Surface comparisons are normalized at the parser (`a > b` becomes `b < a`,
`a != b` becomes `not (a == b)`), so the core carries only `lt`, `le`, `eq`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import geom
from .errors import QueryTypeError, UnknownIdentifier, UnsupportedKernel
from .values import (
    BOOL,
    F64,
    I64,
    GeomType,
    PairType,
    ScalarType,
    Schema,
    SetType,
    euclid_div,
    euclid_mod,
    f_add,
    f_div,
    f_mul,
    f_sub,
    fsat,
    is_numeric,
    sat,
    sat_add,
    sat_mul,
    sat_sub,
)

_POS = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    value: object
    ty: object
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Ref:
    name: str
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class FieldRef:
    base: object
    name: str
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Unary:
    op: str  # neg | not
    x: object
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Bin:
    op: str  # add | sub | mul | div | mod | and | or
    a: object
    b: object
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Cmp:
    op: str  # lt | le | eq
    a: object
    b: object
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Let:
    name: str
    bound: object
    body: object
    pos: tuple[int, int] = _POS


@dataclass(frozen=True)
class Ite:
    cond: object
    then: object
    els: object
    pos: tuple[int, int] = _POS


Expr = Lit | Ref | FieldRef | Unary | Bin | Cmp | Call | Let | Ite

TRUE = Lit(True, BOOL)
FALSE = Lit(False, BOOL)

# Scalar builtins: name -> (arity, result kind or None for "same as arg").
_SCALAR_FNS = {
    "sqrt": (1, "f64"),
    "ln": (1, "f64"),
    "exp": (1, "f64"),
    "abs": (1, None),
    "floor": (1, "f64"),
    "ceil": (1, "f64"),
    "round": (1, "f64"),
    "trunc": (1, "f64"),
    "min": (2, None),
    "max": (2, None),
}

# Geometry constructors: name -> (kind, dim, coordinate count).
GEOM_CONSTRUCTORS = {
    "point2": ("point", 2, 2),
    "point3": ("point", 3, 3),
    "aabb2": ("aabb", 2, 4),
    "aabb3": ("aabb", 3, 6),
    "sphere2": ("sphere", 2, 3),
    "sphere3": ("sphere", 3, 4),
    "segment2": ("segment", 2, 4),
    "segment3": ("segment", 3, 6),
    "ray3": ("ray", 3, 6),
    "triangle3": ("triangle", 3, 9),
}

_RELATION_FNS = {
    "intersects": "intersects",
    "contains": "contains",
    "within": "within",
    "covers": "covers",
    "disjoint": "disjoint",
    "equals": "equals",
    "touches": "touches",
}
_METRIC_FNS = ("distmin", "distmax")

# Internal constructors assembling volumes from point-valued node fields
# (tree annotations declare e.g. `self in aabb(low, high)`); they are not
# part of the query surface syntax.
_VOLUME_FNS = ("mkaabb", "mksphere")


def _promote(ta: ScalarType, tb: ScalarType) -> ScalarType:
    return F64 if "f64" in (ta.kind, tb.kind) else I64


def infer_type(e: Expr, tenv: dict[str, object]) -> object:
    """Type of `e` under `tenv`, raising QueryTypeError on ill-typed trees."""
    if isinstance(e, Lit):
        return e.ty
    if isinstance(e, Ref):
        ty = tenv.get(e.name)
        if ty is None:
            raise UnknownIdentifier(f"unknown name '{e.name}'", *e.pos)
        return ty
    if isinstance(e, FieldRef):
        base = infer_type(e.base, tenv)
        if not isinstance(base, Schema):
            raise QueryTypeError(
                f"'.{e.name}' needs a record element, got {base}", *e.pos
            )
        ty = base.field_type(e.name)
        if ty is None:
            raise UnknownIdentifier(
                f"no field '{e.name}' in {base.name}", *e.pos
            )
        return ty
    if isinstance(e, Unary):
        ty = infer_type(e.x, tenv)
        if e.op == "neg":
            if not is_numeric(ty):
                raise QueryTypeError(f"cannot negate {ty}", *e.pos)
            return ty
        if ty != BOOL:
            raise QueryTypeError(f"'not' needs bool, got {ty}", *e.pos)
        return BOOL
    if isinstance(e, Bin):
        ta = infer_type(e.a, tenv)
        tb = infer_type(e.b, tenv)
        if e.op in ("and", "or"):
            if ta != BOOL or tb != BOOL:
                raise QueryTypeError(
                    f"'{e.op}' needs bools, got {ta} and {tb}", *e.pos
                )
            return BOOL
        if e.op == "mod":
            if ta != I64 or tb != I64:
                raise QueryTypeError(
                    f"'mod' is integer-only, got {ta} and {tb}", *e.pos
                )
            return I64
        if not (is_numeric(ta) and is_numeric(tb)):
            raise QueryTypeError(
                f"'{e.op}' needs numbers, got {ta} and {tb}", *e.pos
            )
        return _promote(ta, tb)
    if isinstance(e, Cmp):
        ta = infer_type(e.a, tenv)
        tb = infer_type(e.b, tenv)
        if isinstance(ta, GeomType) and isinstance(tb, GeomType):
            if ta.dim != tb.dim:
                raise QueryTypeError(
                    f"mixed dimensions: {ta} vs {tb}", *e.pos
                )
            return BOOL
        if is_numeric(ta) and is_numeric(tb):
            return BOOL
        if e.op == "eq" and ta == tb and isinstance(ta, ScalarType):
            return BOOL
        raise QueryTypeError(f"cannot compare {ta} with {tb}", *e.pos)
    if isinstance(e, Call):
        return _infer_call(e, tenv)
    if isinstance(e, Let):
        bound = infer_type(e.bound, tenv)
        inner = dict(tenv)
        inner[e.name] = bound
        return infer_type(e.body, inner)
    if isinstance(e, Ite):
        tc = infer_type(e.cond, tenv)
        if tc != BOOL:
            raise QueryTypeError(f"condition must be bool, got {tc}", *e.pos)
        tt = infer_type(e.then, tenv)
        te = infer_type(e.els, tenv)
        if tt == te:
            return tt
        if is_numeric(tt) and is_numeric(te):
            return _promote(tt, te)
        raise QueryTypeError(f"branch types differ: {tt} vs {te}", *e.pos)
    raise TypeError(f"not an expression: {e!r}")


def _infer_call(e: Call, tenv: dict[str, object]) -> object:
    args = [infer_type(a, tenv) for a in e.args]
    if e.fn in _SCALAR_FNS:
        arity, result = _SCALAR_FNS[e.fn]
        if len(args) != arity:
            raise QueryTypeError(
                f"{e.fn} takes {arity} argument(s), got {len(args)}", *e.pos
            )
        for ty in args:
            if not is_numeric(ty):
                raise QueryTypeError(f"{e.fn} needs numbers, got {ty}", *e.pos)
        if result == "f64":
            return F64
        return args[0] if arity == 1 else _promote(args[0], args[1])
    if e.fn in GEOM_CONSTRUCTORS:
        kind, dim, count = GEOM_CONSTRUCTORS[e.fn]
        if len(args) != count:
            raise QueryTypeError(
                f"{e.fn} takes {count} coordinates, got {len(args)}", *e.pos
            )
        for ty in args:
            if not is_numeric(ty):
                raise QueryTypeError(f"{e.fn} needs numbers, got {ty}", *e.pos)
        return GeomType(kind, dim)
    if e.fn in _RELATION_FNS or e.fn in _METRIC_FNS:
        if len(args) != 2:
            raise QueryTypeError(f"{e.fn} takes 2 arguments", *e.pos)
        ta, tb = args
        if not (isinstance(ta, GeomType) and isinstance(tb, GeomType)):
            raise QueryTypeError(
                f"{e.fn} needs geometry, got {ta} and {tb}", *e.pos
            )
        if ta.dim != tb.dim:
            raise QueryTypeError(f"mixed dimensions: {ta} vs {tb}", *e.pos)
        op = _RELATION_FNS.get(e.fn, e.fn)
        if not geom.has_kernel(op, ta.kind, tb.kind):
            raise UnsupportedKernel(e.fn, str(ta), str(tb))
        return BOOL if e.fn in _RELATION_FNS else F64
    if e.fn == "mkaabb":
        ta, tb = args
        if not (
            isinstance(ta, GeomType) and ta.kind == "point"
            and isinstance(tb, GeomType) and tb.kind == "point"
            and ta.dim == tb.dim
        ):
            raise QueryTypeError("mkaabb needs two points of one dimension", *e.pos)
        return GeomType("aabb", ta.dim)
    if e.fn == "mksphere":
        ta, tb = args
        if not (isinstance(ta, GeomType) and ta.kind == "point"):
            raise QueryTypeError("mksphere needs a point center", *e.pos)
        if not is_numeric(tb):
            raise QueryTypeError("mksphere needs a numeric radius", *e.pos)
        return GeomType("sphere", ta.dim)
    if e.fn == "pair":
        if len(args) != 2:
            raise QueryTypeError("pair takes 2 arguments", *e.pos)
        return PairType(args[0], args[1])
    raise UnknownIdentifier(f"unknown function '{e.fn}'", *e.pos)


# --------------------------------------------------------------------------
# Structure utilities.


def children(e: Expr) -> tuple:
    if isinstance(e, (Lit, Ref)):
        return ()
    if isinstance(e, FieldRef):
        return (e.base,)
    if isinstance(e, Unary):
        return (e.x,)
    if isinstance(e, (Bin, Cmp)):
        return (e.a, e.b)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, Ite):
        return (e.cond, e.then, e.els)
    raise TypeError(f"not an expression: {e!r}")


def free_refs(e: Expr) -> set[str]:
    if isinstance(e, Ref):
        return {e.name}
    if isinstance(e, Let):
        return free_refs(e.bound) | (free_refs(e.body) - {e.name})
    out: set[str] = set()
    for c in children(e):
        out |= free_refs(c)
    return out


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace free Refs by expressions (capture-aware for Let binders)."""
    if not mapping:
        return e
    if isinstance(e, Lit):
        return e
    if isinstance(e, Ref):
        return mapping.get(e.name, e)
    if isinstance(e, FieldRef):
        return FieldRef(substitute(e.base, mapping), e.name, e.pos)
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.x, mapping), e.pos)
    if isinstance(e, Bin):
        return Bin(e.op, substitute(e.a, mapping), substitute(e.b, mapping), e.pos)
    if isinstance(e, Cmp):
        return Cmp(e.op, substitute(e.a, mapping), substitute(e.b, mapping), e.pos)
    if isinstance(e, Call):
        return Call(e.fn, tuple(substitute(a, mapping) for a in e.args), e.pos)
    if isinstance(e, Let):
        bound = substitute(e.bound, mapping)
        inner = {k: v for k, v in mapping.items() if k != e.name}
        return Let(e.name, bound, substitute(e.body, inner), e.pos)
    if isinstance(e, Ite):
        return Ite(
            substitute(e.cond, mapping),
            substitute(e.then, mapping),
            substitute(e.els, mapping),
            e.pos,
        )
    raise TypeError(f"not an expression: {e!r}")


def node_count(e: Expr) -> int:
    return 1 + sum(node_count(c) for c in children(e))


# --------------------------------------------------------------------------
# Printer. Produces surface syntax; deterministic, parenthesized by
# precedence so round-tripping through the parser is the identity.

_PREC = {
    "or": 1,
    "and": 2,
    "cmp": 4,
    "add": 5,
    "sub": 5,
    "mul": 6,
    "div": 6,
    "mod": 6,
    "unary": 7,
}
_CMP_TOKEN = {"lt": "<", "le": "<=", "eq": "=="}
_BIN_TOKEN = {
    "add": "+",
    "sub": "-",
    "mul": "*",
    "div": "/",
    "mod": "mod",
    "and": "&&",
    "or": "||",
}


def _fmt_value(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_source(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Lit):
        if e.value is None:
            return "none"
        if isinstance(e.ty, ScalarType) and e.ty.kind == "enum":
            return f"{e.ty.enum_name}.{e.value}"
        if isinstance(e.ty, GeomType):
            return _geom_source(e.value)
        s = _fmt_value(e.value)
        if (isinstance(e.value, (int, float)) and not isinstance(e.value, bool)
                and e.value < 0):
            return s if parent_prec < _PREC["unary"] else f"({s})"
        return s
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, FieldRef):
        return f"{to_source(e.base, 9)}.{e.name}"
    if isinstance(e, Unary):
        tok = "-" if e.op == "neg" else "!"
        s = f"{tok}{to_source(e.x, _PREC['unary'])}"
        return s if parent_prec < _PREC["unary"] else f"({s})"
    if isinstance(e, Bin):
        prec = _PREC[e.op]
        a = to_source(e.a, prec - 1)
        b = to_source(e.b, prec)  # left-assoc: right child binds tighter
        s = f"{a} {_BIN_TOKEN[e.op]} {b}"
        return s if prec > parent_prec else f"({s})"
    if isinstance(e, Cmp):
        prec = _PREC["cmp"]
        s = f"{to_source(e.a, prec)} {_CMP_TOKEN[e.op]} {to_source(e.b, prec)}"
        return s if prec > parent_prec else f"({s})"
    if isinstance(e, Call):
        args = ", ".join(to_source(a) for a in e.args)
        if e.fn == "pair":
            return f"({args})"
        shown = {"mkaabb": "aabb", "mksphere": "sphere"}.get(e.fn, e.fn)
        return f"{shown}({args})"
    if isinstance(e, Let):
        s = f"let {e.name} = {to_source(e.bound)} in {to_source(e.body)}"
        return s if parent_prec == 0 else f"({s})"
    if isinstance(e, Ite):
        s = (
            f"if {to_source(e.cond)} then {to_source(e.then)} "
            f"else {to_source(e.els)}"
        )
        return s if parent_prec == 0 else f"({s})"
    raise TypeError(f"not an expression: {e!r}")


def _geom_source(v: object) -> str:
    from .values import Aabb, Point, Ray, Segment, Sphere, Triangle

    def nums(*vals: float) -> str:
        return ", ".join(repr(float(x)) for x in vals)

    if isinstance(v, Point):
        return f"point{len(v.coords)}({nums(*v.coords)})"
    if isinstance(v, Aabb):
        return f"aabb{len(v.lo)}({nums(*v.lo, *v.hi)})"
    if isinstance(v, Sphere):
        return f"sphere{len(v.center)}({nums(*v.center, v.radius)})"
    if isinstance(v, Segment):
        return f"segment{len(v.a)}({nums(*v.a, *v.b)})"
    if isinstance(v, Ray):
        return f"ray3({nums(*v.origin, *v.direction)})"
    if isinstance(v, Triangle):
        return f"triangle3({nums(*v.a, *v.b, *v.c)})"
    raise TypeError(f"not a geometry value: {v!r}")


# --------------------------------------------------------------------------
# Compilation to a Python closure. Expressions are compiled once per query
# and evaluated millions of times, so we generate source for one flat
# function instead of interpreting the tree.


def _sat_abs(v: int) -> int:
    return sat(-v) if v < 0 else v


def _saturating_metric(fn):
    def call(a, b):
        return fsat(fn(a, b))

    return call


def _make_helpers() -> dict[str, object]:
    from . import values

    helpers: dict[str, object] = {
        "_sat_add": sat_add,
        "_sat_sub": sat_sub,
        "_sat_mul": sat_mul,
        "_sat_neg": lambda v: sat(-v),
        "_ediv": euclid_div,
        "_emod": euclid_mod,
        "_f_add": f_add,
        "_f_sub": f_sub,
        "_f_mul": f_mul,
        "_f_div": f_div,
        "_sat_abs": _sat_abs,
        "_fsat": fsat,
        "_sqrt": values.t_sqrt,
        "_ln": values.t_ln,
        "_exp": values.t_exp,
        "_floor": values.t_floor,
        "_ceil": values.t_ceil,
        "_round": values.t_round,
        "_trunc": values.t_trunc,
        "_Point": values.Point,
        "_Aabb": values.Aabb,
        "_Sphere": values.Sphere,
        "_Segment": values.Segment,
        "_Ray": values.Ray,
        "_Triangle": values.Triangle,
        "_geo_le": geom.geo_le,
        "_geo_lt": geom.geo_lt,
        "_geo_eq": lambda a, b: geom.eval_relation("equals", a, b),
        "_distmin": _saturating_metric(geom.distmin),
        "_distmax": _saturating_metric(geom.distmax),
    }
    for rel, op in _RELATION_FNS.items():
        helpers[f"_rel_{rel}"] = (
            lambda o: lambda a, b: geom.eval_relation(o, a, b)
        )(op)
    return helpers


_HELPERS = _make_helpers()

_GEOM_BUILD = {
    "point": "_Point(({xs},))",
    "aabb": "_Aabb(({los},), ({his},))",
    "sphere": "_Sphere(({los},), {r})",
    "segment": "_Segment(({los},), ({his},))",
    "ray": "_Ray(({los},), ({his},))",
    "triangle": "_Triangle(({a},), ({b},), ({c},))",
}


class _Emitter:
    def __init__(self, tenv: dict[str, object]):
        self.tenv = dict(tenv)
        self.lines: list[str] = []
        self.counter = 0
        self.scope: dict[str, str] = {}
        self.consts: list[object] = []
        self.prelude: set[tuple[str, str]] = set()

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"t{self.counter}_{hint}"

    def expr(self, e: Expr) -> tuple[str, object]:
        if isinstance(e, Lit):
            if isinstance(e.ty, GeomType):
                name = self.fresh("g")
                self.lines.append(f"{name} = _consts[{len(self.consts)}]")
                self.consts.append(e.value)
                return name, e.ty
            return repr(e.value), e.ty
        if isinstance(e, Ref):
            py = self.scope.get(e.name)
            if py is None:
                safe = "".join(c if c.isalnum() else "_" for c in e.name)
                py = f"v{len(self.scope)}_{safe}"
                self.scope[e.name] = py
                self.prelude.add((e.name, py))
            return py, self.tenv[e.name]
        if isinstance(e, FieldRef):
            base, bty = self.expr(e.base)
            return f"{base}[{e.name!r}]", bty.field_type(e.name)
        if isinstance(e, Unary):
            x, ty = self.expr(e.x)
            if e.op == "not":
                return f"(not {x})", BOOL
            if ty.kind == "i64":
                return f"_sat_neg({x})", ty
            return f"(-{x})", ty
        if isinstance(e, Bin):
            return self.bin(e)
        if isinstance(e, Cmp):
            return self.cmp(e)
        if isinstance(e, Call):
            return self.call(e)
        if isinstance(e, Let):
            bound, bty = self.expr(e.bound)
            name = self.fresh(e.name)
            self.lines.append(f"{name} = {bound}")
            saved_scope = self.scope.get(e.name)
            saved_ty = self.tenv.get(e.name)
            self.scope[e.name] = name
            self.tenv[e.name] = bty
            body, ty = self.expr(e.body)
            if saved_scope is None:
                self.scope.pop(e.name, None)
            else:
                self.scope[e.name] = saved_scope
            if saved_ty is None:
                self.tenv.pop(e.name, None)
            else:
                self.tenv[e.name] = saved_ty
            return body, ty
        if isinstance(e, Ite):
            # Nested lets inside branches get hoisted above the conditional;
            # that is fine because every operation is total and effect-free.
            cond, _ = self.expr(e.cond)
            then, tt = self.expr(e.then)
            els, te = self.expr(e.els)
            ty = tt if tt == te else _promote(tt, te)
            return f"({then} if {cond} else {els})", ty
        raise TypeError(f"not an expression: {e!r}")

    def bin(self, e: Bin) -> tuple[str, object]:
        a, ta = self.expr(e.a)
        b, tb = self.expr(e.b)
        if e.op == "and":
            return f"({a} and {b})", BOOL
        if e.op == "or":
            return f"({a} or {b})", BOOL
        if e.op == "mod":
            return f"_emod({a}, {b})", I64
        ty = _promote(ta, tb)
        if e.op == "div":
            fn = "_ediv" if ty.kind == "i64" else "_f_div"
            return f"{fn}({a}, {b})", ty
        fn = f"_sat_{e.op}" if ty.kind == "i64" else f"_f_{e.op}"
        return f"{fn}({a}, {b})", ty

    def cmp(self, e: Cmp) -> tuple[str, object]:
        a, ta = self.expr(e.a)
        b, tb = self.expr(e.b)
        if isinstance(ta, GeomType):
            fn = {"lt": "_geo_lt", "le": "_geo_le", "eq": "_geo_eq"}[e.op]
            return f"{fn}({a}, {b})", BOOL
        tok = {"lt": "<", "le": "<=", "eq": "=="}[e.op]
        return f"({a} {tok} {b})", BOOL

    def call(self, e: Call) -> tuple[str, object]:
        parts = [self.expr(a) for a in e.args]
        args = [p[0] for p in parts]
        if e.fn in GEOM_CONSTRUCTORS:
            kind, dim, _ = GEOM_CONSTRUCTORS[e.fn]
            fl = [f"float({a})" for a in args]
            if kind == "point":
                code = _GEOM_BUILD[kind].format(xs=", ".join(fl))
            elif kind == "sphere":
                code = _GEOM_BUILD[kind].format(los=", ".join(fl[:dim]), r=fl[dim])
            elif kind == "triangle":
                code = _GEOM_BUILD[kind].format(
                    a=", ".join(fl[:3]), b=", ".join(fl[3:6]), c=", ".join(fl[6:9])
                )
            else:
                code = _GEOM_BUILD[kind].format(
                    los=", ".join(fl[:dim]), his=", ".join(fl[dim:])
                )
            return code, GeomType(kind, dim)
        if e.fn in _RELATION_FNS:
            return f"_rel_{e.fn}({args[0]}, {args[1]})", BOOL
        if e.fn in _METRIC_FNS:
            return f"_{e.fn}({args[0]}, {args[1]})", F64
        if e.fn == "mkaabb":
            dim = parts[0][1].dim
            return (
                f"_Aabb({args[0]}.coords, {args[1]}.coords)",
                GeomType("aabb", dim),
            )
        if e.fn == "mksphere":
            dim = parts[0][1].dim
            return (
                f"_Sphere({args[0]}.coords, float({args[1]}))",
                GeomType("sphere", dim),
            )
        if e.fn in ("min", "max"):
            ty = _promote(parts[0][1], parts[1][1])
            return f"{e.fn}({args[0]}, {args[1]})", ty
        if e.fn == "abs":
            ty = parts[0][1]
            fn = "_sat_abs" if ty.kind == "i64" else "abs"
            return f"{fn}({args[0]})", ty
        if e.fn == "pair":
            return f"({args[0]}, {args[1]})", PairType(parts[0][1], parts[1][1])
        return f"_{e.fn}({args[0]})", F64


def compile_expr(e: Expr, tenv: dict[str, object]):
    """Compile a well-typed expression into `fn(env_dict) -> value`."""
    em = _Emitter(tenv)
    code, _ = em.expr(e)
    body = ["def _compiled(env):"]
    for name, py in sorted(em.prelude):
        body.append(f"    {py} = env[{name!r}]")
    body.extend(f"    {line}" for line in em.lines)
    body.append(f"    return {code}")
    ns = dict(_HELPERS)
    ns["_consts"] = em.consts
    ns["min"] = min
    ns["max"] = max
    ns["abs"] = abs
    ns["float"] = float
    exec("\n".join(body), ns)  # source is generated from our own AST
    return ns["_compiled"]


def eval_expr(e: Expr, tenv: dict[str, object], env: dict[str, object]):
    return compile_expr(e, tenv)(env)
