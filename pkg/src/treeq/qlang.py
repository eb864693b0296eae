"""Query language frontend: lexing, parsing, and typechecking.

A query file declares element schemas, optional enums, and exactly one
query over set parameters:

    schema Item { x: i64, id: i64 }

    query rangeq(xs: Set<Item>, lo: i64, hi: i64) =
      filter(|t| lo <= t.x && t.x <= hi, xs)

Set operators: filter, map, reduce(+|*|min|max), sum, count, avg, min, max,
argmin, argmax, any, all, product, plus the single-index join shape
`map(|t| (t, filter(|s| ..., other)), outer)`.

The parser normalizes comparisons (`>`, `>=`, `!=` rewrite into `<`, `<=`,
`not ==`) so later passes only see the core forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import QuerySyntaxError, QueryTypeError, UnknownIdentifier
from .exprs import (
    GEOM_CONSTRUCTORS,
    Bin,
    Call,
    Cmp,
    Expr,
    FieldRef,
    Ite,
    Let,
    Lit,
    Ref,
    Unary,
    free_refs,
    infer_type,
)
from .values import (
    BOOL,
    F64,
    I64,
    GeomType,
    PairType,
    ScalarType,
    Schema,
    SetType,
    is_numeric,
)

KEYWORDS = {
    "query", "schema", "enum", "Set", "let", "in", "if", "then", "else",
    "true", "false", "mod",
}

SET_OPS = {
    "filter", "map", "reduce", "sum", "count", "avg", "min", "max",
    "argmin", "argmax", "any", "all", "product",
}

_SCALAR_TYPE_NAMES = {
    "i64": I64, "i32": I64,
    "f64": F64, "f32": F64,
    "bool": BOOL,
}

# Bare geometry names are 3D; the 2-suffix selects the planar variant.
_GEOM_TYPE_NAMES = {
    "Point": ("point", 3), "Point2": ("point", 2), "Point3": ("point", 3),
    "Aabb": ("aabb", 3), "Aabb2": ("aabb", 2), "Aabb3": ("aabb", 3),
    "Sphere": ("sphere", 3), "Sphere2": ("sphere", 2), "Sphere3": ("sphere", 3),
    "Segment": ("segment", 3), "Segment2": ("segment", 2),
    "Segment3": ("segment", 3),
    "Ray": ("ray", 3), "Ray3": ("ray", 3),
    "Triangle": ("triangle", 3), "Triangle3": ("triangle", 3),
}


@dataclass
class Token:
    kind: str  # ident | keyword | int | float | sym | eof
    value: object
    line: int
    col: int


class Lexer:
    SYMBOLS = (
        "||", "&&", "==", "!=", "<=", ">=",
        "(", ")", "{", "}", "[", "]", "<", ">", ",", ":", ";", "=", "|", "!",
        "+", "-", "*", "/", ".",
    )

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> QuerySyntaxError:
        return QuerySyntaxError(message, self.line, self.col)

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            tok = self.next_token()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def next_token(self) -> Token:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
            elif ch == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
            else:
                break
        if self.pos >= len(text):
            return Token("eof", None, self.line, self.col)
        line, col = self.line, self.col
        ch = text[self.pos]
        if ch.isalpha() or ch == "_":
            start = self.pos
            while self.pos < len(text) and (
                text[self.pos].isalnum() or text[self.pos] == "_"
            ):
                self._advance()
            word = text[start:self.pos]
            kind = "keyword" if word in KEYWORDS else "ident"
            return Token(kind, word, line, col)
        if ch.isdigit() or (
            ch == "." and self.pos + 1 < len(text) and text[self.pos + 1].isdigit()
        ):
            return self._number(line, col)
        for sym in self.SYMBOLS:
            if text.startswith(sym, self.pos):
                self._advance(len(sym))
                return Token("sym", sym, line, col)
        raise self.error(f"unexpected character {ch!r}")

    def _number(self, line: int, col: int) -> Token:
        start = self.pos
        text = self.text
        is_float = False
        while self.pos < len(text) and text[self.pos].isdigit():
            self._advance()
        if self.pos < len(text) and text[self.pos] == ".":
            nxt = text[self.pos + 1] if self.pos + 1 < len(text) else ""
            if nxt.isdigit():
                is_float = True
                self._advance()
                while self.pos < len(text) and text[self.pos].isdigit():
                    self._advance()
        if self.pos < len(text) and text[self.pos] in "eE":
            probe = self.pos + 1
            if probe < len(text) and text[probe] in "+-":
                probe += 1
            if probe < len(text) and text[probe].isdigit():
                is_float = True
                self._advance(probe - self.pos)
                while self.pos < len(text) and text[self.pos].isdigit():
                    self._advance()
        word = text[start:self.pos]
        if is_float:
            return Token("float", float(word), line, col)
        return Token("int", int(word), line, col)


# --------------------------------------------------------------------------
# Query AST. Set-typed nodes carry their element type after typechecking.


@dataclass
class SourceRef:
    name: str
    ty: object = None


@dataclass
class Filter:
    vars: tuple[str, ...]
    pred: Expr
    src: object
    ty: object = None


@dataclass
class MapQ:
    vars: tuple[str, ...]
    body: Expr
    src: object
    ty: object = None


@dataclass
class JoinMap:
    """Single-index join shape: map(|t| (t, filter(|s| P, inner)), outer)."""

    var: str
    inner: object  # Filter over a SourceRef; P may mention `var`
    src: object
    ty: object = None


@dataclass
class Reduce:
    op: str  # sum | prod | min | max
    src: object
    ty: object = None


@dataclass
class Agg:
    """sum/count/avg with an optional mapping body."""

    op: str  # sum | count | avg
    vars: tuple[str, ...]
    body: Expr | None
    src: object
    ty: object = None


@dataclass
class Extremum:
    """min/max/argmin/argmax by a key expression."""

    op: str  # min | max | argmin | argmax
    vars: tuple[str, ...]
    key: Expr
    src: object
    ty: object = None


@dataclass
class Quantifier:
    op: str  # any | all
    vars: tuple[str, ...]
    pred: Expr
    src: object
    ty: object = None


@dataclass
class Product:
    left: object
    right: object
    ty: object = None


QNode = (
    SourceRef | Filter | MapQ | JoinMap | Reduce | Agg | Extremum
    | Quantifier | Product
)


@dataclass
class Query:
    name: str
    params: tuple[tuple[str, object], ...]  # ordered (name, type)
    root: QNode
    result_type: object = None


@dataclass
class Module:
    schemas: dict[str, Schema]
    enums: dict[str, ScalarType]
    query: Query


def q_children(node: QNode) -> tuple:
    if isinstance(node, SourceRef):
        return ()
    if isinstance(node, Product):
        return (node.left, node.right)
    if isinstance(node, JoinMap):
        return (node.src, node.inner)
    return (node.src,)


# --------------------------------------------------------------------------
# Parser.


class Parser:
    def __init__(self, text: str):
        self.toks = Lexer(text).tokens()
        self.i = 0

    # -- token plumbing ------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> QuerySyntaxError:
        tok = tok or self.peek()
        return QuerySyntaxError(message, tok.line, tok.col)

    def expect(self, kind: str, value: object = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise self.error(f"expected {want!r}, found {tok.value!r}", tok)
        return tok

    def at_sym(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.value == sym

    def eat_sym(self, sym: str) -> bool:
        if self.at_sym(sym):
            self.next()
            return True
        return False

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.value == word

    # -- declarations ----------------------------------------------------

    def parse_module(self) -> Module:
        schemas: dict[str, Schema] = {}
        enums: dict[str, ScalarType] = {}
        queries: list[Query] = []
        while self.peek().kind != "eof":
            if self.at_keyword("schema"):
                sch = self.parse_schema(enums)
                if sch.name in schemas or sch.name in enums:
                    raise self.error(f"duplicate type name {sch.name!r}")
                schemas[sch.name] = sch
            elif self.at_keyword("enum"):
                en = self.parse_enum()
                if en.enum_name in schemas or en.enum_name in enums:
                    raise self.error(f"duplicate type name {en.enum_name!r}")
                enums[en.enum_name] = en
            elif self.at_keyword("query"):
                queries.append(self.parse_query_decl(schemas, enums))
            else:
                raise self.error(
                    f"expected a declaration, found {self.peek().value!r}"
                )
        if len(queries) != 1:
            raise QuerySyntaxError(
                f"a query file declares exactly one query, found {len(queries)}"
            )
        return Module(schemas, enums, queries[0])

    def parse_schema(self, enums: dict[str, ScalarType]) -> Schema:
        self.expect("keyword", "schema")
        name = self.expect("ident").value
        self.expect("sym", "{")
        fields: list[tuple[str, object]] = []
        seen: set[str] = set()
        while not self.at_sym("}"):
            fname = self.expect("ident").value
            if fname in seen:
                raise self.error(f"duplicate field {fname!r}")
            seen.add(fname)
            self.expect("sym", ":")
            fields.append((fname, self.parse_type(enums)))
            if not self.eat_sym(","):
                break
        self.expect("sym", "}")
        if not fields:
            raise self.error("schema needs at least one field")
        return Schema(name, tuple(fields))

    def parse_enum(self) -> ScalarType:
        self.expect("keyword", "enum")
        name = self.expect("ident").value
        self.expect("sym", "{")
        labels: list[str] = []
        while not self.at_sym("}"):
            labels.append(self.expect("ident").value)
            if not self.eat_sym(","):
                break
        self.expect("sym", "}")
        if not labels:
            raise self.error("enum needs at least one label")
        return ScalarType("enum", name, tuple(labels))

    def parse_type(self, enums: dict[str, ScalarType]):
        tok = self.expect("ident")
        name = tok.value
        if name in _SCALAR_TYPE_NAMES:
            return _SCALAR_TYPE_NAMES[name]
        if name in _GEOM_TYPE_NAMES:
            kind, dim = _GEOM_TYPE_NAMES[name]
            return GeomType(kind, dim)
        if name in enums:
            return enums[name]
        raise self.error(f"unknown type {name!r}", tok)

    def parse_elem_type(self, schemas, enums):
        tok = self.peek()
        name = tok.value
        if isinstance(name, str) and name in schemas:
            self.next()
            return schemas[name]
        return self.parse_type(enums)

    def parse_query_decl(self, schemas, enums) -> Query:
        self.expect("keyword", "query")
        name = self.expect("ident").value
        self.expect("sym", "(")
        params: list[tuple[str, object]] = []
        seen: set[str] = set()
        while not self.at_sym(")"):
            pname = self.expect("ident").value
            if pname in seen:
                raise self.error(f"duplicate parameter {pname!r}")
            seen.add(pname)
            self.expect("sym", ":")
            if self.at_keyword("Set"):
                self.next()
                self.expect("sym", "<")
                elem = self.parse_elem_type(schemas, enums)
                self.expect("sym", ">")
                params.append((pname, SetType(elem)))
            else:
                params.append((pname, self.parse_type(enums)))
            if not self.eat_sym(","):
                break
        self.expect("sym", ")")
        self.expect("sym", "=")
        root = self.parse_qexpr()
        return Query(name, tuple(params), root)

    # -- set expressions ---------------------------------------------------

    def parse_qexpr(self) -> QNode:
        tok = self.peek()
        if tok.kind == "ident" and tok.value in SET_OPS:
            if self.peek(1).kind == "sym" and self.peek(1).value == "(":
                return self.parse_set_op()
        if tok.kind == "ident":
            self.next()
            return SourceRef(tok.value)
        raise self.error(f"expected a set expression, found {tok.value!r}")

    def parse_set_op(self) -> QNode:
        op = self.next().value
        self.expect("sym", "(")
        node = self._set_op_body(op)
        self.expect("sym", ")")
        return node

    def _set_op_body(self, op: str) -> QNode:
        if op == "product":
            left = self.parse_qexpr()
            self.expect("sym", ",")
            right = self.parse_qexpr()
            return Product(left, right)
        if op == "reduce":
            rop = self._reduce_op()
            self.expect("sym", ",")
            return Reduce(rop, self.parse_qexpr())
        if op == "count":
            return Agg("count", (), None, self.parse_qexpr())
        if op in ("sum", "avg", "min", "max", "argmin", "argmax"):
            if not self.at_sym("|"):
                # No key lambda: identity over a scalar set.
                src = self.parse_qexpr()
                if op in ("sum", "avg"):
                    return Agg(op, (), None, src)
                return Extremum(op, (), None, src)
        if op == "map":
            vars_, join = self._map_lambda()
            if join is not None:
                self.expect("sym", ",")
                src = self.parse_qexpr()
                return JoinMap(vars_[0], join, src)
            body = self.parse_expr()
            self.expect("sym", ",")
            return MapQ(vars_, body, self.parse_qexpr())
        vars_ = self.parse_lambda_params()
        body = self.parse_expr()
        self.expect("sym", ",")
        src = self.parse_qexpr()
        if op == "filter":
            return Filter(vars_, body, src)
        if op in ("sum", "avg"):
            return Agg(op, vars_, body, src)
        if op in ("min", "max", "argmin", "argmax"):
            return Extremum(op, vars_, body, src)
        if op in ("any", "all"):
            return Quantifier(op, vars_, body, src)
        raise self.error(f"unknown set operator {op!r}")

    def _reduce_op(self) -> str:
        tok = self.next()
        if tok.kind == "sym" and tok.value == "+":
            return "sum"
        if tok.kind == "sym" and tok.value == "*":
            return "prod"
        if tok.kind == "ident" and tok.value in ("min", "max"):
            return tok.value
        raise self.error("reduce needs one of: + * min max", tok)

    def parse_lambda_params(self) -> tuple[str, ...]:
        self.expect("sym", "|")
        names = [self.expect("ident").value]
        while self.eat_sym(","):
            names.append(self.expect("ident").value)
        self.expect("sym", "|")
        if len(names) > 2:
            raise self.error("lambdas take one or two parameters")
        if len(set(names)) != len(names):
            raise self.error("duplicate lambda parameter")
        return tuple(names)

    def _map_lambda(self) -> tuple[tuple[str, ...], QNode | None]:
        """Parse a map lambda, recognizing the (elem, inner-query) pair body."""
        vars_ = self.parse_lambda_params()
        if len(vars_) == 1 and self.at_sym("("):
            mark = self.i
            self.next()
            tok = self.peek()
            if (
                tok.kind == "ident"
                and tok.value == vars_[0]
                and self.peek(1).kind == "sym"
                and self.peek(1).value == ","
            ):
                self.next()
                self.next()
                inner = self.parse_qexpr()
                self.expect("sym", ")")
                return vars_, inner
            self.i = mark
        return vars_, None

    # -- scalar expressions -----------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        e = self.parse_and()
        while self.at_sym("||"):
            tok = self.next()
            e = Bin("or", e, self.parse_and(), pos=(tok.line, tok.col))
        return e

    def parse_and(self) -> Expr:
        e = self.parse_not()
        while self.at_sym("&&"):
            tok = self.next()
            e = Bin("and", e, self.parse_not(), pos=(tok.line, tok.col))
        return e

    def parse_not(self) -> Expr:
        if self.at_sym("!"):
            tok = self.next()
            return Unary("not", self.parse_not(), pos=(tok.line, tok.col))
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        e = self.parse_add()
        tok = self.peek()
        if tok.kind != "sym" or tok.value not in ("<", "<=", ">", ">=", "==", "!="):
            return e
        self.next()
        rhs = self.parse_add()
        pos = (tok.line, tok.col)
        op = tok.value
        if op == "<":
            return Cmp("lt", e, rhs, pos=pos)
        if op == "<=":
            return Cmp("le", e, rhs, pos=pos)
        if op == ">":
            return Cmp("lt", rhs, e, pos=pos)
        if op == ">=":
            return Cmp("le", rhs, e, pos=pos)
        if op == "==":
            return Cmp("eq", e, rhs, pos=pos)
        return Unary("not", Cmp("eq", e, rhs, pos=pos), pos=pos)

    def parse_add(self) -> Expr:
        e = self.parse_mul()
        while self.peek().kind == "sym" and self.peek().value in ("+", "-"):
            tok = self.next()
            op = "add" if tok.value == "+" else "sub"
            e = Bin(op, e, self.parse_mul(), pos=(tok.line, tok.col))
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.value in ("*", "/"):
                self.next()
                op = "mul" if tok.value == "*" else "div"
                e = Bin(op, e, self.parse_unary(), pos=(tok.line, tok.col))
            elif tok.kind == "keyword" and tok.value == "mod":
                self.next()
                e = Bin("mod", e, self.parse_unary(), pos=(tok.line, tok.col))
            else:
                return e

    def parse_unary(self) -> Expr:
        if self.at_sym("-"):
            tok = self.next()
            return Unary("neg", self.parse_unary(), pos=(tok.line, tok.col))
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_atom()
        while self.at_sym("."):
            self.next()
            name = self.expect("ident")
            e = FieldRef(e, name.value, pos=(name.line, name.col))
        return e

    def parse_atom(self) -> Expr:
        tok = self.next()
        pos = (tok.line, tok.col)
        if tok.kind == "int":
            return Lit(tok.value, I64, pos=pos)
        if tok.kind == "float":
            return Lit(tok.value, F64, pos=pos)
        if tok.kind == "keyword":
            if tok.value == "true":
                return Lit(True, BOOL, pos=pos)
            if tok.value == "false":
                return Lit(False, BOOL, pos=pos)
            if tok.value == "let":
                name = self.expect("ident").value
                self.expect("sym", "=")
                bound = self.parse_expr()
                self.expect("keyword", "in")
                return Let(name, bound, self.parse_expr(), pos=pos)
            if tok.value == "if":
                cond = self.parse_expr()
                self.expect("keyword", "then")
                then = self.parse_expr()
                self.expect("keyword", "else")
                return Ite(cond, then, self.parse_expr(), pos=pos)
            raise self.error(f"unexpected {tok.value!r}", tok)
        if tok.kind == "ident":
            if self.at_sym("("):
                self.next()
                args: list[Expr] = []
                while not self.at_sym(")"):
                    args.append(self.parse_expr())
                    if not self.eat_sym(","):
                        break
                self.expect("sym", ")")
                return Call(tok.value, tuple(args), pos=pos)
            return Ref(tok.value, pos=pos)
        if tok.kind == "sym" and tok.value == "(":
            e = self.parse_expr()
            self.expect("sym", ")")
            return e
        raise self.error(f"unexpected {tok.value!r}", tok)


def parse_query(text: str) -> Module:
    """Parse a query file into its module (schemas, enums, one query)."""
    return Parser(text).parse_module()


# --------------------------------------------------------------------------
# Name resolution + typecheck.


def _resolve_enums(e: Expr, enums: dict[str, ScalarType], bound: set[str]) -> Expr:
    """Rewrite Color.Red into an enum literal (names not shadowed locally)."""
    if isinstance(e, FieldRef) and isinstance(e.base, Ref):
        en = enums.get(e.base.name)
        if en is not None and e.base.name not in bound:
            if e.name not in en.labels:
                raise QueryTypeError(
                    f"enum {en.enum_name} has no label {e.name!r}", *e.pos
                )
            return Lit(e.name, en, pos=e.pos)
    if isinstance(e, Lit):
        return e
    if isinstance(e, Ref):
        return e
    if isinstance(e, FieldRef):
        return FieldRef(_resolve_enums(e.base, enums, bound), e.name, e.pos)
    if isinstance(e, Unary):
        return Unary(e.op, _resolve_enums(e.x, enums, bound), e.pos)
    if isinstance(e, Bin):
        return Bin(
            e.op,
            _resolve_enums(e.a, enums, bound),
            _resolve_enums(e.b, enums, bound),
            e.pos,
        )
    if isinstance(e, Cmp):
        return Cmp(
            e.op,
            _resolve_enums(e.a, enums, bound),
            _resolve_enums(e.b, enums, bound),
            e.pos,
        )
    if isinstance(e, Call):
        return Call(
            e.fn, tuple(_resolve_enums(a, enums, bound) for a in e.args), e.pos
        )
    if isinstance(e, Let):
        return Let(
            e.name,
            _resolve_enums(e.bound, enums, bound),
            _resolve_enums(e.body, enums, bound | {e.name}),
            e.pos,
        )
    if isinstance(e, Ite):
        return Ite(
            _resolve_enums(e.cond, enums, bound),
            _resolve_enums(e.then, enums, bound),
            _resolve_enums(e.els, enums, bound),
            e.pos,
        )
    raise TypeError(f"not an expression: {e!r}")


class Typechecker:
    def __init__(self, module: Module):
        self.module = module
        self.uniforms: dict[str, object] = {}
        self.sets: dict[str, SetType] = {}
        for name, ty in module.query.params:
            if isinstance(ty, SetType):
                self.sets[name] = ty
            else:
                self.uniforms[name] = ty

    def check(self) -> Module:
        query = self.module.query
        query.result_type = self.check_node(query.root)
        return self.module

    # Element binding for lambdas: one var gets the element type; two vars
    # require a product source and get the pair's component types.

    def _bind(self, vars_: tuple[str, ...], src_ty: SetType, pos=(0, 0)):
        elem = src_ty.elem
        if len(vars_) == 2:
            if not isinstance(elem, PairType):
                raise QueryTypeError(
                    "two-parameter lambda needs a product source", *pos
                )
            return {vars_[0]: elem.first, vars_[1]: elem.second}
        if len(vars_) == 1:
            return {vars_[0]: elem}
        return {}

    def _expr_env(self, bindings: dict[str, object]) -> dict[str, object]:
        env = dict(self.uniforms)
        env.update(bindings)
        return env

    def _check_pred(self, node, vars_: tuple[str, ...], pred: Expr, src_ty):
        pred = _resolve_enums(pred, self.module.enums, set(vars_))
        env = self._expr_env(self._bind(vars_, src_ty, pred.pos))
        ty = infer_type(pred, env)
        if ty != BOOL:
            raise QueryTypeError(f"predicate must be bool, got {ty}", *pred.pos)
        return pred

    def check_node(self, node: QNode):
        if isinstance(node, SourceRef):
            ty = self.sets.get(node.name)
            if ty is None:
                raise UnknownIdentifier(f"unknown set {node.name!r}")
            node.ty = ty
            return ty
        if isinstance(node, Product):
            lt = self.check_node(node.left)
            rt = self.check_node(node.right)
            node.ty = SetType(PairType(lt.elem, rt.elem))
            return node.ty
        if isinstance(node, Filter):
            src_ty = self.check_node(node.src)
            node.pred = self._check_pred(node, node.vars, node.pred, src_ty)
            node.ty = src_ty
            return node.ty
        if isinstance(node, MapQ):
            src_ty = self.check_node(node.src)
            node.body = _resolve_enums(node.body, self.module.enums, set(node.vars))
            env = self._expr_env(self._bind(node.vars, src_ty, node.body.pos))
            out = infer_type(node.body, env)
            node.ty = SetType(out)
            return node.ty
        if isinstance(node, JoinMap):
            src_ty = self.check_node(node.src)
            if not isinstance(node.inner, Filter):
                raise QueryTypeError("join map needs an inner filter")
            inner_src = node.inner.src
            if not isinstance(inner_src, SourceRef):
                raise QueryTypeError("inner filter must run over a set parameter")
            inner_ty = self.check_node(inner_src)
            # Inner predicate sees the outer element as an extra binding.
            pred = _resolve_enums(
                node.inner.pred,
                self.module.enums,
                set(node.inner.vars) | {node.var},
            )
            env = self._expr_env(self._bind(node.inner.vars, inner_ty))
            env[node.var] = src_ty.elem
            ty = infer_type(pred, env)
            if ty != BOOL:
                raise QueryTypeError(f"predicate must be bool, got {ty}", *pred.pos)
            node.inner.pred = pred
            node.inner.ty = inner_ty
            node.ty = SetType(PairType(src_ty.elem, inner_ty.elem))
            return node.ty
        if isinstance(node, Reduce):
            src_ty = self.check_node(node.src)
            elem = src_ty.elem
            if not is_numeric(elem):
                raise QueryTypeError(f"reduce needs a numeric set, got {elem}")
            node.ty = elem
            return node.ty
        if isinstance(node, Agg):
            src_ty = self.check_node(node.src)
            if node.op == "count":
                node.ty = I64
                return node.ty
            if node.body is None:
                if not is_numeric(src_ty.elem):
                    raise QueryTypeError(
                        f"{node.op} without a key needs a numeric set"
                    )
                node.vars = ("t",)
                node.body = Ref("t")
            node.body = _resolve_enums(
                node.body, self.module.enums, set(node.vars)
            )
            env = self._expr_env(self._bind(node.vars, src_ty, node.body.pos))
            out = infer_type(node.body, env)
            if not is_numeric(out):
                raise QueryTypeError(
                    f"{node.op} needs a numeric key, got {out}", *node.body.pos
                )
            node.ty = F64 if node.op == "avg" else out
            return node.ty
        if isinstance(node, Extremum):
            src_ty = self.check_node(node.src)
            if node.key is None:
                if not is_numeric(src_ty.elem):
                    raise QueryTypeError(
                        f"{node.op} without a key needs a numeric set"
                    )
                node.vars = ("t",)
                node.key = Ref("t")
            node.key = _resolve_enums(node.key, self.module.enums, set(node.vars))
            env = self._expr_env(self._bind(node.vars, src_ty, node.key.pos))
            key_ty = infer_type(node.key, env)
            if not is_numeric(key_ty):
                raise QueryTypeError(
                    f"{node.op} needs a numeric key, got {key_ty}", *node.key.pos
                )
            if node.op in ("min", "max"):
                node.ty = key_ty
            else:
                node.ty = src_ty.elem
            return node.ty
        if isinstance(node, Quantifier):
            src_ty = self.check_node(node.src)
            node.pred = self._check_pred(node, node.vars, node.pred, src_ty)
            node.ty = BOOL
            return node.ty
        raise TypeError(f"not a query node: {node!r}")


def typecheck(module: Module) -> Module:
    """Resolve names and types in place; returns the module for chaining."""
    checked = Typechecker(module).check()
    _reject_param_shadowing(checked)
    return checked


def _reject_param_shadowing(module: Module) -> None:
    """Lambda parameters may not shadow query parameters (keeps the uniform
    vs varying split unambiguous for bound derivation)."""
    param_names = {name for name, _ in module.query.params}

    def walk(node: QNode) -> None:
        vars_ = getattr(node, "vars", ())
        if isinstance(node, JoinMap):
            vars_ = (node.var, *node.inner.vars)
        for v in vars_:
            if v in param_names:
                raise QueryTypeError(
                    f"lambda parameter {v!r} shadows a query parameter"
                )
        for child in q_children(node):
            walk(child)

    walk(module.query.root)
