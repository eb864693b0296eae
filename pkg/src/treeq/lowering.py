"""Compile typechecked queries into fused traversal plans.

The pipeline over a set source — filters, maps, then one optional terminal
aggregate — becomes a single recursive traversal per tree. At every variant
combination the filters contribute nested guards: the sufficient condition
leads to unconditional processing of the whole subtree (a `scan`, an
augmentation read, or an accumulator update), the necessary condition to
recursion, and neither to a prune. Terminal reductions fuse into the same
arms through accumulators, so no intermediate collection is ever built.

Two-set queries lower either to one fused traversal over node *pairs*
(products) or, for the indexed-join shape, to an outer enumeration that
probes the inner tree once per element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bounds import BoundCtx, VarFacts, lower_bound, simplify, upper_bound
from .errors import LoweringError
from .exprs import (
    FALSE,
    TRUE,
    Bin,
    Call,
    Cmp,
    Expr,
    FieldRef,
    Lit,
    Ref,
    Unary,
    infer_type,
    substitute,
)
from .qlang import (
    Agg,
    Extremum,
    Filter,
    JoinMap,
    MapQ,
    Module,
    Product,
    Quantifier,
    Reduce,
    SourceRef,
)
from .treespec import SELF, TreeSpec, augmentation_env, node_field_types
from .ttir import (
    AccDecl,
    Arm,
    BoundNote,
    From,
    If,
    Iter,
    Match,
    Pat,
    PlanFunc,
    Probe,
    Scan,
    Seq,
    Stmt,
    TraversalPlan,
    Upd,
    Yield,
)
from .values import (
    F64,
    I64,
    PairType,
    Schema,
    SetType,
    type_limits,
)

# Internal element placeholders; '$' cannot start a user identifier.
_E = ("$e0", "$e1")


@dataclass
class _Stage:
    pred: Expr  # over _E names and uniforms


@dataclass
class _Sink:
    kind: str  # stream | count | sum | prod | min | max | argmin | argmax
    #          | exists | avg | probe
    cur: tuple[Expr, ...] = ()
    value: Expr | None = None  # aggregate input
    key: Expr | None = None  # extremum ordering key
    negate: bool = False  # for all(): result is "no counterexample"


@dataclass
class _Side:
    index: int
    param: str
    spec: TreeSpec


@dataclass
class _Join:
    var: str  # outer element binding visible to the probe
    outer_cur: Expr  # outer element expression (over $e0)
    outer_stages: list[_Stage]


@dataclass
class _Shared:
    """State accumulated across the traversal functions of one plan."""

    accs: list[AccDecl] = field(default_factory=list)
    notes: list[BoundNote] = field(default_factory=list)
    helpers: list[PlanFunc] = field(default_factory=list)
    helper_keys: dict[tuple, str] = field(default_factory=dict)
    taken: set[str] = field(default_factory=set)


def bind_trees(module: Module, specs: list[TreeSpec]) -> dict[str, TreeSpec]:
    """Assign one declared tree to every set parameter, in order; a single
    declaration serves several parameters when the element types agree."""
    out: dict[str, TreeSpec] = {}
    idx = 0
    for name, ty in module.query.params:
        if not isinstance(ty, SetType):
            continue
        if idx < len(specs) and specs[idx].elem == ty.elem:
            out[name] = specs[idx]
            idx += 1
            continue
        match = [s for s in specs if s.elem == ty.elem]
        if not match:
            raise LoweringError(
                f"no tree declaration for set parameter {name!r}"
            )
        out[name] = match[0]
    return out


def _ty_name(ty) -> str:
    if isinstance(ty, SetType):
        return f"Set<{_ty_name(ty.elem)}>"
    if isinstance(ty, PairType):
        return f"({_ty_name(ty.first)}, {_ty_name(ty.second)})"
    if isinstance(ty, Schema):
        return ty.name
    return str(ty)


# ---------------------------------------------------------------------------
# Query decomposition


class _Decomposer:
    """Flatten the query tree into sides, filter stages, and element exprs."""

    def __init__(self, trees: dict[str, TreeSpec]):
        self.trees = trees
        self.sides: list[_Side] = []
        self.join: _Join | None = None

    def _new_side(self, param: str) -> _Side:
        if len(self.sides) == 2:
            raise LoweringError("queries traverse at most two trees")
        side = _Side(len(self.sides), param, self.trees[param])
        self.sides.append(side)
        return side

    def walk(self, node) -> tuple[list[_Stage], tuple[Expr, ...]]:
        if isinstance(node, SourceRef):
            side = self._new_side(node.name)
            return [], (Ref(_E[side.index]),)
        if isinstance(node, Filter):
            stages, cur = self.walk(node.src)
            if len(node.vars) != len(cur):
                raise LoweringError("filter arity does not match its source")
            pred = substitute(node.pred, dict(zip(node.vars, cur)))
            stages.append(_Stage(pred))
            return stages, cur
        if isinstance(node, MapQ):
            stages, cur = self.walk(node.src)
            if len(node.vars) != len(cur):
                raise LoweringError("map arity does not match its source")
            body = substitute(node.body, dict(zip(node.vars, cur)))
            return stages, (body,)
        if isinstance(node, Product):
            ls, lc = self.walk(node.left)
            rs, rc = self.walk(node.right)
            if len(lc) != 1 or len(rc) != 1:
                raise LoweringError("product sides must be element streams")
            return ls + rs, lc + rc
        if isinstance(node, JoinMap):
            outer_stages, outer_cur = self.walk(node.src)
            if len(self.sides) != 1 or len(outer_cur) != 1:
                raise LoweringError("join maps take a single-tree outer side")
            inner = node.inner
            side = self._new_side(inner.src.name)
            pred = substitute(
                inner.pred, {inner.vars[0]: Ref(_E[side.index])}
            )
            self.join = _Join(node.var, outer_cur[0], outer_stages)
            return [_Stage(pred)], (Ref(node.var), Ref(_E[side.index]))
        raise LoweringError(f"cannot lower {type(node).__name__}")


def _decompose(module: Module, trees: dict[str, TreeSpec]):
    root = module.query.root
    terminal = None
    if isinstance(root, (Reduce, Agg, Extremum, Quantifier)):
        terminal = root
        root = root.src
    dec = _Decomposer(trees)
    stages, cur = dec.walk(root)

    def sub(vars_, body):
        if len(vars_) != len(cur):
            raise LoweringError("lambda arity does not match its source")
        return substitute(body, dict(zip(vars_, cur)))

    if terminal is None:
        sink = _Sink("stream", cur=cur)
    elif isinstance(terminal, Reduce):
        if len(cur) != 1:
            raise LoweringError("reduce needs a scalar stream")
        sink = _Sink(terminal.op, value=cur[0], key=cur[0])
    elif isinstance(terminal, Agg):
        if terminal.op == "count":
            sink = _Sink("count")
        else:
            sink = _Sink(terminal.op, value=sub(terminal.vars, terminal.body))
    elif isinstance(terminal, Extremum):
        key = sub(terminal.vars, terminal.key)
        if terminal.op in ("min", "max"):
            sink = _Sink(terminal.op, value=key, key=key)
        else:
            sink = _Sink(terminal.op, cur=cur, key=key)
    elif isinstance(terminal, Quantifier):
        pred = sub(terminal.vars, terminal.pred)
        if terminal.op == "all":
            pred = simplify(Unary("not", pred))
        stages.append(_Stage(pred))
        sink = _Sink("exists", negate=terminal.op == "all")
    else:  # pragma: no cover - parser produces no other terminals
        raise LoweringError(f"cannot lower {type(terminal).__name__}")
    return dec.sides, stages, cur, dec.join, sink


# ---------------------------------------------------------------------------
# Plan construction


@dataclass
class _ArmCtx:
    """Everything the per-arm emitters need for one variant combination."""

    sides: list[_Side]
    variants: list
    binders: list[dict[str, str]]  # field -> binder per side
    ctx: BoundCtx
    envs: list
    elem: list[Expr | None]  # leaf element expr per side (None at interiors)
    arrays: list[tuple[str, str] | None]  # (itervar, collection binder)
    label: str


class _Traversal:
    """Builds one traversal function (plus its scan helper) over `sides`."""

    def __init__(
        self,
        uniforms: dict[str, object],
        sides: list[_Side],
        stages: list[_Stage],
        sink: _Sink,
        shared: _Shared,
        scruts: tuple[str, ...],
        join: _Join | None = None,
        suffix_binders: bool = False,
    ):
        self.uniforms = uniforms
        self.sides = sides
        self.stages = stages
        self.sink = sink
        self.shared = shared
        self.scruts = scruts
        self.join = join
        self.suffix = suffix_binders or len(sides) == 2

    # -- naming ----------------------------------------------------------

    def _fresh(self, base: str) -> str:
        name = base
        while name in self.shared.taken:
            name += "_"
        return name

    # -- arm context -------------------------------------------------------

    def _make_arm_ctx(self, variants: list) -> _ArmCtx:
        tenv: dict[str, object] = dict(self.uniforms)
        binders: list[dict[str, str]] = []
        envs = []
        elem: list[Expr | None] = []
        arrays: list[tuple[str, str] | None] = []
        facts: dict[str, VarFacts] = {}
        for side, variant in zip(self.sides, variants):
            bmap = {
                f.name: self._fresh(
                    f"{f.name}{side.index}" if self.suffix else f.name
                )
                for f in variant.fields
            }
            binders.append(bmap)
            rename = {old: Ref(new) for old, new in bmap.items()}
            env = augmentation_env(side.spec, variant).rename(rename)
            envs.append(env)
            facts[_E[side.index]] = VarFacts(env)
            tenv[_E[side.index]] = side.spec.elem
            data = variant.data
            if data is None:
                elem.append(None)
                arrays.append(None)
            elif data.kind == "data_one":
                elem.append(Ref(bmap[data.name]))
                arrays.append(None)
            else:
                var = self._fresh(f"x{side.index}" if self.suffix else "x")
                elem.append(Ref(var))
                arrays.append((var, bmap[data.name]))
                tenv[var] = side.spec.elem
            for fname, fty in node_field_types(side.spec, variant).items():
                tenv[bmap[fname]] = fty
        label = ", ".join(v.name for v in variants)
        return _ArmCtx(
            self.sides, variants, binders, BoundCtx(tenv, facts), envs, elem,
            arrays, label,
        )

    def _patterns(self, arm: _ArmCtx) -> tuple[Pat, ...]:
        return tuple(
            Pat(v.name, tuple(bmap[f.name] for f in v.fields))
            for v, bmap in zip(arm.variants, arm.binders)
        )

    def _combos(self):
        if len(self.sides) == 1:
            for v in self.sides[0].spec.variants:
                yield [v]
        else:
            for v0 in self.sides[0].spec.variants:
                for v1 in self.sides[1].spec.variants:
                    yield [v0, v1]

    # -- leaf-side processing ------------------------------------------------

    def _subst_elems(self, arm: _ArmCtx, e: Expr) -> Expr:
        mapping = {
            _E[s.index]: x for s, x in zip(arm.sides, arm.elem) if x is not None
        }
        return simplify(substitute(e, mapping))

    def _leaf_body(self, arm: _ArmCtx, tested: bool) -> Stmt:
        body = self._leaf_sink(arm)
        if tested:
            conj: Expr = TRUE
            for st in self.stages:
                p = self._subst_elems(arm, st.pred)
                conj = p if conj == TRUE else Bin("and", conj, p)
            conj = simplify(conj)
            if conj == FALSE:
                return Seq(())
            if conj != TRUE:
                body = If(conj, body, role="test", source=conj)
        for entry in reversed([a for a in arm.arrays if a is not None]):
            var, coll = entry
            body = Iter(var, coll, body)
        return body

    def _leaf_sink(self, arm: _ArmCtx) -> Stmt:
        s = self.sink
        if s.kind == "stream":
            return Yield(tuple(self._subst_elems(arm, c) for c in s.cur))
        if s.kind == "probe":
            assert self.join is not None
            return Probe(
                "probe", "t1", self.join.var,
                self._subst_elems(arm, self.join.outer_cur),
            )
        if s.kind == "count":
            return Upd("c", Bin("add", Ref("c"), Lit(1, I64)))
        if s.kind == "sum":
            v = self._subst_elems(arm, s.value)
            return Upd("a", Bin("add", Ref("a"), v))
        if s.kind == "prod":
            v = self._subst_elems(arm, s.value)
            return Upd("a", Bin("mul", Ref("a"), v))
        if s.kind in ("min", "max"):
            v = self._subst_elems(arm, s.value)
            return Upd("a", Call(s.kind, (Ref("a"), v)))
        if s.kind in ("argmin", "argmax"):
            k = self._subst_elems(arm, s.key)
            better = (
                Cmp("lt", k, Ref("bk"))
                if s.kind == "argmin"
                else Cmp("lt", Ref("bk"), k)
            )
            vals = tuple(self._subst_elems(arm, c) for c in s.cur)
            payload = vals[0] if len(vals) == 1 else Call("pair", vals)
            return If(
                better, Seq((Upd("bk", k), Upd("bv", payload))), role="value"
            )
        if s.kind == "exists":
            return Upd("r", TRUE)
        if s.kind == "avg":
            v = self._subst_elems(arm, s.value)
            return Seq((
                Upd("s", Bin("add", Ref("s"), v)),
                Upd("n", Bin("add", Ref("n"), Lit(1, I64))),
            ))
        raise LoweringError(f"no leaf form for sink {s.kind}")

    # -- augmentation reads ----------------------------------------------------

    def _metric_of(self, e: Expr, side: int) -> str | None:
        if e == Ref(_E[side]):
            return SELF
        if isinstance(e, FieldRef) and e.base == Ref(_E[side]):
            return e.name
        return None

    def _aug_read(
        self, arm: _ArmCtx, op: str, value: Expr | None
    ) -> Expr | None:
        """Whole-subtree aggregate for one arm, from stored augmentation or
        exact leaf data; None when a scan is unavoidable."""
        if op == "count":
            parts = []
            for env in arm.envs:
                if env.exact:
                    parts.append(Lit(1, I64))
                    continue
                read = env.reductions.get(("count", ""))
                if read is None:
                    return None
                parts.append(read)
            out = parts[0]
            for p in parts[1:]:
                out = Bin("mul", out, p)
            return simplify(out)
        if value is None or len(arm.sides) != 1:
            return None
        env = arm.envs[0]
        if env.exact:
            return simplify(upper_bound(value, arm.ctx))
        metric = self._metric_of(value, arm.sides[0].index)
        if metric is None:
            return None
        return env.reductions.get((op, metric))

    # -- guards -------------------------------------------------------------

    def _value_guard(self, arm: _ArmCtx) -> Expr | None:
        s = self.sink
        if s.kind == "exists":
            return Unary("not", Ref("r"))
        if s.kind in ("min", "argmin", "max", "argmax"):
            acc = "a" if s.kind in ("min", "max") else "bk"
            kty = infer_type(s.key, arm.ctx.tenv)
            lo_lim, hi_lim = type_limits(kty)
            if s.kind in ("min", "argmin"):
                lb = simplify(lower_bound(s.key, arm.ctx))
                if lb == Lit(lo_lim, kty):
                    return None
                return Cmp("lt", lb, Ref(acc))
            ub = simplify(upper_bound(s.key, arm.ctx))
            if ub == Lit(hi_lim, kty):
                return None
            return Cmp("lt", Ref(acc), ub)
        return None

    def _guarded_body(self, arm: _ArmCtx, fn: str) -> Stmt:
        stages = self.stages
        lows = [simplify(lower_bound(st.pred, arm.ctx)) for st in stages]
        highs = [simplify(upper_bound(st.pred, arm.ctx)) for st in stages]
        for st, lo, hi in zip(stages, lows, highs):
            if lo != hi and lo != FALSE:
                self.shared.notes.append(
                    BoundNote(fn, arm.label, "always", st.pred, lo)
                )
            if lo != hi and hi != TRUE:
                self.shared.notes.append(
                    BoundNote(fn, arm.label, "maybe", st.pred, hi)
                )
        vg = self._value_guard(arm)

        def conj(terms) -> Expr:
            out: Expr = TRUE
            for t in terms:
                if t == TRUE:
                    continue
                out = t if out == TRUE else Bin("and", out, t)
            return out

        def fallback(i: int) -> Stmt:
            cond = conj(highs[i:])
            if cond == FALSE:
                return Seq(())
            return If(
                cond, From(), role="maybe",
                source=conj(st.pred for st in stages[i:]), vguard=vg,
            )

        def rec(i: int) -> Stmt:
            if i == len(stages):
                return self._always_sink(arm)
            lo, hi = lows[i], highs[i]
            if lo == hi:  # exact or uniform stage: one plain test
                if lo == FALSE:
                    return Seq(())
                inner = rec(i + 1)
                if lo == TRUE:
                    return inner
                return If(lo, inner, role="test", source=stages[i].pred)
            if lo == FALSE:
                return fallback(i)
            return If(
                lo, rec(i + 1), fallback(i),
                role="always", source=stages[i].pred,
            )

        return rec(0)

    # -- unconditional subtree processing -------------------------------------

    def _always_sink(self, arm: _ArmCtx) -> Stmt:
        s = self.sink
        if s.kind == "count":
            read = self._aug_read(arm, "count", None)
            if read is not None:
                return Upd("c", Bin("add", Ref("c"), read))
        elif s.kind == "sum":
            read = self._aug_read(arm, "sum", s.value)
            if read is not None:
                return Upd("a", Bin("add", Ref("a"), read))
        elif s.kind in ("min", "max"):
            read = self._aug_read(arm, s.kind, s.value)
            if read is not None:
                return Upd("a", Call(s.kind, (Ref("a"), read)))
        elif s.kind == "exists":
            return Upd("r", TRUE)
        elif s.kind == "avg":
            total = self._aug_read(arm, "sum", s.value)
            cnt = self._aug_read(arm, "count", None)
            if total is not None and cnt is not None:
                return Seq((
                    Upd("s", Bin("add", Ref("s"), total)),
                    Upd("n", Bin("add", Ref("n"), cnt)),
                ))
        # With no filter stages the main function already visits every node
        # and its leaf arms apply no element test, so a dedicated scan
        # helper would duplicate it verbatim; plain descent suffices.
        scan: Stmt = From() if not self.stages else Scan(self._helper())
        if s.kind in ("min", "max", "argmin", "argmax"):
            vg = self._value_guard(arm)
            if vg is not None:
                return If(TRUE, scan, role="value", vguard=vg)
        return scan

    def _helper(self) -> str:
        """The scan function: unconditional traversal feeding the sink."""
        key = (self.sink.kind, tuple(s.index for s in self.sides))
        name = self.shared.helper_keys.get(key)
        if name is not None:
            return name
        n = len(self.shared.helper_keys)
        name = "scan" if n == 0 else f"scan{n + 1}"
        self.shared.helper_keys[key] = name
        arms = []
        for variants in self._combos():
            arm = self._make_arm_ctx(variants)
            if all(v.data is not None for v in variants):
                body = self._leaf_body(arm, tested=False)
            else:
                body = self._scan_step(arm)
            arms.append(Arm(self._patterns(arm), body))
        shown = (
            (self.join.var,)
            if self.join is not None and self.sink.kind != "probe"
            else ()
        )
        fn = PlanFunc(
            name,
            self.scruts,
            tuple(s.spec.name for s in self.sides),
            Match(self.scruts, tuple(arms)),
            uniforms=shown,
        )
        self.shared.helpers.append(fn)
        return name

    def _scan_step(self, arm: _ArmCtx) -> Stmt:
        """One helper arm at a node with children: read the augmentation if
        the whole-subtree aggregate is stored, otherwise keep descending."""
        s = self.sink
        if s.kind == "count":
            read = self._aug_read(arm, "count", None)
            if read is not None:
                return Upd("c", Bin("add", Ref("c"), read))
        elif s.kind == "sum":
            read = self._aug_read(arm, "sum", s.value)
            if read is not None:
                return Upd("a", Bin("add", Ref("a"), read))
        elif s.kind in ("min", "max"):
            read = self._aug_read(arm, s.kind, s.value)
            if read is not None:
                return Upd("a", Call(s.kind, (Ref("a"), read)))
        elif s.kind in ("argmin", "argmax", "exists"):
            vg = self._value_guard(arm)
            if vg is not None:
                return If(TRUE, From(), role="value", vguard=vg)
        return From()

    # -- the function ---------------------------------------------------------

    def fn(self, name: str, uniforms_shown: tuple[str, ...] = ()) -> PlanFunc:
        arms = []
        for variants in self._combos():
            arm = self._make_arm_ctx(variants)
            if all(v.data is not None for v in variants):
                body = self._leaf_body(arm, tested=True)
            else:
                body = self._guarded_body(arm, name)
            arms.append(Arm(self._patterns(arm), body))
        return PlanFunc(
            name,
            self.scruts,
            tuple(s.spec.name for s in self.sides),
            Match(self.scruts, tuple(arms)),
            uniforms=uniforms_shown,
        )


# ---------------------------------------------------------------------------


def _acc_decls(sink: _Sink, tenv: dict, result_ty) -> list[AccDecl]:
    s = sink
    if s.kind == "count":
        return [AccDecl("c", "i64", Lit(0, I64))]
    if s.kind in ("sum", "prod"):
        ty = infer_type(s.value, tenv)
        zero = Lit(0, I64) if ty == I64 else Lit(0.0, F64)
        one = Lit(1, I64) if ty == I64 else Lit(1.0, F64)
        return [AccDecl("a", ty.kind, zero if s.kind == "sum" else one)]
    if s.kind in ("min", "max"):
        ty = infer_type(s.key, tenv)
        lo, hi = type_limits(ty)
        return [AccDecl("a", ty.kind, Lit(hi if s.kind == "min" else lo, ty))]
    if s.kind in ("argmin", "argmax"):
        ty = infer_type(s.key, tenv)
        lo, hi = type_limits(ty)
        return [
            AccDecl("bk", ty.kind, Lit(hi if s.kind == "argmin" else lo, ty)),
            AccDecl("bv", _ty_name(result_ty), Lit(None, result_ty)),
        ]
    if s.kind == "exists":
        return [AccDecl("r", "bool", FALSE)]
    if s.kind == "avg":
        return [
            AccDecl("s", "f64", Lit(0.0, F64)),
            AccDecl("n", "i64", Lit(0, I64)),
        ]
    return []


def _result_expr(sink: _Sink) -> Expr | None:
    return {
        "stream": None,
        "probe": None,
        "count": Ref("c"),
        "sum": Ref("a"),
        "prod": Ref("a"),
        "min": Ref("a"),
        "max": Ref("a"),
        "argmin": Ref("bv"),
        "argmax": Ref("bv"),
        "exists": Unary("not", Ref("r")) if sink.negate else Ref("r"),
        "avg": Bin("div", Ref("s"), Ref("n")),
    }[sink.kind]


def lower(module: Module, specs: list[TreeSpec]) -> TraversalPlan:
    trees = bind_trees(module, specs)
    sides, stages, cur, join, sink = _decompose(module, trees)
    q = module.query

    uniforms = {
        name: ty for name, ty in q.params if not isinstance(ty, SetType)
    }
    shared = _Shared(taken=set(uniforms))
    if join is not None:
        shared.taken.add(join.var)

    value_tenv = dict(uniforms)
    for side in sides:
        value_tenv[_E[side.index]] = side.spec.elem
    if join is not None:
        value_tenv[join.var] = sides[0].spec.elem

    funcs: list[PlanFunc] = []
    if join is not None:
        outer = _Traversal(
            uniforms, sides[:1], join.outer_stages, _Sink("probe"),
            shared, ("t0",), join=join, suffix_binders=True,
        )
        funcs.append(outer.fn("main"))
        probe_uniforms = dict(uniforms)
        probe_uniforms[join.var] = sides[0].spec.elem
        probe = _Traversal(
            probe_uniforms, sides[1:], stages, sink,
            shared, ("t1",), join=join, suffix_binders=True,
        )
        funcs.append(probe.fn("probe", uniforms_shown=(join.var,)))
    elif len(sides) == 2:
        trav = _Traversal(uniforms, sides, stages, sink, shared, ("t0", "t1"))
        funcs.append(trav.fn("main"))
    else:
        trav = _Traversal(uniforms, sides, stages, sink, shared, ("t",))
        funcs.append(trav.fn("main"))
    funcs.extend(shared.helpers)

    params: list[tuple[str, str]] = []
    set_params: list[tuple[str, str]] = []
    scruts = ("t",) if len(sides) == 1 else ("t0", "t1")
    seen = 0
    for name, ty in q.params:
        if isinstance(ty, SetType):
            if seen >= len(sides):
                raise LoweringError(f"set parameter {name!r} is never used")
            params.append((scruts[seen], sides[seen].spec.name))
            set_params.append((scruts[seen], name))
            seen += 1
        else:
            params.append((name, _ty_name(ty)))

    return TraversalPlan(
        name=q.name,
        params=tuple(params),
        result=_ty_name(q.result_type),
        funcs=tuple(funcs),
        accs=tuple(_acc_decls(sink, value_tenv, q.result_type)),
        result_expr=_result_expr(sink),
        notes=tuple(shared.notes),
        set_params=tuple(set_params),
    )
