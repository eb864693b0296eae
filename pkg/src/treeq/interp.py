"""Execute traversal plans over built trees, with instrumentation.

The evaluator compiles every guard and update expression of a plan into a
Python closure once, then drives the traversal: variant dispatch per node,
guard chains deciding between whole-subtree inclusion, descent, and prune,
accumulators threaded through one mutable state, and pair recursion for
two-tree plans in the fixed order left×left, right×left, left×right,
right×right. Counters record every decision so work-efficiency claims are
checkable; nothing intermediate is ever materialized.

With debug verification on (the `TREEQ_DEBUG_VERIFY` environment variable,
or `debug=True`), every inclusion and prune decision is re-checked against
the subtree's actual elements by brute force, raising PruneSoundnessError
on any disagreement between the derived guards and the query predicate.
"""

from __future__ import annotations

import os
from collections import ChainMap
from dataclasses import dataclass

from .build import TreeInstance
from .errors import EvalError, PruneSoundnessError
from .exprs import Call, Cmp, Expr, Lit, Ref, Unary, compile_expr, to_source
from .lowering import lower
from .qlang import (
    Agg,
    Extremum,
    Filter,
    MapQ,
    Module,
    Quantifier,
    Query,
    Reduce,
    SourceRef,
)
from .treespec import TreeSpec
from .ttir import (
    From,
    If,
    Iter,
    Match,
    PlanFunc,
    Probe,
    Scan,
    Seq,
    TraversalPlan,
    Upd,
    Yield,
)
from .values import (
    BOOL,
    F64,
    I64,
    GEOMETRY_CLASSES,
    GeomType,
    SetType,
    f_add,
    f_div,
    f_mul,
    geom_kind,
    sat_add,
    sat_mul,
)
from .qlang import _GEOM_TYPE_NAMES, _SCALAR_TYPE_NAMES


@dataclass
class TraversalStats:
    """Decision counters for one evaluation."""

    nodes_visited: int = 0
    nodes_pruned: int = 0
    nodes_scanned: int = 0
    leaf_predicate_evals: int = 0
    pair_visits: int = 0
    intermediate_allocs: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "nodesVisited": self.nodes_visited,
            "nodesPruned": self.nodes_pruned,
            "nodesScanned": self.nodes_scanned,
            "leafPredicateEvals": self.leaf_predicate_evals,
            "pairVisits": self.pair_visits,
            "intermediateAllocs": self.intermediate_allocs,
        }


def _printed_type(name: str):
    if name in _SCALAR_TYPE_NAMES:
        return _SCALAR_TYPE_NAMES[name]
    if name in _GEOM_TYPE_NAMES:
        kind, dim = _GEOM_TYPE_NAMES[name]
        return GeomType(kind, dim)
    return None


_ACC_TYPES = {"i64": I64, "f64": F64, "bool": BOOL}

# Placeholder names predicate sources use for the traversed elements,
# aligned with scrutinee names.
_SOURCE_VARS = {"t": "$e0", "t0": "$e0", "t1": "$e1"}


def _relax_ties(e: Expr, acc: str) -> Expr:
    """Turn strict key comparisons against the best-key accumulator into
    non-strict ones. Used while the best element is still the phantom
    identity: an element whose key equals the type limit must still win."""
    if isinstance(e, Cmp) and e.op == "lt":
        if e.a == Ref(acc) or e.b == Ref(acc):
            return Cmp("le", e.a, e.b)
    return e


class _Frame:
    """Per-function-invocation context: the env chain and node indices."""

    __slots__ = ("env", "nodes", "base")

    def __init__(self, env, nodes, base):
        self.env = env
        self.nodes = nodes
        self.base = base


class Evaluator:
    """A plan compiled against concrete tree instances, reusable across
    parameter sets."""

    def __init__(
        self,
        plan: TraversalPlan,
        trees: TreeInstance | list[TreeInstance] | tuple[TreeInstance, ...],
        debug: bool | None = None,
    ):
        if isinstance(trees, TreeInstance):
            trees = [trees]
        if len(trees) != len(plan.set_params):
            raise EvalError(
                f"plan {plan.name} traverses {len(plan.set_params)} tree(s), "
                f"got {len(trees)}"
            )
        self.plan = plan
        self.debug = (
            bool(os.environ.get("TREEQ_DEBUG_VERIFY")) if debug is None
            else debug
        )
        self.instances: dict[str, TreeInstance] = {}
        declared = dict(plan.params)
        for (scrut, _qparam), inst in zip(plan.set_params, trees):
            want = declared[scrut]
            if inst.spec.name != want:
                raise EvalError(
                    f"parameter {scrut} wants a {want} tree, "
                    f"got {inst.spec.name}"
                )
            self.instances[scrut] = inst

        scrut_names = {s for s, _ in plan.set_params}
        self.uniform_types: dict[str, object] = {}
        for name, printed in plan.params:
            if name in scrut_names:
                continue
            ty = _printed_type(printed)
            if ty is None:
                raise EvalError(f"parameter {name}: unsupported type {printed}")
            self.uniform_types[name] = ty

        self.acc_types = {
            a.name: _ACC_TYPES[a.ty] for a in plan.accs if a.ty in _ACC_TYPES
        }
        self.extremum_acc = (
            "bk" if any(a.name == "bv" for a in plan.accs) else None
        )
        self.probe_var_types = self._probe_vars()
        self.funcs = {f.name: _FuncExec(self, f) for f in plan.funcs}

        # Mutable per-run state.
        self.accs: dict[str, object] = {}
        self.out: list = []
        self.stats = TraversalStats()
        self.trace: list[str] | None = None

    # -- setup ---------------------------------------------------------------

    def _probe_vars(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for fn in self.plan.funcs:
            outer = self.instances.get(fn.trees[0])
            if outer is None:
                continue
            for arm in fn.body.arms:
                for st in _walk_stmts(arm.body):
                    if isinstance(st, Probe):
                        out[st.var] = outer.spec.elem
        return out

    def elem_type(self, scrut: str):
        return self.instances[scrut].spec.elem

    # -- running -------------------------------------------------------------

    def run(self, params: dict[str, object] | None = None):
        """Evaluate with the given uniform values; returns (result, stats)."""
        params = dict(params or {})
        missing = sorted(set(self.uniform_types) - set(params))
        if missing:
            raise EvalError(f"missing parameter(s): {', '.join(missing)}")
        extra = sorted(set(params) - set(self.uniform_types))
        if extra:
            raise EvalError(f"unknown parameter(s): {', '.join(extra)}")
        for name, v in params.items():
            self._check_param(name, v)

        self.accs = {a.name: a.identity.value for a in self.plan.accs}
        self.out = []
        self.stats = TraversalStats()
        base = ChainMap(self.accs, params)
        entry = self.plan.funcs[0]
        if all(not self.instances[s].empty for s in entry.trees):
            roots = tuple(self.instances[s].root for s in entry.trees)
            self.visit(entry.name, roots, base)
        elif self.trace is not None:
            self.trace.append("empty")
        result = self._result()
        return result, self.stats

    def _check_param(self, name: str, v: object) -> None:
        ty = self.uniform_types[name]
        ok = True
        if ty == I64:
            ok = isinstance(v, int) and not isinstance(v, bool)
        elif ty == F64:
            ok = isinstance(v, float)
        elif ty == BOOL:
            ok = isinstance(v, bool)
        elif isinstance(ty, GeomType):
            ok = (
                isinstance(v, GEOMETRY_CLASSES) and geom_kind(v) == ty.kind
            )
        if not ok:
            raise EvalError(f"parameter {name}: {v!r} is not a {ty}")

    def _result(self):
        e = self.plan.result_expr
        if e is None:
            return self.out
        return self._fold_result(e)

    def _fold_result(self, e: Expr):
        if isinstance(e, Ref):
            return self.accs[e.name]
        if isinstance(e, Unary) and e.op == "not":
            return not self._fold_result(e.x)
        if isinstance(e, Call):
            return None  # pragma: no cover - no such result forms
        # avg: stored sum over stored count, total division
        a = self._fold_result(e.a)
        b = self._fold_result(e.b)
        return f_div(float(a), float(b))

    def visit(self, fname: str, nodes: tuple[int, ...], base) -> None:
        fx = self.funcs[fname]
        st = self.stats
        st.nodes_visited += 1
        if fx.pair_like:
            st.pair_visits += 1
        insts = fx.insts
        objs = tuple(
            insts[i].nodes[nodes[i]] for i in range(len(nodes))
        )
        arm = fx.arms[tuple(o.variant for o in objs)]
        binders: dict[str, object] = {}
        for names, fields, obj in zip(arm.binder_names, arm.field_names, objs):
            for bname, fld in zip(names, fields):
                binders[bname] = obj.fields[fld]
        if self.trace is not None:
            ids = ",".join(str(i) for i in nodes)
            self.trace.append(f"{fname}({ids}) {arm.label}")
        arm.body(_Frame(ChainMap(binders, *base.maps), nodes, base))


class _ArmExec:
    __slots__ = ("binder_names", "field_names", "label", "body")

    def __init__(self, binder_names, field_names, label, body):
        self.binder_names = binder_names
        self.field_names = field_names
        self.label = label
        self.body = body


class _FuncExec:
    """One plan function compiled to per-arm closures."""

    def __init__(self, ev: Evaluator, fn: PlanFunc):
        self.ev = ev
        self.fn = fn
        self.pair_like = len(fn.trees) == 2 or bool(fn.uniforms)
        self.insts = tuple(ev.instances[s] for s in fn.trees)
        self.arms = {}
        for arm in fn.body.arms:
            specs = [inst.spec for inst in self.insts]
            variants = [
                spec.variant(p.variant) for spec, p in zip(specs, arm.patterns)
            ]
            tenv = dict(ev.uniform_types)
            tenv.update(ev.acc_types)
            tenv.update(ev.probe_var_types)
            binder_names = []
            field_names = []
            child_binders = []
            coll_sides = {}
            for side, (spec, variant, pat) in enumerate(
                zip(specs, variants, arm.patterns)
            ):
                names = pat.binders
                fields = tuple(f.name for f in variant.fields)
                binder_names.append(names)
                field_names.append(fields)
                kids = []
                for bname, f in zip(names, variant.fields):
                    if f.kind == "child":
                        kids.append(bname)
                    elif f.kind in ("scalar", "geom"):
                        tenv[bname] = f.ty
                    elif f.kind == "data_one":
                        tenv[bname] = spec.elem
                    else:
                        coll_sides[bname] = side
                child_binders.append(tuple(kids))
            label = ", ".join(v.name for v in variants)
            ctx = _StmtCtx(
                ev, fn, tenv, tuple(child_binders), coll_sides, label
            )
            body = ctx.compile(arm.body)
            key = tuple(p.variant for p in arm.patterns)
            self.arms[key] = _ArmExec(
                tuple(binder_names), tuple(field_names), label, body
            )


class _StmtCtx:
    """Compiles one arm body into a closure tree."""

    def __init__(self, ev, fn, tenv, child_binders, coll_sides, label):
        self.ev = ev
        self.fn = fn
        self.tenv = tenv
        self.child_binders = child_binders
        self.coll_sides = coll_sides
        self.label = label

    def _compile_expr(self, e: Expr):
        if e == Lit(True, BOOL):
            return None
        return compile_expr(e, self.tenv)

    def compile(self, stmt):
        ev = self.ev

        if isinstance(stmt, Seq):
            parts = [self.compile(s) for s in stmt.items]
            if not parts:
                return lambda fr: None
            if len(parts) == 1:
                return parts[0]

            def run_seq(fr, parts=tuple(parts)):
                for p in parts:
                    p(fr)

            return run_seq

        if isinstance(stmt, Upd):
            f = compile_expr(stmt.expr, self.tenv)
            name = stmt.acc

            def run_upd(fr, name=name, f=f, ev=ev):
                ev.accs[name] = f(fr.env)

            return run_upd

        if isinstance(stmt, Yield):
            fns = [compile_expr(e, self.tenv) for e in stmt.exprs]
            if len(fns) == 1:
                f = fns[0]

                def run_yield1(fr, f=f, ev=ev):
                    ev.out.append(f(fr.env))

                return run_yield1
            fa, fb = fns

            def run_yield2(fr, fa=fa, fb=fb, ev=ev):
                ev.out.append((fa(fr.env), fb(fr.env)))

            return run_yield2

        if isinstance(stmt, Iter):
            inner = self.compile_iter(stmt)
            return inner

        if isinstance(stmt, If):
            return self.compile_if(stmt)

        if isinstance(stmt, From):
            return self.compile_from(gate=None)

        if isinstance(stmt, Scan):
            helper = stmt.helper

            def run_scan(fr, helper=helper, ev=ev):
                ev.stats.nodes_scanned += 1
                if ev.trace is not None:
                    ev.trace.append(f"  include subtree via {helper}")
                ev.visit(helper, fr.nodes, fr.base)

            return run_scan

        if isinstance(stmt, Probe):
            f = compile_expr(stmt.arg, self.tenv)
            var, fnname, scrut = stmt.var, stmt.fn, stmt.tree

            def run_probe(fr, f=f, var=var, fnname=fnname, scrut=scrut, ev=ev):
                inner = ev.instances[scrut]
                if inner.empty:
                    return
                base2 = fr.base.new_child({var: f(fr.env)})
                ev.visit(fnname, (inner.root,), base2)

            return run_probe

        raise EvalError(f"cannot execute {type(stmt).__name__}")

    def compile_iter(self, stmt: Iter):
        side = self.coll_sides[stmt.coll]
        self.tenv[stmt.var] = self.ev.instances[self.fn.trees[side]].spec.elem
        body = self.compile(stmt.body)
        var, coll = stmt.var, stmt.coll

        def run_iter(fr, var=var, coll=coll, body=body):
            frame_vars = fr.env.maps[0]
            for v in fr.env[coll]:
                frame_vars[var] = v
                body(fr)

        return run_iter

    def compile_if(self, stmt: If):
        ev = self.ev
        cond = self._compile_expr(stmt.cond)
        vg = self._compile_expr(stmt.vguard) if stmt.vguard is not None else None
        relaxed_cond = cond
        relaxed_vg = vg
        acc = ev.extremum_acc
        if acc is not None:
            if stmt.role == "value" and stmt.cond != Lit(True, BOOL):
                relaxed_cond = self._compile_expr(_relax_ties(stmt.cond, acc))
            if stmt.vguard is not None:
                relaxed_vg = self._compile_expr(_relax_ties(stmt.vguard, acc))
        gate = vg if isinstance(stmt.then, From) else None
        then = (
            self.compile_from(gate=(relaxed_vg, vg))
            if gate is not None
            else self.compile(stmt.then)
        )
        els = self.compile(stmt.els) if stmt.els is not None else None
        role = stmt.role
        check = (
            self._shadow(stmt)
            if ev.debug
            and stmt.source is not None
            and stmt.role in ("always", "maybe")
            else None
        )
        is_test = role == "test"
        trace_src = (
            to_source(stmt.cond) if stmt.cond != Lit(True, BOOL)
            else (to_source(stmt.vguard) if stmt.vguard is not None else "")
        )

        def phantom():
            return acc is not None and ev.accs.get("bv") is None

        def run_if(fr):
            if phantom():
                c = relaxed_cond is None or relaxed_cond(fr.env)
                g = relaxed_vg is None or relaxed_vg(fr.env)
            else:
                c = cond is None or cond(fr.env)
                g = vg is None or vg(fr.env)
            if is_test:
                ev.stats.leaf_predicate_evals += 1
            if check is not None:
                check(fr, c)
            if ev.trace is not None and trace_src:
                verdict = ("holds" if c else "fails") if role != "value" else (
                    "improves" if g else "cannot improve"
                )
                ev.trace.append(f"  {role} {trace_src}: {verdict}")
            if c and g:
                then(fr)
            elif els is not None and c is False:
                els(fr)
            else:
                if role in ("maybe", "value") or (role == "always" and not g):
                    ev.stats.nodes_pruned += 1
                    if ev.trace is not None:
                        ev.trace.append("  prune")

        return run_if

    def compile_from(self, gate):
        """Descent into children; leaf scrutinees stay fixed. `gate`
        re-checks a value guard between child visits (early exit)."""
        ev = self.ev
        fname = self.fn.name
        child_binders = self.child_binders
        relaxed_gate, strict_gate = gate if gate is not None else (None, None)
        acc = ev.extremum_acc

        def kids_of(fr, side):
            names = child_binders[side]
            if not names:
                return (fr.nodes[side],)
            return tuple(fr.env[b] for b in names)

        if len(child_binders) == 1:

            def run_from1(fr):
                first = True
                for kid in kids_of(fr, 0):
                    if not first and strict_gate is not None:
                        g = (
                            relaxed_gate
                            if acc is not None and ev.accs.get("bv") is None
                            else strict_gate
                        )
                        if g is not None and not g(fr.env):
                            ev.stats.nodes_pruned += 1
                            return
                    first = False
                    ev.visit(fname, (kid,), fr.base)

            return run_from1

        def run_from2(fr):
            kids0 = kids_of(fr, 0)
            kids1 = kids_of(fr, 1)
            first = True
            for k1 in kids1:
                for k0 in kids0:
                    if not first and strict_gate is not None:
                        g = (
                            relaxed_gate
                            if acc is not None and ev.accs.get("bv") is None
                            else strict_gate
                        )
                        if g is not None and not g(fr.env):
                            ev.stats.nodes_pruned += 1
                            return
                    first = False
                    ev.visit(fname, (k0, k1), fr.base)

        return run_from2

    # -- debug shadow checks ---------------------------------------------------

    def _shadow(self, stmt: If):
        ev = self.ev
        src = stmt.source
        tenv = dict(ev.uniform_types)
        tenv.update(ev.probe_var_types)
        scruts = self.fn.trees
        for s in scruts:
            tenv[_SOURCE_VARS[s]] = ev.elem_type(s)
        pred = compile_expr(src, tenv)
        role = stmt.role
        label = self.label
        fname = self.fn.name
        text = to_source(src)

        def subtree(fr, side):
            inst = ev.instances[scruts[side]]
            return inst.subtree_elements(fr.nodes[side])

        def combos(fr):
            if len(scruts) == 1:
                var = _SOURCE_VARS[scruts[0]]
                for e in subtree(fr, 0):
                    yield {var: e}
            else:
                va, vb = (_SOURCE_VARS[s] for s in scruts)
                left = subtree(fr, 0)
                for eb in subtree(fr, 1):
                    for ea in left:
                        yield {va: ea, vb: eb}

        def check(fr, cond_value):
            if role == "always" and cond_value:
                for bind in combos(fr):
                    if not pred(ChainMap(bind, *fr.env.maps)):
                        raise PruneSoundnessError(
                            f"{fname} [{label}] included a subtree but "
                            f"{bind} fails {text}"
                        )
            elif role == "maybe" and not cond_value:
                for bind in combos(fr):
                    if pred(ChainMap(bind, *fr.env.maps)):
                        raise PruneSoundnessError(
                            f"{fname} [{label}] pruned a subtree but "
                            f"{bind} satisfies {text}"
                        )

        return check


def _walk_stmts(stmt):
    yield stmt
    if isinstance(stmt, Seq):
        for s in stmt.items:
            yield from _walk_stmts(s)
    elif isinstance(stmt, If):
        yield from _walk_stmts(stmt.then)
        if stmt.els is not None:
            yield from _walk_stmts(stmt.els)
    elif isinstance(stmt, Iter):
        yield from _walk_stmts(stmt.body)
    elif isinstance(stmt, Match):
        for arm in stmt.arms:
            yield from _walk_stmts(arm.body)


# ---------------------------------------------------------------------------
# Convenience entry points.


def evaluate(
    plan: TraversalPlan,
    trees,
    params: dict[str, object] | None = None,
    debug: bool | None = None,
):
    """One-shot plan evaluation; returns (result, TraversalStats)."""
    return Evaluator(plan, trees, debug=debug).run(params)


def explain(plan: TraversalPlan, trees, params=None) -> str:
    """Per-node decision log for one evaluation."""
    ev = Evaluator(plan, trees, debug=False)
    ev.trace = []
    ev.run(params)
    return "\n".join(ev.trace)


# ---------------------------------------------------------------------------
# The unfused baseline: materialize the stream, then fold the terminal over
# the intermediate list. Exists to measure what fusion saves (allocations
# and scanned subtrees); not part of the query surface.


def evaluate_staged(
    module: Module, specs: list[TreeSpec], trees, params=None
):
    q = module.query
    terminal = q.root
    if not isinstance(terminal, (Reduce, Agg, Extremum, Quantifier)):
        raise EvalError("staged evaluation needs a terminal reduction")
    src = terminal.src
    probe = src
    while isinstance(probe, (Filter, MapQ)):
        probe = probe.src
    if not isinstance(probe, SourceRef):
        raise EvalError("staged evaluation covers single-set pipelines only")
    elem = dict(q.params)[probe.name].elem

    stream_q = Query(q.name + "_stream", q.params, src, SetType(elem))
    stream_mod = Module(module.schemas, module.enums, stream_q)
    plan = lower(stream_mod, specs)
    items, stats = evaluate(plan, trees, params)
    stats.intermediate_allocs += 1

    env = dict(params or {})
    tenv = {n: t for n, t in q.params if not isinstance(t, SetType)}

    def fold_by(vars_, body):
        f = compile_expr(body, {**tenv, vars_[0]: elem})
        out = []
        for e in items:
            env[vars_[0]] = e
            out.append(f(env))
        return out

    def limit():
        full = lower(module, specs)
        return full.accs[0].identity.value

    result: object
    if isinstance(terminal, Agg) and terminal.op == "count":
        result = len(items)
    elif isinstance(terminal, Agg):
        vals = fold_by(terminal.vars, terminal.body)
        if terminal.op == "avg":
            total = 0.0
            for v in vals:
                total = f_add(total, float(v))
            result = f_div(total, float(len(vals)))
        else:
            is_float = any(isinstance(v, float) for v in vals)
            total = 0.0 if is_float else 0
            add = f_add if is_float else sat_add
            for v in vals:
                total = add(total, v)
            result = total
    elif isinstance(terminal, Reduce):
        vals = items
        if terminal.op in ("min", "max"):
            result = (min if terminal.op == "min" else max)(
                vals, default=limit()
            )
        elif terminal.op == "sum":
            is_float = any(isinstance(v, float) for v in vals)
            total = 0.0 if is_float else 0
            add = f_add if is_float else sat_add
            for v in vals:
                total = add(total, v)
            result = total
        else:
            is_float = any(isinstance(v, float) for v in vals)
            total = 1.0 if is_float else 1
            mul = f_mul if is_float else sat_mul
            for v in vals:
                total = mul(total, v)
            result = total
    elif isinstance(terminal, Extremum):
        keys = fold_by(terminal.vars, terminal.key)
        if terminal.op in ("min", "max"):
            result = (min if terminal.op == "min" else max)(
                keys, default=limit()
            )
        else:
            best = None
            best_k = None
            for e, k in zip(items, keys):
                better = best_k is None or (
                    k < best_k if terminal.op == "argmin" else best_k < k
                )
                if better:
                    best, best_k = e, k
            result = best
    else:
        hits = fold_by(terminal.vars, terminal.pred)
        result = (
            all(hits) if terminal.op == "all" else any(hits)
        )
    return result, stats


__all__ = [
    "Evaluator",
    "TraversalStats",
    "evaluate",
    "evaluate_staged",
    "explain",
]
