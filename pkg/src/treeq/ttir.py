"""Tree-traversal IR: the compilation target for set queries.

A `TraversalPlan` is a small first-order program over one or two trees. Each
function pattern-matches its scrutinee tuple and runs a statement body per
variant combination. Statements are deliberately minimal:

    yield E          emit a value (stream results)
    upd a E          replace accumulator a with E
    scan             walk everything below the current node(s) via a helper
    from             recurse into the children of the current node(s)
    iter x in f:     loop over an array leaf's elements
    if C: ... [elif] guard derived from bound analysis or a residual test

`from` and `scan` implicitly apply to the enclosing function's scrutinees;
at a pair of interior nodes `from` descends all four child combinations in
the fixed order left/left, right/left, left/right, right/right.

The printer is deterministic — two structurally different normalized plans
never print the same text — so golden tests can compare plan text directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .exprs import Bin, Expr, to_source

# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Yield:
    exprs: tuple[Expr, ...]  # one element, or two for pair results


@dataclass(frozen=True)
class Upd:
    acc: str
    expr: Expr


@dataclass(frozen=True)
class Scan:
    helper: str


@dataclass(frozen=True)
class From:
    pass


@dataclass(frozen=True)
class Iter:
    var: str
    coll: str  # array field holding the elements
    body: Stmt


@dataclass(frozen=True)
class Probe:
    """Run another plan function over a second tree with a bound partner
    element (the single-index join step)."""

    fn: str
    tree: str
    var: str
    arg: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Stmt
    els: Stmt | None = None
    # Guard provenance, used by the debug shadow checker and ignored by
    # structural comparison: which claim the condition encodes ("always",
    # "maybe", plain "test") and the element-level predicate it bounds.
    role: str = field(default="test", compare=False, repr=False)
    source: Expr | None = field(default=None, compare=False, repr=False)
    # Extra value-based pruning term (accumulator comparisons, early exit);
    # it conjoins with `cond` at runtime but makes no containment claim.
    vguard: Expr | None = None


@dataclass(frozen=True)
class Seq:
    items: tuple[Stmt, ...]


SKIP = Seq(())

Stmt = Yield | Upd | Scan | From | Probe | Iter | If | Seq


@dataclass(frozen=True)
class Pat:
    variant: str
    binders: tuple[str, ...]


@dataclass(frozen=True)
class Arm:
    patterns: tuple[Pat, ...]
    body: Stmt


@dataclass(frozen=True)
class Match:
    scrutinees: tuple[str, ...]
    arms: tuple[Arm, ...]


@dataclass(frozen=True)
class PlanFunc:
    name: str
    trees: tuple[str, ...]  # scrutinee names, one per traversed tree
    tree_types: tuple[str, ...]
    body: Match
    uniforms: tuple[str, ...] = ()  # extra value parameters (join partner)


@dataclass(frozen=True)
class AccDecl:
    name: str
    ty: str
    identity: Expr


@dataclass(frozen=True)
class BoundNote:
    """One derived guard, kept for `--emit bounds` style reporting."""

    fn: str
    arm: str
    role: str  # always | maybe | value | test
    source: Expr
    derived: Expr


@dataclass(frozen=True)
class TraversalPlan:
    name: str
    params: tuple[tuple[str, str], ...]  # (name, printed type)
    result: str  # printed result type
    funcs: tuple[PlanFunc, ...]  # funcs[0] is the entry
    accs: tuple[AccDecl, ...] = ()
    result_expr: Expr | None = None  # over accumulators, for reductions
    notes: tuple[BoundNote, ...] = field(default=(), compare=False)
    # scrutinee name -> query set parameter, for binding trees at run time
    set_params: tuple[tuple[str, str], ...] = ()


# ---------------------------------------------------------------------------
# Normalization: collapse structural noise the lowering rewrites leave
# behind, so equal plans compare (and print) identically.


def _norm_stmt(s: Stmt) -> Stmt:
    if isinstance(s, Seq):
        items: list[Stmt] = []
        for item in s.items:
            item = _norm_stmt(item)
            if isinstance(item, Seq):
                items.extend(item.items)
            else:
                items.append(item)
        if len(items) == 1:
            return items[0]
        return Seq(tuple(items))
    if isinstance(s, If):
        then = _norm_stmt(s.then)
        els = _norm_stmt(s.els) if s.els is not None else None
        if els is not None and els == SKIP:
            els = None
        if then == SKIP and els is None:
            return SKIP
        # if a: (if b: x)  ==>  if a && b: x
        if (
            els is None
            and isinstance(then, If)
            and then.els is None
            and s.vguard is None
            and _mergeable(s.role, then.role)
        ):
            role = then.role if s.role == "test" else s.role
            src = _merge_sources(s.source, then.source)
            return If(
                Bin("and", s.cond, then.cond), then.then,
                role=role, source=src, vguard=then.vguard,
            )
        return If(s.cond, then, els, role=s.role, source=s.source,
                  vguard=s.vguard)
    if isinstance(s, Iter):
        return Iter(s.var, s.coll, _norm_stmt(s.body))
    return s


def _mergeable(outer_role: str, inner_role: str) -> bool:
    return outer_role == inner_role or "test" in (outer_role, inner_role)


def _merge_sources(a: Expr | None, b: Expr | None) -> Expr | None:
    if a is None:
        return b
    if b is None:
        return a
    return Bin("and", a, b)


def normalize(plan: TraversalPlan) -> TraversalPlan:
    funcs = tuple(
        replace(
            f,
            body=Match(
                f.body.scrutinees,
                tuple(Arm(a.patterns, _norm_stmt(a.body)) for a in f.body.arms),
            ),
        )
        for f in plan.funcs
    )
    return replace(plan, funcs=funcs)


# ---------------------------------------------------------------------------
# Printing


class _Printer:
    def __init__(self, plan: TraversalPlan):
        self.plan = plan
        self.lines: list[str] = []
        self.n_helpers = sum(
            1 for f in plan.funcs if f.name != plan.funcs[0].name
        )

    def emit(self, indent: int, text: str) -> None:
        self.lines.append("  " * indent + text)

    def stmt(self, s: Stmt, fn: PlanFunc, indent: int) -> None:
        if isinstance(s, Seq):
            if not s.items:
                self.emit(indent, "skip")
            for item in s.items:
                self.stmt(item, fn, indent)
            return
        if isinstance(s, Yield):
            if len(s.exprs) == 1:
                self.emit(indent, f"yield {to_source(s.exprs[0])}")
            else:
                inner = ", ".join(to_source(e) for e in s.exprs)
                self.emit(indent, f"yield ({inner})")
            return
        if isinstance(s, Upd):
            self.emit(indent, f"upd {s.acc} {to_source(s.expr)}")
            return
        if isinstance(s, Scan):
            trees = ", ".join(fn.trees)
            suffix = f" via {s.helper}" if self.n_helpers > 1 else ""
            self.emit(indent, f"scan {trees}{suffix}")
            return
        if isinstance(s, From):
            self.emit(indent, f"from {', '.join(fn.trees)}")
            return
        if isinstance(s, Probe):
            self.emit(
                indent,
                f"from {s.tree} with {s.var} = {to_source(s.arg)}",
            )
            return
        if isinstance(s, Iter):
            self.emit(indent, f"iter {s.var} in {s.coll}:")
            self.stmt(s.body, fn, indent + 1)
            return
        if isinstance(s, If):
            self.emit(indent, f"if {self._cond(s)}:")
            self.stmt(s.then, fn, indent + 1)
            els = s.els
            while isinstance(els, If):
                self.emit(indent, f"elif {self._cond(els)}:")
                self.stmt(els.then, fn, indent + 1)
                els = els.els
            if els is not None:
                self.emit(indent, "else:")
                self.stmt(els, fn, indent + 1)
            return
        raise TypeError(f"not a statement: {s!r}")

    @staticmethod
    def _cond(s: If) -> str:
        if s.vguard is None:
            return to_source(s.cond)
        from .exprs import TRUE

        if s.cond == TRUE:
            return to_source(s.vguard)
        return to_source(Bin("and", s.cond, s.vguard))

    def func(self, fn: PlanFunc) -> None:
        args = [f"{t}: {ty}" for t, ty in zip(fn.trees, fn.tree_types)]
        args += list(fn.uniforms)
        self.emit(0, f"fn {fn.name}({', '.join(args)}):")
        self.emit(1, f"match {', '.join(fn.body.scrutinees)}:")
        for arm in fn.body.arms:
            pats = ", ".join(
                f"{p.variant}({', '.join(p.binders)})" for p in arm.patterns
            )
            self.emit(1, f"| {pats} ->")
            self.stmt(arm.body, fn, 3)

    def render(self) -> str:
        p = self.plan
        params = ", ".join(f"{n}: {t}" for n, t in p.params)
        self.emit(0, f"plan {p.name}({params}) -> {p.result}")
        for acc in p.accs:
            self.emit(0, f"acc {acc.name}: {acc.ty} = {to_source(acc.identity)}")
        for fn in p.funcs:
            self.emit(0, "")
            self.func(fn)
        if p.result_expr is not None:
            self.emit(0, "")
            self.emit(0, f"return {to_source(p.result_expr)}")
        return "\n".join(self.lines) + "\n"


def pretty_print(plan: TraversalPlan) -> str:
    return _Printer(normalize(plan)).render()


def print_bounds(plan: TraversalPlan) -> str:
    """Report every derived guard next to the predicate it bounds."""
    lines = [f"bounds for plan {plan.name}"]
    for note in plan.notes:
        lines.append(f"{note.fn} {note.arm} [{note.role}]")
        lines.append(f"  source : {to_source(note.source)}")
        lines.append(f"  derived: {to_source(note.derived)}")
    return "\n".join(lines) + "\n"


def walk(s: Stmt):
    """All statements below (and including) s, preorder."""
    yield s
    if isinstance(s, Seq):
        for item in s.items:
            yield from walk(item)
    elif isinstance(s, If):
        yield from walk(s.then)
        if s.els is not None:
            yield from walk(s.els)
    elif isinstance(s, Iter):
        yield from walk(s.body)
