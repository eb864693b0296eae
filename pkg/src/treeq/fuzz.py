"""Differential testing: random queries, trees, and data against the
reference evaluator.

Every case draws a schema, a tree declaration bounding a random subset of
the fields (sometimes none — descent must still be correct without
pruning), a query from one of seven operator families, and a dataset
small enough to shrink. The traversal runs with debug verification on,
so every prune and inclusion decision is also brute-force checked against
the subtree's elements; the final result is compared against the
reference evaluator, exactly for discrete values and to relative
tolerance for float reductions.

A failure is shrunk by greedy chunk removal over the datasets (the query
is kept fixed — it is the reproducer's interesting part) and reported
with everything needed to replay it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .build import build_tree
from .data import dump_elements
from .interp import evaluate
from .lowering import lower
from .oracle import SplitMix64, oracle_eval
from .qlang import parse_query, typecheck
from .treespec import parse_tree_spec
from .values import SetType

FAMILIES = (
    "filter",
    "map",
    "aggregate",
    "reduce",
    "extremum",
    "quantifier",
    "join",
)


class _Rnd:
    def __init__(self, seed: int):
        self.g = SplitMix64(seed)

    def maybe(self, p: float) -> bool:
        return self.g.unit() < p

    def choice(self, xs):
        return self.g.choice(list(xs))

    def int_in(self, lo, hi):
        return self.g.int_in(lo, hi)

    def float_in(self, lo, hi):
        return self.g.float_in(lo, hi)


@dataclass
class FuzzCase:
    seed: int
    family: str
    query_text: str
    tree_text: str
    datasets: dict[str, list]
    params: dict[str, object]
    orderless: bool  # result is a pair stream with traversal-defined order


@dataclass
class Counterexample:
    case: FuzzCase
    kind: str  # "mismatch" | "error"
    got: object
    want: object

    def describe(self) -> str:
        lines = [
            f"seed {self.case.seed} family {self.case.family}: {self.kind}",
            f"  got:  {self.got!r}",
            f"  want: {self.want!r}",
            f"  sizes: "
            + ", ".join(f"{k}={len(v)}" for k, v in self.case.datasets.items()),
        ]
        return "\n".join(lines)

    def write_files(self, out_dir: Path) -> list[Path]:
        """Reproducer: query, trees, one CSV per input set, and a note."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        case = self.case
        module = typecheck(parse_query(case.query_text))
        written = []

        def put(name: str, text: str):
            p = out_dir / name
            p.write_text(text)
            written.append(p)

        put("query.tq", case.query_text)
        put("trees.tt", case.tree_text)
        set_types = {
            n: t.elem for n, t in module.query.params if isinstance(t, SetType)
        }
        for name, rows in case.datasets.items():
            put(f"{name}.csv", dump_elements(rows, set_types[name]))
        note = [self.describe(), ""]
        if case.params:
            note.append(
                "params: "
                + " ".join(f"{k}={v}" for k, v in case.params.items())
            )
        put("note.txt", "\n".join(note) + "\n")
        return written


# ---------------------------------------------------------------------------
# Case generation.

_INT_FIELDS = ("a", "b")
_FLOAT_FIELDS = ("u", "w")
_EXTREME_INTS = (2**62, -(2**62), 2**63 - 1, -(2**63))


class _Gen:
    def __init__(self, seed: int):
        self.rnd = _Rnd(seed)
        self.seed = seed
        self.params: list[tuple[str, str, object]] = []  # name, ty, value
        r = self.rnd
        self.scalar_set = r.maybe(0.2)
        self.int_range = r.choice((8, 50, 1000))
        if self.scalar_set:
            self.elem_ty = r.choice(("i64", "f64"))
            self.fields = [("self", self.elem_ty)]
        else:
            self.elem_ty = "R"
            self.fields = [("id", "i64")]
            for name in _INT_FIELDS[: r.int_in(1, 2)]:
                self.fields.append((name, "i64"))
            if r.maybe(0.6):
                self.fields.append((_FLOAT_FIELDS[0], "f64"))
            if r.maybe(0.2):
                self.fields.append((_FLOAT_FIELDS[1], "f64"))

    # -- schema / tree / data --------------------------------------------------

    def schema_text(self) -> str:
        if self.scalar_set:
            return ""
        cols = ", ".join(f"{n}: {t}" for n, t in self.fields)
        return f"schema R {{ {cols} }}\n"

    def numeric_fields(self):
        return [(n, t) for n, t in self.fields if n != "id"] or self.fields

    def tree_text(self) -> str:
        r = self.rnd
        bounded = [f for f in self.fields if r.maybe(0.75)]
        if not bounded and r.maybe(0.7):
            bounded = [r.choice(self.fields)]
        node_fields = []
        anns = []
        for name, ty in bounded:
            stem = "s" if name == "self" else name
            node_fields.append(f"{stem}l {stem}h: {ty}")
            anns.append(f"{name} in [{stem}l, {stem}h]")
        if r.maybe(0.4):
            node_fields.append("cnt: i64")
            anns.append("count = cnt")
        if r.maybe(0.35):
            name, ty = r.choice(self.numeric_fields())
            stem = "s" if name == "self" else name
            node_fields.append(f"t{stem}: {ty}")
            anns.append(f"sum({name}) = t{stem}")
        if r.maybe(0.3):
            op = r.choice(("min", "max"))
            name, ty = r.choice(self.numeric_fields())
            stem = "s" if name == "self" else name
            node_fields.append(f"{op}{stem}: {ty}")
            anns.append(f"{op}({name}) = {op}{stem}")
        leaf_kind = r.choice(("single", "array", "mixed"))
        lines = [f"tree T implements Set<{self.elem_ty}> ="]
        if leaf_kind in ("single", "mixed"):
            lines.append(f"  | One(p: {self.elem_ty}) with data = p")
        if leaf_kind == "array":
            lines.append(f"  | Pack(ps: [{self.elem_ty}]) with data = ps")
        elif leaf_kind == "mixed":
            lines.append(f"  | Pack(ps: [{self.elem_ty}; 4]) with data = ps")
        interior = "  | Node(left right: T"
        if node_fields:
            interior += ", " + ", ".join(node_fields)
        interior += ")"
        if anns:
            interior += "\n      with " + ", ".join(anns)
        lines.append(interior)
        lines.append("  ;")
        return "\n".join(lines)

    def dataset(self, n: int) -> list:
        r = self.rnd
        out = []
        for i in range(n):
            if self.scalar_set:
                out.append(self._value(self.elem_ty, i))
            else:
                row = {}
                for name, ty in self.fields:
                    row[name] = i if name == "id" else self._value(ty, i)
                out.append(row)
        return out

    def _value(self, ty: str, i: int):
        r = self.rnd
        if ty == "i64":
            if r.maybe(0.02):
                return r.choice(_EXTREME_INTS)
            return r.int_in(-self.int_range, self.int_range)
        if r.maybe(0.02):
            return r.choice((1e300, -1e300))
        v = r.float_in(-100.0, 100.0)
        return round(v, 1) if r.maybe(0.4) else v

    # -- expressions -----------------------------------------------------------

    def _field(self, var: str, ty: str | None = None) -> tuple[str, str]:
        r = self.rnd
        pool = [f for f in self.fields if ty is None or f[1] == ty]
        if not pool:
            pool = self.fields
        name, fty = r.choice(pool)
        return (var if name == "self" else f"{var}.{name}"), fty

    def _lit(self, ty: str) -> str:
        r = self.rnd
        if ty == "i64":
            return str(r.int_in(-self.int_range, self.int_range))
        return repr(round(r.float_in(-100.0, 100.0), 2))

    def _operand(self, ty: str) -> str:
        """A literal, sometimes routed through a query parameter."""
        r = self.rnd
        if r.maybe(0.35) and len(self.params) < 3:
            name = f"p{len(self.params)}"
            val = (
                r.int_in(-self.int_range, self.int_range)
                if ty == "i64"
                else round(r.float_in(-100.0, 100.0), 2)
            )
            self.params.append((name, ty, val))
            return name
        return self._lit(ty)

    def atom(self, var: str) -> str:
        r = self.rnd
        f, ty = self._field(var)
        kind = r.int_in(0, 5)
        if kind == 0:
            return f"{f} {r.choice(('==', '<=', '<', '>=', '>', '!='))} {self._operand(ty)}"
        if kind == 1:  # band
            a, b = self._operand(ty), self._operand(ty)
            return f"{a} <= {f} && {f} <= {b}"
        if kind == 2:
            g, gty = self._field(var, ty)
            return f"{f} {r.choice(('==', '<=', '<'))} {g}"
        if kind == 3:
            return f"abs({f} - {self._operand(ty)}) <= {self._lit(ty)}"
        if kind == 4 and ty == "i64":
            return f"{f} mod {r.int_in(2, 7)} == {r.int_in(0, 3)}"
        g, _ = self._field(var, ty)
        return f"{f} + {g} {r.choice(('<', '>='))} {self._operand(ty)}"

    def pred(self, var: str) -> str:
        r = self.rnd
        a = self.atom(var)
        if r.maybe(0.25):
            a = f"!({a})"
        if r.maybe(0.5):
            op = r.choice(("&&", "||"))
            return f"{a} {op} {self.atom(var)}"
        return a

    def key(self, var: str) -> tuple[str, str]:
        r = self.rnd
        f, ty = self._field(var)
        if r.maybe(0.3):
            g, _ = self._field(var, ty)
            return f"{f} + {g}", ty
        if r.maybe(0.2):
            return f"abs({f})", ty
        return f, ty

    def pair_pred(self, va: str, vb: str) -> str:
        r = self.rnd
        f, ty = self._field(va)
        g, _ = self._field(vb, ty)
        kind = r.int_in(0, 2)
        if kind == 0:
            return f"{f} == {g}"
        if kind == 1:
            return f"abs({f} - {g}) <= {self._lit(ty)}"
        return f"{f} <= {g} && {g} <= {f} + {self._lit(ty)}"

    # -- queries ---------------------------------------------------------------

    def build(self, family: str) -> FuzzCase:
        r = self.rnd
        orderless = False
        sets = {"s": self.dataset(r.int_in(0, 120))}

        def chain(src: str) -> str:
            depth = r.int_in(0, 2)
            for _ in range(depth):
                src = f"filter(|e| {self.pred('e')}, {src})"
            return src

        if family == "filter":
            body = f"filter(|e| {self.pred('e')}, {chain('s')})"
        elif family == "map":
            expr, _ = self.key("e")
            body = f"map(|e| {expr}, {chain('s')})"
        elif family == "aggregate":
            op = r.choice(("count", "sum", "avg"))
            if op == "count":
                body = f"count({chain('s')})"
            else:
                expr, _ = self.key("e")
                body = f"{op}(|e| {expr}, {chain('s')})"
        elif family == "reduce":
            op = r.choice(("min", "max"))
            if self.scalar_set and r.maybe(0.5):
                body = f"reduce({op}, {chain('s')})"
            else:
                expr, _ = self.key("e")
                body = f"{op}(|e| {expr}, {chain('s')})"
        elif family == "extremum":
            op = r.choice(("argmin", "argmax"))
            expr, _ = self.key("e")
            body = f"{op}(|e| {expr}, {chain('s')})"
        elif family == "quantifier":
            op = r.choice(("any", "all"))
            body = f"{op}(|e| {self.pred('e')}, {chain('s')})"
        else:
            sets = {
                "s0": self.dataset(r.int_in(0, 50)),
                "s1": self.dataset(r.int_in(0, 50)),
            }
            if r.maybe(0.5):
                inner = f"filter(|y| {self.pair_pred('d', 'y')}, s1)"
                body = f"map(|d| (d, {inner}), s0)"
            else:
                body = (
                    f"filter(|a, g| {self.pair_pred('a', 'g')},"
                    f" product(s0, s1))"
                )
                if r.maybe(0.5):
                    body = f"count({body})"
                else:
                    orderless = True

        set_ty = f"Set<{'R' if not self.scalar_set else self.elem_ty}>"
        sig = ", ".join(
            [f"{n}: {set_ty}" for n in sets]
            + [f"{n}: {t}" for n, t, _ in self.params]
        )
        text = self.schema_text() + f"query q({sig}) =\n  {body}\n"
        return FuzzCase(
            seed=self.seed,
            family=family,
            query_text=text,
            tree_text=self.tree_text(),
            datasets=sets,
            params={n: v for n, _, v in self.params},
            orderless=orderless,
        )


def make_case(seed: int) -> FuzzCase:
    family = FAMILIES[seed % len(FAMILIES)]
    return _Gen(seed).build(family)


# ---------------------------------------------------------------------------
# Checking and shrinking.


def _close(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, float) and isinstance(b, float):
        return a == b or abs(a - b) <= 1e-9 * max(abs(a), abs(b), 1.0)
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_close(x, y) for x, y in zip(a, b))
    return a == b


def _results_agree(got, want, orderless: bool) -> bool:
    if orderless and isinstance(got, list) and isinstance(want, list):
        if len(got) != len(want):
            return False
        return sorted(got, key=repr) == sorted(want, key=repr)
    return _close(got, want)


def _run_case(case: FuzzCase):
    """Returns (got, want); raises on pipeline errors."""
    module = typecheck(parse_query(case.query_text))
    specs = parse_tree_spec(case.tree_text, module.schemas, module.enums)
    set_params = [
        (n, t) for n, t in module.query.params if isinstance(t, SetType)
    ]
    plan = lower(module, specs * len(set_params))
    trees = [build_tree(case.datasets[n], specs[0]) for n, _ in set_params]
    got, _stats = evaluate(plan, trees, case.params, debug=True)
    canonical = {
        n: t.elements for (n, _), t in zip(set_params, trees)
    }
    want = oracle_eval(module, canonical, case.params)
    return got, want


def check_case(case: FuzzCase) -> Counterexample | None:
    try:
        got, want = _run_case(case)
    except Exception as e:  # any pipeline failure is a finding
        return Counterexample(case, "error", f"{type(e).__name__}: {e}", None)
    if _results_agree(got, want, case.orderless):
        return None
    return Counterexample(case, "mismatch", got, want)


def _shrunk(case: FuzzCase, name: str, rows: list) -> FuzzCase:
    sets = dict(case.datasets)
    sets[name] = rows
    return FuzzCase(
        case.seed, case.family, case.query_text, case.tree_text,
        sets, case.params, case.orderless,
    )


def shrink(cx: Counterexample, budget: int = 300) -> Counterexample:
    """Greedy chunk removal over every dataset while the failure persists."""
    best = cx
    tries = 0
    improved = True
    while improved and tries < budget:
        improved = False
        for name, rows in list(best.case.datasets.items()):
            n = len(rows)
            step = max(n // 2, 1)
            while step >= 1 and tries < budget:
                i = 0
                while i < len(best.case.datasets[name]):
                    cur = best.case.datasets[name]
                    cand = cur[:i] + cur[i + step:]
                    if len(cand) == len(cur):
                        break
                    tries += 1
                    nxt = check_case(_shrunk(best.case, name, cand))
                    if nxt is not None:
                        best = nxt
                        improved = True
                    else:
                        i += step
                step //= 2
    return best


def run_fuzz(
    n_cases: int,
    seed: int = 0,
    stop_at_first: bool = True,
    progress=None,
) -> list[Counterexample]:
    """Run `n_cases` seeds; returns shrunk counterexamples (empty = clean)."""
    found: list[Counterexample] = []
    for i in range(n_cases):
        case = make_case(seed + i)
        cx = check_case(case)
        if cx is not None:
            found.append(shrink(cx))
            if stop_at_first:
                break
        if progress is not None and (i + 1) % 50 == 0:
            progress(i + 1)
    return found


__all__ = [
    "Counterexample",
    "FAMILIES",
    "FuzzCase",
    "check_case",
    "make_case",
    "run_fuzz",
    "shrink",
]
