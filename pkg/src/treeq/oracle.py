"""Reference evaluation by plain iteration, plus seeded data generators.

The reference evaluator answers a query by walking the input lists
directly: no trees, no derived bounds, no pruning. It shares only the
element-level semantics with the traversal runtime (saturating integers,
total float ops, the geometry kernels), so agreement between the two
routes exercises the derived guards and the traversal machinery rather
than the arithmetic. Tie-breaks and accumulation order follow the same
canonical element order the tree builder preserves, which keeps integer
results exactly equal and float reductions equal up to re-association.

Generators draw from an explicit splitmix64 stream, so a dataset is fully
determined by its seed on every platform.
"""

from __future__ import annotations

import math

from .errors import EvalError
from .exprs import Expr, compile_expr, infer_type
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
from .values import (
    F64,
    PairType,
    SetType,
    f_add,
    f_div,
    f_mul,
    sat_add,
    sat_mul,
    type_limits,
)


def oracle_eval(
    module: Module, datasets: dict[str, list], params: dict | None = None
):
    """Evaluate a typechecked query over plain lists."""
    q = module.query
    missing = [
        n for n, t in q.params
        if (n not in datasets if isinstance(t, SetType) else
            n not in (params or {}))
    ]
    if missing:
        raise EvalError(f"missing input(s): {', '.join(missing)}")
    return _Oracle(module, datasets, dict(params or {})).eval(q.root)


class _Oracle:
    def __init__(self, module, datasets, params):
        self.datasets = datasets
        self.env = params
        self.tenv = {
            n: t for n, t in module.query.params if not isinstance(t, SetType)
        }

    def eval(self, node):
        if isinstance(node, SourceRef):
            return list(self.datasets[node.name])
        if isinstance(node, Product):
            left = self.eval(node.left)
            right = self.eval(node.right)
            return [(a, b) for b in right for a in left]
        if isinstance(node, Filter):
            pred = self._lam(node.vars, node.src, node.pred)
            return [e for e in self.eval(node.src) if pred(e)]
        if isinstance(node, MapQ):
            body = self._lam(node.vars, node.src, node.body)
            return [body(e) for e in self.eval(node.src)]
        if isinstance(node, JoinMap):
            inner: Filter = node.inner
            matches = self._lam(
                (node.var,) + inner.vars, inner.src, inner.pred,
                extra={node.var: node.src.ty.elem},
            )
            pool = self.eval(inner.src)
            out = []
            for d in self.eval(node.src):
                out.extend((d, x) for x in pool if matches((d, x)))
            return out
        if isinstance(node, Reduce):
            return self._fold(
                node.op, self.eval(node.src), node.src.ty.elem
            )
        if isinstance(node, Agg):
            items = self.eval(node.src)
            if node.op == "count":
                return len(items)
            vals, vty = self._keys(node.vars, node.src, node.body, items)
            if node.op == "avg":
                total = 0.0
                for v in vals:
                    total = f_add(total, float(v))
                return f_div(total, float(len(vals)))
            return self._fold("sum", vals, vty)
        if isinstance(node, Extremum):
            items = self.eval(node.src)
            keys, kty = self._keys(node.vars, node.src, node.key, items)
            if node.op in ("min", "max"):
                return self._fold(node.op, keys, kty)
            best, best_k = None, None
            for e, k in zip(items, keys):
                if best_k is None or (
                    k < best_k if node.op == "argmin" else best_k < k
                ):
                    best, best_k = e, k
            return best
        if isinstance(node, Quantifier):
            pred = self._lam(node.vars, node.src, node.pred)
            items = self.eval(node.src)
            if node.op == "all":
                return all(pred(e) for e in items)
            return any(pred(e) for e in items)
        raise EvalError(f"cannot evaluate {type(node).__name__}")

    def _fold(self, op, vals, ty):
        if op in ("min", "max"):
            lo, hi = type_limits(ty)
            base = hi if op == "min" else lo
            pick = min if op == "min" else max
            out = base
            for v in vals:
                out = pick(out, v)
            return out
        is_float = ty == F64
        if op == "sum":
            out, step = (0.0, f_add) if is_float else (0, sat_add)
        else:
            out, step = (1.0, f_mul) if is_float else (1, sat_mul)
        for v in vals:
            out = step(out, v)
        return out

    def _keys(self, vars_, src, body, items):
        if body is None:
            return items, src.ty.elem
        f, ty = self._lam(vars_, src, body, with_type=True)
        return [f(e) for e in items], ty

    def _lam(self, vars_, src, body, extra=None, with_type=False):
        elem = src.ty.elem
        tenv = dict(self.tenv)
        if extra:
            tenv.update(extra)
            parts = (tenv[vars_[0]], elem)
        elif len(vars_) == 2:
            parts = (elem.first, elem.second)
        else:
            parts = None
        if parts is not None:
            tenv[vars_[0]], tenv[vars_[1]] = parts
        else:
            tenv[vars_[0]] = elem
        f = compile_expr(body, tenv)
        env = self.env

        if parts is not None:
            va, vb = vars_

            def run(e, f=f, va=va, vb=vb):
                return f({**env, va: e[0], vb: e[1]})
        else:
            var = vars_[0]

            def run(e, f=f, var=var):
                return f({**env, var: e})

        if with_type:
            return run, infer_type(body, tenv)
        return run


# ---------------------------------------------------------------------------
# Deterministic random streams and dataset shapes.

_MASK = (1 << 64) - 1


class SplitMix64:
    """Tiny deterministic generator; one stream per (purpose, seed)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def unit(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def float_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.unit()

    def int_in(self, lo: int, hi: int) -> int:
        """Uniform in [lo, hi], inclusive."""
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, xs):
        return xs[self.next_u64() % len(xs)]


def uniform_points(
    n: int, seed: int, lo: float, hi: float, fields: tuple[str, ...] = ("x",)
) -> list[dict]:
    """n records with the named float fields uniform in [lo, hi]."""
    rng = SplitMix64(seed)
    return [
        {name: rng.float_in(lo, hi) for name in fields} for _ in range(n)
    ]


def disk_points(
    n: int,
    seed: int,
    center: tuple[float, float],
    radius: float,
    wrap: float | None = None,
) -> list[dict]:
    """n points uniform over a disk; `wrap` folds them onto [0, wrap)^2."""
    rng = SplitMix64(seed)
    cx, cy = center
    out = []
    for _ in range(n):
        r = radius * math.sqrt(rng.unit())
        t = 2.0 * math.pi * rng.unit()
        x = cx + r * math.cos(t)
        y = cy + r * math.sin(t)
        if wrap is not None:
            x %= wrap
            y %= wrap
        out.append({"x": x, "y": y})
    return out


__all__ = [
    "SplitMix64",
    "disk_points",
    "oracle_eval",
    "uniform_points",
]
