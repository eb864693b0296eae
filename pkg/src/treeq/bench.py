"""Work-scaling measurement harness.

A case names a query, its tree declarations, seeded data generators, and a
size ladder. The harness builds fresh trees per size, evaluates, and fits
a least-squares line to log2(work) over log2(n): slope near 1 means the
traversal degenerates to a scan, slope well below 1 means the bounds are
doing their job. Wall-clock numbers are reported for orientation only —
decision counters are the contract, time is not.

Engines: `fused` runs the traversal plan; `staged` materializes the
element stream before folding (the ablation); `oracle` scans the input
lists directly and reports elements touched as its work.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .build import build_tree
from .data import parse_geometry
from .errors import DataError, SourceError
from .interp import Evaluator, evaluate_staged
from .lowering import lower
from .oracle import disk_points, oracle_eval, uniform_points
from .qlang import parse_query, typecheck
from .treespec import parse_tree_spec
from .values import SetType

# Fitted slope below this reads as index-like work.
INDEX_SLOPE = 0.8
REPEATS = 7
CASE_BUDGET_S = 10.0


@dataclass
class BenchCase:
    name: str
    query_text: str
    tree_text: str
    data: dict[str, dict]  # set param -> generator spec
    sizes: tuple[int, ...]
    params: dict = field(default_factory=dict)
    engine: str = "fused"
    metric: str = "nodesVisited"
    expect: str | None = None  # "index" | "linear"
    check_oracle: bool = False


@dataclass
class SizeRun:
    n: int
    work: int
    out_size: int
    stats: dict[str, int]
    wall_ms: float
    repeats: int


@dataclass
class CaseResult:
    name: str
    engine: str
    metric: str
    runs: list[SizeRun]
    slope: float
    classification: str
    expect: str | None
    ok: bool
    oracle_ok: bool | None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "engine": self.engine,
            "metric": self.metric,
            "slope": round(self.slope, 4),
            "classification": self.classification,
            "expect": self.expect,
            "ok": self.ok,
            "oracleOk": self.oracle_ok,
            "runs": [
                {
                    "n": r.n,
                    "work": r.work,
                    "outSize": r.out_size,
                    "wallMs": round(r.wall_ms, 3),
                    "repeats": r.repeats,
                    **r.stats,
                }
                for r in self.runs
            ],
        }


def fit_slope(ns, works) -> float:
    """Least-squares slope of log2(work) against log2(n)."""
    xs = [math.log2(n) for n in ns]
    ys = [math.log2(max(w, 1)) for w in works]
    k = len(xs)
    mx = sum(xs) / k
    my = sum(ys) / k
    denom = sum((x - mx) ** 2 for x in xs)
    if denom == 0:
        return 0.0
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / denom


def _generate(spec: dict, n: int) -> list:
    kind = spec.get("kind", "uniform")
    seed = spec.get("seed", 1)
    if kind == "uniform":
        return uniform_points(
            n, seed, spec["lo"], spec["hi"], tuple(spec.get("fields", ("x",)))
        )
    if kind == "disk":
        return disk_points(
            n, seed, tuple(spec["center"]), spec["radius"], spec.get("wrap")
        )
    raise DataError(f"unknown generator kind {kind!r}")


def _out_size(result) -> int:
    if isinstance(result, list):
        return len(result)
    if isinstance(result, bool) or not isinstance(result, int):
        return 1
    return max(result, 0)


class _Prepared:
    """One case's parsed query and specs, shared across sizes."""

    def __init__(self, case: BenchCase):
        self.case = case
        self.module = typecheck(parse_query(case.query_text))
        schemas, enums = self.module.schemas, self.module.enums
        specs = {
            s.name: s for s in parse_tree_spec(case.tree_text, schemas, enums)
        }
        self.set_params = [
            (name, ty) for name, ty in self.module.query.params
            if isinstance(ty, SetType)
        ]
        self.params = _parse_param_literals(case.params)
        # One tree spec per set parameter, matched by element type.
        self.specs = []
        for _name, ty in self.set_params:
            match = [s for s in specs.values() if s.elem == ty.elem]
            if not match:
                raise SourceError(
                    f"no tree declaration stores {ty.elem} elements"
                )
            self.specs.append(match[0])

    def datasets(self, n: int) -> dict[str, list]:
        out = {}
        for name, _ty in self.set_params:
            spec = self.case.data.get(name)
            if spec is None:
                raise DataError(f"case {self.case.name}: no generator for {name}")
            out[name] = _generate(spec, n)
        return out


def _parse_param_literals(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = parse_geometry(v) if isinstance(v, str) else v
    return out


def run_case(case: BenchCase) -> CaseResult:
    prep = _Prepared(case)
    plan = (
        lower(prep.module, prep.specs) if case.engine != "oracle" else None
    )
    runs: list[SizeRun] = []
    spent = 0.0
    oracle_ok: bool | None = True if case.check_oracle else None
    for n in case.sizes:
        datasets = prep.datasets(n)
        if case.engine == "oracle":
            t0 = time.perf_counter()
            result = oracle_eval(prep.module, datasets, prep.params)
            wall = (time.perf_counter() - t0) * 1e3
            total = sum(len(v) for v in datasets.values())
            runs.append(SizeRun(n, total, _out_size(result), {}, wall, 1))
            spent += wall / 1e3
            continue

        trees = [
            build_tree(datasets[name], spec)
            for (name, _), spec in zip(prep.set_params, prep.specs)
        ]
        if case.engine == "staged":
            t0 = time.perf_counter()
            result, stats = evaluate_staged(
                prep.module, prep.specs, trees, prep.params
            )
            wall = (time.perf_counter() - t0) * 1e3
            spent += wall / 1e3
            repeats = 1
        else:
            ev = Evaluator(plan, trees)
            result, stats = ev.run(prep.params)
            repeats = 0
            samples = []
            while repeats < REPEATS and (not samples or spent < CASE_BUDGET_S):
                t0 = time.perf_counter()
                ev.run(prep.params)
                dt = time.perf_counter() - t0
                samples.append(dt * 1e3)
                spent += dt
                repeats += 1
            samples.sort()
            trimmed = samples[1:-1] if len(samples) > 2 else samples
            wall = sum(trimmed) / len(trimmed)
        work = stats.as_dict().get(case.metric)
        if work is None:
            raise DataError(f"unknown metric {case.metric!r}")
        runs.append(
            SizeRun(n, work, _out_size(result), stats.as_dict(), wall, repeats)
        )
        if case.check_oracle:
            want = oracle_eval(prep.module, datasets, prep.params)
            if not _same_result(result, want):
                oracle_ok = False
    slope = fit_slope([r.n for r in runs], [r.work for r in runs])
    classification = "index" if slope < INDEX_SLOPE else "linear"
    ok = case.expect is None or classification == case.expect
    return CaseResult(
        case.name, case.engine, case.metric, runs, slope, classification,
        case.expect, ok, oracle_ok,
    )


def _same_result(got, want) -> bool:
    if isinstance(got, list) and isinstance(want, list):
        if len(got) != len(want):
            return False
        if got == want:
            return True
        key = repr
        return sorted(map(key, got)) == sorted(map(key, want))
    if isinstance(got, float) and isinstance(want, float):
        scale = max(abs(got), abs(want), 1.0)
        return abs(got - want) <= 1e-9 * scale
    return got == want


# ---------------------------------------------------------------------------
# Suite files: a manifest is a plain list of case file paths, one per line;
# each case file is JSON with query/trees given as relative paths.


def load_case(path: Path) -> BenchCase:
    raw = json.loads(path.read_text())
    base = path.parent
    query_text = (base / raw["query"]).read_text()
    tree_text = "\n".join(
        (base / t).read_text() for t in raw["trees"]
    )
    return BenchCase(
        name=raw.get("name", path.stem),
        query_text=query_text,
        tree_text=tree_text,
        data=raw["data"],
        sizes=tuple(raw["sizes"]),
        params=raw.get("params", {}),
        engine=raw.get("engine", "fused"),
        metric=raw.get("metric", "nodesVisited"),
        expect=raw.get("expect"),
        check_oracle=raw.get("checkOracle", False),
    )


def run_suite(manifest: Path) -> list[CaseResult]:
    manifest = Path(manifest)
    results = []
    for line in manifest.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        results.append(run_case(load_case(manifest.parent / line)))
    return results


def render_table(results: list[CaseResult]) -> str:
    rows = [
        ("case", "engine", "metric", "slope", "class", "expect", "ok")
    ]
    for r in results:
        rows.append((
            r.name, r.engine, r.metric, f"{r.slope:.3f}",
            r.classification, r.expect or "-",
            ("yes" if r.ok else "NO")
            + ("" if r.oracle_ok in (None, True) else " (oracle mismatch)"),
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def report_json(results: list[CaseResult]) -> str:
    return json.dumps({"cases": [r.as_dict() for r in results]}, indent=2)


__all__ = [
    "BenchCase",
    "CaseResult",
    "SizeRun",
    "fit_slope",
    "load_case",
    "render_table",
    "report_json",
    "run_case",
    "run_suite",
]
