"""Command-line front end.

Exit codes: 0 success, 2 usage problems, 3 source errors (query, tree
declarations, lowering), 4 build/data/runtime errors, 5 a fuzzing
counterexample was found.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as benchmod
from . import fuzz as fuzzmod
from .build import build_tree
from .data import format_geometry, load_elements, parse_params
from .errors import LoweringError, SourceError, TreeqError
from .interp import Evaluator, explain as explain_plan
from .lowering import lower
from .oracle import oracle_eval
from .qlang import parse_query, typecheck
from .treespec import parse_tree_spec
from .ttir import pretty_print, print_bounds
from .values import GEOMETRY_CLASSES, SetType

USAGE_EXIT = 2
COMPILE_EXIT = 3
RUNTIME_EXIT = 4
FUZZ_EXIT = 5


class _Usage(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror}")


def _load_front(args) -> tuple:
    """Parse query + trees; returns (module, ordered tree specs)."""
    module = typecheck(parse_query(_read(args.query)))
    text = "\n".join(_read(t) for t in args.trees)
    specs = parse_tree_spec(text, module.schemas, module.enums)
    ordered = []
    for name, ty in module.query.params:
        if not isinstance(ty, SetType):
            continue
        match = [s for s in specs if s.elem == ty.elem]
        if not match:
            raise SourceError(
                f"no tree declaration stores {ty.elem} elements (for {name})"
            )
        ordered.append(match[0])
    return module, ordered


def _load_datasets(args, module) -> dict[str, list]:
    set_params = [
        (n, t) for n, t in module.query.params if isinstance(t, SetType)
    ]
    mapping: dict[str, str] = {}
    for item in args.data or []:
        name, sep, path = item.partition("=")
        if sep:
            mapping[name] = path
        elif len(set_params) == 1:
            mapping[set_params[0][0]] = item
        else:
            raise _Usage("with several input sets use --data name=path")
    datasets = {}
    for name, ty in set_params:
        if name not in mapping:
            raise _Usage(f"no data file for input set {name}")
        datasets[name] = load_elements(
            _read(mapping[name]), ty.elem, mapping[name]
        )
    return datasets


def _load_runtime_inputs(args, module, specs):
    """Datasets per set parameter, parsed uniform values, and built trees."""
    datasets = _load_datasets(args, module)
    params = parse_params(args.param or [], module.query.params)
    set_names = [
        n for n, t in module.query.params if isinstance(t, SetType)
    ]
    trees = [build_tree(datasets[n], s) for n, s in zip(set_names, specs)]
    return datasets, params, trees


def _encode(v):
    if isinstance(v, GEOMETRY_CLASSES):
        return format_geometry(v)
    if isinstance(v, tuple):
        return [_encode(x) for x in v]
    if isinstance(v, list):
        return [_encode(x) for x in v]
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    return v


def _cmd_compile(args) -> int:
    module, specs = _load_front(args)
    plan = lower(module, specs)
    out = print_bounds(plan) if args.emit == "bounds" else pretty_print(plan)
    print(out)
    return 0


def _cmd_run(args) -> int:
    module, specs = _load_front(args)
    plan = lower(module, specs)
    _datasets, params, trees = _load_runtime_inputs(args, module, specs)
    ev = Evaluator(plan, trees, debug=args.debug)
    result, stats = ev.run(params)
    doc = _encode(result)
    if args.stats:
        doc = {"result": doc, "stats": stats.as_dict()}
    print(json.dumps(doc, indent=None if args.compact else 2))
    return 0


def _cmd_explain(args) -> int:
    module, specs = _load_front(args)
    plan = lower(module, specs)
    _datasets, params, trees = _load_runtime_inputs(args, module, specs)
    print(explain_plan(plan, trees, params))
    return 0


def _cmd_oracle(args) -> int:
    module = typecheck(parse_query(_read(args.query)))
    datasets = _load_datasets(args, module)
    params = parse_params(args.param or [], module.query.params)
    result = oracle_eval(module, datasets, params)
    print(json.dumps(_encode(result), indent=None if args.compact else 2))
    return 0


def _cmd_bench(args) -> int:
    results = benchmod.run_suite(Path(args.manifest))
    print(benchmod.render_table(results))
    if args.json:
        Path(args.json).write_text(benchmod.report_json(results))
    return 0 if all(r.ok and r.oracle_ok in (None, True) for r in results) else 1


def _cmd_fuzz(args) -> int:
    found = fuzzmod.run_fuzz(
        args.cases,
        seed=args.seed,
        progress=(
            (lambda i: print(f"... {i}/{args.cases}", file=sys.stderr))
            if args.verbose else None
        ),
    )
    if not found:
        print(f"{args.cases} cases clean (seed {args.seed})")
        return 0
    cx = found[0]
    print(cx.describe(), file=sys.stderr)
    out = Path(args.out)
    files = cx.write_files(out)
    print(f"reproducer written to {out}/", file=sys.stderr)
    for f in files:
        print(f"  {f}", file=sys.stderr)
    return FUZZ_EXIT


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="treeq",
        description="Compile set queries into pruning tree traversals.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_front(sp):
        sp.add_argument("query", help="query file (.tq)")
        sp.add_argument(
            "--trees", "-t", nargs="+", required=True,
            help="tree declaration file(s) (.tt)",
        )

    def add_inputs(sp):
        sp.add_argument(
            "--data", "-d", action="append", metavar="[SET=]CSV",
            help="data file per input set",
        )
        sp.add_argument(
            "--param", "-p", action="append", metavar="NAME=VALUE",
            help="query parameter",
        )
        sp.add_argument("--compact", action="store_true",
                        help="single-line JSON output")

    sp = sub.add_parser("compile", help="print the lowered traversal plan")
    add_front(sp)
    sp.add_argument(
        "--emit", choices=("ttir", "bounds"), default="ttir",
        help="plan text or the derived guard table",
    )
    sp.set_defaults(fn=_cmd_compile)

    sp = sub.add_parser("run", help="build trees and evaluate")
    add_front(sp)
    add_inputs(sp)
    sp.add_argument("--stats", action="store_true",
                    help="include decision counters")
    sp.add_argument("--debug", action="store_true",
                    help="verify every prune against subtree contents")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("explain", help="log every traversal decision")
    add_front(sp)
    add_inputs(sp)
    sp.set_defaults(fn=_cmd_explain)

    sp = sub.add_parser("oracle", help="reference answer by plain scan")
    sp.add_argument("query")
    add_inputs(sp)
    sp.set_defaults(fn=_cmd_oracle)

    sp = sub.add_parser("bench", help="run a measurement suite")
    sp.add_argument("manifest", help="file listing case files, one per line")
    sp.add_argument("--json", metavar="PATH", help="also write a JSON report")
    sp.set_defaults(fn=_cmd_bench)

    sp = sub.add_parser("fuzz", help="differential testing vs the reference")
    sp.add_argument("--cases", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="fuzz-failure",
                    help="directory for reproducer files")
    sp.add_argument("--verbose", "-v", action="store_true")
    sp.set_defaults(fn=_cmd_fuzz)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE_EXIT if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _Usage as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except (SourceError, LoweringError) as e:
        print(f"error: {e}", file=sys.stderr)
        return COMPILE_EXIT
    except TreeqError as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
