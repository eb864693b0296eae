"""Fused set queries over user-declared augmented trees.

Declare how a set is stored (tree variants plus bound/aggregate
annotations), write whole-set queries against the set itself, and get a
single pruning traversal: guards derived from the query predicate decide
per subtree whether to include it wholesale, descend, or skip it, while
reductions fold through accumulators without materializing anything.

The compile pipeline is `parse_query` -> `typecheck` -> `parse_tree_spec`
-> `lower`; `build_tree` stores elements, `evaluate` runs plans with
decision counters, `oracle_eval` answers the same query by plain scans.
"""

from .bench import BenchCase, fit_slope, run_case, run_suite
from .build import BuildConfig, TreeInstance, build_tree, verify_annotations
from .data import (
    dump_elements,
    format_geometry,
    load_elements,
    parse_geometry,
    parse_params,
)
from .errors import (
    BuildError,
    DataError,
    EvalError,
    LoweringError,
    PruneSoundnessError,
    QuerySyntaxError,
    QueryTypeError,
    SourceError,
    TreeqError,
    TreeSpecError,
    UnknownIdentifier,
    UnsupportedKernel,
)
from .fuzz import check_case, make_case, run_fuzz
from .interp import (
    Evaluator,
    TraversalStats,
    evaluate,
    evaluate_staged,
    explain,
)
from .lowering import lower
from .oracle import SplitMix64, disk_points, oracle_eval, uniform_points
from .qlang import Module, Query, parse_query, typecheck
from .treespec import TreeSpec, parse_tree_spec
from .ttir import TraversalPlan, normalize, pretty_print, print_bounds
from .values import (
    BOOL,
    F64,
    I64,
    Aabb,
    GeomType,
    PairType,
    Point,
    Ray,
    Schema,
    Segment,
    SetType,
    Sphere,
    Triangle,
)

__version__ = "0.1.0"


def compile_query(query_text: str, tree_text: str) -> TraversalPlan:
    """Text in, traversal plan out: the whole front half in one call."""
    module = typecheck(parse_query(query_text))
    specs = parse_tree_spec(tree_text, module.schemas, module.enums)
    ordered = []
    for _name, ty in module.query.params:
        if not isinstance(ty, SetType):
            continue
        match = [s for s in specs if s.elem == ty.elem]
        if not match:
            raise TreeSpecError(f"no tree declaration stores {ty.elem}")
        ordered.append(match[0])
    return lower(module, ordered)


def run_query(
    query_text: str,
    tree_text: str,
    datasets: dict[str, list],
    params: dict | None = None,
    debug: bool | None = None,
):
    """Compile, build trees, evaluate; returns (result, TraversalStats)."""
    module = typecheck(parse_query(query_text))
    specs = parse_tree_spec(tree_text, module.schemas, module.enums)
    ordered = []
    names = []
    for name, ty in module.query.params:
        if not isinstance(ty, SetType):
            continue
        match = [s for s in specs if s.elem == ty.elem]
        if not match:
            raise TreeSpecError(f"no tree declaration stores {ty.elem}")
        ordered.append(match[0])
        names.append(name)
    plan = lower(module, ordered)
    trees = [build_tree(datasets[n], s) for n, s in zip(names, ordered)]
    return evaluate(plan, trees, params, debug=debug)
