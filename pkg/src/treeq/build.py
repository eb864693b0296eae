"""Construct augmented trees from element collections.

The builder recursively partitions the elements: the split axis is the one
with the widest extent among the fields the tree declaration promises to
bound, the split point is the spatial median (midpoint of the extent), and
a count split stands in whenever the midpoint fails to separate (duplicate
keys, degenerate extents). Leaves hold one element or a small block of them
depending on which leaf variants the declaration offers; every annotation
field is then computed bottom-up from the actual subtree contents.

Element order is preserved left-to-right: `TreeInstance.elements` lists the
canonical enumeration order, and each node records its span in it, which is
what subtree-level checks and the brute-force reference use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geom
from .errors import BuildError
from .treespec import (
    SELF,
    DataTag,
    ReductionAug,
    ScalarBounds,
    TreeSpec,
    Variant,
    VolumeBound,
)
from .values import (
    GEOMETRY_CLASSES,
    I64_MAX,
    I64_MIN,
    GeomType,
    Point,
    ScalarType,
    Schema,
    f_add,
    geom_kind,
    sat_add,
)


@dataclass(frozen=True)
class BuildConfig:
    """Construction knobs; `leaf_capacity=None` picks the per-tree default
    (1 for scalar elements, 4 for geometry) clamped to what the declared
    leaf variants can actually hold."""

    leaf_capacity: int | None = None

    def __post_init__(self) -> None:
        if self.leaf_capacity is not None and self.leaf_capacity < 1:
            raise BuildError("leaf capacity must be at least 1")


@dataclass
class Node:
    variant: str
    fields: dict[str, object]  # child fields hold arena indices
    span: tuple[int, int]  # slice of TreeInstance.elements under this node


@dataclass
class TreeInstance:
    """A built tree: node arena plus the canonical element order."""

    spec: TreeSpec
    nodes: list[Node] = field(default_factory=list)
    root: int = -1
    elements: list[object] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.root < 0

    def __len__(self) -> int:
        return len(self.elements)

    def node(self, idx: int) -> Node:
        return self.nodes[idx]

    def subtree_elements(self, idx: int) -> list[object]:
        lo, hi = self.nodes[idx].span
        return self.elements[lo:hi]


# ---------------------------------------------------------------------------
# Element conformance.


def _scalar_ok(value: object, ty: ScalarType) -> bool:
    if ty.kind == "i64":
        return (
            isinstance(value, int) and not isinstance(value, bool)
            and I64_MIN <= value <= I64_MAX
        )
    if ty.kind == "f64":
        return isinstance(value, float) and math.isfinite(value)
    if ty.kind == "bool":
        return isinstance(value, bool)
    return isinstance(value, str) and value in ty.labels


def _geom_ok(value: object, ty: GeomType) -> bool:
    if not isinstance(value, GEOMETRY_CLASSES) or geom_kind(value) != ty.kind:
        return False
    return len(geom.centroid(value)) == ty.dim


def _check_element(elem: object, ty: object, index: int) -> None:
    where = f"element {index}"
    if isinstance(ty, Schema):
        if not isinstance(elem, dict):
            raise BuildError(f"{where}: expected a {ty.name} record")
        names = {n for n, _ in ty.fields}
        if set(elem) != names:
            raise BuildError(
                f"{where}: fields {sorted(elem)} do not match "
                f"{ty.name}{sorted(names)}"
            )
        for fname, fty in ty.fields:
            _check_element(elem[fname], fty, index)
        return
    if isinstance(ty, ScalarType):
        if not _scalar_ok(elem, ty):
            raise BuildError(f"{where}: {elem!r} is not a valid {ty}")
        return
    if isinstance(ty, GeomType):
        if not _geom_ok(elem, ty):
            raise BuildError(f"{where}: {elem!r} is not a valid {ty}")
        return
    raise BuildError(f"{where}: unsupported element type {ty!r}")


# ---------------------------------------------------------------------------
# Split axes. Every field the tree bounds (scalar intervals and volume
# centroids) is a candidate; trees with no bound annotations fall back to
# whatever numeric structure the element offers.


def _field_getter(fname: str):
    if fname == SELF:
        return lambda e: e
    return lambda e: e[fname]


def _axes(spec: TreeSpec):
    axes: list = []  # element -> sort key
    seen: set[tuple[str, int]] = set()

    def add_scalar(fname: str) -> None:
        if (fname, -1) not in seen:
            seen.add((fname, -1))
            axes.append(_field_getter(fname))

    def add_geom(fname: str, dim: int) -> None:
        get = _field_getter(fname)
        for d in range(dim):
            if (fname, d) in seen:
                continue
            seen.add((fname, d))
            axes.append(lambda e, g=get, d=d: geom.centroid(g(e))[d])

    for v in spec.variants:
        if v.kind != "interior":
            continue
        for ann in v.annotations:
            if isinstance(ann, ScalarBounds):
                add_scalar(ann.field)
            elif isinstance(ann, VolumeBound):
                ety = _elem_field_ty(spec.elem, ann.field)
                add_geom(ann.field, ety.dim)
    if axes:
        return axes
    if isinstance(spec.elem, Schema):
        for fname, fty in spec.elem.fields:
            if isinstance(fty, ScalarType) and fty.kind in ("i64", "f64"):
                add_scalar(fname)
        for fname, fty in spec.elem.fields:
            if isinstance(fty, GeomType):
                add_geom(fname, fty.dim)
    elif isinstance(spec.elem, ScalarType):
        if spec.elem.kind in ("i64", "f64"):
            add_scalar(SELF)
    elif isinstance(spec.elem, GeomType):
        add_geom(SELF, spec.elem.dim)
    return axes


def _elem_field_ty(elem, fname: str):
    if fname == SELF:
        return elem
    return elem.field_type(fname)


def _partition(subset: list, axes, parts: int, align: int | None) -> list[list]:
    """Split into `parts` nonempty groups: widest extent, spatial median,
    count split when the median does not separate. `align` snaps the cut
    to a multiple of the exact-size leaf capacity."""
    best = None
    best_extent = -math.inf
    for ax in axes:
        keys = [ax(e) for e in subset]
        extent = max(keys) - min(keys)
        if extent > best_extent:
            best, best_extent = ax, extent
    if best is not None and best_extent > 0:
        ordered = sorted(subset, key=best)
        if parts == 2:
            mid = (best(ordered[0]) + best(ordered[-1])) / 2
            cut = sum(1 for e in ordered if best(e) <= mid)
            cut = _snap(cut, len(ordered), align)
            if 0 < cut < len(ordered):
                return [ordered[:cut], ordered[cut:]]
        # Duplicate-heavy data or >2 children: equal-count contiguous runs.
        return _chunks(ordered, parts, align)
    return _chunks(list(subset), parts, align)


def _snap(cut: int, n: int, align: int | None) -> int:
    if align is None:
        return cut
    if n <= align:
        return cut
    if n < 2 * align:
        return align
    snapped = round(cut / align) * align
    return min(max(snapped, align), ((n - 1) // align) * align)


def _chunks(ordered: list, parts: int, align: int | None) -> list[list]:
    n = len(ordered)
    if parts == 2:
        cut = _snap(n // 2, n, align) or max(n // 2, 1)
        return [ordered[:cut], ordered[cut:]]
    out = []
    start = 0
    for i in range(parts):
        end = start + (n - start + (parts - i - 1)) // (parts - i)
        out.append(ordered[start:end])
        start = end
    return out


# ---------------------------------------------------------------------------
# Annotation values.


def _metric_values(subset: list, fname: str) -> list:
    get = _field_getter(fname)
    return [get(e) for e in subset]


def _farthest_corner(center: tuple[float, ...], box: geom.Aabb) -> float:
    acc = 0.0
    for c, lo, hi in zip(center, box.lo, box.hi):
        d = max(abs(lo - c), abs(hi - c))
        acc += d * d
    return math.sqrt(acc)


def _annotation_fields(
    variant: Variant, subset: list, spec: TreeSpec
) -> dict[str, object]:
    out: dict[str, object] = {}
    for ann in variant.annotations:
        if isinstance(ann, DataTag):
            continue
        if isinstance(ann, ScalarBounds):
            vals = _metric_values(subset, ann.field)
            out[ann.lo] = min(vals)
            out[ann.hi] = max(vals)
        elif isinstance(ann, VolumeBound):
            boxes = [geom.aabb_of(g) for g in _metric_values(subset, ann.field)]
            box = boxes[0]
            for b in boxes[1:]:
                box = geom.aabb_union(box, b)
            if ann.shape == "aabb":
                out[ann.args[0]] = Point(box.lo)
                out[ann.args[1]] = Point(box.hi)
            else:
                center = tuple(
                    (lo + hi) / 2 for lo, hi in zip(box.lo, box.hi)
                )
                radius = max(_farthest_corner(center, b) for b in boxes)
                out[ann.args[0]] = Point(center)
                out[ann.args[1]] = radius
        elif isinstance(ann, ReductionAug):
            if ann.op == "count":
                out[ann.node_field] = len(subset)
                continue
            vals = _metric_values(subset, ann.metric)
            if ann.op == "min":
                out[ann.node_field] = min(vals)
            elif ann.op == "max":
                out[ann.node_field] = max(vals)
            else:  # sum, in canonical element order
                if isinstance(vals[0], float):
                    total = 0.0
                    for v in vals:
                        total = f_add(total, v)
                else:
                    total = 0
                    for v in vals:
                        total = sat_add(total, v)
                out[ann.node_field] = total
    return out


# ---------------------------------------------------------------------------
# The builder.


class _Builder:
    def __init__(self, spec: TreeSpec, capacity: int):
        self.spec = spec
        self.capacity = capacity
        self.axes = _axes(spec)
        self.nodes: list[Node] = []
        self.elements: list[object] = []
        self.single = next(
            (v for v in spec.variants if v.kind == "single"), None
        )
        self.array = next(
            (v for v in spec.variants if v.kind == "array"), None
        )
        self.interior = next(
            (v for v in spec.variants if v.kind == "interior"), None
        )

    def _emit(self, variant: Variant, fields: dict, span: tuple) -> int:
        missing = [
            f.name for f in variant.fields if f.name not in fields
        ]
        if missing:
            raise BuildError(
                f"{self.spec.name}.{variant.name}: field(s) {missing} have "
                "no annotation to compute them from"
            )
        self.nodes.append(Node(variant.name, fields, span))
        return len(self.nodes) - 1

    def _leaf(self, subset: list) -> int:
        start = len(self.elements)
        self.elements.extend(subset)
        span = (start, len(self.elements))
        ann: dict[str, object]
        if len(subset) == 1 and self.single is not None:
            ann = _annotation_fields(self.single, subset, self.spec)
            ann[self.single.data.name] = subset[0]
            return self._emit(self.single, ann, span)
        v = self.array
        if v is not None and (
            v.data.fixed_len is None or v.data.fixed_len == len(subset)
        ):
            ann = _annotation_fields(v, subset, self.spec)
            ann[v.data.name] = list(subset)
            return self._emit(v, ann, span)
        raise BuildError(
            f"{self.spec.name}: no leaf variant holds {len(subset)} element(s)"
        )

    def _fits_leaf(self, n: int) -> bool:
        if n == 1 and self.single is not None:
            return True
        v = self.array
        if v is None:
            return False
        if v.data.fixed_len is not None:
            return n == v.data.fixed_len
        return n <= self.capacity

    def build(self, subset: list) -> int:
        if self._fits_leaf(len(subset)):
            return self._leaf(subset)
        v = self.interior
        if v is None or len(subset) < len(v.children):
            return self._leaf(subset)  # raises with the precise reason
        align = self.array.data.fixed_len if self.array is not None else None
        parts = _partition(subset, self.axes, len(v.children), align)
        start = len(self.elements)
        kids = [self.build(p) for p in parts]
        ann = _annotation_fields(v, subset, self.spec)
        for child_field, kid in zip(v.children, kids):
            ann[child_field.name] = kid
        return self._emit(v, ann, (start, len(self.elements)))


def build_tree(
    elements: list, spec: TreeSpec, cfg: BuildConfig | None = None
) -> TreeInstance:
    """Build an augmented tree over `elements` (kept in input order within
    each leaf; left-to-right leaf order is the canonical element order)."""
    cfg = cfg or BuildConfig()
    for i, e in enumerate(elements):
        _check_element(e, spec.elem, i)
    tree = TreeInstance(spec)
    if not elements:
        return tree
    capacity = cfg.leaf_capacity
    if capacity is None:
        capacity = 4 if _has_geometry(spec.elem) else 1
    b = _Builder(spec, capacity)
    tree.root = b.build(list(elements))
    tree.nodes = b.nodes
    tree.elements = b.elements
    return tree


def _has_geometry(elem) -> bool:
    if isinstance(elem, GeomType):
        return True
    if isinstance(elem, Schema):
        return any(isinstance(t, GeomType) for _, t in elem.fields)
    return False


# ---------------------------------------------------------------------------
# Debug verification: recompute every annotation from the actual subtree
# contents and demand exact agreement (the recomputation follows the same
# fold order, so floats must match bit for bit).


def verify_annotations(tree: TreeInstance) -> None:
    if tree.empty:
        return
    for idx, node in enumerate(tree.nodes):
        variant = tree.spec.variant(node.variant)
        subset = tree.subtree_elements(idx)
        expect = _annotation_fields(variant, subset, tree.spec)
        for fname, want in expect.items():
            got = node.fields[fname]
            if got != want:
                raise BuildError(
                    f"node {idx} ({node.variant}): field {fname!r} holds "
                    f"{got!r}, recomputation gives {want!r}"
                )
        data = variant.data
        if data is not None:
            stored = node.fields[data.name]
            want_elems = subset if data.kind == "data_many" else subset[0]
            if stored != want_elems:
                raise BuildError(
                    f"node {idx} ({node.variant}): data field does not "
                    "match the canonical element order"
                )
