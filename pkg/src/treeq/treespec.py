"""Tree declarations: parsing, validation, and per-variant bound environments.

A tree file declares how a set is stored and which metadata each node kind
carries, in the style:

    tree ITree implements Set<Item> =
      | Leaf(p: Item) with data = p
      | Interior(left right: ITree, xl xh: i64, idl idh: i64)
          with x in [xl, xh], id in [idl, idh], min(id) = idl
      ;

Annotations:
    data = f              node field f holds the element(s) of this node
    g in [lo, hi]         every element's field g lies in [node.lo, node.hi]
    g in aabb(a, b)       every element's geometry g lies in the box (a, b
    g in sphere(c, r)     are point fields); bare `aabb(a, b)` means `self`
    min(g) = m            node field m stores min of g over the subtree
    max(g) = m / sum(g) = m / count = c     likewise for other aggregates

`self` names the element itself for sets of bare scalars or geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TreeSpecError
from .exprs import Call, Expr, FieldRef, Lit, Ref, substitute
from .qlang import _GEOM_TYPE_NAMES, _SCALAR_TYPE_NAMES, Lexer, Token
from .values import (
    F64,
    I64,
    GeomType,
    ScalarType,
    Schema,
    is_numeric,
    type_limits,
)

SELF = "self"


@dataclass(frozen=True)
class TreeField:
    name: str
    kind: str  # scalar | geom | child | data_one | data_many
    ty: object = None  # resolved type for scalar/geom; element type for data
    fixed_len: int | None = None  # for data_many: fixed array length if any


@dataclass(frozen=True)
class DataTag:
    field: str


@dataclass(frozen=True)
class ScalarBounds:
    field: str  # element field, or "self"
    lo: str  # node field names
    hi: str


@dataclass(frozen=True)
class VolumeBound:
    field: str  # element geometry field, or "self"
    shape: str  # aabb | sphere
    args: tuple[str, ...]  # node field names


@dataclass(frozen=True)
class ReductionAug:
    op: str  # min | max | sum | count
    metric: str  # element field or "self"; "" for count
    node_field: str


Annotation = DataTag | ScalarBounds | VolumeBound | ReductionAug


@dataclass
class Variant:
    name: str
    fields: tuple[TreeField, ...]
    annotations: tuple[Annotation, ...]

    def field_named(self, name: str) -> TreeField | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    @property
    def children(self) -> tuple[TreeField, ...]:
        return tuple(f for f in self.fields if f.kind == "child")

    @property
    def data(self) -> TreeField | None:
        for f in self.fields:
            if f.kind in ("data_one", "data_many"):
                return f
        return None

    @property
    def kind(self) -> str:
        """single | array | interior."""
        d = self.data
        if d is None:
            return "interior"
        return "single" if d.kind == "data_one" else "array"


@dataclass
class TreeSpec:
    name: str
    elem_name: str
    elem: object  # Schema | ScalarType | GeomType
    variants: tuple[Variant, ...]

    def variant(self, name: str) -> Variant:
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(name)


# --------------------------------------------------------------------------
# Parsing.


@dataclass
class _RawField:
    names: list[str]
    ty_tok: Token
    is_array: bool
    fixed_len: int | None


@dataclass
class _RawVariant:
    name: str
    fields: list[_RawField]
    annotations: tuple[Annotation, ...]


@dataclass
class _RawTree:
    name: str
    elem_name: str
    variants: list[_RawVariant]


class _TreeParser:
    def __init__(self, text: str):
        self.toks = Lexer(text).tokens()
        self.i = 0

    def peek(self) -> Token:
        return self.toks[min(self.i, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> TreeSpecError:
        tok = tok or self.peek()
        return TreeSpecError(message, tok.line, tok.col)

    def expect(self, kind: str, value: object = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise self.error(f"expected {want!r}, found {tok.value!r}", tok)
        return tok

    def at(self, kind: str, value: object) -> bool:
        tok = self.peek()
        return tok.kind == kind and tok.value == value

    def eat(self, kind: str, value: object) -> bool:
        if self.at(kind, value):
            self.next()
            return True
        return False

    def parse_file(self) -> list[_RawTree]:
        specs: list[_RawTree] = []
        while self.peek().kind != "eof":
            specs.append(self.parse_tree())
        if not specs:
            raise TreeSpecError("tree file declares no trees")
        return specs

    def parse_tree(self) -> _RawTree:
        self.expect("ident", "tree")
        name = self.expect("ident").value
        self.expect("ident", "implements")
        self.expect("keyword", "Set")
        self.expect("sym", "<")
        elem_name = self.expect("ident")
        self.expect("sym", ">")
        self.expect("sym", "=")
        variants: list[_RawVariant] = []
        while self.at("sym", "|"):
            self.next()
            variants.append(self.parse_variant())
        self.eat("sym", ";")
        if not variants:
            raise self.error("tree needs at least one variant")
        return _RawTree(name, str(elem_name.value), variants)

    def parse_variant(self) -> _RawVariant:
        name = self.expect("ident").value
        self.expect("sym", "(")
        fields: list[_RawField] = []
        while not self.at("sym", ")"):
            # One declaration covers a name group: `xl xh : i64`.
            names = [self.expect("ident").value]
            while self.peek().kind == "ident":
                names.append(self.next().value)
            self.expect("sym", ":")
            if self.eat("sym", "["):
                inner = self.expect("ident")
                fixed_len = None
                if self.eat("sym", ";"):
                    fixed_len = self.expect("int").value
                self.expect("sym", "]")
                fields.append(_RawField(names, inner, True, fixed_len))
            else:
                fields.append(_RawField(names, self.expect("ident"), False, None))
            if not self.eat("sym", ","):
                break
        self.expect("sym", ")")
        annotations: list[Annotation] = []
        if self.eat("ident", "with"):
            annotations.append(self.parse_annotation())
            while self.eat("sym", ","):
                annotations.append(self.parse_annotation())
        return _RawVariant(name, fields, tuple(annotations))

    def parse_annotation(self) -> Annotation:
        tok = self.next()
        if tok.kind == "ident" and tok.value == "data":
            self.expect("sym", "=")
            return DataTag(self.expect("ident").value)
        if tok.kind == "ident" and tok.value == "count":
            self.expect("sym", "=")
            return ReductionAug("count", "", self.expect("ident").value)
        if tok.kind == "ident" and tok.value in ("min", "max", "sum"):
            self.expect("sym", "(")
            metric = self._name_or_self()
            self.expect("sym", ")")
            self.expect("sym", "=")
            return ReductionAug(tok.value, metric, self.expect("ident").value)
        if tok.kind == "ident" and tok.value in ("aabb", "sphere"):
            return self._volume(SELF, tok.value)
        # `field in [lo, hi]` or `field in aabb(a, b)`
        if tok.kind == "ident":
            fname = tok.value
            self.expect("keyword", "in")
            if self.eat("sym", "["):
                lo = self.expect("ident").value
                self.expect("sym", ",")
                hi = self.expect("ident").value
                self.expect("sym", "]")
                return ScalarBounds(fname, lo, hi)
            shape = self.expect("ident")
            if shape.value not in ("aabb", "sphere"):
                raise self.error("expected aabb(...) or sphere(...)", shape)
            return self._volume(fname, shape.value)
        raise self.error(f"expected an annotation, found {tok.value!r}", tok)

    def _name_or_self(self) -> str:
        return self.expect("ident").value

    def _volume(self, fname: str, shape: str) -> VolumeBound:
        self.expect("sym", "(")
        args = [self.expect("ident").value]
        while self.eat("sym", ","):
            args.append(self.expect("ident").value)
        self.expect("sym", ")")
        want = 2
        if len(args) != want:
            raise self.error(f"{shape} bound takes {want} node fields")
        return VolumeBound(fname, shape, tuple(args))


def parse_tree_spec(
    text: str,
    schemas: dict[str, Schema] | None = None,
    enums: dict[str, ScalarType] | None = None,
) -> list[TreeSpec]:
    """Parse and validate a tree file against the query's declared types."""
    parser = _TreeParser(text)
    raw_specs = parser.parse_file()
    schemas = schemas or {}
    enums = enums or {}
    specs: list[TreeSpec] = []
    for raw in raw_specs:
        elem = _resolve_elem(raw.elem_name, schemas, enums)
        variants = tuple(
            _resolve_variant(v, raw.name, elem, parser.error)
            for v in raw.variants
        )
        spec = TreeSpec(raw.name, raw.elem_name, elem, variants)
        validate(spec)
        specs.append(spec)
    return specs


def _resolve_elem(name: str, schemas, enums):
    if name in schemas:
        return schemas[name]
    if name in _SCALAR_TYPE_NAMES:
        return _SCALAR_TYPE_NAMES[name]
    if name in _GEOM_TYPE_NAMES:
        kind, dim = _GEOM_TYPE_NAMES[name]
        return GeomType(kind, dim)
    if name in enums:
        return enums[name]
    raise TreeSpecError(f"unknown element type {name!r}")


def _elem_type_name(elem) -> str:
    if isinstance(elem, Schema):
        return elem.name
    if isinstance(elem, GeomType):
        return str(elem)
    if isinstance(elem, ScalarType):
        return elem.enum_name if elem.kind == "enum" else elem.kind
    return "?"


def _resolve_variant(raw: _RawVariant, tree_name: str, elem, error) -> Variant:
    elem_names = {_elem_type_name(elem)}
    if isinstance(elem, GeomType):
        # accept dimension aliases: Triangle vs Triangle3 etc.
        elem_names |= {
            n for n, (k, d) in _GEOM_TYPE_NAMES.items()
            if (k, d) == (elem.kind, elem.dim)
        }
    # For bare scalar/geometry elements a node field can share the element's
    # type; only the `data =` tag decides which field holds elements.
    data_names = {a.field for a in raw.annotations if isinstance(a, DataTag)}
    fields: list[TreeField] = []
    for rf in raw.fields:
        tname = str(rf.ty_tok.value)
        if rf.is_array:
            if tname not in elem_names:
                raise error(
                    f"array fields hold elements, got {tname!r}", rf.ty_tok
                )
            for n in rf.names:
                fields.append(TreeField(n, "data_many", elem, rf.fixed_len))
            continue
        for n in rf.names:
            if tname in elem_names and n in data_names:
                fields.append(TreeField(n, "data_one", elem))
            elif tname == tree_name:
                fields.append(TreeField(n, "child"))
            elif tname in _SCALAR_TYPE_NAMES:
                fields.append(
                    TreeField(n, "scalar", _SCALAR_TYPE_NAMES[tname])
                )
            elif tname in _GEOM_TYPE_NAMES:
                kind, dim = _GEOM_TYPE_NAMES[tname]
                fields.append(TreeField(n, "geom", GeomType(kind, dim)))
            elif tname in elem_names:
                fields.append(TreeField(n, "data_one", elem))
            else:
                raise error(
                    f"unknown type {tname!r} in tree declaration", rf.ty_tok
                )
    return Variant(raw.name, tuple(fields), raw.annotations)


# --------------------------------------------------------------------------
# Validation.


def _elem_field_type(elem, name: str):
    """Type of an element field; `self` names a bare scalar/geometry element."""
    if name == SELF:
        if isinstance(elem, Schema):
            return None
        return elem
    if isinstance(elem, Schema):
        return elem.field_type(name)
    return None


def validate(spec: TreeSpec) -> None:
    names = [v.name for v in spec.variants]
    if len(set(names)) != len(names):
        raise TreeSpecError(f"duplicate variant names in tree {spec.name}")
    has_data = False
    has_base = False
    for v in spec.variants:
        fnames = [f.name for f in v.fields]
        if len(set(fnames)) != len(fnames):
            raise TreeSpecError(f"duplicate field names in {spec.name}.{v.name}")
        data_fields = [f for f in v.fields if f.kind in ("data_one", "data_many")]
        tags = [a for a in v.annotations if isinstance(a, DataTag)]
        if len(data_fields) > 1 or len(tags) > 1:
            raise TreeSpecError(
                f"{spec.name}.{v.name}: at most one data field per variant"
            )
        if bool(data_fields) != bool(tags):
            raise TreeSpecError(
                f"{spec.name}.{v.name}: element-typed fields and `data =` "
                "annotations must pair up"
            )
        if tags and tags[0].field != data_fields[0].name:
            raise TreeSpecError(
                f"{spec.name}.{v.name}: data tag names {tags[0].field!r} but "
                f"the element field is {data_fields[0].name!r}"
            )
        if data_fields and v.children:
            raise TreeSpecError(
                f"{spec.name}.{v.name}: a variant stores data or children, "
                "not both"
            )
        if data_fields:
            has_data = True
        if not v.children:
            has_base = True
        for ann in v.annotations:
            _check_annotation(spec, v, ann)
    if not has_data:
        raise TreeSpecError(f"tree {spec.name} has no data-carrying variant")
    if not has_base:
        raise TreeSpecError(f"tree {spec.name} has no non-recursive variant")


def _check_annotation(spec: TreeSpec, v: Variant, ann: Annotation) -> None:
    where = f"{spec.name}.{v.name}"

    def node_field(name: str) -> TreeField:
        f = v.field_named(name)
        if f is None:
            raise TreeSpecError(f"{where}: unknown node field {name!r}")
        return f

    if isinstance(ann, DataTag):
        node_field(ann.field)
        return
    if isinstance(ann, ScalarBounds):
        ety = _elem_field_type(spec.elem, ann.field)
        if ety is None or not isinstance(ety, ScalarType):
            raise TreeSpecError(
                f"{where}: `{ann.field} in [...]` needs a scalar element field"
            )
        if ety.kind == "enum":
            raise TreeSpecError(f"{where}: enum fields cannot be bounded")
        for nf_name in (ann.lo, ann.hi):
            nf = node_field(nf_name)
            if nf.kind != "scalar" or nf.ty != ety:
                raise TreeSpecError(
                    f"{where}: bound field {nf_name!r} must be {ety}"
                )
        return
    if isinstance(ann, VolumeBound):
        ety = _elem_field_type(spec.elem, ann.field)
        if not isinstance(ety, GeomType):
            raise TreeSpecError(
                f"{where}: volume bounds need a geometry element, "
                f"got {ety}"
            )
        arg_fields = [node_field(a) for a in ann.args]
        first = arg_fields[0]
        if not (
            first.kind == "geom" and isinstance(first.ty, GeomType)
            and first.ty.kind == "point" and first.ty.dim == ety.dim
        ):
            raise TreeSpecError(
                f"{where}: volume corner {ann.args[0]!r} must be a "
                f"{ety.dim}D point"
            )
        second = arg_fields[1]
        if ann.shape == "aabb":
            if second.ty != first.ty:
                raise TreeSpecError(
                    f"{where}: aabb takes two point fields of equal dimension"
                )
        else:
            if second.kind != "scalar" or second.ty != F64:
                raise TreeSpecError(f"{where}: sphere radius must be f64")
        return
    if isinstance(ann, ReductionAug):
        nf = node_field(ann.node_field)
        if ann.op == "count":
            if nf.ty != I64:
                raise TreeSpecError(f"{where}: count field must be i64")
            return
        ety = _elem_field_type(spec.elem, ann.metric)
        if ety is None or not is_numeric(ety):
            raise TreeSpecError(
                f"{where}: {ann.op}({ann.metric}) needs a numeric element field"
            )
        if nf.kind != "scalar" or nf.ty != ety:
            raise TreeSpecError(
                f"{where}: {ann.op} field {ann.node_field!r} must be {ety}"
            )
        return
    raise TypeError(f"not an annotation: {ann!r}")


# --------------------------------------------------------------------------
# Bound environments.


@dataclass
class BoundEnv:
    """What predicate analysis may assume at one variant's nodes.

    intervals: element scalar field (or "self") -> (lo, hi) expressions over
        the variant's node fields. Unannotated numeric/bool fields appear
        with type-limit defaults.
    volumes: element geometry field (or "self") -> enclosing volume
        expression (exact element geometry at singleton leaves).
    reductions: (op, metric field) -> node field reference.
    exact: True at singleton-data variants — bounds collapse to the element
        itself, so derived conditions are exact there.
    """

    intervals: dict[str, tuple[Expr, Expr]] = field(default_factory=dict)
    volumes: dict[str, Expr] = field(default_factory=dict)
    reductions: dict[tuple[str, str], Expr] = field(default_factory=dict)
    exact: bool = False

    def rename(self, mapping: dict[str, Expr]) -> BoundEnv:
        """A copy with node-field references substituted (pattern binders)."""
        out = BoundEnv(exact=self.exact)
        out.intervals = {
            k: (substitute(lo, mapping), substitute(hi, mapping))
            for k, (lo, hi) in self.intervals.items()
        }
        out.volumes = {
            k: substitute(v, mapping) for k, v in self.volumes.items()
        }
        out.reductions = {
            k: substitute(v, mapping) for k, v in self.reductions.items()
        }
        return out


def _scalar_element_fields(elem) -> list[tuple[str, ScalarType]]:
    if isinstance(elem, Schema):
        return [
            (n, t) for n, t in elem.fields
            if isinstance(t, ScalarType) and t.kind != "enum"
        ]
    if isinstance(elem, ScalarType) and elem.kind != "enum":
        return [(SELF, elem)]
    return []


def _geom_element_fields(elem) -> list[tuple[str, GeomType]]:
    if isinstance(elem, Schema):
        return [(n, t) for n, t in elem.fields if isinstance(t, GeomType)]
    if isinstance(elem, GeomType):
        return [(SELF, elem)]
    return []


def augmentation_env(spec: TreeSpec, variant: Variant) -> BoundEnv:
    """Interval/volume/aggregate facts available at this variant's nodes."""
    env = BoundEnv()
    if variant.kind == "single":
        data = variant.data
        env.exact = True
        for fname, _ in _scalar_element_fields(spec.elem):
            e = _elem_access(data.name, fname)
            env.intervals[fname] = (e, e)
        for fname, _ in _geom_element_fields(spec.elem):
            env.volumes[fname] = _elem_access(data.name, fname)
        return env
    for fname, fty in _scalar_element_fields(spec.elem):
        lo, hi = type_limits(fty)
        env.intervals[fname] = (Lit(lo, fty), Lit(hi, fty))
    for ann in variant.annotations:
        if isinstance(ann, ScalarBounds):
            env.intervals[ann.field] = (Ref(ann.lo), Ref(ann.hi))
        elif isinstance(ann, VolumeBound):
            fn = "mkaabb" if ann.shape == "aabb" else "mksphere"
            env.volumes[ann.field] = Call(fn, tuple(Ref(a) for a in ann.args))
        elif isinstance(ann, ReductionAug):
            env.reductions[(ann.op, ann.metric)] = Ref(ann.node_field)
    return env


def _elem_access(data_field: str, elem_field: str) -> Expr:
    if elem_field == SELF:
        return Ref(data_field)
    return FieldRef(Ref(data_field), elem_field)


def node_field_types(spec: TreeSpec, variant: Variant) -> dict[str, object]:
    """Type environment for expressions over one variant's node fields."""
    out: dict[str, object] = {}
    for f in variant.fields:
        if f.kind == "scalar" or f.kind == "geom":
            out[f.name] = f.ty
        elif f.kind == "data_one":
            out[f.name] = spec.elem
    return out
