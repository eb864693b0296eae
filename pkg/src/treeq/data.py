"""Element data files and parameter values.

Data files are CSV with a typed header: each column is `name:type`, where
the type is a scalar (`i64`, `f64`, `bool`) or a geometry name (`Point2`,
`Aabb3`, `Sphere2`, `Segment3`, `Ray3`, `Triangle`). Geometry cells use
uppercase literals with space-separated coordinates and comma-separated
point groups:

    POINT(x y [z])             AABB(lox loy [loz], hix hiy [hiz])
    SPHERE(cx cy [cz] r)       SEG(ax ay [az], bx by [bz])
    RAY(ox oy oz, dx dy dz)    TRI(ax ay az, bx by bz, cx cy cz)

A file for a record element type carries one column per schema field; a
file for a bare scalar or geometry set carries exactly one column. Floats
must be finite — data is what trees bound, and an unbounded coordinate has
no usable bound.
"""

from __future__ import annotations

import csv
import io
import math

from .errors import DataError
from .qlang import _GEOM_TYPE_NAMES, _SCALAR_TYPE_NAMES
from .values import (
    I64_MAX,
    I64_MIN,
    Aabb,
    GeomType,
    Point,
    Ray,
    Schema,
    ScalarType,
    Segment,
    SetType,
    Sphere,
    Triangle,
)

_LITERAL_NAMES = {
    "POINT": "point",
    "AABB": "aabb",
    "SPHERE": "sphere",
    "SEG": "segment",
    "RAY": "ray",
    "TRI": "triangle",
}
_NAME_OF_KIND = {v: k for k, v in _LITERAL_NAMES.items()}


def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise DataError(f"{what}: non-finite float {x!r}")
    return x


def parse_geometry(text: str):
    """Parse one geometry literal into a runtime geometry value."""
    text = text.strip()
    open_at = text.find("(")
    if open_at < 0 or not text.endswith(")"):
        raise DataError(f"malformed geometry literal {text!r}")
    name = text[:open_at].strip().upper()
    kind = _LITERAL_NAMES.get(name)
    if kind is None:
        raise DataError(f"unknown geometry literal {name!r}")
    groups = []
    for part in text[open_at + 1 : -1].split(","):
        nums = part.split()
        if not nums:
            raise DataError(f"empty coordinate group in {text!r}")
        try:
            groups.append(tuple(_finite(float(n), text) for n in nums))
        except ValueError:
            raise DataError(f"bad coordinate in {text!r}") from None
    return _assemble(kind, groups, text)


def _assemble(kind: str, groups: list[tuple[float, ...]], text: str):
    def one(sizes):
        if len(groups) != 1 or len(groups[0]) not in sizes:
            raise DataError(f"wrong coordinate count in {text!r}")
        return groups[0]

    def many(n: int, sizes):
        if len(groups) != n or any(len(g) not in sizes for g in groups):
            raise DataError(f"wrong coordinate count in {text!r}")
        if len({len(g) for g in groups}) != 1:
            raise DataError(f"mixed dimensions in {text!r}")
        return groups

    if kind == "point":
        return Point(one((2, 3)))
    if kind == "aabb":
        lo, hi = many(2, (2, 3))
        if any(a > b for a, b in zip(lo, hi)):
            raise DataError(f"inverted box in {text!r}")
        return Aabb(lo, hi)
    if kind == "sphere":
        g = one((3, 4))
        if g[-1] < 0:
            raise DataError(f"negative radius in {text!r}")
        return Sphere(g[:-1], g[-1])
    if kind == "segment":
        a, b = many(2, (2, 3))
        return Segment(a, b)
    if kind == "ray":
        o, d = many(2, (3,))
        if not any(d):
            raise DataError(f"zero ray direction in {text!r}")
        return Ray(o, d)
    a, b, c = many(3, (3,))
    return Triangle(a, b, c)


def format_geometry(g) -> str:
    def grp(coords) -> str:
        return " ".join(repr(float(c)) for c in coords)

    if isinstance(g, Point):
        return f"POINT({grp(g.coords)})"
    if isinstance(g, Aabb):
        return f"AABB({grp(g.lo)}, {grp(g.hi)})"
    if isinstance(g, Sphere):
        return f"SPHERE({grp(g.center)} {g.radius!r})"
    if isinstance(g, Segment):
        return f"SEG({grp(g.a)}, {grp(g.b)})"
    if isinstance(g, Ray):
        return f"RAY({grp(g.origin)}, {grp(g.direction)})"
    if isinstance(g, Triangle):
        return f"TRI({grp(g.a)}, {grp(g.b)}, {grp(g.c)})"
    raise DataError(f"not a geometry value: {g!r}")


# ---------------------------------------------------------------------------
# Typed cells.


def parse_scalar(text: str, ty: ScalarType, where: str):
    text = text.strip()
    if ty.kind == "i64":
        try:
            v = int(text)
        except ValueError:
            raise DataError(f"{where}: {text!r} is not an integer") from None
        if not I64_MIN <= v <= I64_MAX:
            raise DataError(f"{where}: {v} out of the 64-bit range")
        return v
    if ty.kind == "f64":
        try:
            v = float(text)
        except ValueError:
            raise DataError(f"{where}: {text!r} is not a number") from None
        return _finite(v, where)
    if ty.kind == "bool":
        if text in ("true", "false"):
            return text == "true"
        raise DataError(f"{where}: expected true/false, got {text!r}")
    if text in ty.labels:
        return text
    raise DataError(f"{where}: {text!r} is not a {ty.enum_name} label")


def parse_cell(text: str, ty, where: str):
    if isinstance(ty, ScalarType):
        return parse_scalar(text, ty, where)
    value = parse_geometry(text)
    got = GeomType(type(value).__name__.lower(), len(_dims_of(value)))
    if got != ty:
        raise DataError(f"{where}: expected {ty}, got {got}")
    return value


def _dims_of(g) -> tuple[float, ...]:
    if isinstance(g, Point):
        return g.coords
    if isinstance(g, (Aabb, Segment)):
        return g.lo if isinstance(g, Aabb) else g.a
    if isinstance(g, Sphere):
        return g.center
    return g.origin if isinstance(g, Ray) else g.a


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return value
    return format_geometry(value)


def _column_type(name: str, where: str):
    if name in _SCALAR_TYPE_NAMES:
        return _SCALAR_TYPE_NAMES[name]
    if name in _GEOM_TYPE_NAMES:
        kind, dim = _GEOM_TYPE_NAMES[name]
        return GeomType(kind, dim)
    raise DataError(f"{where}: unknown column type {name!r}")


def load_elements(text: str, elem_ty, source: str = "<data>") -> list:
    """Parse a CSV document into elements of the given type."""
    reader = csv.reader(io.StringIO(text), skipinitialspace=True)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file (a typed header is required)")
    cols: list[tuple[str, object]] = []
    for i, cell in enumerate(header):
        name, sep, tname = cell.strip().partition(":")
        if not sep or not name or not tname:
            raise DataError(
                f"{source}: header column {i + 1} must be name:type, "
                f"got {cell.strip()!r}"
            )
        cols.append((name.strip(), _column_type(tname.strip(), source)))

    record = isinstance(elem_ty, Schema)
    if record:
        declared = dict(elem_ty.fields)
        names = [c[0] for c in cols]
        if sorted(names) != sorted(declared):
            raise DataError(
                f"{source}: columns {sorted(names)} do not match "
                f"{elem_ty.name} fields {sorted(declared)}"
            )
        for name, cty in cols:
            if cty != declared[name]:
                raise DataError(
                    f"{source}: column {name!r} is {cty}, "
                    f"{elem_ty.name} declares {declared[name]}"
                )
    else:
        if len(cols) != 1:
            raise DataError(
                f"{source}: a {elem_ty} set takes exactly one column"
            )
        if cols[0][1] != elem_ty:
            raise DataError(
                f"{source}: column type {cols[0][1]} does not match {elem_ty}"
            )

    out: list = []
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(cols):
            raise DataError(
                f"{source}:{row_no}: expected {len(cols)} cells, got {len(row)}"
            )
        where = f"{source}:{row_no}"
        if record:
            out.append({
                name: parse_cell(cell, cty, where)
                for (name, cty), cell in zip(cols, row)
            })
        else:
            out.append(parse_cell(row[0], cols[0][1], where))
    return out


def dump_elements(elements: list, elem_ty) -> str:
    """Inverse of load_elements, used for reproducer files."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(elem_ty, Schema):
        writer.writerow([f"{n}:{t}" for n, t in elem_ty.fields])
        for e in elements:
            writer.writerow([format_cell(e[n]) for n, _ in elem_ty.fields])
    else:
        writer.writerow([f"self:{elem_ty}"])
        for e in elements:
            writer.writerow([format_cell(e)])
    return buf.getvalue()


def parse_params(
    pairs: list[str], declared: list[tuple[str, object]]
) -> dict[str, object]:
    """Resolve `name=value` strings against the query's non-set parameters."""
    types = {
        n: t for n, t in dict(declared).items() if not isinstance(t, SetType)
    }
    out: dict[str, object] = {}
    for pair in pairs:
        name, sep, text = pair.partition("=")
        if not sep:
            raise DataError(f"--param takes name=value, got {pair!r}")
        name = name.strip()
        if name not in types:
            known = ", ".join(sorted(types)) or "none"
            raise DataError(
                f"unknown parameter {name!r} (query takes: {known})"
            )
        out[name] = parse_cell(text.strip(), types[name], f"param {name}")
    missing = sorted(set(types) - set(out))
    if missing:
        raise DataError(f"missing parameter value(s): {', '.join(missing)}")
    return out
