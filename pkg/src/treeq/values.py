"""Runtime values and semantic types.

Scalars are 64-bit and every arithmetic operator is total and saturating:
integers clamp to the i64 range, floats clamp to the finite double range,
division by zero yields zero, and the partial math functions are extended
over their whole domain (sqrt clamps negatives, ln bottoms out at the float
minimum). Two things depend on this: derived bound expressions get evaluated
outside the mathematical domain of the original predicate and must still
produce an ordered value, and because values and bounds share the exact same
saturating semantics, interval endpoints stay faithful even at the extremes
(no NaN can appear and break the ordering).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

I64_MIN = -(2**63)
I64_MAX = 2**63 - 1

F64_MAX = sys.float_info.max
F64_MIN = -sys.float_info.max

INF = math.inf  # used inside geometry kernels; saturated at the value layer


def sat(v: int) -> int:
    if v > I64_MAX:
        return I64_MAX
    if v < I64_MIN:
        return I64_MIN
    return v


def sat_add(a: int, b: int) -> int:
    return sat(a + b)


def sat_sub(a: int, b: int) -> int:
    return sat(a - b)


def sat_mul(a: int, b: int) -> int:
    return sat(a * b)


def sat_neg(a: int) -> int:
    return sat(-a)


def euclid_div(a: int, b: int) -> int:
    """Euclidean division, total: remainder in [0, |b|); a div 0 = 0."""
    if b == 0:
        return 0
    if b > 0:
        q = a // b
    else:
        q = -(a // -b)
    return sat(q)


def euclid_mod(a: int, b: int) -> int:
    """Euclidean remainder in [0, |b|), total: a mod 0 = 0."""
    if b == 0:
        return 0
    return a - b * (a // b if b > 0 else -(a // -b))


def fsat(v: float) -> float:
    """Clamp to the finite double range (infinities arise only transiently)."""
    if v > F64_MAX:
        return F64_MAX
    if v < F64_MIN:
        return F64_MIN
    return v


def f_add(a: float, b: float) -> float:
    return fsat(a + b)


def f_sub(a: float, b: float) -> float:
    return fsat(a - b)


def f_mul(a: float, b: float) -> float:
    return fsat(a * b)


def f_neg(a: float) -> float:
    return -a


def f_div(a: float, b: float) -> float:
    """Total float division: a / 0 = 0, result clamped to the finite range."""
    if b == 0.0:
        return 0.0
    return fsat(a / b)


def t_sqrt(x: float) -> float:
    return math.sqrt(x) if x > 0.0 else 0.0


def t_ln(x: float) -> float:
    if x <= 0.0:
        return F64_MIN
    return math.log(x)


def t_exp(x: float) -> float:
    try:
        return fsat(math.exp(x))
    except OverflowError:
        return F64_MAX


def t_trunc(x: float) -> float:
    """Round toward zero, kept as a float."""
    return float(math.trunc(x))


def t_floor(x: float) -> float:
    return float(math.floor(x))


def t_ceil(x: float) -> float:
    return float(math.ceil(x))


def t_round(x: float) -> float:
    """Round half to even (the host rounding); monotone, so bounds map through."""
    return float(round(x))


# --------------------------------------------------------------------------
# Geometry values. Coordinates are tuples of floats; 2D and 3D share one
# representation (triangles and rays are validated to 3D / nonzero direction
# at construction sites, not here).


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]


@dataclass(frozen=True)
class Aabb:
    lo: tuple[float, ...]
    hi: tuple[float, ...]


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, ...]
    radius: float


@dataclass(frozen=True)
class Segment:
    a: tuple[float, ...]
    b: tuple[float, ...]


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, ...]
    direction: tuple[float, ...]


@dataclass(frozen=True)
class Triangle:
    a: tuple[float, ...]
    b: tuple[float, ...]
    c: tuple[float, ...]


GEOMETRY_CLASSES = (Point, Aabb, Sphere, Segment, Ray, Triangle)


def geom_kind(value: object) -> str:
    return type(value).__name__.lower()


# --------------------------------------------------------------------------
# Semantic types.


@dataclass(frozen=True)
class ScalarType:
    kind: str  # "i64" | "f64" | "bool" | "enum"
    enum_name: str = ""
    labels: tuple[str, ...] = ()

    def __str__(self) -> str:
        return self.enum_name if self.kind == "enum" else self.kind


I64 = ScalarType("i64")
F64 = ScalarType("f64")
BOOL = ScalarType("bool")


@dataclass(frozen=True)
class GeomType:
    kind: str  # "point" | "aabb" | "sphere" | "segment" | "ray" | "triangle"
    dim: int

    def __str__(self) -> str:
        name = self.kind.capitalize()
        return name if self.kind == "triangle" else f"{name}{self.dim}"


@dataclass(frozen=True)
class Schema:
    """Named product element type: ordered (field, type) pairs."""

    name: str
    fields: tuple[tuple[str, ScalarType | GeomType], ...]

    def field_type(self, name: str):
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None

    def __str__(self) -> str:
        return self.name


# An element type is a Schema, a ScalarType, or a GeomType (raw elements).
ElementType = object


@dataclass(frozen=True)
class SetType:
    elem: ElementType

    def __str__(self) -> str:
        return f"Set<{self.elem}>"


@dataclass(frozen=True)
class PairType:
    first: object
    second: object

    def __str__(self) -> str:
        return f"({self.first}, {self.second})"


def type_limits(ty: ScalarType) -> tuple[object, object]:
    """Unbounded interval defaults for a scalar type."""
    if ty.kind == "i64":
        return I64_MIN, I64_MAX
    if ty.kind == "f64":
        return F64_MIN, F64_MAX
    if ty.kind == "bool":
        return False, True
    # Enum tags carry no usable order for pruning; enum bounds are handled as
    # "no bound" upstream.
    return None, None


def is_numeric(ty: object) -> bool:
    return isinstance(ty, ScalarType) and ty.kind in ("i64", "f64")
