"""Geometric relation and metric kernels.

All shapes are closed point sets: boundary contact counts as intersection,
and containment admits equality. Relations are evaluated exactly in float
arithmetic (no epsilon), which keeps the derived lower-bound conditions
sound: a lower bound that fires must really imply the predicate.

The supported pairs are driven by what bounding-volume pruning needs:
every shape against the two volume kinds (aabb, sphere), plus the
element-element pairs the traversal leaves evaluate directly.
"""

from __future__ import annotations

import itertools
import math

from .errors import UnsupportedKernel
from .values import INF, Aabb, Point, Ray, Segment, Sphere, Triangle, geom_kind

# --------------------------------------------------------------------------
# Vector helpers (tuples of floats; 2D and 3D share code paths).


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _scale(a, k):
    return tuple(x * k for x in a)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _cross3(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _is_collinear(u, v) -> bool:
    """True when u x v == 0 (works for 2D via the scalar cross)."""
    if len(u) == 2:
        return u[0] * v[1] - u[1] * v[0] == 0.0
    return _cross3(u, v) == (0.0, 0.0, 0.0)


def _dist2(a, b):
    return sum((x - y) ** 2 for x, y in zip(a, b))


def _dist(a, b):
    return math.sqrt(_dist2(a, b))


# --------------------------------------------------------------------------
# Enclosing boxes and hulls.


def aabb_of(g) -> Aabb:
    """Tight axis-aligned box; rays extend to infinity along their heading."""
    if isinstance(g, Point):
        return Aabb(g.coords, g.coords)
    if isinstance(g, Aabb):
        return g
    if isinstance(g, Sphere):
        return Aabb(
            tuple(c - g.radius for c in g.center),
            tuple(c + g.radius for c in g.center),
        )
    if isinstance(g, Segment):
        return Aabb(
            tuple(min(x, y) for x, y in zip(g.a, g.b)),
            tuple(max(x, y) for x, y in zip(g.a, g.b)),
        )
    if isinstance(g, Triangle):
        pts = (g.a, g.b, g.c)
        return Aabb(
            tuple(min(p[i] for p in pts) for i in range(len(g.a))),
            tuple(max(p[i] for p in pts) for i in range(len(g.a))),
        )
    if isinstance(g, Ray):
        lo = tuple(
            o if d >= 0.0 else -INF for o, d in zip(g.origin, g.direction)
        )
        hi = tuple(
            o if d <= 0.0 else INF for o, d in zip(g.origin, g.direction)
        )
        return Aabb(lo, hi)
    raise TypeError(f"not a geometry: {g!r}")


def aabb_union(a: Aabb, b: Aabb) -> Aabb:
    return Aabb(
        tuple(min(x, y) for x, y in zip(a.lo, b.lo)),
        tuple(max(x, y) for x, y in zip(a.hi, b.hi)),
    )


def centroid(g) -> tuple[float, ...]:
    box = aabb_of(g)
    return tuple((lo + hi) / 2.0 for lo, hi in zip(box.lo, box.hi))


def _corners(box: Aabb):
    return itertools.product(*[(lo, hi) for lo, hi in zip(box.lo, box.hi)])


def _hull_points(g):
    """Finite vertex set whose convex hull is the shape, or None."""
    if isinstance(g, Point):
        return (g.coords,)
    if isinstance(g, Segment):
        return (g.a, g.b)
    if isinstance(g, Triangle):
        return (g.a, g.b, g.c)
    if isinstance(g, Aabb):
        return tuple(_corners(g))
    return None


# --------------------------------------------------------------------------
# Point membership (exact, closed).


def _point_in_aabb(p, box: Aabb) -> bool:
    return all(lo <= x <= hi for x, lo, hi in zip(p, box.lo, box.hi))


def _point_in_sphere(p, s: Sphere) -> bool:
    return _dist2(p, s.center) <= s.radius * s.radius


def _point_on_segment(p, s: Segment) -> bool:
    ab = _sub(s.b, s.a)
    ap = _sub(p, s.a)
    if not _is_collinear(ab, ap):
        return False
    t = _dot(ap, ab)
    return 0.0 <= t <= _dot(ab, ab)


def _point_on_ray(p, r: Ray) -> bool:
    op = _sub(p, r.origin)
    return _is_collinear(r.direction, op) and _dot(op, r.direction) >= 0.0


def _same_side_tests(p, t: Triangle, n) -> bool:
    """Signed sub-area tests only; assumes p lies in the triangle's plane.

    Split out because plane-crossing points derived inside kernels sit on
    the plane by construction but not exactly in floats.
    """
    for u, v in ((t.a, t.b), (t.b, t.c), (t.c, t.a)):
        edge = _sub(v, u)
        if _dot(_cross3(edge, _sub(p, u)), n) < 0.0:
            return False
    return True


def _point_in_triangle(p, t: Triangle) -> bool:
    ab = _sub(t.b, t.a)
    ac = _sub(t.c, t.a)
    n = _cross3(ab, ac)
    ap = _sub(p, t.a)
    if _dot(n, ap) != 0.0:
        return False
    return _same_side_tests(p, t, n)


def point_in(g, p) -> bool:
    if isinstance(g, Point):
        return tuple(p) == g.coords
    if isinstance(g, Aabb):
        return _point_in_aabb(p, g)
    if isinstance(g, Sphere):
        return _point_in_sphere(p, g)
    if isinstance(g, Segment):
        return _point_on_segment(p, g)
    if isinstance(g, Ray):
        return _point_on_ray(p, g)
    if isinstance(g, Triangle):
        return _point_in_triangle(p, g)
    raise TypeError(f"not a geometry: {g!r}")


# --------------------------------------------------------------------------
# Closest points on parametric shapes.


def _closest_on_segment(p, a, b):
    ab = _sub(b, a)
    denom = _dot(ab, ab)
    if denom == 0.0:
        return a
    t = _dot(_sub(p, a), ab) / denom
    t = min(1.0, max(0.0, t))
    return _add(a, _scale(ab, t))


def _closest_on_ray(p, r: Ray):
    d = r.direction
    t = _dot(_sub(p, r.origin), d) / _dot(d, d)
    t = max(0.0, t)
    return _add(r.origin, _scale(d, t))


def _closest_on_triangle(p, t: Triangle):
    """Closest point on a solid triangle (vertex/edge/face region tests)."""
    a, b, c = t.a, t.b, t.c
    ab = _sub(b, a)
    ac = _sub(c, a)
    ap = _sub(p, a)
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return a
    bp = _sub(p, b)
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0 and d1 != d3:
        return _add(a, _scale(ab, d1 / (d1 - d3)))
    cp = _sub(p, c)
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0 and d2 != d6:
        return _add(a, _scale(ac, d2 / (d2 - d6)))
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        span = (d4 - d3) + (d5 - d6)
        if span != 0.0:
            w = (d4 - d3) / span
            return _add(b, _scale(_sub(c, b), w))
    total = va + vb + vc
    if total == 0.0:
        # Degenerate (collinear) triangle: fall back to its edges.
        return min(
            (
                _closest_on_segment(p, a, b),
                _closest_on_segment(p, b, c),
                _closest_on_segment(p, a, c),
            ),
            key=lambda q: _dist2(p, q),
        )
    v = vb / total
    w = vc / total
    return _add(a, _add(_scale(ab, v), _scale(ac, w)))


def _closest_params_lines(p1, d1, range1, p2, d2, range2):
    """Closest (s, t) between p1 + s*d1 and p2 + t*d2 within box ranges.

    Ranges are (lo, hi) with hi possibly +inf (rays). Exact for the convex
    quadratic objective: project the unconstrained solution, re-solve the
    other variable at its clamp, and re-clamp once.
    """

    def clamp(v, rng):
        return min(rng[1], max(rng[0], v))

    r = _sub(p1, p2)
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    if a == 0.0 and e == 0.0:
        return range1[0], range2[0]
    if a == 0.0:
        return range1[0], clamp(f / e, range2)
    c = _dot(d1, r)
    if e == 0.0:
        return clamp(-c / a, range1), range2[0]
    b = _dot(d1, d2)
    denom = a * e - b * b
    s = clamp((b * f - c * e) / denom, range1) if denom != 0.0 else range1[0]
    t = (b * s + f) / e
    if t < range2[0]:
        t = range2[0]
        s = clamp((b * t - c) / a, range1)
    elif t > range2[1]:
        t = range2[1]
        s = clamp((b * t - c) / a, range1)
    return s, t


def _param_dist(p1, d1, range1, p2, d2, range2) -> float:
    s, t = _closest_params_lines(p1, d1, range1, p2, d2, range2)
    return _dist(_add(p1, _scale(d1, s)), _add(p2, _scale(d2, t)))


def _param_aabb_distmin(origin, direction, t_lo, t_hi, box: Aabb) -> float:
    """Min distance from {origin + t*direction : t in [t_lo, t_hi]} to a box.

    The squared distance is piecewise quadratic in t with breakpoints where
    the moving point crosses a slab plane; minimize each piece exactly.
    """
    breaks = {t_lo}
    if math.isfinite(t_hi):
        breaks.add(t_hi)
    for o, d, lo, hi in zip(origin, direction, box.lo, box.hi):
        if d != 0.0:
            for plane in (lo, hi):
                t = (plane - o) / d
                if t_lo < t < t_hi:
                    breaks.add(t)
    ts = sorted(breaks)

    def d2_at(t):
        return sum(
            max(lo - (o + t * d), (o + t * d) - hi, 0.0) ** 2
            for o, d, lo, hi in zip(origin, direction, box.lo, box.hi)
        )

    best = min(d2_at(t) for t in ts)
    intervals = list(zip(ts, ts[1:]))
    if not math.isfinite(t_hi):
        intervals.append((ts[-1], ts[-1] + 1.0))  # representative tail piece
    for u, v in intervals:
        mid = (u + v) / 2.0
        a2 = a1 = 0.0
        for o, d, lo, hi in zip(origin, direction, box.lo, box.hi):
            x = o + mid * d
            if x < lo:
                cc = o - lo
            elif x > hi:
                cc = o - hi
            else:
                continue
            a2 += d * d
            a1 += 2.0 * cc * d
        if a2 > 0.0:
            t_star = -a1 / (2.0 * a2)
            if u < t_star and (t_star < v or not math.isfinite(t_hi)):
                if t_star >= t_lo and t_star <= t_hi:
                    best = min(best, d2_at(t_star))
    return math.sqrt(best)


# --------------------------------------------------------------------------
# Slab and separating-axis intersection tests.


def _slab_intersects(origin, direction, t_lo, t_hi, box: Aabb) -> bool:
    tmin, tmax = t_lo, t_hi
    for o, d, lo, hi in zip(origin, direction, box.lo, box.hi):
        if d == 0.0:
            if o < lo or o > hi:
                return False
            continue
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return False
    return True


def _tri_aabb_intersects(t: Triangle, box: Aabb) -> bool:
    center = tuple((lo + hi) / 2.0 for lo, hi in zip(box.lo, box.hi))
    half = tuple((hi - lo) / 2.0 for lo, hi in zip(box.lo, box.hi))
    verts = [_sub(v, center) for v in (t.a, t.b, t.c)]
    edges = [_sub(verts[1], verts[0]), _sub(verts[2], verts[1]), _sub(verts[0], verts[2])]

    def separated(axis) -> bool:
        if axis == (0.0, 0.0, 0.0):
            return False
        proj = [_dot(v, axis) for v in verts]
        r = sum(h * abs(ax) for h, ax in zip(half, axis))
        return min(proj) > r or max(proj) < -r

    for i in range(3):  # box face normals
        axis = tuple(1.0 if j == i else 0.0 for j in range(3))
        if separated(axis):
            return False
    if separated(_cross3(edges[0], edges[1])):  # triangle normal
        return False
    for i in range(3):  # box axes x triangle edges
        for e in edges:
            axis = tuple(
                e[(i + 2) % 3] if j == (i + 1) % 3
                else -e[(i + 1) % 3] if j == (i + 2) % 3
                else 0.0
                for j in range(3)
            )
            if separated(axis):
                return False
    return True


def _tri_tri_intersects(t0: Triangle, t1: Triangle) -> bool:
    v0 = (t0.a, t0.b, t0.c)
    v1 = (t1.a, t1.b, t1.c)
    e0 = [_sub(v0[(i + 1) % 3], v0[i]) for i in range(3)]
    e1 = [_sub(v1[(i + 1) % 3], v1[i]) for i in range(3)]
    n0 = _cross3(e0[0], e0[1])
    n1 = _cross3(e1[0], e1[1])

    def separated(axis) -> bool:
        if axis == (0.0, 0.0, 0.0):
            return False
        p0 = [_dot(v, axis) for v in v0]
        p1 = [_dot(v, axis) for v in v1]
        return min(p0) > max(p1) or min(p1) > max(p0)

    axes = [n0, n1]
    axes.extend(_cross3(a, b) for a in e0 for b in e1)
    if all(ax == (0.0, 0.0, 0.0) for ax in axes):
        # Fully degenerate (both triangles collinear): compare as segments.
        box0 = aabb_of(t0)
        box1 = aabb_of(t1)
        return intersects(box0, box1)
    coplanar = _is_collinear(n0, n1) and _dot(n0, _sub(t1.a, t0.a)) == 0.0
    if coplanar and n0 != (0.0, 0.0, 0.0):
        # In-plane separating axes: edge normals within the shared plane.
        axes = [_cross3(n0, e) for e in e0 + e1]
    return not any(separated(ax) for ax in axes)


def _ray_tri_intersects(r: Ray, t: Triangle) -> bool:
    e1 = _sub(t.b, t.a)
    e2 = _sub(t.c, t.a)
    n = _cross3(e1, e2)
    denom = _dot(r.direction, n)
    if denom == 0.0:
        # Parallel: hit only if coplanar and overlapping in-plane.
        if _dot(n, _sub(r.origin, t.a)) != 0.0:
            return False
        if _point_in_triangle(r.origin, t):
            return True
        return any(
            _param_dist(r.origin, r.direction, (0.0, INF), a, _sub(b, a), (0.0, 1.0))
            == 0.0
            for a, b in ((t.a, t.b), (t.b, t.c), (t.c, t.a))
        )
    d = _dot(n, _sub(t.a, r.origin)) / denom
    if d < 0.0:
        return False
    hit = _add(r.origin, _scale(r.direction, d))
    return _same_side_tests(hit, t, n)


# --------------------------------------------------------------------------
# Relation kernels. `contains(a, b)` means b is a subset of a.


def contains(a, b) -> bool:
    if isinstance(b, Sphere):
        if isinstance(a, Aabb):
            return all(
                lo <= c - b.radius and c + b.radius <= hi
                for c, lo, hi in zip(b.center, a.lo, a.hi)
            )
        if isinstance(a, Sphere):
            return _dist(a.center, b.center) + b.radius <= a.radius
        return b.radius == 0.0 and point_in(a, b.center)
    if isinstance(b, Ray):
        if isinstance(a, Ray):
            return (
                _point_on_ray(b.origin, a)
                and _is_collinear(a.direction, b.direction)
                and _dot(a.direction, b.direction) > 0.0
            )
        return False  # every other shape is bounded
    hull = _hull_points(b)
    if hull is None:
        raise UnsupportedKernel("contains", geom_kind(a), geom_kind(b))
    return all(point_in(a, v) for v in hull)


_INTERSECT_DISPATCH = {}


def _both_ways(kind_a, kind_b):
    def register(fn):
        _INTERSECT_DISPATCH[(kind_a, kind_b)] = fn
        if kind_a != kind_b:
            _INTERSECT_DISPATCH[(kind_b, kind_a)] = lambda a, b: fn(b, a)
        return fn

    return register


@_both_ways("point", "point")
def _(a, b):
    return a.coords == b.coords


for _k in ("aabb", "sphere", "segment", "ray", "triangle"):
    @_both_ways("point", _k)
    def _(a, b):
        return point_in(b, a.coords)


@_both_ways("aabb", "aabb")
def _(a, b):
    return all(
        alo <= bhi and blo <= ahi
        for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi)
    )


@_both_ways("aabb", "sphere")
def _(a, b):
    return distmin(Point(b.center), a) <= b.radius


@_both_ways("sphere", "sphere")
def _(a, b):
    return _dist(a.center, b.center) <= a.radius + b.radius


@_both_ways("segment", "aabb")
def _(a, b):
    return _slab_intersects(a.a, _sub(a.b, a.a), 0.0, 1.0, b)


@_both_ways("ray", "aabb")
def _(a, b):
    return _slab_intersects(a.origin, a.direction, 0.0, INF, b)


@_both_ways("triangle", "aabb")
def _(a, b):
    return _tri_aabb_intersects(a, b)


@_both_ways("segment", "sphere")
def _(a, b):
    return _dist(_closest_on_segment(b.center, a.a, a.b), b.center) <= b.radius


@_both_ways("ray", "sphere")
def _(a, b):
    return _dist(_closest_on_ray(b.center, a), b.center) <= b.radius


@_both_ways("triangle", "sphere")
def _(a, b):
    return _dist(_closest_on_triangle(b.center, a), b.center) <= b.radius


@_both_ways("ray", "triangle")
def _(a, b):
    return _ray_tri_intersects(a, b)


@_both_ways("segment", "triangle")
def _(a, b):
    d = _sub(a.b, a.a)
    n = _cross3(_sub(b.b, b.a), _sub(b.c, b.a))
    denom = _dot(d, n)
    if denom == 0.0:
        # Parallel: hit only if coplanar and overlapping in-plane.
        if _dot(n, _sub(a.a, b.a)) != 0.0:
            return False
        if _point_in_triangle(a.a, b) or _point_in_triangle(a.b, b):
            return True
        return any(
            _param_dist(a.a, d, (0.0, 1.0), u, _sub(v, u), (0.0, 1.0)) == 0.0
            for u, v in ((b.a, b.b), (b.b, b.c), (b.c, b.a))
        )
    t = _dot(n, _sub(b.a, a.a)) / denom
    if not 0.0 <= t <= 1.0:
        return False
    return _same_side_tests(_add(a.a, _scale(d, t)), b, n)


@_both_ways("triangle", "triangle")
def _(a, b):
    return _tri_tri_intersects(a, b)


@_both_ways("segment", "segment")
def _(a, b):
    return (
        _param_dist(a.a, _sub(a.b, a.a), (0.0, 1.0), b.a, _sub(b.b, b.a), (0.0, 1.0))
        == 0.0
    )


@_both_ways("segment", "ray")
def _(a, b):
    return (
        _param_dist(a.a, _sub(a.b, a.a), (0.0, 1.0), b.origin, b.direction, (0.0, INF))
        == 0.0
    )


@_both_ways("ray", "ray")
def _(a, b):
    return (
        _param_dist(a.origin, a.direction, (0.0, INF), b.origin, b.direction, (0.0, INF))
        == 0.0
    )


def intersects(a, b) -> bool:
    fn = _INTERSECT_DISPATCH.get((geom_kind(a), geom_kind(b)))
    if fn is None:
        raise UnsupportedKernel("intersects", geom_kind(a), geom_kind(b))
    return fn(a, b)


def touches(a, b) -> bool:
    """Boundary contact without interior overlap (boxes only)."""
    if not (isinstance(a, Aabb) and isinstance(b, Aabb)):
        raise UnsupportedKernel("touches", geom_kind(a), geom_kind(b))
    if not intersects(a, b):
        return False
    interiors = all(
        alo < bhi and blo < ahi
        for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi)
    )
    return not interiors


def geo_le(a, b) -> bool:
    """Dominance order: every point of a <= every point of b, all axes."""
    ba, bb = aabb_of(a), aabb_of(b)
    return all(ah <= bl for ah, bl in zip(ba.hi, bb.lo))


def geo_lt(a, b) -> bool:
    ba, bb = aabb_of(a), aabb_of(b)
    return all(ah < bl for ah, bl in zip(ba.hi, bb.lo))


# --------------------------------------------------------------------------
# Metric kernels.

_DISTMIN_DISPATCH = {}


def _dist_pair(kind_a, kind_b):
    def register(fn):
        _DISTMIN_DISPATCH[(kind_a, kind_b)] = fn
        if kind_a != kind_b:
            _DISTMIN_DISPATCH[(kind_b, kind_a)] = lambda a, b: fn(b, a)
        return fn

    return register


@_dist_pair("point", "point")
def _(a, b):
    return _dist(a.coords, b.coords)


@_dist_pair("point", "aabb")
def _(a, b):
    return math.sqrt(
        sum(
            max(lo - x, x - hi, 0.0) ** 2
            for x, lo, hi in zip(a.coords, b.lo, b.hi)
        )
    )


@_dist_pair("point", "segment")
def _(a, b):
    return _dist(a.coords, _closest_on_segment(a.coords, b.a, b.b))


@_dist_pair("point", "ray")
def _(a, b):
    return _dist(a.coords, _closest_on_ray(a.coords, b))


@_dist_pair("point", "triangle")
def _(a, b):
    return _dist(a.coords, _closest_on_triangle(a.coords, b))


@_dist_pair("aabb", "aabb")
def _(a, b):
    return math.sqrt(
        sum(
            max(alo - bhi, blo - ahi, 0.0) ** 2
            for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi)
        )
    )


@_dist_pair("segment", "aabb")
def _(a, b):
    return _param_aabb_distmin(a.a, _sub(a.b, a.a), 0.0, 1.0, b)


@_dist_pair("ray", "aabb")
def _(a, b):
    return _param_aabb_distmin(a.origin, a.direction, 0.0, INF, b)


@_dist_pair("segment", "segment")
def _(a, b):
    return _param_dist(a.a, _sub(a.b, a.a), (0.0, 1.0), b.a, _sub(b.b, b.a), (0.0, 1.0))


@_dist_pair("segment", "ray")
def _(a, b):
    return _param_dist(
        a.a, _sub(a.b, a.a), (0.0, 1.0), b.origin, b.direction, (0.0, INF)
    )


@_dist_pair("ray", "ray")
def _(a, b):
    return _param_dist(
        a.origin, a.direction, (0.0, INF), b.origin, b.direction, (0.0, INF)
    )


@_dist_pair("segment", "triangle")
def _(a, b):
    return _seg_or_ray_to_triangle(a.a, _sub(a.b, a.a), (0.0, 1.0), b)


@_dist_pair("ray", "triangle")
def _(a, b):
    return _seg_or_ray_to_triangle(a.origin, a.direction, (0.0, INF), b)


def _seg_or_ray_to_triangle(origin, direction, t_range, tri: Triangle) -> float:
    shape = (
        Ray(origin, direction)
        if t_range[1] == INF
        else Segment(origin, _add(origin, direction))
    )
    if intersects(shape, tri):
        return 0.0
    cands = [
        _dist(origin, _closest_on_triangle(origin, tri)),
    ]
    if t_range[1] != INF:
        end = _add(origin, _scale(direction, t_range[1]))
        cands.append(_dist(end, _closest_on_triangle(end, tri)))
    for u, v in ((tri.a, tri.b), (tri.b, tri.c), (tri.c, tri.a)):
        cands.append(_param_dist(origin, direction, t_range, u, _sub(v, u), (0.0, 1.0)))
    # Parallel pass over the face: the closest pair can be interior/interior.
    n = _cross3(_sub(tri.b, tri.a), _sub(tri.c, tri.a))
    nn = _dot(n, n)
    if nn != 0.0 and _dot(n, direction) == 0.0:
        off = _dot(n, _sub(origin, tri.a)) / nn
        proj = _sub(origin, _scale(n, off))
        if _same_side_tests(proj, tri, n) or any(
            _param_dist(proj, direction, t_range, u, _sub(v, u), (0.0, 1.0)) == 0.0
            for u, v in ((tri.a, tri.b), (tri.b, tri.c), (tri.c, tri.a))
        ):
            cands.append(abs(off) * math.sqrt(nn))
    return min(cands)


def distmin(a, b) -> float:
    ka, kb = geom_kind(a), geom_kind(b)
    if ka == "sphere":
        return max(0.0, distmin(Point(a.center), b) - a.radius)
    if kb == "sphere":
        return max(0.0, distmin(a, Point(b.center)) - b.radius)
    fn = _DISTMIN_DISPATCH.get((ka, kb))
    if fn is None:
        raise UnsupportedKernel("distmin", ka, kb)
    return fn(a, b)


def distmax(a, b) -> float:
    ka, kb = geom_kind(a), geom_kind(b)
    if ka == "ray" or kb == "ray":
        return INF
    if ka == "sphere":
        return distmax(Point(a.center), b) + a.radius
    if kb == "sphere":
        return distmax(a, Point(b.center)) + b.radius
    ha, hb = _hull_points(a), _hull_points(b)
    if ha is None or hb is None:
        raise UnsupportedKernel("distmax", ka, kb)
    return max(_dist(p, q) for p in ha for q in hb)


# --------------------------------------------------------------------------
# Public dispatch and the support table used by the typechecker.

RELATIONS = (
    "intersects",
    "contains",
    "within",
    "covers",
    "disjoint",
    "equals",
    "touches",
    "geo_le",
    "geo_lt",
)
METRICS = ("distmin", "distmax")


def eval_relation(rel: str, a, b) -> bool:
    if rel == "intersects":
        return intersects(a, b)
    if rel == "contains":
        return contains(a, b)
    if rel == "covers":
        # Lower-dimensional boundaries coincide with the sets themselves
        # under closed semantics, so covering equals containment here.
        return contains(a, b)
    if rel == "within":
        return contains(b, a)
    if rel == "disjoint":
        return not intersects(a, b)
    if rel == "equals":
        return contains(a, b) and contains(b, a)
    if rel == "touches":
        return touches(a, b)
    if rel == "geo_le":
        return geo_le(a, b)
    if rel == "geo_lt":
        return geo_lt(a, b)
    raise UnsupportedKernel(rel, geom_kind(a), geom_kind(b))


def eval_metric(metric: str, a, b) -> float:
    if metric == "distmin":
        return distmin(a, b)
    if metric == "distmax":
        return distmax(a, b)
    raise UnsupportedKernel(metric, geom_kind(a), geom_kind(b))


_HULL_KINDS = ("point", "aabb", "segment", "triangle")
_ALL_KINDS = ("point", "aabb", "sphere", "segment", "ray", "triangle")


def _contains_supported(ka: str, kb: str) -> bool:
    # Total over all shape pairs: hulls/spheres test exactly, and an
    # unbounded right-hand side inside a bounded left-hand side is an
    # exact constant false (ray-in-ray has its own kernel).
    return ka in _ALL_KINDS and kb in _ALL_KINDS


def has_kernel(op: str, ka: str, kb: str) -> bool:
    """Whether eval_relation/eval_metric supports this ordered pair."""
    if op in ("geo_le", "geo_lt"):
        return True  # enclosing boxes exist for every shape
    if op == "touches":
        return ka == "aabb" and kb == "aabb"
    if op in ("intersects", "disjoint"):
        return (ka, kb) in _INTERSECT_DISPATCH
    if op == "contains":
        return _contains_supported(ka, kb)
    if op == "within":
        return _contains_supported(kb, ka)
    if op == "covers":
        return _contains_supported(ka, kb)
    if op == "equals":
        return _contains_supported(ka, kb) and _contains_supported(kb, ka)
    if op == "distmin":
        if ka == "sphere":
            return kb == "sphere" or has_kernel("distmin", "point", kb)
        if kb == "sphere":
            return has_kernel("distmin", ka, "point")
        return (ka, kb) in _DISTMIN_DISPATCH
    if op == "distmax":
        # Rays give +inf; spheres reduce to their centers.
        if ka == "ray" or kb == "ray":
            return True
        ra = "point" if ka == "sphere" else ka
        rb = "point" if kb == "sphere" else kb
        return ra in _HULL_KINDS and rb in _HULL_KINDS
    return False
