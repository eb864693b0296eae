"""Geometry kernels checked against point-sampling oracles.

Relations and metrics are exact closed-set semantics, so the sampling
oracle only asserts one-directional facts that sampling can witness:
a shared sampled point refutes non-intersection, a sampled point of b
outside a refutes containment, and sampled pairwise distances must lie
within [distmin, distmax]. Hand-computed exact cases pin the boundaries.
"""

import itertools
import math
import random

import pytest

from treeq.errors import UnsupportedKernel
from treeq.geom import (
    aabb_of,
    aabb_union,
    centroid,
    contains,
    distmax,
    distmin,
    eval_metric,
    eval_relation,
    geo_le,
    geo_lt,
    has_kernel,
    intersects,
    point_in,
    touches,
)
from treeq.values import INF, Aabb, Point, Ray, Segment, Sphere, Triangle

# --------------------------------------------------------------------------
# Shape and point samplers (independent of the kernels under test).


def rand_vec(rng, dim, lo=-10.0, hi=10.0):
    return tuple(rng.uniform(lo, hi) for _ in range(dim))


def rand_shape(rng, kind, dim):
    if kind == "point":
        return Point(rand_vec(rng, dim))
    if kind == "aabb":
        a, b = rand_vec(rng, dim), rand_vec(rng, dim)
        return Aabb(tuple(map(min, a, b)), tuple(map(max, a, b)))
    if kind == "sphere":
        return Sphere(rand_vec(rng, dim), rng.uniform(0.0, 5.0))
    if kind == "segment":
        return Segment(rand_vec(rng, dim), rand_vec(rng, dim))
    if kind == "ray":
        d = rand_vec(rng, dim)
        while all(x == 0.0 for x in d):
            d = rand_vec(rng, dim)
        return Ray(rand_vec(rng, dim), d)
    if kind == "triangle":
        return Triangle(rand_vec(rng, 3), rand_vec(rng, 3), rand_vec(rng, 3))
    raise AssertionError(kind)


def sample_in(rng, g):
    """A point guaranteed to belong to the closed shape g."""
    if isinstance(g, Point):
        return g.coords
    if isinstance(g, Aabb):
        return tuple(rng.uniform(lo, hi) for lo, hi in zip(g.lo, g.hi))
    if isinstance(g, Sphere):
        while True:
            p = tuple(rng.uniform(-1.0, 1.0) for _ in g.center)
            if sum(x * x for x in p) <= 1.0:
                return tuple(
                    c + x * g.radius for c, x in zip(g.center, p)
                )
    if isinstance(g, Segment):
        t = rng.random()
        return tuple(a + t * (b - a) for a, b in zip(g.a, g.b))
    if isinstance(g, Ray):
        t = rng.uniform(0.0, 3.0)
        return tuple(o + t * d for o, d in zip(g.origin, g.direction))
    if isinstance(g, Triangle):
        u, v = rng.random(), rng.random()
        if u + v > 1.0:
            u, v = 1.0 - u, 1.0 - v
        return tuple(
            a + u * (b - a) + v * (c - a)
            for a, b, c in zip(g.a, g.b, g.c)
        )
    raise AssertionError(g)


KINDS = ("point", "aabb", "sphere", "segment", "ray", "triangle")


def shapes_for(rng, dim):
    kinds = KINDS if dim == 3 else tuple(k for k in KINDS if k != "triangle")
    return [rand_shape(rng, k, dim) for k in kinds]


def dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


# --------------------------------------------------------------------------
# Sampling consistency across all supported pairs.


def test_intersects_not_refuted_by_shared_points():
    rng = random.Random(7)
    for dim in (2, 3):
        for _ in range(60):
            shapes = shapes_for(rng, dim)
            for a, b in itertools.product(shapes, repeat=2):
                ka, kb = type(a).__name__.lower(), type(b).__name__.lower()
                if not has_kernel("intersects", ka, kb):
                    continue
                if intersects(a, b):
                    continue
                for _ in range(40):
                    p = sample_in(rng, a)
                    assert not (point_in(a, p) and point_in(b, p)), (a, b, p)


def test_intersects_true_when_sample_shared():
    rng = random.Random(8)
    hits = 0
    for dim in (2, 3):
        for _ in range(120):
            shapes = shapes_for(rng, dim)
            for a, b in itertools.product(shapes, repeat=2):
                ka, kb = type(a).__name__.lower(), type(b).__name__.lower()
                if not has_kernel("intersects", ka, kb):
                    continue
                p = sample_in(rng, a)
                # Exact membership on both sides: float lerp can drift a
                # sample epsilon off an exact lower-dimensional set, which
                # would not witness a true shared point.
                if point_in(a, p) and point_in(b, p):
                    assert intersects(a, b), (a, b, p)
                    hits += 1
    assert hits > 100  # the check actually fired


def test_contains_implies_sampled_points_inside():
    rng = random.Random(9)
    confirmed = 0
    for dim in (2, 3):
        for _ in range(150):
            shapes = shapes_for(rng, dim)
            # Bias toward likely containment: big boxes/spheres around b.
            shapes.append(Aabb((-12.0,) * dim, (12.0,) * dim))
            shapes.append(Sphere((0.0,) * dim, 25.0))
            for a, b in itertools.product(shapes, repeat=2):
                ka, kb = type(a).__name__.lower(), type(b).__name__.lower()
                if not has_kernel("contains", ka, kb):
                    continue
                if not contains(a, b):
                    continue
                for _ in range(25):
                    p = sample_in(rng, b)
                    # Samples of flat shapes carry float lerp error, so
                    # membership is checked as distance-to-shape ~ 0.
                    assert distmin(Point(p), a) <= 1e-7, (a, b, p)
                confirmed += 1
    assert confirmed > 200


def test_distance_bounds_bracket_sampled_distances():
    rng = random.Random(10)
    for dim in (2, 3):
        for _ in range(80):
            shapes = shapes_for(rng, dim)
            for a, b in itertools.product(shapes, repeat=2):
                ka, kb = type(a).__name__.lower(), type(b).__name__.lower()
                if not has_kernel("distmin", ka, kb):
                    continue
                lo = distmin(a, b)
                hi = distmax(a, b) if has_kernel("distmax", ka, kb) else INF
                assert lo <= hi + 1e-9
                for _ in range(20):
                    d = dist(sample_in(rng, a), sample_in(rng, b))
                    assert lo <= d + 1e-9, (a, b, lo, d)
                    assert d <= hi + 1e-9, (a, b, hi, d)


def test_aabb_of_encloses_samples():
    rng = random.Random(11)
    for dim in (2, 3):
        for _ in range(60):
            for g in shapes_for(rng, dim):
                box = aabb_of(g)
                for _ in range(20):
                    p = sample_in(rng, g)
                    assert all(
                        lo - 1e-9 <= x <= hi + 1e-9
                        for x, lo, hi in zip(p, box.lo, box.hi)
                    ), (g, p)


# --------------------------------------------------------------------------
# Exact hand-computed cases (closed-set boundary behavior included).


def test_boxes_touching_at_a_face():
    a = Aabb((0.0, 0.0), (1.0, 1.0))
    b = Aabb((1.0, 0.0), (2.0, 1.0))
    assert intersects(a, b)  # closed sets share the x=1 edge
    assert touches(a, b)
    assert not touches(a, Aabb((0.5, 0.5), (2.0, 2.0)))
    assert not intersects(a, Aabb((1.0 + 1e-9, 0.0), (2.0, 1.0)))


def test_sphere_contains_box_via_corner_distance():
    # Farthest corner at distance sqrt(2) < 5.
    assert contains(Sphere((0.0, 0.0), 5.0), Aabb((-1.0, -1.0), (1.0, 1.0)))
    # Corner exactly on the boundary still counts (closed).
    assert contains(
        Sphere((0.0, 0.0), math.sqrt(2.0)), Aabb((-1.0, -1.0), (1.0, 1.0))
    )
    assert not contains(Sphere((0.0, 0.0), 1.4), Aabb((-1.0, -1.0), (1.0, 1.0)))


def test_box_contains_sphere():
    assert contains(Aabb((-2.0, -2.0), (2.0, 2.0)), Sphere((0.0, 0.0), 2.0))
    assert not contains(Aabb((-2.0, -2.0), (2.0, 2.0)), Sphere((0.5, 0.0), 2.0))


def test_point_membership_boundaries():
    box = Aabb((0.0, 0.0), (1.0, 1.0))
    assert point_in(box, (0.0, 0.0))
    assert point_in(box, (1.0, 1.0))
    assert not point_in(box, (1.0000001, 0.5))
    seg = Segment((0.0, 0.0), (2.0, 0.0))
    assert point_in(seg, (0.0, 0.0))
    assert point_in(seg, (1.0, 0.0))
    assert not point_in(seg, (1.0, 0.0001))
    assert not point_in(seg, (2.5, 0.0))


def test_ray_triangle_intersection():
    tri = Triangle((0.0, 0.0, 1.0), (4.0, 0.0, 1.0), (0.0, 4.0, 1.0))
    up = (0.0, 0.0, 1.0)
    assert intersects(Ray((1.0, 1.0, 0.0), up), tri)
    assert intersects(Ray((0.0, 0.0, 0.0), up), tri)  # hits the corner
    assert not intersects(Ray((3.9, 3.9, 0.0), up), tri)
    assert not intersects(Ray((1.0, 1.0, 2.0), up), tri)  # behind origin


def test_segment_crossing_box():
    box = Aabb((0.0, 0.0), (1.0, 1.0))
    assert intersects(Segment((-1.0, 0.5), (2.0, 0.5)), box)
    assert intersects(Segment((-1.0, -1.0), (0.0, 0.0)), box)  # endpoint on corner
    assert not intersects(Segment((-1.0, -1.0), (-0.1, -0.1)), box)


def test_known_distances():
    a = Aabb((0.0, 0.0), (1.0, 1.0))
    b = Aabb((3.0, 0.0), (4.0, 1.0))
    assert distmin(a, b) == 2.0
    assert distmax(a, b) == pytest.approx(math.sqrt(16.0 + 1.0))
    assert distmin(Point((0.0, 0.0)), Point((3.0, 4.0))) == 5.0
    assert distmax(Point((0.0, 0.0)), Point((3.0, 4.0))) == 5.0
    assert distmin(a, Aabb((0.5, 0.5), (2.0, 2.0))) == 0.0
    s = Sphere((5.0, 0.0), 1.0)
    assert distmin(Point((0.0, 0.0)), s) == 4.0
    assert distmax(Point((0.0, 0.0)), s) == 6.0
    assert distmax(Ray((0.0, 0.0), (1.0, 0.0)), a) == INF


def test_distmin_ray_box():
    box = Aabb((2.0, -1.0), (3.0, 1.0))
    assert distmin(Ray((0.0, 0.0), (1.0, 0.0)), box) == 0.0  # enters the box
    assert distmin(Ray((0.0, 0.0), (-1.0, 0.0)), box) == 2.0  # heads away
    assert distmin(Ray((0.0, 3.0), (1.0, 0.0)), box) == 2.0  # parallel miss


def test_dominance_order():
    a = Aabb((0.0, 0.0), (1.0, 1.0))
    b = Aabb((1.0, 1.0), (2.0, 2.0))
    assert geo_le(a, b)
    assert not geo_lt(a, b)  # shared corner
    assert geo_lt(a, Aabb((1.5, 1.5), (2.0, 2.0)))
    assert not geo_le(b, a)
    assert geo_le(Point((0.0, 0.0)), Point((0.0, 0.0)))
    assert not geo_lt(Point((0.0, 0.0)), Point((0.0, 0.0)))


def test_union_and_centroid():
    u = aabb_union(Aabb((0.0, 0.0), (1.0, 1.0)), Aabb((2.0, -1.0), (3.0, 0.5)))
    assert u == Aabb((0.0, -1.0), (3.0, 1.0))
    assert centroid(Aabb((0.0, 0.0), (2.0, 4.0))) == (1.0, 2.0)
    assert centroid(Point((3.0, 7.0))) == (3.0, 7.0)


# --------------------------------------------------------------------------
# Relation algebra through the string dispatch used by the compiler.


def test_relation_aliases():
    rng = random.Random(12)
    for _ in range(60):
        shapes = shapes_for(rng, 2)
        for a, b in itertools.product(shapes, repeat=2):
            ka, kb = type(a).__name__.lower(), type(b).__name__.lower()
            if has_kernel("intersects", ka, kb):
                assert eval_relation("disjoint", a, b) == (not intersects(a, b))
            if has_kernel("contains", ka, kb):
                got = eval_relation("contains", a, b)
                assert eval_relation("covers", a, b) == got
                assert eval_relation("within", b, a) == got
            if has_kernel("equals", ka, kb):
                assert eval_relation("equals", a, b) == (
                    contains(a, b) and contains(b, a)
                )


def test_equals_is_set_equality():
    p = Point((1.0, 2.0))
    assert eval_relation("equals", p, Point((1.0, 2.0)))
    assert eval_relation("equals", Aabb((0.0, 0.0), (1.0, 1.0)),
                         Aabb((0.0, 0.0), (1.0, 1.0)))
    # A degenerate box equals the point it collapses to.
    assert eval_relation("equals", Aabb((1.0, 2.0), (1.0, 2.0)), p)
    assert not eval_relation("equals", Aabb((0.0, 0.0), (1.0, 1.0)), p)


def test_unsupported_pairs_raise():
    tri = Triangle((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    ray = Ray((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    # Bounded shapes never contain unbounded ones: exact constant false.
    assert not contains(tri, ray)
    assert contains(ray, Segment((1.0, 0.0, 0.0), (5.0, 0.0, 0.0)))
    with pytest.raises(UnsupportedKernel):
        touches(Point((0.0, 0.0)), Point((0.0, 0.0)))
    with pytest.raises(UnsupportedKernel):
        eval_metric("area", tri, tri)


def test_has_kernel_matches_dispatch():
    rng = random.Random(13)
    shapes3 = {type(g).__name__.lower(): g for g in shapes_for(rng, 3)}
    for op in ("intersects", "contains", "within", "covers", "equals",
               "disjoint", "touches", "geo_le", "geo_lt", "distmin", "distmax"):
        for ka, kb in itertools.product(shapes3, repeat=2):
            a, b = shapes3[ka], shapes3[kb]
            fn = eval_metric if op in ("distmin", "distmax") else eval_relation
            if has_kernel(op, ka, kb):
                fn(op, a, b)  # must not raise
            else:
                with pytest.raises(UnsupportedKernel):
                    fn(op, a, b)
