"""Saturating scalar arithmetic: totality, clamping, and algebraic identities.

The independent oracle here is Python's arbitrary-precision integers and
IEEE doubles: every saturating op must agree with the unclamped result
clamped into the representable range, and no op may ever produce NaN.
"""

import math

import pytest

from treeq.values import (
    F64_MAX,
    F64_MIN,
    I64_MAX,
    I64_MIN,
    Aabb,
    Point,
    euclid_div,
    euclid_mod,
    f_add,
    f_div,
    f_mul,
    f_neg,
    f_sub,
    fsat,
    geom_kind,
    sat,
    sat_add,
    sat_mul,
    sat_neg,
    sat_sub,
    t_ceil,
    t_exp,
    t_floor,
    t_ln,
    t_round,
    t_sqrt,
    t_trunc,
    type_limits,
)
from treeq.values import BOOL, F64, I64, ScalarType

INT_PROBES = [
    I64_MIN,
    I64_MIN + 1,
    -(2**62),
    -977,
    -2,
    -1,
    0,
    1,
    2,
    977,
    2**62,
    I64_MAX - 1,
    I64_MAX,
]


def clamp_int(v):
    return max(I64_MIN, min(I64_MAX, v))


def test_sat_int_ops_match_clamped_bignum():
    for a in INT_PROBES:
        for b in INT_PROBES:
            assert sat_add(a, b) == clamp_int(a + b)
            assert sat_sub(a, b) == clamp_int(a - b)
            assert sat_mul(a, b) == clamp_int(a * b)
        assert sat_neg(a) == clamp_int(-a)
        assert sat(a) == a  # probes are in range already


def test_sat_extremes():
    assert sat_add(I64_MAX, 1) == I64_MAX
    assert sat_sub(I64_MIN, 1) == I64_MIN
    assert sat_mul(I64_MAX, I64_MAX) == I64_MAX
    assert sat_mul(I64_MIN, I64_MIN) == I64_MAX
    assert sat_mul(I64_MAX, I64_MIN) == I64_MIN
    assert sat_neg(I64_MIN) == I64_MAX


def test_euclid_division_identity_and_range():
    # Exhaustive small box: q*b + r == a with 0 <= r < |b| whenever b != 0.
    for a in range(-25, 26):
        for b in range(-7, 8):
            q = euclid_div(a, b)
            r = euclid_mod(a, b)
            if b == 0:
                assert q == 0 and r == 0
            else:
                assert q * b + r == a
                assert 0 <= r < abs(b)


def test_euclid_division_known_values():
    assert euclid_div(7, 2) == 3
    assert euclid_div(-7, 2) == -4
    assert euclid_div(7, -2) == -3
    assert euclid_div(-7, -2) == 4
    assert euclid_mod(-7, 2) == 1
    assert euclid_mod(-7, -2) == 1
    assert euclid_mod(7, -2) == 1


def test_euclid_division_saturates():
    assert euclid_div(I64_MIN, -1) == I64_MAX


FLOAT_PROBES = [
    F64_MIN,
    -1e308,
    -1234.5,
    -1.0,
    -1e-300,
    -0.0,
    0.0,
    1e-300,
    1.0,
    1234.5,
    1e308,
    F64_MAX,
]


def test_float_ops_are_total_and_finite():
    for a in FLOAT_PROBES:
        for b in FLOAT_PROBES:
            for v in (f_add(a, b), f_sub(a, b), f_mul(a, b), f_div(a, b)):
                assert not math.isnan(v)
                assert F64_MIN <= v <= F64_MAX
        assert not math.isnan(f_neg(a))


def test_float_clamp_matches_ieee_inside_range():
    for a in (-5.5, -0.25, 0.0, 3.0, 1e10):
        for b in (-2.0, 0.5, 7.25):
            assert f_add(a, b) == a + b
            assert f_sub(a, b) == a - b
            assert f_mul(a, b) == a * b
            assert f_div(a, b) == a / b


def test_float_division_by_zero_is_zero():
    assert f_div(1.0, 0.0) == 0.0
    assert f_div(-1.0, 0.0) == 0.0
    assert f_div(0.0, 0.0) == 0.0
    assert f_div(F64_MAX, 0.0) == 0.0


def test_float_saturation_at_range_edges():
    assert f_add(F64_MAX, F64_MAX) == F64_MAX
    assert f_sub(F64_MIN, F64_MAX) == F64_MIN
    assert f_mul(1e200, 1e200) == F64_MAX
    assert f_mul(-1e200, 1e200) == F64_MIN
    assert f_div(F64_MAX, 1e-300) == F64_MAX
    assert fsat(math.inf) == F64_MAX
    assert fsat(-math.inf) == F64_MIN


def test_totalized_math_functions():
    assert t_sqrt(4.0) == 2.0
    assert t_sqrt(0.0) == 0.0
    assert t_sqrt(-9.0) == 0.0  # clamped, not NaN
    assert t_ln(math.e) == pytest.approx(1.0)
    assert t_ln(0.0) == F64_MIN
    assert t_ln(-3.0) == F64_MIN
    assert t_exp(0.0) == 1.0
    assert t_exp(1e6) == F64_MAX  # overflow saturates
    assert t_exp(-1e6) == 0.0 or t_exp(-1e6) > 0.0  # underflow is fine


def test_totalized_functions_are_monotone():
    # Monotonicity is what makes endpoint bound rules sound for these.
    pts = [-1e9, -100.0, -2.5, -1.0, 0.0, 0.5, 1.0, 2.5, 100.0, 1e9]
    for fn in (t_sqrt, t_ln, t_exp, t_trunc, t_floor, t_ceil, t_round):
        vals = [fn(x) for x in pts]
        assert vals == sorted(vals), fn.__name__


def test_rounding_family():
    assert t_trunc(2.7) == 2.0
    assert t_trunc(-2.7) == -2.0
    assert t_floor(-2.1) == -3.0
    assert t_ceil(2.1) == 3.0
    assert t_round(0.5) == 0.0  # half to even
    assert t_round(1.5) == 2.0
    assert t_round(2.5) == 2.0
    assert t_round(-0.5) == 0.0


def test_type_limits():
    assert type_limits(I64) == (I64_MIN, I64_MAX)
    assert type_limits(F64) == (F64_MIN, F64_MAX)
    assert type_limits(BOOL) == (False, True)
    assert type_limits(ScalarType("enum", "Color", ("red", "blue"))) == (None, None)


def test_geom_kind_names():
    assert geom_kind(Point((0.0, 0.0))) == "point"
    assert geom_kind(Aabb((0.0, 0.0), (1.0, 1.0))) == "aabb"
