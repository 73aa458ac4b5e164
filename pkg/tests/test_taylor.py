"""The series oracle as an independent second route for the main identities."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import expressions
from jetalg import catalog as C
from jetalg.diffalg import symmetry_residual, total_x_derivative
from jetalg.expr import canonicalize, jet
from jetalg.oracle import LIKELY_ZERO, NONZERO
from jetalg.parser import parse
from jetalg.taylor import MQ, TaylorPoint, taylor_equal, taylor_pushforward, taylor_symmetry, taylor_total_derivative, taylor_value
from jetalg.transform import pushforward_residual


def test_multiquadratic_arithmetic():
    r2 = MQ({frozenset([2]): Fraction(1)})
    assert (r2 * r2) == MQ.rat(2)
    x = MQ.rat(3) + r2
    assert (x * x.inverse()) == MQ.rat(1)


def test_points_are_deterministic():
    a = taylor_value(parse("u2*u + a(u)"), TaylorPoint((0, 1), 3))
    b = taylor_value(parse("u2*u + a(u)"), TaylorPoint((0, 1), 3))
    assert a == b


def test_relations_hold_at_points():
    e = parse("wp'(u)^2 - 4*wp(u)^3 + g2*wp(u) + g3")
    assert taylor_equal(e, parse("0"), trials=5).kind == LIKELY_ZERO


def test_detects_nonzero():
    assert taylor_equal(parse("u1*u2"), parse("u2*u1 + 1/1000"), trials=3).kind == NONZERO


def test_total_derivative_matches_series():
    e = parse("sqrt(u1^2 + 1)*a(u) + exp(u)/u1")
    assert taylor_total_derivative(e, total_x_derivative(e), trials=5).kind == LIKELY_ZERO
    assert taylor_total_derivative(e, e, trials=3).kind == NONZERO


@settings(max_examples=30)
@given(expressions(max_leaves=5))
def test_series_agrees_with_normal_form(e):
    assert taylor_equal(e, canonicalize(e), trials=2).kind == LIKELY_ZERO


def test_symmetry_examples_agree():
    kdv = C.get_equation("kdv_u")
    assert taylor_symmetry(kdv, jet("u", 2), trials=3).kind == NONZERO
    assert taylor_symmetry(C.get_equation("kdv"), C.get_symmetry("kdv_order5", var="v"), trials=5).kind == LIKELY_ZERO
    kn = C.get_equation("kn")
    assert taylor_symmetry(kn, C.get_symmetry("kn_order5"), trials=3).kind == NONZERO
    assert taylor_symmetry(kn, C.get_symmetry("kn_order5_rescaled"), trials=3).kind == LIKELY_ZERO


@pytest.mark.parametrize("name", [n for n in C.names("map") if C.fixture(n).verifiable and not C.fixture(n).point])
def test_map_verdicts_agree(name):
    fx = C.fixture(name)
    S = C.get_map(name, {fx.sign_param: 1} if fx.sign_param else {})
    src, tgt = C.get_equation(fx.source), C.get_equation(fx.target)
    canonical = pushforward_residual(S, src, tgt).verdict
    series = taylor_pushforward(S, src, tgt, trials=3)
    assert canonical.is_zero == series.is_zero


def test_symmetry_verdicts_agree_on_catalog():
    for name in ("kn", "cd", "second_order_2", "order2_third_eq"):
        eq = C.get_equation(name)
        for G in (jet(eq.var, 1), eq.rhs, jet(eq.var, 2)):
            assert symmetry_residual(eq, G).is_zero == taylor_symmetry(eq, G, trials=2).is_zero
