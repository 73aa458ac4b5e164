from __future__ import annotations

import pytest
from hypothesis import given, settings

from conftest import expressions
from jetalg import catalog as C
from jetalg.diffalg import DifferentialOperator, apply_operator, symmetry_residual, total_x_derivative
from jetalg.errors import IntegrandOutsideClass, NotATotalDerivative
from jetalg.expr import ZERO, canonicalize, jet
from jetalg.oracle import NONZERO, PROVEN_ZERO
from jetalg.parser import parse
from jetalg.psdo import (
    PseudoDiffOperator, apply_psdo, identity_operator, integrate_total, is_total_x_derivative,
    w_recursion,
)

w1, w2, w3 = (jet("w", k) for k in (1, 2, 3))
G3 = w3 - w2 ** 2 * 3 / (2 * w1)


def same(a, b):
    return canonicalize(a - b) == ZERO


def test_total_derivative_recognition():
    assert is_total_x_derivative(parse("u1*u2")).kind == PROVEN_ZERO
    assert is_total_x_derivative(parse("u1^2")).kind == NONZERO
    assert is_total_x_derivative(w2 * w3 / w1 ** 2 - w2 ** 3 / w1 ** 3, "w").kind == PROVEN_ZERO


def test_integrate_examples():
    assert same(integrate_total(parse("u1*u2")), parse("u1^2/2"))
    assert same(integrate_total(w2 * w3 / w1 ** 2 - w2 ** 3 / w1 ** 3, "w"), w2 ** 2 / (2 * w1 ** 2))
    with pytest.raises(NotATotalDerivative):
        integrate_total(parse("u1^2"))


@pytest.mark.parametrize("text", ["u2/u1", "u*u1/(u^2 + 1)", "x*u1"])
def test_integrands_outside_the_class(text):
    # logarithms and x are not produced
    with pytest.raises((IntegrandOutsideClass, NotATotalDerivative)):
        integrate_total(parse(text))


@pytest.mark.parametrize("text", [
    "a(u)", "exp(u1)*u", "sqrt(u1^2 + 1)", "u1/sqrt(u1^2 + 1)", "wp(u)", "tan(u)*u1",
    "a'(u)*u2^2", "u1^2*a(u)/(u + 1)", "u*u1/sqrt(u1^2 + b(u))",
])
def test_integrate_function_symbols_and_surds(text):
    P = parse(text)
    Q = integrate_total(total_x_derivative(P))
    assert same(total_x_derivative(Q), total_x_derivative(P))


def test_recursion_operator_on_translation():
    L = w_recursion()
    assert same(apply_psdo(L, w1, "w"), G3)


def test_recursion_step_and_depth_two():
    L = w_recursion()
    eq = C.get_equation("w_eq")
    G5 = apply_psdo(L, G3, "w")
    expected = (jet("w", 5) - 5 * w2 * jet("w", 4) / w1 - 5 * w3 ** 2 / (2 * w1)
                + 25 * w2 ** 2 * w3 / (2 * w1 ** 2) - 45 * w2 ** 4 / (8 * w1 ** 3))
    assert same(G5, expected)
    for G in (apply_psdo(L, w1, "w"), apply_psdo(L, apply_psdo(L, w1, "w"), "w"), G5):
        assert symmetry_residual(eq, G).verdict.kind == PROVEN_ZERO


def test_identity_operator():
    e = parse("u2^2/(u + 1) + a(u)")
    assert same(apply_psdo(identity_operator(), e), e)
    assert str(identity_operator()) == "(1)"


def test_nonlocal_term_must_integrate():
    L = PseudoDiffOperator(DifferentialOperator([0]), ((jet("u", 0), DifferentialOperator([1])),))
    with pytest.raises(NotATotalDerivative):
        apply_psdo(L, parse("u1^2"))


@given(expressions())
def test_integrate_round_trip(P):
    DP = total_x_derivative(P)
    if canonicalize(DP) == ZERO:
        return
    Q = integrate_total(DP)
    assert canonicalize(total_x_derivative(Q) - DP) == ZERO
    assert canonicalize(total_x_derivative(Q - P)) == ZERO


@settings(max_examples=50)
@given(expressions(max_leaves=4), expressions(max_leaves=4), expressions())
def test_local_psdo_matches_operator(c0, c1, e):
    A = DifferentialOperator([c0, c1, 1])
    assert same(apply_psdo(PseudoDiffOperator(A), e), apply_operator(A, e))
