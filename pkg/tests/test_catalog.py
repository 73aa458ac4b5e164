from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import small_fractions
from jetalg import catalog as C
from jetalg.diffalg import conserved_density_residual, symmetry_residual
from jetalg.errors import MissingParameter, UnknownFixture
from jetalg.expr import ZERO, Const, canonicalize, jet
from jetalg.oracle import NONZERO, PROVEN_ZERO
from jetalg.parser import parse
from jetalg.transform import pushforward_residual


def test_every_fixture_has_an_anchor():
    for d in C.list_catalog():
        assert d["anchor"]
    kinds = {d["kind"] for d in C.list_catalog()}
    assert kinds == {"equation", "map", "symmetry", "operator"}


def test_unknown_and_missing():
    with pytest.raises(UnknownFixture):
        C.get_equation("nope")
    with pytest.raises(UnknownFixture):
        C.get_map("kdv")
    with pytest.raises(MissingParameter):
        C.get_equation("kn", {"k": None})


def test_bindings_override_defaults():
    eq = C.get_equation("kn", {"k": "7", "g2": "1", "g3": "0"})
    assert "7/u1" in str(eq.rhs)


@settings(max_examples=30)
@given(small_fractions(), small_fractions())
def test_root_relations(e1, e2):
    p = C.resolve_parameters("psi_chain", {"e1": e1, "e2": e2, "A": Fraction(2, 7)})
    e1, e2, e3 = p["e1"], p["e2"], p["e3"]
    assert canonicalize(e1 + e2 + e3) == ZERO
    assert canonicalize(p["g2"] + 4 * (e1 * e2 + e1 * e3 + e2 * e3)) == ZERO
    assert canonicalize(p["g3"] - 4 * e1 * e2 * e3) == ZERO
    assert canonicalize(p["C"] - Const(Fraction(3, 4)) * e1) == ZERO
    assert canonicalize(p["A"] * p["B"] - Fraction(9, 64) * (e1 ** 2 - 4 * e2 * e3)) == ZERO


def test_root_relations_symbolic():
    p = C.resolve_parameters("cd_normalized", {"e1": "e1", "e2": "e2"})
    assert canonicalize(p["e3"] + parse("e1 + e2")) == ZERO


@pytest.mark.parametrize("name", C.names("equation"))
def test_trivial_symmetries(name):
    eq = C.get_equation(name)
    assert symmetry_residual(eq, jet(eq.var, 1)).verdict.kind == PROVEN_ZERO
    assert symmetry_residual(eq, eq.rhs).verdict.kind == PROVEN_ZERO


VERIFYING = ["order2_second", "order2_third", "kn_to_kdv_const_wp", "kn_to_kdv_rational",
             "kn_to_kdv_tan_corrected", "kn_to_kdv_tanh_corrected", "cd_third_order_corrected",
             "psi_chain", "scaling", "derivative"]
FAILING = ["order2_first", "kn_to_kdv_tan", "kn_to_kdv_tanh", "cd_third_order", "identity_kdv_linear"]


@pytest.mark.parametrize("name", VERIFYING)
def test_verifying_maps(name):
    fx = C.fixture(name)
    S = C.get_map(name, {fx.sign_param: 1} if fx.sign_param else {})
    r = pushforward_residual(S, C.get_equation(fx.source), C.get_equation(fx.target))
    assert r.verdict.kind == PROVEN_ZERO


@pytest.mark.parametrize("name", FAILING)
def test_failing_maps(name):
    fx = C.fixture(name)
    for sign in ([1, -1] if fx.sign_param else [None]):
        S = C.get_map(name, {fx.sign_param: sign} if sign else {})
        r = pushforward_residual(S, C.get_equation(fx.source), C.get_equation(fx.target))
        assert r.verdict.kind == NONZERO


def test_first_pair_verifies_with_corrected_equation():
    S = C.get_map("order2_first")
    r = pushforward_residual(S, C.get_equation("order2_first_eq_corrected"), C.get_equation("kdv"))
    assert r.verdict.kind == PROVEN_ZERO


def test_constant_wp_map_both_signs():
    for eps in (1, -1):
        S = C.get_map("kn_to_kdv_const_wp", {"eps": eps})
        r = pushforward_residual(S, C.get_equation("kn_const_wp"), C.get_equation("kdv"))
        assert r.is_zero


def test_third_order_alpha_with_constant_term_fails():
    b = {"with_k0": 1, "sign": 1}
    S = C.get_map("cd_third_order_corrected", b)
    r = pushforward_residual(S, C.get_equation("cd", b), C.get_equation("kdv"))
    assert r.verdict.kind == NONZERO


def test_fifth_order_symmetries():
    eq = C.get_equation("kn")
    assert symmetry_residual(eq, C.get_symmetry("kn_order5")).verdict.kind == NONZERO
    assert symmetry_residual(eq, C.get_symmetry("kn_order5_rescaled")).verdict.kind == PROVEN_ZERO
    kdv = C.get_equation("kdv")
    assert symmetry_residual(kdv, C.get_symmetry("kdv_order5", var="v")).is_zero


@pytest.mark.parametrize("i,conserved", [(1, True), (2, False), (3, False), (4, True), (5, False)])
def test_density_outcomes(i, conserved):
    eq = C.get_equation(f"second_order_{i}")
    r = conserved_density_residual(eq, parse("a(u)"))
    assert r.is_zero == conserved


def test_w_map_is_stored_only():
    fx = C.fixture("w_map")
    assert not fx.verifiable
    assert C.get_map("w_map").phi is not None
