"""Acceptance criteria, each at its stated tolerance and time limit.

Every criterion records one PASS/FAIL line, printed in the terminal summary.
Identities that do not hold as printed are run exactly as printed and are
marked as strict expected failures; their corrected readings are separate
criteria lines that must pass.
"""

from __future__ import annotations

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import ACCEPTANCE, expressions
from jetalg import catalog as C
from jetalg.checks import CheckConfig, run_check
from jetalg.diffalg import apply_operator, euler_operator, frechet, total_x_derivative
from jetalg.expr import ZERO, canonicalize, jet
from jetalg.parser import parse
from jetalg.psdo import apply_psdo, integrate_total, w_recursion
from jetalg.transform import explicit_as_implicit, implicit_invariance_residual, pushforward_residual

CFG = CheckConfig()
STRICT = CheckConfig(strict=True, strict_threshold=50, trials=50)


@contextmanager
def criterion(key, limit=None):
    info = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield info
        secs = time.perf_counter() - t0
        if limit is not None:
            assert secs < limit, f"took {secs:.1f}s, limit {limit}s"
    except BaseException as exc:
        ACCEPTANCE[key] = ("FAIL", info["detail"] or str(exc).splitlines()[0][:160], time.perf_counter() - t0)
        raise
    ACCEPTANCE[key] = ("PASS", info["detail"], time.perf_counter() - t0)


def _rand(rng, lo=-9, hi=9, nonzero=True):
    while True:
        q = Fraction(rng.randint(lo, hi), rng.randint(1, 9))
        if q or not nonzero:
            return str(q)


def _run(command, opts, bindings=None, cfg=CFG):
    return run_check(command, opts, bindings or {}, cfg)


def test_criterion_1_trivial_symmetries():
    with criterion("1", limit=5) as info:
        bad = []
        names = C.names("equation")
        for name in names:
            for cand in ("u1", "@rhs"):
                r = _run("check-symmetry", {"eq": name, "candidate": cand})
                if r["verdict"]["kind"] != "ProvenZero":
                    bad.append((name, cand))
        info["detail"] = f"{2 * len(names) - len(bad)}/{2 * len(names)} ProvenZero over {len(names)} equations"
        assert not bad, bad


def test_criterion_2_kdv_fifth_order():
    with criterion("2", limit=10) as info:
        r = _run("solve-ansatz", {"eq": "kdv", "basis": "u5; u*u3; u1*u2; u^2*u1"})
        info["detail"] = f"solution space {r['solutions']}"
        assert r["dimension"] == 1
        assert r["solutions"][0] == ["1", "5/3", "10/3", "5/6"]
        assert r["confirmed"][0]["verdict"]["kind"] == "ProvenZero"


def _kn_triples(n=3, seed=3):
    rng = random.Random(seed)
    return [{"g2": _rand(rng), "g3": _rand(rng), "k": _rand(rng)} for _ in range(n)]


def _symmetry_triples(candidate):
    out = []
    for b in _kn_triples():
        t0 = time.perf_counter()
        r = _run("check-symmetry", {"eq": "kn", "candidate": candidate}, b, STRICT)
        out.append((b, r, time.perf_counter() - t0))
    return out


@pytest.mark.xfail(strict=True, reason="the printed fifth-order candidate is not a symmetry of the printed equation")
def test_criterion_3_kn_fifth_order_printed():
    with criterion("3") as info:
        res = _symmetry_triples("kn_order5")
        ok = [r["status"] == "verified" and t < 60 for _, r, t in res]
        info["detail"] = (f"printed candidate verified for {sum(ok)}/3 triples "
                          f"({', '.join(r['verdict']['kind'] for _, r, _ in res)})")
        assert all(ok)


def test_criterion_3_corrected_reading():
    with criterion("3 (k -> 2k/3 in the candidate)") as info:
        res = _symmetry_triples("kn_order5_rescaled")
        info["detail"] = f"verified for {sum(r['status'] == 'verified' for _, r, _ in res)}/3 triples"
        assert all(r["status"] == "verified" and t < 60 for _, r, t in res)


def test_criterion_4_recursion_step():
    with criterion("4", limit=60) as info:
        w1, w2, w3 = (jet("w", k) for k in (1, 2, 3))
        G3 = w3 - 3 * w2 ** 2 / (2 * w1)
        L = w_recursion()
        assert canonicalize(apply_psdo(L, w1, "w") - G3) == ZERO
        r = _run("apply-recursion", {"operator": "w_recursion", "arg": "w3 - 3/2*w2^2/w1", "eq": "w_eq"})
        info["detail"] = f"L(G3) = {r['result']}; symmetry {r['verdict']['kind']}"
        assert r["status"] == "verified"


def _second_order(first_source="order2_first_eq"):
    rng = random.Random(5)
    out = {}
    for name, src in (("order2_first", first_source), ("order2_second", "order2_second_eq"),
                      ("order2_third", "order2_third_eq")):
        b = {"k": _rand(rng)}
        out[name] = _run("verify-map", {"map": name, "source": src, "target": "kdv"}, b)
    return out


@pytest.mark.xfail(strict=True, reason="the first printed second-order pair has an inconsistent sign")
def test_criterion_5_second_order_maps_printed():
    with criterion("5", limit=60) as info:
        res = _second_order()
        info["detail"] = ", ".join(f"{k}: {r['status']}" for k, r in res.items())
        assert all(r["status"] == "verified" for r in res.values())


def test_criterion_5_corrected_reading():
    with criterion("5 (sign of the k-term in the first pair)", limit=60) as info:
        res = _second_order("order2_first_eq_corrected")
        info["detail"] = ", ".join(f"{k}: {r['status']}" for k, r in res.items())
        assert all(r["status"] == "verified" for r in res.values())


def test_criterion_6_constant_wp():
    with criterion("6", limit=120) as info:
        r = _run("verify-map", {"map": "kn_to_kdv_const_wp", "sign": "both"}, {"c0": "-7/5"})
        info["detail"] = f"verifying branches eps = {r['sign']}"
        assert r["status"] == "verified" and r["sign"]


def _alphas(n=2, seed=7):
    rng = random.Random(seed)
    return [_rand(rng) for _ in range(n)]


def _maps_9(names):
    res = {}
    for name in names:
        for a in _alphas():
            res[f"{name}(alpha={a})"] = _run("verify-map", {"map": name}, {"alpha": a})
    return res


@pytest.mark.xfail(strict=True, reason="the printed tan/tanh closures do not verify")
def test_criterion_7_closures_printed():
    with criterion("7", limit=300) as info:
        res = {"kn_to_kdv_rational": _run("verify-map", {"map": "kn_to_kdv_rational"})}
        res.update(_maps_9(["kn_to_kdv_tan", "kn_to_kdv_tanh"]))
        info["detail"] = ", ".join(f"{k}: {r['status']}" for k, r in res.items())
        assert all(r["status"] == "verified" for r in res.values())


def test_criterion_7_corrected_reading():
    with criterion("7 (corrected tan/tanh closures)", limit=300) as info:
        res = {"kn_to_kdv_rational": _run("verify-map", {"map": "kn_to_kdv_rational"})}
        res.update(_maps_9(["kn_to_kdv_tan_corrected", "kn_to_kdv_tanh_corrected"]))
        info["detail"] = ", ".join(f"{k}: {r['status']}" for k, r in res.items())
        assert all(r["status"] == "verified" for r in res.values())


def _cd_bindings(seed=11):
    rng = random.Random(seed)
    return {**{f"k{i}": _rand(rng) for i in range(1, 5)}, "k": _rand(rng)}


@pytest.mark.xfail(strict=True, reason="the printed s-term of the third-order map is incorrect")
def test_criterion_8_third_order_printed():
    with criterion("8", limit=300) as info:
        r = _run("verify-map", {"map": "cd_third_order", "sign": "both"}, _cd_bindings())
        info["detail"] = ", ".join(f"z-sign {b['sign']}: {b['verdict']['kind']}" for b in r["branches"])
        assert r["status"] == "verified"


def test_criterion_8_corrected_reading():
    with criterion("8 (corrected s-term)", limit=300) as info:
        r = _run("verify-map", {"map": "cd_third_order_corrected", "sign": "both"}, _cd_bindings())
        info["detail"] = f"verifying z-signs {r['sign']}"
        assert r["status"] == "verified"


def test_criterion_9_conserved_densities():
    with criterion("9") as info:
        subsets = []
        for seed in (0, 1, 2):
            cfg = CheckConfig(seed=seed)
            subsets.append(frozenset(
                i for i in range(1, 6)
                if _run("check-density", {"eq": f"second_order_{i}", "density": "a(u)"}, cfg=cfg)["status"] == "verified"))
        info["detail"] = f"a(u) conserved for forms {sorted(subsets[0])}"
        assert subsets[0] and len(set(subsets)) == 1


def test_criterion_10_half_argument():
    with criterion("10") as info:
        found = []
        for b in _kn_triples(seed=13):
            r = _run("verify-map", {"map": "kn_half_argument"}, b)
            assert r["status"] == "verified", r
            g2, g3, k = (Fraction(b[x]) for x in ("g2", "g3", "k"))
            c = {x: Fraction(v) for x, v in r["constants"].items()}
            assert c == {"a": k, "b": -k * g2 / 4, "c": -k * g3 / 4}
            found.append(r["constants"])
        info["detail"] = f"a = k, b = -k g2/4, c = -k g3/4 on 3 triples, e.g. {found[0]}"


def test_criterion_11_psi_chain():
    with criterion("11", limit=300) as info:
        rng = random.Random(17)
        kinds = []
        for _ in range(2):
            b = {"e1": _rand(rng), "e2": _rand(rng), "A": _rand(rng)}
            r = _run("verify-map", {"map": "psi_chain"}, b)
            kinds.append(r["verdict"]["kind"])
            assert r["status"] == "verified", r
        info["detail"] = f"verdicts {kinds}"


def test_criterion_12_properties():
    with criterion("12", limit=120) as info:

        @settings(max_examples=100)
        @given(expressions())
        def euler_and_frechet(P):
            DP = total_x_derivative(P)
            assert canonicalize(euler_operator(DP)) == ZERO
            assert canonicalize(apply_operator(frechet(P), jet("u", 1)) - DP) == ZERO

        @settings(max_examples=100)
        @given(expressions())
        def round_trip(P):
            DP = total_x_derivative(P)
            if canonicalize(DP) != ZERO:
                assert canonicalize(total_x_derivative(integrate_total(DP)) - DP) == ZERO

        euler_and_frechet()
        round_trip()
        maps = [n for n in C.names("map") if C.fixture(n).verifiable and not C.fixture(n).point]
        for name in maps:
            fx = C.fixture(name)
            S = C.get_map(name, {fx.sign_param: 1} if fx.sign_param else {})
            src, tgt = C.get_equation(fx.source), C.get_equation(fx.target)
            a = pushforward_residual(S, src, tgt).verdict
            b = implicit_invariance_residual(explicit_as_implicit(S), src, tgt).verdict
            assert a.kind == b.kind, name
        count = 0
        for name in C.names():
            for e in C.fixture_expressions(name):
                ctx = C.context_for(e)
                p = str(canonicalize(e))
                assert str(canonicalize(parse(p, ctx))) == p
                count += 1
        info["detail"] = (f"(a) 100+100 cases, (b) 100 round trips, (c) {len(maps)} maps agree, "
                          f"(d) {count} catalog expressions round-trip")
