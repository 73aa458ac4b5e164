from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from jetalg.expr import ZERO, Const, Param, canonicalize, exp, fresh_function, jet, sqrt

settings.register_profile("default", deadline=None, max_examples=100, derandomize=True)
settings.load_profile("default")

A = fresh_function("a")


def small_fractions():
    return st.builds(Fraction, st.integers(-6, 6), st.integers(1, 5))


def _leaves(var="u", surds=True):
    base = [
        st.integers(0, 4).map(lambda k: jet(var, k)),
        st.integers(1, 3).map(lambda k: jet(var, k)),
        small_fractions().map(Const),
        st.sampled_from([Param("p"), Param("q")]),
        st.just(A(jet(var))),
        st.just(exp(jet(var))),
    ]
    if surds:
        base.append(st.just(sqrt(jet(var, 1) ** 2 + 1)))
    return st.one_of(*base)


def _nonzero(e):
    return canonicalize(e) != ZERO


def expressions(var="u", surds=True, max_leaves=7):
    """Random rational expressions in jets, parameters, a(u), exp(u) and one surd."""
    def extend(ch):
        return st.one_of(
            st.tuples(ch, ch).map(lambda t: t[0] + t[1]),
            st.tuples(ch, ch).map(lambda t: t[0] - t[1]),
            st.tuples(ch, ch).map(lambda t: t[0] * t[1]),
            st.tuples(ch, ch.filter(_nonzero)).map(lambda t: t[0] / t[1]),
            st.tuples(ch, st.integers(2, 3)).map(lambda t: t[0] ** t[1]),
        )
    return st.recursive(_leaves(var, surds), extend, max_leaves=max_leaves)


def polynomials(var="u", max_leaves=6):
    """Differential polynomials with rational coefficients."""
    leaf = st.one_of(st.integers(0, 3).map(lambda k: jet(var, k)), small_fractions().map(Const))

    def extend(ch):
        return st.one_of(
            st.tuples(ch, ch).map(lambda t: t[0] + t[1]),
            st.tuples(ch, ch).map(lambda t: t[0] * t[1]),
        )
    return st.recursive(leaf, extend, max_leaves=max_leaves)


@pytest.fixture
def rng():
    import random
    return random.Random(12345)


# acceptance bookkeeping: one line per criterion in the terminal summary

ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
        status, detail, secs = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status} ({secs:.2f}s) {detail}")
