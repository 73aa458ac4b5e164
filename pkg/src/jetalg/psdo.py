"""Pseudodifferential operators with D^{-1} terms and formal integration.

Formal integration works one jet order at a time.  A total derivative D Q of
an order n-1 expression is affine in u_n with coefficient dQ/du_{n-1}, so the
coefficient is integrated in u_{n-1} and D of the partial result subtracted.
The antiderivative in u_{n-1} is found by undetermined coefficients.  The
ansatz is rational in u_{n-1}, polynomial in the function symbols applied to
u_{n-1} (together with the symbols they are derivatives of, such as a for a'
or wp for wp'), and affine in one surd depending on u_{n-1}.  Its
denominator divides prod f_i^(e_i - 1) over the factors of the integrand's
denominator that involve u_{n-1}, and its degrees are bounded by those of
the integrand.  The resulting linear system is solved exactly over the field
of the remaining generators.  Antiderivatives needing logarithms, x, or new
transcendental functions are reported as outside the class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import _frac as R
from . import _poly as P
from . import expr as _expr
from .diffalg import (
    DifferentialOperator, _columns_to_rows, _D, _E, _F, _nullspace, apply_operator_frac,
    euler_operator_frac,
)
from .errors import IntegrandOutsideClass, NotATotalDerivative
from .expr import as_expr, jet
from .oracle import zero_test


@dataclass(frozen=True)
class PseudoDiffOperator:
    """local + sum of left * D^{-1} o inner."""

    local: DifferentialOperator
    nonlocal_terms: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "nonlocal_terms",
                           tuple((as_expr(a), b) for a, b in self.nonlocal_terms))

    def __call__(self, e, var="u"):
        return apply_psdo(self, e, var)

    def __str__(self):
        parts = [str(self.local)] if self.local.order >= 0 else []
        for left, inner in self.nonlocal_terms:
            parts.append(f"({left})*Dinv*[{inner}]")
        return " + ".join(parts) if parts else "0"


def is_total_x_derivative(e, var="u", trials=None, seed=None):
    """Verdict of the zero test on the Euler operator of e."""
    return zero_test(euler_operator_frac(_F(e), var), trials, seed)


def _lower_chain(h):
    """Generators whose derivative in the argument is h, when known."""
    sym = h.symbol
    arg = R.to_expr(h.arg)
    if sym.is_fresh_chain:
        return [R.generator_of(sym(arg, k)) for k in range(h.order)]
    if sym.kind == "weierstrass":
        for wp, wpd in list(_expr._wp_cache.values()):
            if wpd is sym:
                return [R.generator_of(wp(arg))]
    return []


def _inside(a, g):
    """(function generators of g, surd or None); raise if the class is left."""
    funcs = []
    surd = None
    stack = [R.gen(i) for i in a.gen_indices()]
    seen = set()
    gf = R.gen_frac(g)
    while stack:
        h = stack.pop()
        if h.index in seen or h.kind != "app" or not R.depends_on(h.arg, g):
            continue
        seen.add(h.index)
        if h.is_surd:
            surd = h
            stack.extend(R.gen(i) for i in h.arg.gen_indices())
        elif h.arg == gf:
            funcs.append(h)
            funcs.extend(_lower_chain(h))
        else:
            raise IntegrandOutsideClass(f"integrand involves {g.node()} inside {h.node()}")
    out = []
    for h in funcs:
        if h not in out:
            out.append(h)
    return out, surd


def _degree(F, i):
    return P.p_degree(F.num, i) - sum(P.p_degree(f.poly, i) * e for f, e in F.den)


def _monomials(gens, deg):
    """Products of the generators of total degree <= deg (algebraic ones at most once)."""
    out = [R.ONE]
    for h in gens:
        top = 1 if h.is_alg else deg
        nxt = []
        for m in out:
            p = m
            for _ in range(top + 1):
                nxt.append(p)
                p = R.mul(p, R.gen_frac(h))
        out = nxt
    keep = []
    for m in out:
        if sum(e for i, e in P.mono_items(P.p_occupancy(m.num)) if any(h.index == i for h in gens)) <= deg:
            keep.append(m)
    return keep


_MAX_ANSATZ = 400


def _antiderivative(a, g):
    """Q with dQ/dg = a, or None if no such Q exists in the ansatz class.

    The class is rational in g and in the function symbols of g met in a
    (with their known antiderivative symbols), plus one surd depending on g.
    """
    if a.is_zero():
        return R.ZERO
    funcs, surd = _inside(a, g)
    i = g.index
    watched = {i} | {h.index for h in funcs}
    gdens = [(f, e) for f, e in a.den if f.gens & watched]
    # Hermite bound e - 1 for factors polynomial in g; factors built only from
    # function symbols (exp(u) and the like) may keep their full exponent
    E = R.ONE
    degE = 0
    for f, e in gdens:
        k = e - 1 if i in f.gens else e
        if k > 0:
            E = R.mul(E, R.make(f.power(k), {}))
            degE += P.p_degree(f.poly, i) * k
    deg = _degree(a, i)
    if surd is not None:
        # the surd grows like half the degree of its radicand
        half = -(-max(0, _degree(surd.arg, i)) // 2)
        deg = max(P.p_degree({m: c}, i) + half * P.p_degree({m: c}, surd.index) for m, c in a.num.items()) \
            - sum(P.p_degree(f.poly, i) * e for f, e in a.den)
    d = max(0, deg + 1 + degE + (1 if surd is not None else 0))
    fdeg = 0
    for m, _ in a.num.items():
        fdeg = max(fdeg, sum(e for j, e in P.mono_items(m) if j in watched and j != i))
    monos = _monomials(funcs, fdeg + 1) if funcs else [R.ONE]
    tails = [R.ONE] if surd is None else [R.ONE, R.gen_frac(surd)]
    if (d + 1) * len(monos) * len(tails) > _MAX_ANSATZ:
        raise IntegrandOutsideClass("antiderivative ansatz is too large")
    dg = R.partial(g, chain=True)
    invE = R.inverse(E)
    basis = []
    gpow = invE
    for _ in range(d + 1):
        for m in monos:
            for t in tails:
                basis.append(R.mul(R.mul(gpow, m), t))
        gpow = R.mul(gpow, R.gen_frac(g))
    cols = [dg.apply(b) for b in basis] + [R.neg(a)]
    # everything that varies with g (including chain symbols created by differentiating)
    rows = _columns_to_rows(cols, keep=lambda h: h.index == i or (h.kind == "app" and R.depends_on(h.arg, g)))
    for v in _nullspace(rows, len(cols)):
        if not v[-1].is_zero():
            inv = R.inverse(v[-1])
            return R.frac_sum([R.mul(R.mul(c, inv), b) for c, b in zip(v, basis)])
    return None


def integrate_total_frac(F, var="u"):
    D = _D()
    total = []
    rest = F
    while not rest.is_zero():
        n = R.jet_order(rest, var)
        if n < 0:
            raise IntegrandOutsideClass("nonzero remainder free of jets; its antiderivative needs x")
        if n == 0:
            raise NotATotalDerivative("remainder depends on the undifferentiated variable only")
        top = R.gen_jet(var, n)
        dtop = R.partial(top, chain=True)
        a = dtop.apply(rest)
        if not dtop.apply(a).is_zero() or R.depends_on(a, top):
            raise NotATotalDerivative(f"not affine in {top.node()}")
        Q = _antiderivative(a, R.gen_jet(var, n - 1))
        if Q is None:
            if not zero_test(euler_operator_frac(F, var)).is_zero:
                raise NotATotalDerivative("Euler operator does not vanish")
            raise IntegrandOutsideClass("antiderivative is not rational")
        total.append(Q)
        new = R.add(rest, R.neg(D.apply(Q)))
        if R.jet_order(new, var) >= n:
            raise NotATotalDerivative(f"remainder still involves {top.node()}")
        rest = new
    return R.frac_sum(total)


def integrate_total(e, var="u"):
    """Q with D Q = e and integration constant 0.

    Raises NotATotalDerivative when e is not a total derivative and
    IntegrandOutsideClass when the antiderivative would leave the rational
    class (logarithms, x, or the integration variable inside a function).
    """
    return _E(integrate_total_frac(_F(e), var))


def apply_psdo_frac(L, F, var="u"):
    terms = [apply_operator_frac(L.local, F)]
    for left, inner in L.nonlocal_terms:
        integrand = apply_operator_frac(inner, F)
        terms.append(R.mul(_F(left), integrate_total_frac(integrand, var)))
    return R.frac_sum(terms)


def apply_psdo(L, e, var="u"):
    """local(e) + sum left_i * D^{-1}(inner_i(e))."""
    return _E(apply_psdo_frac(L, _F(e), var))


def w_recursion(var="w"):
    """D^2 - 2(w2/w1) D + w1 D^{-1} o (w3/w1^2 - w2^2/w1^3) D."""
    w1, w2, w3 = (jet(var, k) for k in (1, 2, 3))
    local = DifferentialOperator([0, -2 * w2 / w1, 1])
    inner = DifferentialOperator([0, w3 / w1 ** 2 - w2 ** 2 / w1 ** 3])
    return PseudoDiffOperator(local, ((w1, inner),))


def identity_operator():
    return PseudoDiffOperator(DifferentialOperator([1]))


__all__ = [
    "PseudoDiffOperator", "is_total_x_derivative", "integrate_total", "apply_psdo",
    "w_recursion", "identity_operator",
]
