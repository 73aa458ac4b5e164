"""Rational normal form used for canonicalization.

A :class:`Frac` is ``num / prod(f_i ** e_i)`` where ``num`` is a sparse
polynomial over Q in the registered generators and each ``f_i`` is an
interned irreducible polynomial, primitive over Z with positive leading
coefficient, free of algebraic generators.  Algebraic generators (surds and
symbols with a quadratic relation) occur in ``num`` with exponent at most 1,
and no denominator factor divides ``num``.  Under these rules every element
has exactly one representation.
"""

from __future__ import annotations

import threading
from fractions import Fraction

import gmpy2
from gmpy2 import mpq

from . import _poly as P
from .errors import JetOrderOverflow, UnknownSymbol, UnsupportedExtension

_lock = threading.RLock()


# --------------------------------------------------------------------------
# generators


class Gen:
    """A polynomial generator: parameter, x, jet variable or function application."""

    __slots__ = (
        "index", "kind", "name", "order", "symbol", "arg", "key", "jets",
        "params", "is_alg", "is_surd", "_alg", "_reps", "_dfrac", "_node", "__weakref__",
    )

    def __init__(self, index, kind, name=None, order=0, symbol=None, arg=None):
        self.index = index
        self.kind = kind
        self.name = name
        self.order = order
        self.symbol = symbol
        self.arg = arg
        self.is_alg = bool(symbol is not None and symbol.relation is not None)
        self.is_surd = bool(symbol is not None and symbol.kind == "surd")
        self._alg = None
        self._reps = None
        self._dfrac = None
        self._node = None
        if kind == "jet":
            self.jets = frozenset([(name, order)])
            self.params = frozenset()
        elif kind == "param":
            self.jets = frozenset()
            self.params = frozenset([name])
        elif kind == "app":
            self.jets = arg.jets()
            self.params = arg.params()
        else:
            self.jets = frozenset()
            self.params = frozenset()
        self.key = None

    @property
    def mono(self):
        return P.gen_mono(self.index)

    def sort_key(self):
        k = self.key
        if k is None:
            if self.kind == "param":
                k = (0, self.name)
            elif self.kind == "x":
                k = (1,)
            elif self.kind == "jet":
                k = (2, self.name, self.order)
            else:
                rank = 4 if self.is_surd else 3
                k = (rank, self.symbol.name, self.order, str(to_expr(self.arg)))
            self.key = k
        return k

    def node(self):
        from . import expr as E
        n = self._node
        if n is None:
            if self.kind == "param":
                n = E.Param(self.name)
            elif self.kind == "x":
                n = E.XVar()
            elif self.kind == "jet":
                n = E.Jet(self.name, self.order)
            else:
                n = E.App(self.symbol, to_expr(self.arg), self.order)
            n._rf = Frac({self.mono: P.ONE}, ())
            self._node = n
        return n

    def __repr__(self):
        return f"Gen({self.index}, {self.node()})"


_gens: list = []
_gen_table: dict = {}
_masks = {"alg": 0, "surd": 0}


def _register(key, factory):
    g = _gen_table.get(key)
    if g is not None:
        return g
    with _lock:
        g = _gen_table.get(key)
        if g is None:
            # publish in the table last: an interrupt (time budget) before that
            # leaves only an unreachable generator behind
            g = factory(len(_gens))
            _gens.append(g)
            if g.is_alg:
                _masks["alg"] |= P.field_mask(g.index)
            if g.is_surd:
                _masks["surd"] |= P.field_mask(g.index)
            _gen_table[key] = g
    return g


def gen_param(name):
    return _register(("p", name), lambda i: Gen(i, "param", name=name))


def gen_x():
    return _register(("x",), lambda i: Gen(i, "x"))


def gen_jet(name, order):
    return _register(("j", name, order), lambda i: Gen(i, "jet", name=name, order=order))


def gen_app(symbol, order, arg):
    return _register(("a", symbol, order, arg),
                     lambda i: Gen(i, "app", name=symbol.name, order=order, symbol=symbol, arg=arg))


def gen(i):
    return _gens[i]


def generator_of(e):
    """The generator a leaf expression stands for."""
    from . import expr as E
    if isinstance(e, E.Param):
        return gen_param(e.name)
    if isinstance(e, E.XVar):
        return gen_x()
    if isinstance(e, E.Jet):
        return gen_jet(e.name, e.order)
    if isinstance(e, E.App):
        F = to_frac(e)
        if len(F.num) == 1 and not F.den:
            (m, c), = F.num.items()
            items = P.mono_items(m)
            if c == 1 and len(items) == 1 and items[0][1] == 1:
                return _gens[items[0][0]]
        raise UnknownSymbol(f"{e} does not canonicalize to a single function application")
    raise UnknownSymbol(f"{e} is not a symbol")


# --------------------------------------------------------------------------
# denominator factors


class Factor:
    __slots__ = ("poly", "id", "gens", "mono_gen", "_pows", "_key", "_expr")

    def __init__(self, poly, fid):
        self.poly = poly
        self.id = fid
        self.gens = frozenset(P.p_gens(poly))
        self.mono_gen = -1
        if len(poly) == 1:
            (m, c), = poly.items()
            items = P.mono_items(m)
            if len(items) == 1 and items[0][1] == 1 and c == 1:
                self.mono_gen = items[0][0]
        self._pows = {1: poly}
        self._key = None
        self._expr = None

    def power(self, e):
        p = self._pows.get(e)
        if p is None:
            p = P.p_pow(self.poly, e)
            self._pows[e] = p
        return p

    def sort_key(self):
        if self._key is None:
            self._key = _poly_key(self.poly)
        return self._key

    def __repr__(self):
        return f"Factor({to_expr(Frac(self.poly, ()))})"


_factors: dict = {}
_factor_list: list = []


def _intern_factor(poly):
    key = frozenset(poly.items())
    f = _factors.get(key)
    if f is None:
        with _lock:
            f = _factors.get(key)
            if f is None:
                f = Factor(poly, len(_factor_list))
                _factor_list.append(f)
                _factors[key] = f
    return f


def _mono_key(m):
    return tuple(sorted(((_gens[i].sort_key(), e) for i, e in P.mono_items(m)), reverse=True))


def _poly_key(p):
    return tuple(sorted((_mono_key(m) for m in p), reverse=True))


def _lead_mono(p):
    return max(p, key=_mono_key)


def _normalize(p):
    """(unit, q) with p == unit * q, q primitive over Z with positive leading coefficient."""
    content = P.p_content(p)
    lead = _lead_mono(p)
    if p[lead] < 0:
        content = -content
    return content, {m: c / content for m, c in p.items()}


_factor_cache: dict = {}


def factorize(p):
    """(unit, [(Factor, e), ...]) with p == unit * prod(f ** e)."""
    key = frozenset(p.items())
    hit = _factor_cache.get(key)
    if hit is not None:
        return hit
    out = []
    unit = mpq(1)
    occ = P.p_occupancy(p)
    mono = 0
    for i, _ in P.mono_items(occ):
        k = P.p_min_exp(p, i)
        if k:
            mono += P.gen_mono(i, k)
            out.append((_intern_factor(P.p_gen(i)), k))
    rest = {m - mono: c for m, c in p.items()} if mono else p
    if P.p_is_const(rest):
        unit = rest[0]
    elif _obviously_irreducible(rest):
        u, q = _normalize(rest)
        unit = u
        out.append((_intern_factor(q), 1))
    else:
        u0, facs = _sympy_factor(rest)
        unit = u0
        for q, e in facs:
            u, qn = _normalize(q)
            unit *= u ** e
            out.append((_intern_factor(qn), e))
    merged = {}
    for f, e in out:
        merged[f] = merged.get(f, 0) + e
    res = (unit, sorted(merged.items(), key=lambda t: t[0].id))
    _factor_cache[key] = res
    return res


def _obviously_irreducible(p):
    """Linear in some generator with coprime coefficient parts (cheap cases only)."""
    if len(p) == 2:
        # a*M1 + b*M2 with coprime monomials and one of them degree one in a generator
        (m1, _), (m2, _) = p.items()
        if m1 & m2 == 0 and m1 and m2:
            for m in (m1, m2):
                items = P.mono_items(m)
                if len(items) == 1 and items[0][1] == 1:
                    return True
    occ = P.p_occupancy(p)
    for i, _ in P.mono_items(occ):
        if P.p_degree(p, i) == 1:
            coll = P.p_collect(p, i)
            b = coll.get(1, {})
            if len(b) == 1 and 0 in b and 0 in coll:
                return True
    return False


def _sympy_factor(p):
    import sympy
    idx = P.p_gens(p)
    syms = sympy.symbols([f"g{i}" for i in idx])
    pos = {i: k for k, i in enumerate(idx)}
    d = {}
    for m, c in p.items():
        exps = [0] * len(idx)
        for i, e in P.mono_items(m):
            exps[pos[i]] = e
        d[tuple(exps)] = sympy.Rational(int(c.numerator), int(c.denominator))
    poly = sympy.Poly.from_dict(d, *syms, domain="QQ")
    coeff, facs = poly.factor_list()
    unit = mpq(int(sympy.Rational(coeff).p), int(sympy.Rational(coeff).q))
    out = []
    for fp, e in facs:
        q = {}
        for exps, c in fp.as_dict().items():
            m = 0
            for k, ex in enumerate(exps):
                if ex:
                    m += P.gen_mono(idx[k], ex)
            c = sympy.Rational(c)
            q[m] = mpq(int(c.p), int(c.q))
        out.append((q, e))
    return unit, out


# --------------------------------------------------------------------------
# rational functions


class Frac:
    __slots__ = ("num", "den", "_hash", "_expr", "__weakref__")

    def __init__(self, num, den=()):
        self.num = num
        self.den = den
        self._hash = None
        self._expr = None

    # basic predicates -----------------------------------------------------
    def is_zero(self):
        return not self.num

    def is_const(self):
        return not self.den and P.p_is_const(self.num)

    def const_value(self):
        if not self.num:
            return mpq(0)
        return self.num[0]

    def is_poly(self):
        return not self.den

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Frac):
            return NotImplemented
        return self.den == other.den and self.num == other.num

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((frozenset(self.num.items()), tuple((f.id, e) for f, e in self.den)))
            self._hash = h
        return h

    def __repr__(self):
        return f"Frac({to_expr(self)})"

    def occupancy(self):
        m = P.p_occupancy(self.num)
        for f, _ in self.den:
            m |= P.p_occupancy(f.poly)
        return m

    def gen_indices(self):
        return [i for i, _ in P.mono_items(self.occupancy())]

    def jets(self):
        s = set()
        for i in self.gen_indices():
            s |= _gens[i].jets
        return frozenset(s)

    def params(self):
        s = set()
        for i in self.gen_indices():
            s |= _gens[i].params
        return frozenset(s)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, inverse(_coerce(other)))

    def __rtruediv__(self, other):
        return mul(_coerce(other), inverse(self))

    def __pow__(self, n):
        return power(self, n)


ZERO = Frac({}, ())
ONE = Frac({0: P.ONE}, ())


def const(c):
    c = mpq(c) if not isinstance(c, Fraction) else mpq(c.numerator, c.denominator)
    return Frac({0: c}, ()) if c else ZERO


def from_poly(p):
    return make(p, {})


def gen_frac(g):
    return Frac({g.mono: P.ONE}, ())


def _coerce(v):
    if isinstance(v, Frac):
        return v
    if isinstance(v, (int, Fraction)) or type(v).__name__ == "mpq":
        return const(v)
    raise TypeError(f"cannot combine Frac with {type(v).__name__}")


def _den_poly(den):
    r = {0: P.ONE}
    for f, e in den:
        r = P.p_mul(r, f.power(e))
    return r


def _alg_data(g):
    """(P1, P0, Q, Qunit, Qfactors) with g**2 == (P1*g + P0)/Q."""
    a = g._alg
    if a is not None:
        return a
    from . import expr as E
    arg = to_expr(g.arg)
    node = E.App(g.symbol, arg, g.order)
    p1, p0 = g.symbol.relation(arg)
    F1, F0 = to_frac(E.as_expr(p1)), to_frac(E.as_expr(p0))
    for F in (F1, F0):
        if P.p_occupancy(F.num) & _masks["alg"]:
            raise UnsupportedExtension(f"relation of {node} involves another algebraic symbol")
    den = dict(F1.den)
    for f, e in F0.den:
        den[f] = max(den.get(f, 0), e)
    den_items = tuple(sorted(den.items(), key=lambda t: t[0].id))
    P1 = P.p_mul(F1.num, _den_poly(_den_quot(den, F1.den)))
    P0 = P.p_mul(F0.num, _den_poly(_den_quot(den, F0.den)))
    Q = _den_poly(den_items)
    a = (P1, P0, Q, den_items)
    g._reps = [({}, {0: P.ONE}), ({0: P.ONE}, {})]
    g._alg = a
    return a


def _den_quot(big, small):
    s = dict(small)
    return tuple((f, e - s.get(f, 0)) for f, e in sorted(big.items(), key=lambda t: t[0].id)
                 if e - s.get(f, 0))


def _power_rep(g, j):
    """(A_j, B_j) with g**j == (A_j*g + B_j) / Q**max(j-1, 0)."""
    P1, P0, Q, _ = _alg_data(g)
    reps = g._reps
    while len(reps) <= j:
        A, B = reps[-1]
        reps.append((P.p_add(P.p_mul(A, P1), P.p_mul(B, Q)), P.p_mul(A, P0)))
    return reps[j]


def _reduce_alg(num, den):
    occ = P.p_occupancy(num) & _masks["alg"]
    if not occ:
        return num
    for i, orv in P.mono_items(occ):
        if orv < 2:
            continue
        g = _gens[i]
        coll = P.p_collect(num, i)
        J = max(coll)
        if J < 2:
            continue
        P1, P0, Q, qden = _alg_data(g)
        trivial = not qden
        D = 0 if trivial else J - 1
        parts = []
        gm = g.mono
        for j, c in coll.items():
            A, B = _power_rep(g, j)
            t = P.p_add(P.p_mul_term(A, gm, P.ONE), B)
            if not trivial:
                dj = max(j - 1, 0)
                if D - dj:
                    t = P.p_mul(t, P.p_pow(Q, D - dj))
            parts.append(P.p_mul(c, t))
        num = P.p_sum(parts)
        if D:
            for f, e in qden:
                den[f] = den.get(f, 0) + e * D
    return num


def _check_surds(num):
    occ = P.p_occupancy(num) & _masks["surd"]
    if occ and len(P.mono_items(occ)) > 1:
        names = [str(to_expr(gen_frac(_gens[i]))) for i, _ in P.mono_items(occ)]
        raise UnsupportedExtension("more than one surd in one expression: " + ", ".join(names))


def _cancel(num, den):
    if not den:
        return num
    ngens = None
    for f in list(den):
        e = den[f]
        if not e:
            continue
        if f.mono_gen >= 0:
            k = min(e, P.p_min_exp(num, f.mono_gen))
            if k:
                sh = P.gen_mono(f.mono_gen, k)
                num = {m - sh: c for m, c in num.items()}
                den[f] = e - k
            continue
        if ngens is None:
            ngens = set(P.p_gens(num))
        if not f.gens <= ngens:
            continue
        while e:
            q = P.p_divexact(num, f.poly)
            if q is None:
                break
            num = q
            e -= 1
        den[f] = e
    return num


def make(num, den):
    """Normalize a numerator polynomial over a factored denominator dict."""
    if not num:
        return ZERO
    num = _reduce_alg(num, den)
    if not num:
        return ZERO
    _check_surds(num)
    num = _cancel(num, den)
    items = tuple(sorted(((f, e) for f, e in den.items() if e), key=lambda t: t[0].id))
    return Frac(num, items)


def neg(a):
    if not a.num:
        return a
    return Frac(P.p_neg(a.num), a.den)


def add(a, b):
    if not a.num:
        return b
    if not b.num:
        return a
    if a.den == b.den:
        return make(P.p_add(a.num, b.num), dict(a.den))
    return frac_sum([a, b])


def frac_sum(items):
    items = [x for x in items if x.num]
    if not items:
        return ZERO
    if len(items) == 1:
        return items[0]
    den = {}
    for x in items:
        for f, e in x.den:
            if den.get(f, 0) < e:
                den[f] = e
    parts = []
    for x in items:
        xd = dict(x.den)
        mult = None
        for f, e in den.items():
            k = e - xd.get(f, 0)
            if k:
                fp = f.power(k)
                mult = fp if mult is None else P.p_mul(mult, fp)
        parts.append(x.num if mult is None else P.p_mul(x.num, mult))
    return make(P.p_sum(parts), den)


def _cross_cancel(num, den_items):
    """Divide ``num`` by factors of ``den_items`` where possible."""
    if not den_items:
        return num, den_items
    den = dict(den_items)
    num = _cancel(num, den)
    return num, tuple((f, e) for f, e in den.items() if e)


def mul(a, b):
    if not a.num or not b.num:
        return ZERO
    if not a.den and P.p_is_const(a.num):
        return Frac(P.p_scale(b.num, a.num[0]), b.den)
    if not b.den and P.p_is_const(b.num):
        return Frac(P.p_scale(a.num, b.num[0]), a.den)
    an, bd = _cross_cancel(a.num, b.den)
    bn, ad = _cross_cancel(b.num, a.den)
    den = dict(ad)
    for f, e in bd:
        den[f] = den.get(f, 0) + e
    num = P.p_mul(an, bn)
    if not (P.p_occupancy(num) & _masks["alg"]):
        _check_surds(num)
        return Frac(num, tuple(sorted(((f, e) for f, e in den.items() if e), key=lambda t: t[0].id)))
    return make(num, den)


def _inverse_poly(N):
    """1/N for a polynomial N, as a Frac (denominators rationalized)."""
    occ = P.p_occupancy(N) & _masks["alg"]
    for i, _ in P.mono_items(occ):
        coll = P.p_collect(N, i)
        b = coll.get(1)
        if not b:
            continue
        a = coll.get(0, {})
        g = _gens[i]
        P1, P0, Q, _ = _alg_data(g)
        bQ = P.p_mul(b, Q)
        conj = P.p_add(P.p_add(P.p_mul(a, Q), P.p_mul(b, P1)), P.p_mul_term(P.p_neg(bQ), g.mono, P.ONE))
        prod = make(P.p_mul(N, conj), {})
        if not prod.num:
            raise ZeroDivisionError("division by a zero divisor of the algebraic extension")
        res = make(conj, {})
        if prod.den:
            res = mul(res, Frac(_den_poly(prod.den), ()))
        return mul(res, _inverse_poly(prod.num))
    unit, facs = factorize(N)
    return Frac({0: 1 / unit}, tuple(facs))


def inverse(a):
    if not a.num:
        raise ZeroDivisionError("division by zero expression")
    inv = _inverse_poly(a.num)
    if not a.den:
        return inv
    return mul(Frac(_den_poly(a.den), ()), inv)


def power(a, n):
    n = int(n)
    if n < 0:
        return power(inverse(a), -n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if len(a.num) == 1 and not (P.p_occupancy(a.num) & _masks["alg"]):
        (m, c), = a.num.items()
        return Frac({m * n: c ** n}, tuple((f, e * n) for f, e in a.den))
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


# --------------------------------------------------------------------------
# special function constructors


def _int_square_split(n):
    """(s, t) with |n| == s*s*t, t free of small square factors."""
    n = abs(int(n))
    s = 1
    if n == 0:
        return 0, 0
    for p in (2, 3, 5, 7, 11, 13):
        while n % (p * p) == 0:
            n //= p * p
            s *= p
    p = 17
    while p * p <= n and p < 20000:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        p += 2
    if n > 1 and gmpy2.is_square(n):
        r = int(gmpy2.isqrt(n))
        return s * r, 1
    return s, n


def frac_sqrt(R):
    from . import expr as E
    if not R.num:
        return ZERO
    if (R.occupancy() & _masks["alg"]):
        raise UnsupportedExtension(f"nested surd: sqrt({to_expr(R)})")
    N = P.p_mul(R.num, _den_poly(R.den)) if R.den else R.num
    unit, facs = factorize(N)
    outside = {0: P.ONE}
    inside = {0: P.ONE}
    for f, e in facs:
        if e // 2:
            outside = P.p_mul(outside, f.power(e // 2))
        if e % 2:
            inside = P.p_mul(inside, f.poly)
    num, den = int(unit.numerator), int(unit.denominator)
    s, t = _int_square_split(num * den)
    sign = -1 if num < 0 else 1
    scale = mpq(s, den)
    radicand = P.p_scale(inside, mpq(sign * t))
    base = P.p_scale(outside, scale)
    if radicand == {0: P.ONE}:
        res = Frac(base, ())
    else:
        rg = gen_app(E.SQRT, 0, Frac(radicand, ()))
        res = make(P.p_mul_term(base, rg.mono, P.ONE), {})
    if R.den:
        res = mul(res, inverse(Frac(_den_poly(R.den), ())))
    return res


def frac_exp(Y):
    from . import expr as E
    if not Y.num:
        return ONE
    logs = []
    rest = Y
    if not Y.den:
        keep = {}
        for m, c in Y.num.items():
            items = P.mono_items(m)
            if (len(items) == 1 and items[0][1] == 1 and c.denominator == 1
                    and _gens[items[0][0]].symbol is E.LN):
                logs.append((_gens[items[0][0]].arg, int(c)))
            else:
                keep[m] = c
        rest = Frac(keep, ())
    out = ONE
    for X, n in logs:
        out = mul(out, power(X, n))
    if rest.num:
        g = gen_app(E.EXP, 0, rest)
        out = mul(out, gen_frac(g))
    return out


def frac_ln(X):
    from . import expr as E
    if X == ONE:
        return ZERO
    return gen_frac(gen_app(E.LN, 0, X))


# --------------------------------------------------------------------------
# tree <-> normal form


def to_frac(e):
    from . import expr as E
    r = e._rf
    if r is not None:
        return r
    if isinstance(e, E.Const):
        r = const(e.value)
    elif isinstance(e, E.Param):
        r = gen_frac(gen_param(e.name))
    elif isinstance(e, E.XVar):
        r = gen_frac(gen_x())
    elif isinstance(e, E.Jet):
        r = gen_frac(gen_jet(e.name, e.order))
    elif isinstance(e, E.Add):
        r = frac_sum([to_frac(t) for t in e.terms])
    elif isinstance(e, E.Mul):
        facs = [to_frac(f) for f in e.factors]
        r = facs[0]
        for f in facs[1:]:
            r = mul(r, f)
    elif isinstance(e, E.Pow):
        b = to_frac(e.base)
        x = e.exp
        if x.denominator == 1:
            r = power(b, x.numerator)
        else:
            r = power(frac_sqrt(b), x.numerator)
    elif isinstance(e, E.App):
        arg = to_frac(e.arg)
        sym = e.symbol
        if sym is E.SQRT:
            r = frac_sqrt(arg)
        elif sym is E.EXP:
            r = frac_exp(arg)
        elif sym is E.LN:
            r = frac_ln(arg)
        else:
            r = gen_frac(gen_app(sym, e.order, arg))
    else:
        raise TypeError(f"unknown node {type(e).__name__}")
    e._rf = r
    return r


def _term_expr(c, m, extra_den=None):
    """Tree for c * monomial, with optional negative exponents (Laurent terms)."""
    from . import expr as E
    from fractions import Fraction as Fr
    factors = []
    items = sorted(P.mono_items(m), key=lambda t: _gens[t[0]].sort_key())
    for i, e in items:
        node = _gens[i].node()
        factors.append(node if e == 1 else E.Pow(node, Fr(e)))
    if extra_den:
        for node, e in extra_den:
            factors.append(E.Pow(node, Fr(-e)))
    cf = Fr(int(c.numerator), int(c.denominator))
    if cf != 1 or not factors:
        factors.insert(0, E.Const(cf))
    if len(factors) == 1:
        return factors[0]
    return E.Mul(factors)


def _poly_terms_sorted(p):
    return sorted(p.items(), key=lambda t: _mono_key(t[0]), reverse=True)


def _poly_expr(p):
    from . import expr as E
    terms = [_term_expr(c, m) for m, c in _poly_terms_sorted(p)]
    if not terms:
        return E.Const(0)
    if len(terms) == 1:
        return terms[0]
    return E.Add(terms)


def factor_expr(f):
    if f._expr is None:
        f._expr = _poly_expr(f.poly)
    return f._expr


def to_expr(F):
    """Canonical tree of a normal form."""
    from . import expr as E
    from fractions import Fraction as Fr
    if F._expr is not None:
        return F._expr
    if not F.num:
        t = E.Const(0)
    elif not F.den:
        t = _poly_expr(F.num)
    elif all(f.mono_gen >= 0 for f, _ in F.den):
        # Laurent form: distribute the monomial denominator over the terms
        dexp = {f.mono_gen: e for f, e in F.den}
        terms = []
        for m, c in _poly_terms_sorted(F.num):
            pos = 0
            neg = []
            for i, e in P.mono_items(m):
                k = e - dexp.get(i, 0)
                if k > 0:
                    pos += P.gen_mono(i, k)
            for i, e in dexp.items():
                k = e - P.mono_exp(m, i)
                if k > 0:
                    neg.append((_gens[i].node(), k))
            neg.sort(key=lambda t: generator_of(t[0]).sort_key())
            terms.append(_term_expr(c, pos, neg))
        t = terms[0] if len(terms) == 1 else E.Add(terms)
    else:
        numer = _poly_expr(F.num)
        if isinstance(numer, E.Const) and numer.value == 1:
            parts = []
        elif isinstance(numer, E.Mul):
            parts = list(numer.factors)
        else:
            parts = [numer]
        for f, e in sorted(F.den, key=lambda t: t[0].sort_key()):
            parts.append(E.Pow(factor_expr(f), Fr(-e)))
        t = parts[0] if len(parts) == 1 else E.Mul(parts)
    t._rf = F
    F._expr = t
    return t


# --------------------------------------------------------------------------
# queries


def jet_order(F, name=None):
    best = -1
    for n, k in F.jets():
        if (name is None or n == name) and k > best:
            best = k
    return best


def param_names(F):
    return sorted(F.params())


def depends_on(F, g):
    """True if F involves generator g, directly or inside a function argument."""
    for i in F.gen_indices():
        if i == g.index:
            return True
        h = _gens[i]
        if h.kind == "app" and depends_on(h.arg, g):
            return True
    return False


def dfrac(g):
    """Derivative of a function application with respect to its argument."""
    d = g._dfrac
    if d is None:
        from . import expr as E
        arg = to_expr(g.arg)
        d = to_frac(E.as_expr(g.symbol.derivative_at(arg, g.order)))
        g._dfrac = d
    return d


# --------------------------------------------------------------------------
# derivations


class Derivation:
    """A derivation given by its values on generators.

    ``base(g)`` returns the image of a non-application generator (a Frac, or
    None for zero).  With ``chain`` set, function applications differentiate
    through their argument; otherwise ``base`` is consulted for them too.
    """

    def __init__(self, base, chain=True):
        self.base = base
        self.chain = chain
        self._gen = {}
        self._fac = {}
        self._memo = {}

    def of_gen(self, g):
        i = g.index
        if i in self._gen:
            return self._gen[i]
        if g.kind == "app" and self.chain:
            da = self.apply(g.arg)
            r = mul(dfrac(g), da) if da.num else None
        else:
            r = self.base(g)
        if r is not None and not r.num:
            r = None
        self._gen[i] = r
        return r

    def _poly(self, N):
        polys = []
        fracs = []
        for i in P.p_gens(N):
            d = self.of_gen(_gens[i])
            if d is None:
                continue
            dN = P.p_diff(N, i)
            if not d.den:
                polys.append(P.p_mul(dN, d.num))
            else:
                fracs.append(mul(make(dN, {}), d))
        head = make(P.p_sum(polys), {}) if polys else ZERO
        if fracs:
            return frac_sum([head] + fracs)
        return head

    def _factor(self, f):
        d = self._fac.get(f.id)
        if d is None:
            d = self._poly(f.poly)
            self._fac[f.id] = d
        return d

    def apply(self, F):
        if not F.num:
            return ZERO
        r = self._memo.get(F)
        if r is not None:
            return r
        dN = self._poly(F.num)
        if not F.den:
            r = dN
        else:
            dfs = [(f, e, self._factor(f)) for f, e in F.den]
            if not dN.den and all(not df.den for _, _, df in dfs):
                active = [(f, e, df) for f, e, df in dfs if df.num]
                if not active:
                    r = make(dN.num, dict(F.den)) if dN.num else ZERO
                else:
                    L = {0: P.ONE}
                    for f, _, _ in active:
                        L = P.p_mul(L, f.poly)
                    parts = [P.p_mul(dN.num, L)] if dN.num else []
                    for f, e, df in active:
                        others = {0: P.ONE}
                        for h, _, _ in active:
                            if h is not f:
                                others = P.p_mul(others, h.poly)
                        parts.append(P.p_mul(P.p_mul(F.num, df.num), P.p_scale(others, mpq(-e))))
                    den = dict(F.den)
                    for f, _, _ in active:
                        den[f] += 1
                    r = make(P.p_sum(parts), den)
            else:
                den_inv = Frac({0: P.ONE}, F.den)
                terms = [mul(dN, den_inv)]
                for f, e, df in dfs:
                    if df.num:
                        terms.append(mul(F, mul(df, Frac({0: mpq(-e)}, ((f, 1),)))))
                r = frac_sum(terms)
        self._memo[F] = r
        return r


_total_cache = {}


def total_derivation(max_order):
    """The total x-derivative D, raising JetOrderOverflow past ``max_order``."""
    d = _total_cache.get(max_order)
    if d is not None:
        return d
    xg = gen_x()

    def base(g):
        if g.kind == "jet":
            if g.order + 1 > max_order:
                raise JetOrderOverflow(
                    f"total derivative of {g.name}{g.order} exceeds the jet order cutoff {max_order}")
            return gen_frac(gen_jet(g.name, g.order + 1))
        if g is xg:
            return ONE
        return None

    d = Derivation(base, chain=True)
    _total_cache[max_order] = d
    return d


def partial(g, chain=False):
    target = g.index

    def base(h):
        return ONE if h.index == target else None

    return Derivation(base, chain=chain)


def substitute(F, mapping):
    """Simultaneous substitution {generator index: Frac}, rebuilding applications."""
    if not mapping:
        return F
    vals = {}
    affected = []

    def value(i):
        if i in vals:
            return vals[i]
        if i in mapping:
            v = mapping[i]
        else:
            g = _gens[i]
            v = None
            if g.kind == "app":
                new_arg = substitute(g.arg, mapping)
                if new_arg is not g.arg and new_arg != g.arg:
                    from . import expr as E
                    v = to_frac(E.App(g.symbol, to_expr(new_arg), g.order))
        vals[i] = v
        return v

    for i in F.gen_indices():
        if value(i) is not None:
            affected.append(i)
    if not affected:
        return F
    mask = 0
    for i in affected:
        mask |= P.field_mask(i)

    def eval_poly(p):
        groups = P.p_split(p, mask)
        pows = {}
        parts = []
        for mk, rest in groups.items():
            acc = make(rest, {})
            for i, e in P.mono_items(mk):
                key = (i, e)
                pv = pows.get(key)
                if pv is None:
                    pv = power(vals[i], e)
                    pows[key] = pv
                acc = mul(acc, pv)
            parts.append(acc)
        return frac_sum(parts)

    num = eval_poly(F.num)
    if not F.den:
        return num
    den = ONE
    for f, e in F.den:
        fv = eval_poly(f.poly) if (P.p_occupancy(f.poly) & mask) else Frac(f.poly, ())
        den = mul(den, power(fv, e))
    return mul(num, inverse(den))
