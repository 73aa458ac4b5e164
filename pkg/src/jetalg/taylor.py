"""An independent exact oracle based on truncated Taylor series.

Nothing here goes through the rational normal form.  Raw expression trees are
evaluated along a random polynomial u(x) = sum c_i x^i / i!, so that u_k at
x = 0 is c_k and total x-derivatives are read off from series coefficients.
Time derivatives use dual numbers: the epsilon part of G[u + eps F[u]] at
x = 0 is D_t G along u_t = F.

Scalars live in a multi-quadratic field Q(sqrt p1, sqrt p2, ...) with p_i
distinct primes (or -1), so several square roots can coexist exactly.
Transcendental values (free function values, exp, tan, tanh, wp) are drawn
as rationals from a seeded, order-independent stream; quadratic-relation
symbols (sqrt, wp', implicit roots) are solved by Newton iteration in the
series ring, and closed-form derivative rules by Picard iteration.
Logarithms of constants are carried symbolically and only consumed by exp.

Limitations: values of one function at different arguments are independent,
so identities relating them (e.g. duplication formulas) are not seen, and
exp(q) and exp(-q) are the only exp values tied together.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
from fractions import Fraction

from sympy import factorint

from .errors import DegenerateSampling
from .expr import EXP, LN, Add, App, Const, Jet, Mul, Param, Pow, XVar, as_expr
from .oracle import LIKELY_ZERO, NONZERO, Verdict, settings


class _Degenerate(Exception):
    pass


# --------------------------------------------------------------------------
# multi-quadratic numbers


class MQ:
    """sum over sets S of primes of c_S * sqrt(prod S), with -1 allowed as a prime."""

    __slots__ = ("c",)

    def __init__(self, c=None):
        self.c = c or {}

    @staticmethod
    def rat(q):
        q = Fraction(q)
        return MQ({frozenset(): q} if q else {})

    def is_zero(self):
        return not self.c

    def rational(self):
        if not self.c:
            return Fraction(0)
        if len(self.c) == 1 and frozenset() in self.c:
            return self.c[frozenset()]
        return None

    def key(self):
        return tuple(sorted((tuple(sorted(k)), v) for k, v in self.c.items()))

    def __add__(self, o):
        c = dict(self.c)
        for k, v in o.c.items():
            w = c.get(k, 0) + v
            if w:
                c[k] = w
            else:
                c.pop(k, None)
        return MQ(c)

    def __neg__(self):
        return MQ({k: -v for k, v in self.c.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not self.c or not o.c:
            return MQ()
        c = {}
        for k1, v1 in self.c.items():
            for k2, v2 in o.c.items():
                v = v1 * v2
                for p in k1 & k2:
                    v *= p
                k = k1 ^ k2
                w = c.get(k, 0) + v
                if w:
                    c[k] = w
                else:
                    c.pop(k, None)
        return MQ(c)

    def scale(self, q):
        q = Fraction(q)
        if not q:
            return MQ()
        return MQ({k: v * q for k, v in self.c.items()})

    def inverse(self):
        if not self.c:
            raise _Degenerate("division by zero")
        primes = set().union(*self.c.keys())
        if not primes:
            return MQ.rat(1 / self.c[frozenset()])
        p = min(primes)
        conj = MQ({k: (-v if p in k else v) for k, v in self.c.items()})
        norm = self * conj
        return conj * norm.inverse()

    def __eq__(self, o):
        return isinstance(o, MQ) and self.c == o.c

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        if not self.c:
            return "0"
        parts = []
        for k, v in sorted(self.c.items(), key=lambda kv: sorted(kv[0])):
            r = math.prod(k)
            parts.append(str(v) if not k else f"{v}*sqrt({r})")
        return " + ".join(parts)


def _sqrt_rational(q):
    q = Fraction(q)
    if q == 0:
        raise _Degenerate("square root of zero")
    n = abs(q.numerator * q.denominator)
    square = 1
    primes = set()
    for p, e in factorint(n).items():
        square *= p ** (e // 2)
        if e % 2:
            primes.add(p)
    if q < 0:
        primes.add(-1)
    return MQ({frozenset(primes): Fraction(square, q.denominator)})


def _sqrt_mq(a):
    r = a.rational()
    if r is None:
        raise _Degenerate("square root of an irrational value")
    return _sqrt_rational(r)


# --------------------------------------------------------------------------
# truncated dual series


class Series:
    """Real part ``re`` and epsilon part ``ep`` (coefficient lists up to x^T).

    ``logs`` maps constants c to (c, multiplicity) for ln(c) terms in the
    real constant coefficient.
    """

    __slots__ = ("re", "ep", "logs")

    def __init__(self, re, ep=None, logs=None):
        self.re = re
        self.ep = ep
        self.logs = logs or {}


def _const(c, T):
    return Series([c] + [MQ()] * T)


def _ladd(a, b):
    out = []
    for x, y in zip(a, b):
        out.append(x + y)
    return out


def _conv(a, b, T):
    out = []
    for n in range(T + 1):
        s = MQ()
        for i in range(n + 1):
            if a[i].c and b[n - i].c:
                s = s + a[i] * b[n - i]
        out.append(s)
    return out


def s_add(a, b):
    re = _ladd(a.re, b.re)
    if a.ep is None:
        ep = b.ep
    elif b.ep is None:
        ep = a.ep
    else:
        ep = _ladd(a.ep, b.ep)
    logs = dict(a.logs)
    for k, (c, n) in b.logs.items():
        m = logs.get(k, (c, 0))[1] + n
        if m:
            logs[k] = (c, m)
        else:
            logs.pop(k, None)
    return Series(re, ep, logs)


def s_scale(a, q):
    q = Fraction(q)
    return Series([x.scale(q) for x in a.re], None if a.ep is None else [x.scale(q) for x in a.ep],
                  {k: (c, n * q) for k, (c, n) in a.logs.items()} if q else {})


def s_neg(a):
    return s_scale(a, -1)


def _rational_constant(a):
    if a.ep is not None and any(x.c for x in a.ep):
        return None
    if a.logs or any(x.c for x in a.re[1:]):
        return None
    return a.re[0].rational()


def s_mul(a, b, T):
    if a.logs or b.logs:
        qa, qb = _rational_constant(a), _rational_constant(b)
        if qb is not None and not b.logs:
            return s_scale(a, qb)
        if qa is not None and not a.logs:
            return s_scale(b, qa)
        raise _Degenerate("logarithmic constant in a product")
    re = _conv(a.re, b.re, T)
    ep = None
    if a.ep is not None:
        ep = _conv(a.ep, b.re, T)
    if b.ep is not None:
        t = _conv(a.re, b.ep, T)
        ep = t if ep is None else _ladd(ep, t)
    return Series(re, ep)


def s_inv(a, T):
    if a.logs:
        raise _Degenerate("logarithmic constant in a denominator")
    a0 = a.re[0]
    inv0 = a0.inverse()
    b = [inv0]
    for n in range(1, T + 1):
        s = MQ()
        for i in range(1, n + 1):
            if a.re[i].c:
                s = s + a.re[i] * b[n - i]
        b.append(-(s * inv0))
    ep = None
    if a.ep is not None:
        ep = [-x for x in _conv(a.ep, _conv(b, b, T), T)]
    return Series(b, ep)


def s_pow(a, n, T):
    if n < 0:
        a = s_inv(a, T)
        n = -n
    out = _const(MQ.rat(1), T)
    base = a
    while n:
        if n & 1:
            out = s_mul(out, base, T)
        n >>= 1
        if n:
            base = s_mul(base, base, T)
    return out


def s_deriv(a):
    def d(lst):
        return [lst[i + 1].scale(i + 1) for i in range(len(lst) - 1)] + [MQ()]
    return Series(d(a.re), None if a.ep is None else d(a.ep))


def s_integrate(a, c0):
    re = [c0] + [a.re[i].scale(Fraction(1, i + 1)) for i in range(len(a.re) - 1)]
    return Series(re)


def s_real(a):
    return Series(list(a.re), None, dict(a.logs))


def _newton_iters(T):
    return max(1, (T + 2).bit_length()) + 2


def s_quadratic(p1, p0, T):
    """Root y of y^2 = p1 y + p0 with the + branch of the constant term."""
    b0, c0 = p1.re[0], p0.re[0]
    disc = b0 * b0 + c0.scale(4)
    y0 = (b0 + _sqrt_mq(disc)).scale(Fraction(1, 2))
    y = _const(y0, T)
    for _ in range(_newton_iters(T)):
        f = s_add(s_mul(y, y, T), s_neg(s_add(s_mul(p1, y, T), p0)))
        df = s_add(s_scale(y, 2), s_neg(p1))
        y = s_add(y, s_neg(s_mul(f, s_inv(df, T), T)))
    return y


# --------------------------------------------------------------------------
# sample points and evaluation


def _stable_rng(seed, key):
    h = hashlib.sha256(repr((seed, key)).encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


def _draw(seed, key):
    rng = _stable_rng(seed, key)
    num = rng.randint(1, 30) * rng.choice((-1, 1))
    return Fraction(num, rng.randint(1, 9))


_counter = itertools.count()


class TaylorPoint:
    """A sample point; every value is a deterministic function of (seed, key)."""

    def __init__(self, seed, T):
        self.seed = seed
        self.T = T
        self.used = {}

    def value(self, key):
        v = self.used.get(key)
        if v is None:
            v = _draw(self.seed, key)
            self.used[key] = v
        return v

    def jet_series(self, var):
        coeffs = []
        fact = 1
        for i in range(self.T + 1):
            if i:
                fact *= i
            coeffs.append(MQ.rat(self.value(("jet", var, i)) / fact))
        return Series(coeffs)

    def describe(self):
        out = {}
        for key, v in sorted(self.used.items(), key=lambda kv: repr(kv[0])):
            if key[0] == "jet":
                name = key[1] if key[2] == 0 else f"{key[1]}{key[2]}"
            elif key[0] == "param":
                name = key[1]
            else:
                name = ":".join(str(x) for x in key)
            out[name] = str(v)
        return out


class _Eval:
    def __init__(self, point, env, params=None, overrides=None):
        self.pt = point
        self.T = point.T
        self.env = env
        self.params = params or {}
        self.overrides = overrides or {}
        self.memo = {}

    def child(self, params=None, overrides=None):
        p = dict(self.params)
        p.update(params or {})
        o = dict(self.overrides)
        o.update(overrides or {})
        return _Eval(self.pt, self.env, p, o)

    def __call__(self, e):
        k = id(e)
        hit = self.memo.get(k)
        if hit is not None and hit[0] is e:
            return hit[1]
        v = self._eval(e)
        self.memo[k] = (e, v)
        return v

    def _eval(self, e):
        T = self.T
        if isinstance(e, Const):
            return _const(MQ.rat(e.value), T)
        if isinstance(e, Param):
            s = self.params.get(e.name)
            if s is not None:
                return s
            return _const(MQ.rat(self.pt.value(("param", e.name))), T)
        if isinstance(e, XVar):
            s = _const(MQ.rat(self.pt.value(("x",))), T)
            if T:
                s.re[1] = MQ.rat(1)
            return s
        if isinstance(e, Jet):
            s = self.env.get(e.name)
            if s is None:
                s = self.pt.jet_series(e.name)
                self.env[e.name] = s
            for _ in range(e.order):
                s = s_deriv(s)
            return s
        if isinstance(e, Add):
            out = self(e.terms[0])
            for t in e.terms[1:]:
                out = s_add(out, self(t))
            return out
        if isinstance(e, Mul):
            out = self(e.factors[0])
            for f in e.factors[1:]:
                out = s_mul(out, self(f), T)
            return out
        if isinstance(e, Pow):
            b = self(e.base)
            x = e.exp
            if x.denominator == 2:
                b = s_quadratic(_const(MQ(), T), b, T)
                return s_pow(b, x.numerator, T)
            return s_pow(b, x.numerator, T)
        if isinstance(e, App):
            return self._app(e)
        raise TypeError(f"unknown node {type(e).__name__}")

    def _app(self, e):
        T = self.T
        sym = e.symbol
        if isinstance(e.arg, Param):
            hit = self.overrides.get((id(sym), e.arg.name, e.order))
            if hit is not None:
                return hit
        s = self(e.arg)
        if sym.relation is not None:
            p1, p0 = sym.relation(e.arg)
            return s_quadratic(self(as_expr(p1)), self(as_expr(p0)), T)
        if sym is EXP:
            return self._exp(s)
        if sym is LN:
            return self._ln(s)
        if s.logs:
            raise _Degenerate("logarithmic constant inside a function")
        if sym.is_fresh_chain:
            return self._fresh(sym, e.order, s)
        return self._closed(sym, s)

    def _fresh(self, sym, order, s):
        T = self.T
        c = s.re[0]
        z = s_add(s, _const(-c, T))
        out = _const(MQ(), T)
        zi = _const(MQ.rat(1), T)
        fact = 1
        for i in range(T + 2):
            if i:
                fact *= i
                zi = s_mul(zi, z, T)
            val = self.pt.value(("fn", sym.name, id(sym), order + i, c.key()))
            out = s_add(out, s_scale(zi, Fraction(val) / fact))
        return out

    def _exp(self, s):
        T = self.T
        factor = MQ.rat(1)
        for c, n in s.logs.values():
            if n.denominator != 1:
                raise _Degenerate("fractional power of a logarithm argument")
            p = c if n > 0 else c.inverse()
            for _ in range(abs(int(n))):
                factor = factor * p
        c = s.re[0]
        if c.c:
            key = c.key()
            nkey = (-c).key()
            if ("exp", nkey) in self.pt.used:
                e0 = MQ.rat(1 / self.pt.used[("exp", nkey)])
            else:
                e0 = MQ.rat(self.pt.value(("exp", key)))
            factor = factor * e0
        z = Series([MQ()] + list(s.re[1:]), s.ep)
        out = _const(MQ(), T)
        zi = _const(MQ.rat(1), T)
        fact = 1
        for i in range(T + 2):
            if i:
                fact *= i
                zi = s_mul(zi, z, T)
            out = s_add(out, s_scale(zi, Fraction(1, fact)))
        return Series([x * factor for x in out.re],
                      None if out.ep is None else [x * factor for x in out.ep])

    def _ln(self, s):
        T = self.T
        if s.logs:
            raise _Degenerate("logarithm of a logarithmic constant")
        c = s.re[0]
        inv = c.inverse()
        w = Series([MQ()] + [x * inv for x in s.re[1:]],
                   None if s.ep is None else [x * inv for x in s.ep])
        out = _const(MQ(), T)
        wi = _const(MQ.rat(1), T)
        for i in range(1, T + 2):
            wi = s_mul(wi, w, T)
            out = s_add(out, s_scale(wi, Fraction((-1) ** (i + 1), i)))
        out.logs = {c.key(): (c, Fraction(1))}
        return out

    def _closed(self, sym, s):
        """f(s) for f' given by a rule: Picard iteration, then the epsilon part."""
        T = self.T
        sr = s_real(s)
        c = sr.re[0]
        y0 = MQ.rat(self.pt.value(("fn", sym.name, id(sym), 0, c.key())))
        ph = f"__tay{next(_counter)}"
        rule = as_expr(sym.derivative(Param(ph)))
        dsr = s_deriv(sr)
        y = _const(y0, T)
        for _ in range(T + 1):
            dy = self.child(params={ph: sr}, overrides={(id(sym), ph, 0): y})(rule)
            y = s_integrate(s_mul(dy, dsr, T), y0)
        if s.ep is not None and any(x.c for x in s.ep):
            dy = self.child(params={ph: sr}, overrides={(id(sym), ph, 0): y})(rule)
            y = Series(y.re, _conv(dy.re, s.ep, T))
        return y


# --------------------------------------------------------------------------
# checks


def _order(e, var=None):
    from .expr import jet_order
    return max(jet_order(e, var), 0)


def _dual(U, F):
    return Series(U.re, F.re)


def _run(check, trials, seed, max_attempts=None):
    st = settings()
    trials = st.trials if trials is None else trials
    seed = st.seed if seed is None else seed
    max_attempts = max_attempts or st.max_attempts
    draw = 0
    for t in range(trials):
        for _ in range(max_attempts):
            pseed = (seed, draw)
            draw += 1
            try:
                value, point = check(pseed)
            except (_Degenerate, ZeroDivisionError):
                continue
            break
        else:
            raise DegenerateSampling(f"no valid series point after {max_attempts} attempts")
        if not value.is_zero():
            return Verdict(NONZERO, trials=t + 1, seed=seed, witness=point.describe(),
                           value=str(value), method="taylor")
    return Verdict(LIKELY_ZERO, trials=trials, seed=seed, method="taylor")


def _const_term(s, eps=False):
    if not eps and s.logs:
        # an unmatched logarithm is transcendental, hence nonzero
        raise _Degenerate("logarithmic constant in a value")
    if eps:
        return s.ep[0] if s.ep is not None else MQ()
    return s.re[0]


def taylor_value(e, point):
    """Value of the raw tree ``e`` at ``point`` (a TaylorPoint)."""
    return _const_term(_Eval(point, {})(as_expr(e)))


def taylor_equal(e1, e2, trials=None, seed=None):
    """Compare two raw trees at common random points."""
    e1, e2 = as_expr(e1), as_expr(e2)

    T = max(_order(e1), _order(e2))

    def check(pseed):
        pt = TaylorPoint(pseed, T)
        return taylor_value(e1, pt) - taylor_value(e2, pt), pt
    return _run(check, trials, seed)


def taylor_total_derivative(e, d, k=1, var="u", trials=None, seed=None):
    """Compare D^k e (read from series coefficients) with the expression d."""
    e, d = as_expr(e), as_expr(d)
    T = _order(e) + k + 1

    def check(pseed):
        pt = TaylorPoint(pseed, T)
        s = _Eval(pt, {})(e)
        val = s.re[k].scale(math.factorial(k))
        return val - _const_term(_Eval(pt, {})(d)), pt
    return _run(check, trials, seed)


def taylor_symmetry(eq, G, trials=None, seed=None):
    """D_t G - F_*(G) at random series points, both terms via dual numbers."""
    F, G = eq.rhs, as_expr(G)
    var = eq.var
    T = max(_order(G, var), eq.order) + 1

    def check(pseed):
        pt = TaylorPoint(pseed, T)
        U = pt.jet_series(var)
        Fs = _Eval(pt, {var: U})(F)
        Gs = _Eval(pt, {var: U})(G)
        left = _const_term(_Eval(pt, {var: _dual(U, Fs)})(G), eps=True)
        right = _const_term(_Eval(pt, {var: _dual(U, Gs)})(F), eps=True)
        return left - right, pt
    return _run(check, trials, seed)


def taylor_pushforward(S, source, target, trials=None, seed=None):
    """D_t Phi along the source minus the target rhs on v = Phi."""
    phi = S.phi
    u, v = source.var, target.var
    T = max(_order(phi, u), target.order) + 1

    def check(pseed):
        pt = TaylorPoint(pseed, T)
        U = pt.jet_series(u)
        Fs = _Eval(pt, {u: U})(source.rhs)
        left = _const_term(_Eval(pt, {u: _dual(U, Fs)})(phi), eps=True)
        V = _Eval(pt, {u: U})(phi)
        V = Series(V.re, None, V.logs)
        right = _const_term(_Eval(pt, {v: V})(target.rhs))
        return left - right, pt
    return _run(check, trials, seed)


__all__ = [
    "MQ", "Series", "TaylorPoint", "taylor_value", "taylor_equal", "taylor_total_derivative",
    "taylor_symmetry", "taylor_pushforward",
]
