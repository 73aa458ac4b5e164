"""Exact random-point zero testing.

Points assign rationals to parameters, x, jet variables and free function
values.  Symbols tied by a quadratic relation (surds, wp', implicit roots) are
solved exactly: in Q when the discriminant can be made a square by re-drawing
one free coordinate, otherwise in a single quadratic extension Q(sqrt r).
No floating point is involved.
"""

from __future__ import annotations

import contextlib
import contextvars
import itertools
import random
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq

from . import _frac as R
from . import _poly as P
from .errors import DegenerateSampling

PROVEN_ZERO = "ProvenZero"
LIKELY_ZERO = "LikelyZero"
NONZERO = "NonZero"


@dataclass(frozen=True)
class Verdict:
    kind: str
    trials: int = 0
    seed: int = 0
    witness: dict | None = None
    value: str | None = None
    method: str = "canonical"

    @property
    def is_zero(self):
        return self.kind in (PROVEN_ZERO, LIKELY_ZERO)

    def to_dict(self):
        d = {"kind": self.kind, "trials": self.trials, "seed": self.seed, "method": self.method}
        if self.witness is not None:
            d["witness"] = self.witness
            d["value"] = self.value
        return d

    def __str__(self):
        if self.kind == NONZERO:
            return f"NonZero(value={self.value})"
        if self.kind == LIKELY_ZERO:
            return f"LikelyZero(trials={self.trials}, seed={self.seed})"
        return "ProvenZero"


@dataclass
class OracleSettings:
    trials: int = 20
    seed: int = 0
    max_attempts: int = 200


_settings = contextvars.ContextVar("oracle_settings", default=OracleSettings())


def settings():
    return _settings.get()


@contextlib.contextmanager
def oracle_settings(**kw):
    cur = _settings.get()
    new = OracleSettings(**{**cur.__dict__, **kw})
    tok = _settings.set(new)
    try:
        yield new
    finally:
        _settings.reset(tok)


# --------------------------------------------------------------------------
# Q(sqrt r)


class QuadNumber:
    """a + b*sqrt(r) with rational a, b and a fixed non-square rational r."""

    __slots__ = ("a", "b", "r")

    def __init__(self, a, b, r):
        self.a = mpq(a)
        self.b = mpq(b)
        self.r = r

    def _lift(self, o):
        if isinstance(o, QuadNumber):
            if o.r != self.r:
                raise ValueError("mixing two different quadratic extensions")
            return o
        return QuadNumber(o, 0, self.r)

    @staticmethod
    def _norm(a, b, r):
        return a if not b else QuadNumber(a, b, r)

    def __add__(self, o):
        o = self._lift(o)
        return self._norm(self.a + o.a, self.b + o.b, self.r)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        return self._norm(self.a - o.a, self.b - o.b, self.r)

    def __rsub__(self, o):
        return self._lift(o) - self

    def __neg__(self):
        return QuadNumber(-self.a, -self.b, self.r)

    def __mul__(self, o):
        if not isinstance(o, QuadNumber):
            o = mpq(o)
            return self._norm(self.a * o, self.b * o, self.r)
        o = self._lift(o)
        return self._norm(self.a * o.a + self.b * o.b * self.r,
                          self.a * o.b + self.b * o.a, self.r)

    __rmul__ = __mul__

    def inverse(self):
        n = self.a * self.a - self.b * self.b * self.r
        if n == 0:
            raise ZeroDivisionError("zero in Q(sqrt r)")
        return QuadNumber(self.a / n, -self.b / n, self.r)

    def __truediv__(self, o):
        if isinstance(o, QuadNumber):
            return self * o.inverse()
        return self._norm(self.a / o, self.b / o, self.r)

    def __rtruediv__(self, o):
        return self.inverse() * o

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        r = mpq(1)
        base = self
        while n:
            if n & 1:
                r = base * r
            n >>= 1
            if n:
                base = base * base
        return r

    def __eq__(self, o):
        if isinstance(o, QuadNumber):
            return self.a == o.a and self.b == o.b and self.r == o.r
        return not self.b and self.a == o

    def __hash__(self):
        return hash((self.a, self.b, self.r))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __str__(self):
        return f"{_q(self.a)} + {_q(self.b)}*sqrt({_q(self.r)})"

    __repr__ = __str__


def _q(v):
    v = mpq(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def fmt_value(v):
    return str(v) if isinstance(v, QuadNumber) else _q(v)


def _div(a, b):
    if isinstance(b, QuadNumber):
        return b.inverse() * a
    if isinstance(a, QuadNumber):
        return a / b
    return mpq(a) / b


def _rational_sqrt(v):
    """sqrt of a non-negative rational if it is a perfect square, else None."""
    v = mpq(v)
    if v < 0:
        return None
    n, d = v.numerator, v.denominator
    if gmpy2.is_square(n) and gmpy2.is_square(d):
        return mpq(gmpy2.isqrt(n), gmpy2.isqrt(d))
    return None


def _squarefree_int(v):
    """(k, r) with v == k**2 * r and r an integer carrying the non-square part."""
    v = mpq(v)
    n, d = int(v.numerator), int(v.denominator)
    s, t = R._int_square_split(n * d)
    sign = -1 if n < 0 else 1
    return mpq(s, d), mpq(sign * t)


# --------------------------------------------------------------------------
# points


@dataclass
class JetPoint:
    """Exact assignment of all generators needed to evaluate some expressions."""

    values: dict
    r: object = None
    attempt: int = 0
    _cache: dict = field(default_factory=dict)

    def eval_poly(self, p):
        return P.p_eval(p, self.values) if p else mpq(0)

    def eval_factor(self, f):
        v = self._cache.get(f.id)
        if v is None:
            v = self.eval_poly(f.poly)
            self._cache[f.id] = v
        return v

    def evaluate(self, F):
        n = self.eval_poly(F.num)
        if not F.den:
            return n
        d = mpq(1)
        for f, e in F.den:
            d = self.eval_factor(f) ** e * d
        return _div(n, d)

    def describe(self, indices=None):
        out = {}
        for i, v in sorted(self.values.items(), key=lambda t: R.gen(t[0]).sort_key()):
            if indices is not None and i not in indices:
                continue
            out[str(R.gen(i).node())] = fmt_value(v)
        if self.r is not None:
            out["_extension"] = f"sqrt({_q(self.r)})"
        return out


def _random_rational(rng):
    n = rng.randint(1, 40) * rng.choice((-1, 1))
    d = rng.randint(1, 12)
    return mpq(n, d)


def _closure(fracs):
    """Generator indices needed to evaluate the given normal forms."""
    need = set()
    stack = []
    for F in fracs:
        stack.extend(F.gen_indices())
    while stack:
        i = stack.pop()
        if i in need:
            continue
        need.add(i)
        g = R.gen(i)
        if g.is_alg:
            P1, P0, Q, _ = R._alg_data(g)
            for p in (P1, P0, Q):
                stack.extend(P.p_gens(p))
    return need


def _discriminant(g):
    P1, P0, Q, _ = R._alg_data(g)
    return P.p_add(P.p_mul(P1, P1), P.p_scale(P.p_mul(Q, P0), mpq(4)))


def _poly_in(p, i, values):
    """Coefficients of p as a polynomial in generator i, other generators evaluated."""
    out = {}
    for e, c in P.p_collect(p, i).items():
        out[e] = P.p_eval(c, values)
    return out


def _try_repair(delta, candidates, values, rng):
    """Re-draw one free coordinate so that delta evaluates to a rational square."""
    cands = list(candidates)
    rng.shuffle(cands)
    for y in cands:
        if P.p_degree(delta, y) > 2:
            continue
        co = _poly_in(delta, y, values)
        if any(isinstance(v, QuadNumber) for v in co.values()):
            continue
        c0, c1, c2 = (mpq(co.get(k, 0)) for k in range(3))
        for _ in range(6):
            t = _random_rational(rng)
            y_new = None
            m = _rational_sqrt(c2) if c2 else None
            n = _rational_sqrt(c0) if c0 else None
            if not c2 and c1:
                y_new = (t * t - c0) / c1
            elif m:
                den = c1 - 2 * m * t
                if den:
                    y_new = (t * t - c0) / den
            elif n:
                den = c2 - t * t
                if den:
                    y_new = (2 * n * t - c1) / den
            if y_new is None:
                break
            if y_new == 0:
                continue
            old = values[y]
            values[y] = y_new
            dv = P.p_eval(delta, values)
            if not isinstance(dv, QuadNumber) and _rational_sqrt(dv) is not None:
                return True
            values[y] = old
    return False


def sample_point(fracs, rng, max_attempts=None):
    """Draw a JetPoint at which every denominator of ``fracs`` is nonzero."""
    if max_attempts is None:
        max_attempts = settings().max_attempts
    need = _closure(fracs)
    alg = sorted((i for i in need if R.gen(i).is_alg), key=lambda i: R.gen(i).sort_key())
    base = sorted((i for i in need if not R.gen(i).is_alg), key=lambda i: R.gen(i).sort_key())
    deltas = {i: _discriminant(R.gen(i)) for i in alg}
    orders = list(itertools.permutations(alg)) if len(alg) <= 4 else [tuple(alg)]
    for attempt in range(max_attempts):
        values = {i: _random_rational(rng) for i in base}
        order = orders[attempt % len(orders)]
        solved = _solve_algebraic(order, deltas, values, rng)
        if solved is None:
            continue
        point = JetPoint(values, solved[0], attempt)
        try:
            ok = all(point.eval_factor(f) != 0 for F in fracs for f, _ in F.den)
        except ZeroDivisionError:
            ok = False
        if ok:
            return point
    raise DegenerateSampling(f"no valid sample point after {max_attempts} attempts")


def _solve_algebraic(order, deltas, values, rng):
    r = None
    pinned = set()
    for i in order:
        g = R.gen(i)
        P1, P0, Q, _ = R._alg_data(g)
        delta = deltas[i]
        free = [j for j in P.p_gens(delta) if j in values and j not in pinned
                and not R.gen(j).is_alg]
        dv = P.p_eval(delta, values) if delta else mpq(0)
        if isinstance(dv, QuadNumber):
            return None
        root = _rational_sqrt(dv)
        if root is None and _try_repair(delta, free, values, rng):
            dv = P.p_eval(delta, values)
            root = _rational_sqrt(dv)
        qv = P.p_eval(Q, values)
        if isinstance(qv, QuadNumber) or qv == 0:
            return None
        p1v = P.p_eval(P1, values) if P1 else mpq(0)
        if isinstance(p1v, QuadNumber):
            return None
        sign = rng.choice((-1, 1))
        if root is not None:
            values[i] = (p1v + sign * root) / (2 * qv)
        else:
            k, rr = _squarefree_int(dv)
            if r is None:
                r = rr
            elif rr != r:
                return None
            values[i] = QuadNumber(p1v / (2 * qv), sign * k / (2 * qv), r)
        pinned.update(P.p_gens(delta))
        pinned.update(P.p_gens(Q))
        pinned.update(P.p_gens(P1))
    return (r,)


# --------------------------------------------------------------------------
# zero test


def zero_test(e, trials=None, seed=None):
    """ProvenZero if the canonical form is 0, else evaluate at exact random points."""
    from .expr import as_expr
    st = settings()
    trials = st.trials if trials is None else trials
    seed = st.seed if seed is None else seed
    F = R.to_frac(as_expr(e)) if not isinstance(e, R.Frac) else e
    if F.is_zero():
        return Verdict(PROVEN_ZERO, trials=0, seed=seed)
    return sample_test(F, trials, seed)


def sample_test(F, trials, seed):
    rng = random.Random(seed)
    idx = set(F.gen_indices())
    for t in range(trials):
        point = sample_point([F], rng)
        v = point.evaluate(F)
        if v != 0:
            return Verdict(NONZERO, trials=t + 1, seed=seed,
                           witness=point.describe(_closure([F]) | idx), value=fmt_value(v),
                           method="sampling")
    return Verdict(LIKELY_ZERO, trials=trials, seed=seed, method="sampling")
