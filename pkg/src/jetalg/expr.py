"""Immutable expression trees over jet variables, parameters and function symbols.

Trees are built freely with Python operators and carry no simplification of
their own.  ``canonicalize`` maps a tree to the unique canonical tree of its
rational normal form (see :mod:`jetalg._frac`).
"""

from __future__ import annotations

import threading
from fractions import Fraction

__all__ = [
    "Expr", "Const", "Param", "XVar", "Jet", "App", "Add", "Mul", "Pow",
    "FunctionSymbol", "as_expr", "jet", "param", "X", "ONE", "ZERO",
    "SQRT", "EXP", "LN", "TAN", "TANH", "sqrt", "exp", "ln", "tan", "tanh",
    "weierstrass", "quadratic_root_symbol", "fresh_function",
    "canonicalize", "diff", "substitute", "jet_order", "free_params",
]


def _to_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if hasattr(v, "numerator") and hasattr(v, "denominator"):
        return Fraction(int(v.numerator), int(v.denominator))
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"cannot make an exact constant from {v!r}")


def as_expr(v):
    if isinstance(v, Expr):
        return v
    return Const(_to_fraction(v))


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_rf", "_hash")

    def __init__(self):
        self._rf = None
        self._hash = None

    # structural identity -------------------------------------------------
    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                return isinstance(self, Const) and self.value == other
            return NotImplemented
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((type(self).__name__, self._key()))
            self._hash = h
        return h

    # arithmetic builds raw trees -------------------------------------------
    def __add__(self, other):
        return Add.of(self, as_expr(other))

    def __radd__(self, other):
        return Add.of(as_expr(other), self)

    def __sub__(self, other):
        return Add.of(self, -as_expr(other))

    def __rsub__(self, other):
        return Add.of(as_expr(other), -self)

    def __neg__(self):
        if isinstance(self, Const):
            return Const(-self.value)
        return Mul.of(Const(Fraction(-1)), self)

    def __pos__(self):
        return self

    def __mul__(self, other):
        return Mul.of(self, as_expr(other))

    def __rmul__(self, other):
        return Mul.of(as_expr(other), self)

    def __truediv__(self, other):
        other = as_expr(other)
        if isinstance(other, Const):
            return Mul.of(self, Const(1 / other.value))
        return Mul.of(self, Pow(other, Fraction(-1)))

    def __rtruediv__(self, other):
        return Mul.of(as_expr(other), Pow(self, Fraction(-1)))

    def __pow__(self, n):
        n = _to_fraction(n)
        if n.denominator not in (1, 2):
            raise ValueError("only integer and half-integer exponents are supported")
        if n == 1:
            return self
        return Pow(self, n)

    def __str__(self):
        return _fmt(self, 0)

    def __repr__(self):
        return f"Expr({_fmt(self, 0)!r})"

    # convenience ----------------------------------------------------------
    def canonical(self):
        return canonicalize(self)

    def is_zero(self):
        from . import _frac
        return _frac.to_frac(self).is_zero()


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = _to_fraction(value)

    def _key(self):
        return self.value


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        super().__init__()
        self.name = name

    def _key(self):
        return self.name


class XVar(Expr):
    __slots__ = ()

    def _key(self):
        return "x"


class Jet(Expr):
    """The k-th x-derivative of a dependent variable; order 0 is the variable."""

    __slots__ = ("name", "order")

    def __init__(self, name, order=0):
        super().__init__()
        if order < 0:
            raise ValueError("jet order must be non-negative")
        self.name = name
        self.order = int(order)

    def _key(self):
        return (self.name, self.order)


class App(Expr):
    """Function symbol applied to one argument.

    For symbols with a fresh derivative chain, ``order`` selects the member
    f, f', f'', ...; for closed-form symbols it is always 0.
    """

    __slots__ = ("symbol", "arg", "order")

    def __init__(self, symbol, arg, order=0):
        super().__init__()
        if order and not symbol.is_fresh_chain:
            raise ValueError(f"{symbol.name} has a closed-form derivative")
        self.symbol = symbol
        self.arg = as_expr(arg)
        self.order = int(order)

    def _key(self):
        return (id(self.symbol), self.order, self.arg)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def _key(self):
        return self.terms

    @staticmethod
    def of(*items):
        terms = []
        c = Fraction(0)
        for t in items:
            if isinstance(t, Add):
                terms.extend(t.terms)
            elif isinstance(t, Const):
                c += t.value
            else:
                terms.append(t)
        if c or not terms:
            terms.append(Const(c))
        if len(terms) == 1:
            return terms[0]
        return Add(terms)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def _key(self):
        return self.factors

    @staticmethod
    def of(*items):
        factors = []
        c = Fraction(1)
        for t in items:
            if isinstance(t, Mul):
                for f in t.factors:
                    if isinstance(f, Const):
                        c *= f.value
                    else:
                        factors.append(f)
            elif isinstance(t, Const):
                c *= t.value
            else:
                factors.append(t)
        if c == 0:
            return Const(0)
        if c != 1 or not factors:
            factors.insert(0, Const(c))
        if len(factors) == 1:
            return factors[0]
        return Mul(factors)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base, exp):
        super().__init__()
        self.base = as_expr(base)
        self.exp = _to_fraction(exp)

    def _key(self):
        return (self.base, self.exp)


ONE = Const(1)
ZERO = Const(0)
X = XVar()


def jet(name, order=0):
    return Jet(name, order)


def param(name):
    return Param(name)


# --------------------------------------------------------------------------
# function symbols


class FunctionSymbol:
    """A named unary function.

    ``derivative`` is either None (fresh chain: f', f'', ... are new symbols)
    or a callable mapping the argument Expr to f'(arg) as an Expr.
    ``relation``, when given, maps the argument to ``(p1, p0)`` meaning
    ``f(arg)**2 == p1*f(arg) + p0``; p1 and p0 must not involve f.
    Symbols compare by identity.
    """

    __slots__ = ("name", "derivative", "relation", "kind", "__weakref__")

    def __init__(self, name, derivative=None, relation=None, kind="function"):
        self.name = name
        self.derivative = derivative
        self.relation = relation
        self.kind = kind

    @property
    def is_fresh_chain(self):
        return self.derivative is None

    def __call__(self, arg, order=0):
        return App(self, as_expr(arg), order)

    def __repr__(self):
        return f"FunctionSymbol({self.name!r})"

    def derivative_at(self, arg, order=0):
        """f^{(order+1)}(arg) as an Expr, given f^{(order)}."""
        if self.derivative is None:
            return App(self, arg, order + 1)
        if order:
            raise ValueError("closed-form symbols have no chain order")
        return as_expr(self.derivative(as_expr(arg)))

    def nth_derivative(self, arg, n):
        """f^{(n)}(arg); closed forms are differentiated through their rule."""
        arg = as_expr(arg)
        if self.derivative is None:
            return App(self, arg, n)
        e = App(self, arg)
        if n == 0:
            return e
        t = Param("__darg")
        e = App(self, t)
        for _ in range(n):
            e = diff(e, t, chain=True)
        return substitute(e, {t: arg})


def fresh_function(name):
    return FunctionSymbol(name)


def _sqrt_rule(a):
    return Const(Fraction(1, 2)) / App(SQRT, a)


SQRT = FunctionSymbol("sqrt", _sqrt_rule, lambda a: (ZERO, a), kind="surd")
EXP = FunctionSymbol("exp", lambda a: App(EXP, a))
LN = FunctionSymbol("ln", lambda a: ONE / a)
TAN = FunctionSymbol("tan", lambda a: ONE + App(TAN, a) ** 2)
TANH = FunctionSymbol("tanh", lambda a: ONE - App(TANH, a) ** 2)

BUILTINS = {s.name: s for s in (SQRT, EXP, LN, TAN, TANH)}


def sqrt(e):
    return App(SQRT, as_expr(e))


def exp(e):
    return App(EXP, as_expr(e))


def ln(e):
    return App(LN, as_expr(e))


def tan(e):
    return App(TAN, as_expr(e))


def tanh(e):
    return App(TANH, as_expr(e))


_factory_lock = threading.Lock()
_wp_cache = {}
_root_cache = {}


def _frac_key(e):
    from . import _frac
    return _frac.to_frac(as_expr(e))


def weierstrass(g2=None, g3=None, name="wp"):
    """The pair (wp, wp') with wp'' = 6 wp^2 - g2/2 and wp'^2 = 4wp^3 - g2 wp - g3.

    Invariants default to the parameters ``g2`` and ``g3``.  Equal invariants
    return the identical pair, which keeps canonical forms unique.
    """
    g2 = Param("g2") if g2 is None else as_expr(g2)
    g3 = Param("g3") if g3 is None else as_expr(g3)
    key = (name, _frac_key(g2), _frac_key(g3))
    with _factory_lock:
        pair = _wp_cache.get(key)
        if pair is not None:
            return pair
        wp = FunctionSymbol(name, kind="weierstrass")
        wpd = FunctionSymbol(name + "'", kind="weierstrass")
        wp.derivative = lambda a: App(wpd, a)
        wpd.derivative = lambda a: 6 * App(wp, a) ** 2 - g2 / 2
        wpd.relation = lambda a: (ZERO, 4 * App(wp, a) ** 3 - g2 * App(wp, a) - g3)
        wp.relation = None
        pair = (wp, wpd)
        _wp_cache[key] = pair
        return pair


def quadratic_root_symbol(name, a, b_of, c):
    """Symbol psi with A psi^2 + b(arg) psi + C0 = 0.

    ``b_of`` maps the argument to the middle coefficient.  The derivative
    follows by implicit differentiation: psi' = -b'(arg) psi / (2 A psi + b).
    """
    a = as_expr(a)
    c = as_expr(c)
    key = (name, _frac_key(a), _frac_key(c), _frac_key(b_of(Param("__rarg"))))
    with _factory_lock:
        sym = _root_cache.get(key)
        if sym is not None:
            return sym
        sym = FunctionSymbol(name, kind="root")

        def rule(arg):
            t = Param("__rarg")
            db = substitute(diff(b_of(t), t, chain=True), {t: arg})
            psi = App(sym, arg)
            return -db * psi / (2 * a * psi + b_of(arg))

        sym.derivative = rule
        sym.relation = lambda arg: (-b_of(arg) / a, -c / a)
        _root_cache[key] = sym
        return sym


# --------------------------------------------------------------------------
# public kernel operations (thin wrappers over the normal form)


def canonicalize(e):
    """The unique canonical tree of ``e``; idempotent."""
    from . import _frac
    e = as_expr(e)
    return _frac.to_expr(_frac.to_frac(e))


def diff(e, sym, chain=False):
    """Partial derivative with respect to a parameter, x, jet or function application.

    With ``chain=False`` function applications are treated as independent
    symbols; ``chain=True`` differentiates through their arguments.
    """
    from . import _frac
    F = _frac.to_frac(as_expr(e))
    g = _frac.generator_of(as_expr(sym))
    d = _frac.partial(g, chain)
    return _frac.to_expr(d.apply(F))


def substitute(e, bindings):
    """Simultaneous replacement of symbols, then canonicalization."""
    from . import _frac
    F = _frac.to_frac(as_expr(e))
    mapping = {}
    for k, v in bindings.items():
        g = _frac.generator_of(as_expr(k))
        mapping[g.index] = _frac.to_frac(as_expr(v))
    return _frac.to_expr(_frac.substitute(F, mapping))


def jet_order(e, name=None):
    """Highest jet order occurring in ``e`` (optionally for one variable); -1 if none."""
    from . import _frac
    return _frac.jet_order(_frac.to_frac(as_expr(e)), name)


def free_params(e):
    from . import _frac
    return _frac.param_names(_frac.to_frac(as_expr(e)))


# --------------------------------------------------------------------------
# printing (output re-parses under the text grammar)

_PREC_ADD, _PREC_MUL, _PREC_POW = 1, 2, 3


def _fmt_frac(v):
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _fmt_jet(e):
    if e.order == 0:
        return e.name
    if e.order < 10:
        return f"{e.name}{e.order}"
    return f"{e.name}_{e.order}"


def _split_sign(e):
    """(negative?, |e|) for sign extraction in sums."""
    if isinstance(e, Const) and e.value < 0:
        return True, Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        c = -e.factors[0].value
        rest = e.factors[1:]
        if c == 1:
            return True, (rest[0] if len(rest) == 1 else Mul(rest))
        return True, Mul((Const(c),) + rest)
    return False, e


def _fmt(e, prec):
    if isinstance(e, Const):
        s = _fmt_frac(e.value)
        if e.value < 0 and prec > _PREC_ADD:
            return f"({s})"
        if e.value.denominator != 1 and prec >= _PREC_POW:
            return f"({s})"
        return s
    if isinstance(e, Param):
        return e.name
    if isinstance(e, XVar):
        return "x"
    if isinstance(e, Jet):
        return _fmt_jet(e)
    if isinstance(e, App):
        name = e.symbol.name + "'" * e.order
        return f"{name}({_fmt(e.arg, 0)})"
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            neg, a = _split_sign(t)
            s = _fmt(a, _PREC_ADD)
            if i == 0:
                parts.append("-" + s if neg else s)
            else:
                parts.append((" - " if neg else " + ") + s)
        s = "".join(parts)
        return f"({s})" if prec > _PREC_ADD else s
    if isinstance(e, Mul):
        neg, a = _split_sign(e)
        if neg:
            s = "-" + _fmt(a, _PREC_MUL)
            return f"({s})" if prec > _PREC_ADD else s
        coef = Fraction(1)
        num, den = [], []
        for f in e.factors:
            if isinstance(f, Const):
                coef *= f.value
            elif isinstance(f, Pow) and f.exp < 0:
                den.append(f.base if f.exp == -1 else Pow(f.base, -f.exp))
            else:
                num.append(f)
        nstr = [_fmt(f, _PREC_MUL) for f in num]
        if coef.numerator != 1 or not nstr:
            nstr.insert(0, str(coef.numerator))
        single = len(den) + (coef.denominator != 1) == 1
        dstr = [_fmt(f, _PREC_POW if single else _PREC_MUL) for f in den]
        if coef.denominator != 1:
            dstr.insert(0, str(coef.denominator))
        s = "*".join(nstr)
        if dstr:
            d = dstr[0] if single else "(" + "*".join(dstr) + ")"
            s = f"{s}/{d}"
        return f"({s})" if prec > _PREC_MUL else s
    if isinstance(e, Pow):
        if e.exp < 0:
            s = "1/" + _fmt(Pow(e.base, -e.exp) if e.exp != -1 else e.base, _PREC_POW)
            return f"({s})" if prec > _PREC_ADD else s
        b = _fmt(e.base, _PREC_POW + 1)
        x = e.exp
        xs = str(x.numerator) if x.denominator == 1 else f"({x.numerator}/{x.denominator})"
        s = f"{b}^{xs}"
        return f"({s})" if prec > _PREC_POW else s
    raise TypeError(f"unknown node {type(e).__name__}")
