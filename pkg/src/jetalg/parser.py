"""Text grammar for expressions.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom [('^' | '**') unary]
    atom   := INT | NAME "'"* ['(' expr ')'] | '(' expr ')'

``^`` binds tighter than unary minus and associates to the right, so
``-u^2`` is ``-(u^2)`` and ``u^-1`` is ``1/u``.  Exponents must evaluate to
an integer or half-integer constant.  Names resolve in this order: macro
definitions, jet variables of the declared dependent variables (``u``,
``u1``, ``u_10``), ``x``, bound parameter values, free parameters.  A name
followed by ``(`` is a function application; trailing apostrophes request
derivatives (new chain symbols for free functions, the derivative rule for
closed forms).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType

from .errors import ExprSyntaxError, UnknownSymbol
from .expr import BUILTINS, X, Const, FunctionSymbol, Param, as_expr, jet, weierstrass

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*'*)|(\*\*|[-+*/^()]))")


@dataclass(frozen=True)
class Context:
    """Frozen symbol table used by :func:`parse`.

    ``functions`` maps names (possibly ending in apostrophes, like ``wp'``)
    to function symbols; ``values`` binds parameter names to expressions;
    ``defs`` are macros substituted verbatim.  With ``strict_params`` an
    identifier that is neither bound nor listed in ``params`` is an error.
    """

    variables: tuple = ("u", "v", "w")
    functions: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    values: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    defs: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    params: frozenset = frozenset()
    strict_params: bool = False

    def lookup_function(self, name):
        f = self.functions.get(name)
        if f is None:
            f = BUILTINS.get(name)
        return f


def make_context(variables=("u", "v", "w"), functions=None, values=None, defs=None,
                 params=(), strict_params=False, g2=None, g3=None, fresh=("a", "b", "c", "f", "phi")):
    """Context with the builtins, a Weierstrass pair and the given free functions."""
    funcs = {}
    wp, wpd = weierstrass(g2, g3)
    funcs["wp"] = wp
    funcs["wp'"] = wpd
    for n in fresh:
        funcs[n] = _fresh(n)
    funcs.update(functions or {})
    vals = {k: as_expr(v) for k, v in (values or {}).items()}
    return Context(tuple(variables), MappingProxyType(funcs), MappingProxyType(vals),
                   MappingProxyType(dict(defs or {})), frozenset(params), strict_params)


_fresh_cache = {}


def _fresh(name):
    # one shared symbol per name so independently parsed texts agree
    sym = _fresh_cache.get(name)
    if sym is None:
        sym = _fresh_cache.setdefault(name, FunctionSymbol(name))
    return sym


DEFAULT_CONTEXT = None


def default_context():
    global DEFAULT_CONTEXT
    if DEFAULT_CONTEXT is None:
        DEFAULT_CONTEXT = make_context()
    return DEFAULT_CONTEXT


class _Parser:
    def __init__(self, text, ctx):
        self.text = text
        self.ctx = ctx
        self.toks = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                self.error(f"unexpected character {text[start]!r}", start)
            kind = "int" if m.group(1) else ("name" if m.group(2) else "op")
            self.toks.append((kind, m.group(m.lastindex), m.start(m.lastindex)))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.i = 0

    def error(self, msg, pos):
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        raise ExprSyntaxError(msg, line, col)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.take()
        if t[1] != val:
            self.error(f"expected {val!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            self.error(f"unexpected {t[1]!r}", t[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            r = self.unary()
            e = e * r if op == "*" else e / r
        return e

    def unary(self):
        t = self.peek()
        if t[1] == "-" and t[0] == "op":
            self.take()
            return -self.unary()
        if t[1] == "+" and t[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t[1] in ("^", "**"):
            self.take()
            pos = self.peek()[2]
            ex = self.unary()
            from .expr import canonicalize
            c = canonicalize(ex)
            if not isinstance(c, Const):
                self.error("exponent must be a rational constant", pos)
            if c.value.denominator not in (1, 2):
                self.error("exponent must be an integer or half-integer", pos)
            if c.value == 0:
                return Const(1)
            return base ** c.value
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "int":
            return Const(Fraction(int(val)))
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return self.apply(val, arg, pos)
            return self.name(val, pos)
        self.error(f"unexpected {val or 'end of input'!r}", pos)

    def apply(self, name, arg, pos):
        ctx = self.ctx
        sym = ctx.lookup_function(name)
        if sym is not None:
            return sym(arg)
        base = name.rstrip("'")
        n = len(name) - len(base)
        sym = ctx.lookup_function(base)
        if sym is None:
            raise UnknownSymbol(f"unknown function {base!r} (at column {pos + 1})")
        return sym.nth_derivative(arg, n)

    def name(self, name, pos):
        ctx = self.ctx
        if name.endswith("'"):
            self.error(f"apostrophe on {name.rstrip(chr(39))!r} outside a function application", pos)
        if name in ctx.defs:
            return as_expr(ctx.defs[name])
        m = re.fullmatch(r"([A-Za-z]+)(?:_?(\d+))?", name)
        if m and m.group(1) in ctx.variables:
            return jet(m.group(1), int(m.group(2) or 0))
        if name == "x":
            return X
        if name in ctx.values:
            return ctx.values[name]
        if ctx.strict_params and name not in ctx.params:
            raise UnknownSymbol(f"unknown symbol {name!r} (at column {pos + 1})")
        return Param(name)


def parse(text, context=None):
    """Parse ``text`` into a raw expression tree (not canonicalized)."""
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text, context or default_context()).parse()


__all__ = ["Context", "make_context", "default_context", "parse"]
