"""Jet-space calculus for scalar evolution equations u_t = F(x, u, u1, ..., um)."""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from . import _frac as R
from . import _poly as P
from .errors import InconsistentRelations, JetOrderOverflow
from .expr import Expr, as_expr
from .oracle import Verdict, zero_test

DEFAULT_MAX_JET_ORDER = 12
_cutoff = contextvars.ContextVar("max_jet_order", default=DEFAULT_MAX_JET_ORDER)


def max_jet_order():
    return _cutoff.get()


@contextlib.contextmanager
def jet_order_limit(n):
    tok = _cutoff.set(int(n))
    try:
        yield
    finally:
        _cutoff.reset(tok)


def _F(e):
    return e if isinstance(e, R.Frac) else R.to_frac(as_expr(e))


def _E(F):
    return R.to_expr(F)


def _D():
    return R.total_derivation(_cutoff.get())


def _check_order(F):
    n = R.jet_order(F)
    if n > _cutoff.get():
        raise JetOrderOverflow(f"jet order {n} exceeds the cutoff {_cutoff.get()}")


# --------------------------------------------------------------------------
# equations and operators


class EvolutionEquation:
    """u_t = rhs for one dependent variable.

    The separant is the derivative of rhs with respect to the highest jet,
    differentiating through function arguments.
    """

    def __init__(self, rhs, var="u", name=None, anchor=None):
        self.rhs = as_expr(rhs)
        self.var = var
        self.name = name
        self.anchor = anchor
        self._rhs = R.to_frac(self.rhs)
        self.order = R.jet_order(self._rhs, var)
        others = {n for n, _ in self._rhs.jets() if n != var}
        if others:
            raise ValueError(f"rhs mentions other dependent variables: {sorted(others)}")
        if self.order < 2:
            raise ValueError("an evolution equation needs order m >= 2")
        sep = R.partial(R.gen_jet(var, self.order), chain=True).apply(self._rhs)
        if sep.is_zero():
            raise ValueError("separant vanishes")
        self._separant = sep
        self.x_dependent = any(R.gen(i).kind == "x" or _has_x(R.gen(i))
                               for i in self._rhs.gen_indices())
        self._powers = {}
        self._prolong = {}

    @property
    def separant(self):
        return _E(self._separant)

    def d_k(self, k):
        """D^k F as a normal form, cached per jet cutoff."""
        cut = _cutoff.get()
        lst = self._powers.setdefault(cut, [self._rhs])
        D = _D()
        while len(lst) <= k:
            lst.append(D.apply(lst[-1]))
        return lst[k]

    def prolongation(self):
        """The derivation D_t acting by u_k -> D^k F."""
        cut = _cutoff.get()
        d = self._prolong.get(cut)
        if d is None:
            var = self.var

            def base(g):
                if g.kind == "jet" and g.name == var:
                    return self.d_k(g.order)
                return None

            d = R.Derivation(base, chain=True)
            self._prolong[cut] = d
        return d

    def __str__(self):
        return f"{self.var}_t = {self.rhs}"

    def __repr__(self):
        return f"EvolutionEquation({str(self)!r})"


def _has_x(g):
    if g.kind == "x":
        return True
    if g.kind == "app":
        return any(_has_x(R.gen(i)) for i in g.arg.gen_indices())
    return False


class DifferentialOperator:
    """sum_i c_i D^i with trailing zero coefficients trimmed."""

    def __init__(self, coeffs):
        cs = [_F(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self._c = tuple(cs)

    @property
    def coeffs(self):
        return [_E(c) for c in self._c]

    @property
    def order(self):
        return len(self._c) - 1

    def __len__(self):
        return len(self._c)

    def __call__(self, e):
        return apply_operator(self, e)

    def __str__(self):
        parts = []
        for i, c in enumerate(self._c):
            if c.is_zero():
                continue
            d = "" if i == 0 else ("D" if i == 1 else f"D^{i}")
            parts.append(f"({_E(c)})" + (f"*{d}" if d else ""))
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"DifferentialOperator({self.coeffs!r})"


@dataclass(frozen=True)
class Residual:
    expression: Expr
    verdict: Verdict

    @property
    def is_zero(self):
        return self.verdict.is_zero


def make_residual(F, trials=None, seed=None):
    return Residual(_E(F), zero_test(F, trials, seed))


# --------------------------------------------------------------------------
# operations


def total_x_derivative(e):
    F = _F(e)
    _check_order(F)
    return _E(_D().apply(F))


def total_x_derivative_frac(F, k=1):
    D = _D()
    for _ in range(k):
        F = D.apply(F)
    return F


def dt_modulo(e, eq):
    F = _F(e)
    _check_order(F)
    return _E(eq.prolongation().apply(F))


def frechet(e, var="u"):
    """Linearization: coefficients c_i = d e / d u_i, through function arguments."""
    F = _F(e)
    n = R.jet_order(F, var)
    coeffs = [R.partial(R.gen_jet(var, i), chain=True).apply(F) for i in range(n + 1)]
    return DifferentialOperator(coeffs)


def apply_operator_frac(A, F):
    D = _D()
    terms = []
    cur = F
    for i, c in enumerate(A._c):
        if i:
            cur = D.apply(cur)
        if not c.is_zero():
            terms.append(R.mul(c, cur))
    return R.frac_sum(terms)


def apply_operator(A, e):
    return _E(apply_operator_frac(A, _F(e)))


def symmetry_residual_frac(eq, G):
    G = _F(G)
    if not eq.x_dependent and any(_has_x(R.gen(i)) for i in G.gen_indices()):
        raise ValueError("candidate depends on x but the equation does not")
    left = eq.prolongation().apply(G)
    right = apply_operator_frac(frechet(eq._rhs, eq.var), G)
    return R.add(left, R.neg(right))


def symmetry_residual(eq, G, trials=None, seed=None):
    """D_t G - F_*(G); a zero verdict means G generates a symmetry of eq."""
    return make_residual(symmetry_residual_frac(eq, G), trials, seed)


def euler_operator_frac(F, var="u"):
    n = R.jet_order(F, var)
    D = _D()
    terms = []
    for k in range(n + 1):
        c = R.partial(R.gen_jet(var, k), chain=True).apply(F)
        for _ in range(k):
            c = D.apply(c)
        terms.append(R.neg(c) if k % 2 else c)
    return R.frac_sum(terms)


def euler_operator(e, var="u"):
    return _E(euler_operator_frac(_F(e), var))


def conserved_density_residual(eq, rho, trials=None, seed=None):
    """Euler operator of D_t rho; zero means rho is a conserved density."""
    dt = eq.prolongation().apply(_F(rho))
    return make_residual(euler_operator_frac(dt, eq.var), trials, seed)


def bracket(F, G, var="u"):
    """frechet(G)(F) - frechet(F)(G)."""
    F, G = _F(F), _F(G)
    return _E(R.add(apply_operator_frac(frechet(G, var), F),
                    R.neg(apply_operator_frac(frechet(F, var), G))))


# --------------------------------------------------------------------------
# linear ansatz


def solve_linear_ansatz(eq, basis):
    """Basis of coefficient vectors c with sum c_i * basis_i a symmetry of eq.

    The residual is linear in c; it is brought over a common denominator and
    the coefficient of every jet monomial is set to zero.  The system is solved
    exactly over Q(parameters).  Each returned vector is scaled so that its
    first nonzero entry is 1.
    """
    basis = [_F(b) for b in basis]
    try:
        residuals = [symmetry_residual_frac(eq, b) for b in basis]
    except JetOrderOverflow as exc:
        raise InconsistentRelations(f"coefficient collection hit the jet cutoff: {exc}") from exc
    rows = _columns_to_rows(residuals)
    return [[_E(c) for c in v] for v in _nullspace(rows, len(basis))]


def _nullspace(rows, n):
    """Exact nullspace over the field of normal forms (Gauss-Jordan)."""
    rows = [list(r) for r in rows if any(not c.is_zero() for c in r)]
    pivots = []
    r = 0
    for col in range(n):
        piv = None
        for i in range(r, len(rows)):
            if not rows[i][col].is_zero():
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = R.inverse(rows[r][col])
        rows[r] = [R.mul(c, inv) for c in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [R.add(a, R.neg(R.mul(f, b))) for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(n) if c not in pivots]
    out = []
    for fc in free:
        v = [R.ZERO] * n
        v[fc] = R.ONE
        for i, pc in enumerate(pivots):
            v[pc] = R.neg(rows[i][fc])
        lead = next(c for c in v if not c.is_zero())
        li = R.inverse(lead)
        out.append([R.mul(c, li) for c in v])
    return out


def _columns_to_rows(cols, keep=lambda g: g.kind != "param"):
    """Clear denominators and split every column on monomials of the kept generators."""
    den = {}
    for c in cols:
        for f, e in c.den:
            if den.get(f, 0) < e:
                den[f] = e
    combined = {}
    for j, c in enumerate(cols):
        rd = dict(c.den)
        mult = {0: P.ONE}
        for f, e in den.items():
            k = e - rd.get(f, 0)
            if k:
                mult = P.p_mul(mult, f.power(k))
        num = P.p_mul(c.num, mult)
        mask = 0
        for i, _ in P.mono_items(P.p_occupancy(num)):
            if keep(R.gen(i)):
                mask |= P.field_mask(i)
        for key, poly in P.p_split(num, mask).items():
            combined.setdefault(key, {})[j] = R.make(poly, {})
    return [[row.get(j, R.ZERO) for j in range(len(cols))] for row in combined.values()]


def solve_linear_combination(e, basis, unknowns=()):
    """Constants c_i with e == sum c_i * basis_i identically, or None.

    Constants range over Q(parameters); parameters named in ``unknowns`` are
    not allowed to occur in the answer.
    """
    cols = [_F(b) for b in basis] + [R.neg(_F(e))]
    banned = set(unknowns)
    rows = _columns_to_rows(cols, keep=lambda g: g.kind != "param" or g.name in banned)
    for v in _nullspace(rows, len(cols)):
        if not v[-1].is_zero():
            inv = R.inverse(v[-1])
            return [_E(R.mul(c, inv)) for c in v[:-1]]
    return None


def combine(coeffs, basis):
    """sum c_i * basis_i as a canonical Expr."""
    terms = [R.mul(_F(c), _F(b)) for c, b in zip(coeffs, basis)]
    return _E(R.frac_sum(terms))


__all__ = [
    "EvolutionEquation", "DifferentialOperator", "Residual", "total_x_derivative",
    "dt_modulo", "frechet", "apply_operator", "symmetry_residual", "euler_operator",
    "conserved_density_residual", "solve_linear_ansatz", "bracket", "combine",
    "jet_order_limit", "max_jet_order", "DEFAULT_MAX_JET_ORDER", "solve_linear_combination",
]
