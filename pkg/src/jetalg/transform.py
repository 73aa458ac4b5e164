"""Differential substitutions between evolution equations.

Three routes are provided:

* explicit maps v = Phi(u, u1, ..., un), checked by pushing the source flow
  forward and comparing with the target right-hand side;
* point maps w = phi(u), whose transformed right-hand side is computed by the
  inverse chain rule;
* implicit relations Phi(u-jets; v-jets) = 0 affine in one v-jet, checked by
  the invariance test X Phi = 0 on the manifold Phi = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _frac as R
from . import _poly as P
from .diffalg import EvolutionEquation, _D, _F, _E, make_residual
from .errors import NotAffine, NotClosedForm
from .expr import Expr, as_expr, jet


@dataclass(frozen=True)
class Substitution:
    """v = phi in the jets of ``source_var``."""

    phi: Expr
    source_var: str = "u"
    target_var: str = "v"
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", as_expr(self.phi))
        F = R.to_frac(self.phi)
        n = R.jet_order(F, self.source_var)
        if n < 0:
            raise ValueError("substitution does not involve the source variable")
        lead = R.partial(R.gen_jet(self.source_var, n), chain=True).apply(F)
        if lead.is_zero():
            raise ValueError("leading partial derivative vanishes")

    @property
    def order(self):
        return R.jet_order(R.to_frac(self.phi), self.source_var)


@dataclass(frozen=True)
class ImplicitRelation:
    """relation(u-jets; v-jets) = 0, affine in ``eliminate`` = (name, order)."""

    relation: Expr
    eliminate: tuple = ("v", 0)
    source_var: str = "u"
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "relation", as_expr(self.relation))
        _affine_split(R.to_frac(self.relation), R.gen_jet(*self.eliminate))


def _affine_split(F, g):
    """(a, b) with F == a*g + b, a nonzero and both free of g."""
    d = R.partial(g, chain=True)
    a = d.apply(F)
    if a.is_zero():
        raise NotAffine(f"relation does not involve {g.node()}")
    if not d.apply(a).is_zero() or R.depends_on(a, g):
        raise NotAffine(f"relation is not affine in {g.node()}")
    b = R.add(F, R.neg(R.mul(a, R.gen_frac(g))))
    if R.depends_on(b, g):
        raise NotAffine(f"relation is not affine in {g.node()}")
    return a, b


def _prolonged_images(phi, var, m):
    """[phi, D phi, ..., D^m phi]."""
    D = _D()
    out = [phi]
    for _ in range(m):
        out.append(D.apply(out[-1]))
    return out


def pushforward_residual_frac(S, source, target):
    if source.var != S.source_var or target.var != S.target_var:
        raise ValueError("variable names of the map and the equations do not match")
    phi = R.to_frac(S.phi)
    left = source.prolongation().apply(phi)
    m = target.order
    imgs = _prolonged_images(phi, S.source_var, m)
    mapping = {R.gen_jet(target.var, k).index: imgs[k] for k in range(m + 1)}
    right = R.substitute(target._rhs, mapping)
    return R.add(left, R.neg(right))


def pushforward_residual(S, source, target, trials=None, seed=None):
    """D_t phi along the source minus the target rhs evaluated on v_k = D^k phi."""
    return make_residual(pushforward_residual_frac(S, source, target), trials, seed)


def implicit_invariance_residual_frac(rel, source, target):
    F = R.to_frac(rel.relation)
    vname, j = rel.eliminate
    if target.var != vname or source.var != rel.source_var:
        raise ValueError("variable names of the relation and the equations do not match")

    def base(g):
        if g.kind == "jet" and g.name == source.var:
            return source.d_k(g.order)
        if g.kind == "jet" and g.name == target.var:
            return target.d_k(g.order)
        return None

    XF = R.Derivation(base, chain=True).apply(F)
    top = R.jet_order(XF, vname)
    D = _D()
    solved = {}
    cur = F
    for k in range(0, max(top - j, 0) + 1):
        if k:
            cur = D.apply(cur)
        g = R.gen_jet(vname, j + k)
        red = R.substitute(cur, solved)
        a, b = _affine_split(red, g)
        solved[g.index] = R.neg(R.mul(b, R.inverse(a)))
    return R.substitute(XF, solved)


def implicit_invariance_residual(rel, source, target, trials=None, seed=None):
    """X Phi restricted to Phi = 0 and its total derivatives."""
    return make_residual(implicit_invariance_residual_frac(rel, source, target), trials, seed)


def explicit_as_implicit(S):
    return ImplicitRelation(jet(S.target_var) - S.phi, (S.target_var, 0), S.source_var, S.name)


# --------------------------------------------------------------------------
# point maps


def _inverse_affine(phi_F, ug, w):
    """u as a normal form in w if phi is affine or Mobius in u, else None."""
    d = R.partial(ug, chain=True)
    a = d.apply(phi_F)
    if a.is_zero():
        return None
    num = phi_F.num
    dens = phi_F.den
    if any(R.depends_on(R.Frac(f.poly, ()), ug) and P.p_degree(f.poly, ug.index) > 1 for f, _ in dens):
        return None
    if any(R.depends_on(R.gen_frac(R.gen(i)), ug) and R.gen(i).kind == "app"
           for i in phi_F.gen_indices()):
        return None
    if P.p_degree(num, ug.index) > 1:
        return None
    den_poly = R._den_poly(dens)
    if P.p_degree(den_poly, ug.index) > 1:
        return None
    # phi = (a1 u + a0) / (b1 u + b0)  ->  u = (a0 - w b0) / (w b1 - a1)
    cn = P.p_collect(num, ug.index)
    cd = P.p_collect(den_poly, ug.index)
    a1, a0 = R.make(cn.get(1, {}), {}), R.make(cn.get(0, {}), {})
    b1, b0 = R.make(cd.get(1, {}), {}), R.make(cd.get(0, {}), {})
    return R.mul(R.add(a0, R.neg(R.mul(w, b0))), R.inverse(R.add(R.mul(w, b1), R.neg(a1))))


def point_pushforward(phi, source, target_var="w", rewrites=(), require_closed=True):
    """Transform u_t = F under w = phi(u).

    u-jets are eliminated by the inverse chain rule.  ``rewrites`` is a list of
    (pattern, replacement) pairs applied in order afterwards; patterns are
    single generators such as function applications.  For affine or Mobius
    phi the bare u is inverted automatically.  If u survives, NotClosedForm is
    raised with the mixed right-hand side attached (unless ``require_closed``
    is false, in which case the mixed rhs is returned).
    """
    phi_F = _F(phi)
    var = source.var
    ug = R.gen_jet(var, 0)
    if any(n != var or k for n, k in phi_F.jets()):
        raise ValueError("a point map may depend on u only")
    m = source.order
    ws = _prolonged_images(phi_F, var, m)
    dphi = R.partial(ug, chain=True).apply(phi_F)
    if dphi.is_zero():
        raise ValueError("point map has zero derivative")
    inv_dphi = R.inverse(dphi)
    sol = {}
    for k in range(1, m + 1):
        wk = R.gen_frac(R.gen_jet(target_var, k))
        uk = R.gen_jet(var, k)
        rest = R.add(ws[k], R.neg(R.mul(dphi, R.gen_frac(uk))))
        rest = R.substitute(rest, sol)
        sol[uk.index] = R.mul(R.add(wk, R.neg(rest)), inv_dphi)
    H = R.mul(dphi, source._rhs)
    H = R.substitute(H, sol)
    for pat, rep in rewrites:
        g = R.generator_of(as_expr(pat))
        H = R.substitute(H, {g.index: _F(rep)})
    w0 = R.gen_frac(R.gen_jet(target_var, 0))
    if R.depends_on(H, ug):
        inv = _inverse_affine(phi_F, ug, w0)
        if inv is not None:
            H = R.substitute(H, {ug.index: inv})
    if R.depends_on(H, ug):
        if require_closed:
            raise NotClosedForm("transformed rhs still depends on the old variable", rhs=_E(H))
        return _E(H)
    return EvolutionEquation(_E(H), var=target_var)


__all__ = [
    "Substitution", "ImplicitRelation", "pushforward_residual", "implicit_invariance_residual",
    "point_pushforward", "explicit_as_implicit",
]
