"""Parameterized fixtures: equations, maps, symmetries and operators.

Every fixture has rational defaults for all of its parameters.  Bindings may
override any of them with a rational, an Expr, or a string in the text
grammar (``"k"`` keeps the parameter symbolic).  Derived constants such as
the Weierstrass invariants computed from the roots e1, e2, e3 are filled in
by :func:`resolve_parameters`.

Fixtures whose printed form fails verification are kept verbatim; the
repaired variant lives next to them under a ``_corrected`` name.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Fr
from typing import Callable

from .diffalg import EvolutionEquation
from .errors import MissingParameter, UnknownFixture
from .expr import (
    App, Const, as_expr, canonicalize, diff, jet, ln, quadratic_root_symbol,
    sqrt, tan, tanh, weierstrass,
)
from .parser import _fresh, make_context, parse
from .psdo import identity_operator, w_recursion
from .transform import Substitution


@dataclass(frozen=True)
class Fixture:
    name: str
    kind: str  # equation | map | symmetry | operator
    anchor: str
    defaults: dict
    build: Callable
    source: str | None = None
    target: str | None = None
    sign_param: str | None = None
    point: bool = False
    verifiable: bool = True
    notes: str = ""
    extra: dict = field(default_factory=dict)


_REG: dict = {}


def _register(name, kind, anchor, defaults=None, **kw):
    def deco(fn):
        _REG[name] = Fixture(name, kind, anchor, dict(defaults or {}), fn, **kw)
        return fn
    return deco


def _U(var="u"):
    return [jet(var, i) for i in range(9)]


# --------------------------------------------------------------------------
# parameters


def _value(v):
    if v is None:
        return None
    if isinstance(v, str):
        return parse(v)
    return as_expr(v)


def _roots(p):
    e1, e2 = p["e1"], p["e2"]
    e3 = canonicalize(-e1 - e2)
    g2 = canonicalize(-4 * (e1 * e2 + e1 * e3 + e2 * e3))
    g3 = canonicalize(4 * e1 * e2 * e3)
    return e3, g2, g3


def resolve_parameters(name, bindings=None):
    """Defaults overridden by ``bindings``, plus derived constants."""
    fx = fixture(name)
    p = {}
    bindings = dict(bindings or {})
    for key, default in fx.defaults.items():
        v = _value(bindings.get(key, default))
        if v is None:
            raise MissingParameter(f"fixture {name!r} needs a value for {key!r}")
        p[key] = v
    if "e1" in p and "e2" in p:
        p["e3"], p["g2"], p["g3"] = _roots(p)
        if "A" in p:
            e1, e2, e3 = p["e1"], p["e2"], p["e3"]
            p["C"] = canonicalize(Fr(3, 4) * e1)
            p["B"] = canonicalize(Fr(9, 64) * (e1 ** 2 - 4 * e2 * e3) / p["A"])
    return p


def fixture(name):
    try:
        return _REG[name]
    except KeyError:
        raise UnknownFixture(f"no fixture named {name!r}") from None


def _build(name, kind, bindings, **kw):
    fx = fixture(name)
    if fx.kind != kind:
        raise UnknownFixture(f"{name!r} is a {fx.kind}, not a {kind}")
    p = resolve_parameters(name, bindings)
    return fx.build(p, **kw)


def get_equation(name, bindings=None):
    return _build(name, "equation", bindings)


def get_map(name, bindings=None):
    return _build(name, "map", bindings)


def get_symmetry(name, bindings=None, var=None):
    fx = fixture(name)
    return _build(name, "symmetry", bindings, var=var or fx.extra.get("var", "u"))


def get_operator(name, bindings=None):
    return _build(name, "operator", bindings)


def list_catalog(kind=None):
    out = []
    for fx in _REG.values():
        if kind and fx.kind != kind:
            continue
        d = {"name": fx.name, "kind": fx.kind, "anchor": fx.anchor,
             "parameters": {k: str(as_expr(v)) for k, v in fx.defaults.items()}}
        if fx.kind == "map":
            d.update(source=fx.source, target=fx.target, point=fx.point,
                     verifiable=fx.verifiable)
            if fx.sign_param:
                d["sign_parameter"] = fx.sign_param
        if fx.notes:
            d["notes"] = fx.notes
        out.append(d)
    return out


def names(kind=None):
    return [fx.name for fx in _REG.values() if kind is None or fx.kind == kind]


# --------------------------------------------------------------------------
# equations

_KDEF = Fr(3, 7)
_WP = {"g2": Fr(4, 7), "g3": Fr(1, 3)}
_CD = {"k1": Fr(1, 3), "k2": Fr(-2, 5), "k3": Fr(3, 7), "k4": Fr(1, 2), "k": Fr(2, 9),
       "with_k0": 0, "k0": Fr(5, 4)}
_ROOTS = {"e1": Fr(1, 3), "e2": Fr(-1, 5)}


@_register("kdv", "equation", "KdV equation", extra={"var": "v"})
def _kdv(p):
    v = _U("v")
    return EvolutionEquation(v[3] + v[0] * v[1], var="v", name="kdv")


@_register("kdv_u", "equation", "KdV equation in the variable u")
def _kdv_u(p):
    u = _U()
    return EvolutionEquation(u[3] + u[0] * u[1], name="kdv_u")


@_register("kdv_scaled", "equation", "KdV with the nonlinearity scaled by 1/lam",
           {"lam": 3}, extra={"var": "v"})
def _kdv_scaled(p):
    v = _U("v")
    return EvolutionEquation(v[3] + v[0] * v[1] / p["lam"], var="v", name="kdv_scaled")


@_register("linear", "equation", "linear third-order flow v_t = v3", extra={"var": "v"})
def _linear(p):
    return EvolutionEquation(jet("v", 3), var="v", name="linear")


@_register("linear_u", "equation", "linear third-order flow u_t = u3")
def _linear_u(p):
    return EvolutionEquation(jet("u", 3), name="linear_u")


def _kn_rhs(W, kk):
    u = _U()
    return u[3] - Fr(3, 2) * u[2] ** 2 / u[1] - Fr(3, 2) * W * u[1] ** 3 + kk / u[1]


@_register("kn", "equation", "third-order equation with a Weierstrass coefficient and k/u1",
           {**_WP, "k": 5})
def _kn(p):
    wp, _ = weierstrass(p["g2"], p["g3"])
    return EvolutionEquation(_kn_rhs(wp(jet("u")), p["k"]), name="kn")


@_register("kn_free_f", "equation", "the same equation at k = 0 with a free function f(u)")
def _kn_free(p):
    return EvolutionEquation(_kn_rhs(_fresh("f")(jet("u")), 0), name="kn_free_f")


@_register("kn_const_wp", "equation", "Weierstrass coefficient frozen to a constant c0",
           {"c0": Fr(2, 5), "k": 6})
def _kn_const(p):
    return EvolutionEquation(_kn_rhs(p["c0"], p["k"]), name="kn_const_wp")


def _half(alpha):
    return alpha * jet("u") / 2


def _wp_rational(p):
    return 1 / jet("u") ** 2


def _wp_tan_printed(p):
    a = p["alpha"]
    return a ** 2 / 4 * (Fr(-2, 3) + tan(_half(a)) ** 2)


def _wp_tanh_printed(p):
    # the printed coefficient uses tan^2 even though the map uses tanh
    a = p["alpha"]
    return a ** 2 / 4 * (Fr(2, 3) + tan(_half(a)) ** 2)


def _wp_tan_corrected(p):
    a = p["alpha"]
    return a ** 2 / 4 * (Fr(2, 3) + tan(_half(a)) ** 2)


def _wp_tanh_corrected(p):
    a = p["alpha"]
    return a ** 2 / 4 * (Fr(-2, 3) + tanh(_half(a)) ** 2)


_COEF = {
    "rational": (_wp_rational, {}),
    "tan": (_wp_tan_printed, {"alpha": Fr(2, 3)}),
    "tanh": (_wp_tanh_printed, {"alpha": Fr(2, 3)}),
    "tan_corrected": (_wp_tan_corrected, {"alpha": Fr(2, 3)}),
    "tanh_corrected": (_wp_tanh_corrected, {"alpha": Fr(2, 3)}),
}


def _kn_variant(tag, coef, defaults):
    name = f"kn_{tag}_wp"

    @_register(name, "equation", f"coefficient replaced by the {tag.replace('_', ' ')} closed form",
               {**defaults, "k": 6})
    def _eq(p):
        return EvolutionEquation(_kn_rhs(coef(p), p["k"]), name=name)


for _tag, (_coef, _defs) in _COEF.items():
    _kn_variant(_tag, _coef, _defs)


def _alpha(p):
    u = jet("u")
    a = sum((p[f"k{i}"] * (u + p["k"]) ** i for i in range(1, 5)), Const(0))
    if p["with_k0"] != 0:
        a = a + p["k0"]
    return a


@_register("cd", "equation",
           "third-order equation with sqrt-type nonlinearity built on a quartic alpha(u)", _CD)
def _cd(p):
    u = _U()
    al = _alpha(p)
    a1 = diff(al, u[0])
    a2 = diff(a1, u[0])
    den = u[1] ** 2 + al
    rhs = (u[3] - Fr(3, 2) * u[1] / den * u[2] ** 2 - Fr(3, 2) * a1 * u[1] / den * u[2]
           - Fr(3, 8) * a1 ** 2 * u[1] / den + a2 * u[1] / 2)
    return EvolutionEquation(rhs, name="cd")


@_register("cd_normalized", "equation",
           "normalized form with u1^2 + 1 and a Weierstrass coefficient", _ROOTS)
def _cd_norm(p):
    u = _U()
    wp, _ = weierstrass(p["g2"], p["g3"])
    rhs = (u[3] - Fr(3, 2) * u[1] / (u[1] ** 2 + 1) * u[2] ** 2
           - Fr(3, 2) * wp(u[0]) * (u[1] ** 3 + u[1]))
    return EvolutionEquation(rhs, name="cd_normalized")


@_register("exp_target", "equation", "v3 - v1^3/8 + (A e^v + B e^-v + C) v1",
           {**_ROOTS, "A": Fr(2, 7)}, extra={"var": "v"})
def _exp_target(p):
    from .expr import exp
    v = _U("v")
    rhs = v[3] - Fr(1, 8) * v[1] ** 3 + (p["A"] * exp(v[0]) + p["B"] * exp(-v[0]) + p["C"]) * v[1]
    return EvolutionEquation(rhs, var="v", name="exp_target")


@_register("cubic_form", "equation", "v3 - 3/2 v2^2/v1 + (a v^3 + b v + c)/v1",
           {"a": 5, "b": Fr(-5, 7), "c": Fr(-5, 12)}, extra={"var": "v"})
def _cubic_form(p):
    v = _U("v")
    rhs = v[3] - Fr(3, 2) * v[2] ** 2 / v[1] + (p["a"] * v[0] ** 3 + p["b"] * v[0] + p["c"]) / v[1]
    return EvolutionEquation(rhs, var="v", name="cubic_form")


@_register("w_eq", "equation", "w3 - 3/2 w2^2/w1", extra={"var": "w"})
def _w_eq(p):
    w = _U("w")
    return EvolutionEquation(w[3] - Fr(3, 2) * w[2] ** 2 / w[1], var="w", name="w_eq")


def _o2_first_rhs(p, sign):
    u = _U()
    return (u[3] - Fr(3, 4) * u[2] ** 2 / u[1] - u[1] ** 2 / 3
            + sign * Fr(2, 3) * p["k"] * u[1] * sqrt(u[1]))


@_register("order2_first_eq", "equation", "u3 - 3/4 u2^2/u1 - u1^2/3 - 2/3 k u1^(3/2)",
           {"k": _KDEF})
def _o2_first_eq(p):
    return EvolutionEquation(_o2_first_rhs(p, -1), name="order2_first_eq")


@_register("order2_first_eq_corrected", "equation",
           "first second-order pair with the sign of the k-term flipped", {"k": _KDEF})
def _o2_first_eq_c(p):
    return EvolutionEquation(_o2_first_rhs(p, 1), name="order2_first_eq_corrected")


@_register("order2_second_eq", "equation", "u3 - u1^3/18 + k/2 u1^2", {"k": _KDEF})
def _o2_second_eq(p):
    u = _U()
    return EvolutionEquation(u[3] - u[1] ** 3 / 18 + p["k"] / 2 * u[1] ** 2, name="order2_second_eq")


def _a_chain(n=3):
    a = _fresh("a")
    u = jet("u")
    return [a(u, i) if i else a(u) for i in range(n)]


@_register("order2_third_eq", "equation", "u3 + 3a'/a u1 u2 + (a''/a - a^2/18) u1^3")
def _o2_third_eq(p):
    u = _U()
    a, a1, a2 = _a_chain()
    rhs = u[3] + 3 * a1 / a * u[1] * u[2] + (a2 / a - a ** 2 / 18) * u[1] ** 3
    return EvolutionEquation(rhs, name="order2_third_eq")


def _chain(name, n=3):
    f = _fresh(name)
    u = jet("u")
    return [f(u, i) if i else f(u) for i in range(n)]


def _second_order_forms():
    u = _U()
    u1, u2 = u[1], u[2]
    a, a1, a2 = _chain("a")
    b, b1, _ = _chain("b")
    c = _fresh("c")(u[0])

    def f1(p):
        return u2 / u1 ** 2 - a2 / a1 + b * u1

    def f2(p):
        return u2 / u1 ** 2 + 1 / u1 + b * u1 + c

    def f3(p):
        k = p["k"]
        return (u2 / (u1 + 1) ** 2 - (b1 - k ** 2) / (b + k) / (u1 + 1)
                + (b ** 2 - b1) / (b + k) * (u1 + 1) + 2 * (b1 + k * b) / (b + k))

    def f4(p):
        k = p["k"]
        return u2 / (u1 + 1) ** 2 + a2 / a1 / (u1 + 1) + (a2 / a1 + k * a) * u1 - a2 / a1

    def f5(p):
        k = p["k"]
        return ((u2 + a1 * u1) / (u1 + 1) ** 2 + a * a2 / (a1 * (u1 + a))
                - (a2 / a1 - a1 / a ** 2 + k / a ** 2) * u1)

    return [(f1, {}), (f2, {}), (f3, {"k": Fr(2, 5)}), (f4, {"k": Fr(-3, 4)}), (f5, {"k": Fr(5, 6)})]


def _so_variant(i, fn, defaults):
    name = f"second_order_{i}"

    @_register(name, "equation", f"second-order form number {i} with free functions of u", defaults)
    def _eq(p):
        return EvolutionEquation(fn(p), name=name)


for _i, (_fn, _defs) in enumerate(_second_order_forms(), 1):
    _so_variant(_i, _fn, _defs)


# --------------------------------------------------------------------------
# maps


@_register("order2_first", "map", "v = u2/sqrt(u1) - 2/3 u1 + k sqrt(u1)", {"k": _KDEF},
           source="order2_first_eq", target="kdv",
           notes="fails as printed; verifies against order2_first_eq_corrected")
def _m_o2_first(p):
    u = _U()
    phi = u[2] / sqrt(u[1]) - Fr(2, 3) * u[1] + p["k"] * sqrt(u[1])
    return Substitution(phi, "u", "v", "order2_first")


@_register("order2_second", "map", "v = u2 - u1^2/6 + k u1", {"k": _KDEF},
           source="order2_second_eq", target="kdv")
def _m_o2_second(p):
    u = _U()
    return Substitution(u[2] - u[1] ** 2 / 6 + p["k"] * u[1], "u", "v", "order2_second")


@_register("order2_third", "map", "v = a u2 + (a' - a^2/6) u1^2",
           source="order2_third_eq", target="kdv")
def _m_o2_third(p):
    u = _U()
    a, a1, _ = _a_chain()
    return Substitution(a * u[2] + (a1 - a ** 2 / 6) * u[1] ** 2, "u", "v", "order2_third")


@_register("kn_to_kdv_const_wp", "map", "third-order map to KdV for a constant coefficient",
           {"eps": 1, "c0": Fr(2, 5)}, source="kn_const_wp", target="kdv", sign_param="eps")
def _m_const(p):
    u = _U()
    eps, c0 = p["eps"], p["c0"]
    phi = 3 * (u[3] / u[1] - Fr(3, 2) * u[2] ** 2 / u[1] ** 2 + 4 * eps * u[2] / u[1] ** 2
               - Fr(3, 2) * c0 * u[1] ** 2 - 2 / u[1] ** 2)
    return Substitution(phi, "u", "v", "kn_to_kdv_const_wp")


def _eps_map(W, E, name):
    u = _U()
    E1 = diff(E, u[0], chain=True)
    phi = -3 * (u[3] / u[1] - Fr(1, 2) * u[2] ** 2 / u[1] ** 2 + E * u[2] + E1 * u[1] ** 2
                + Fr(3, 2) * W * u[1] ** 2 + 2 / u[1] ** 2)
    return Substitution(phi, "u", "v", name)


@_register("kn_to_kdv_rational", "map", "third-order map with coefficient 1/u^2 and eps = 2/u",
           source="kn_rational_wp", target="kdv")
def _m_rational(p):
    return _eps_map(_wp_rational(p), 2 / jet("u"), "kn_to_kdv_rational")


@_register("kn_to_kdv_tan", "map", "third-order map, tan closed form as printed",
           {"alpha": Fr(2, 3)}, source="kn_tan_wp", target="kdv",
           notes="fails as printed; see kn_to_kdv_tan_corrected")
def _m_tan(p):
    a = p["alpha"]
    return _eps_map(_wp_tan_printed(p), a * tan(_half(a)), "kn_to_kdv_tan")


@_register("kn_to_kdv_tanh", "map", "third-order map, tanh closed form as printed",
           {"alpha": Fr(2, 3)}, source="kn_tanh_wp", target="kdv",
           notes="fails as printed; see kn_to_kdv_tanh_corrected")
def _m_tanh(p):
    a = p["alpha"]
    return _eps_map(_wp_tanh_printed(p), a * tanh(_half(a)), "kn_to_kdv_tanh")


@_register("kn_to_kdv_tan_corrected", "map",
           "tan case with coefficient a^2/4 (2/3 + tan^2) and eps = -a tan",
           {"alpha": Fr(2, 3)}, source="kn_tan_corrected_wp", target="kdv")
def _m_tan_c(p):
    a = p["alpha"]
    return _eps_map(_wp_tan_corrected(p), -a * tan(_half(a)), "kn_to_kdv_tan_corrected")


@_register("kn_to_kdv_tanh_corrected", "map",
           "tanh case with coefficient a^2/4 (-2/3 + tanh^2) and eps = a tanh",
           {"alpha": Fr(2, 3)}, source="kn_tanh_corrected_wp", target="kdv")
def _m_tanh_c(p):
    a = p["alpha"]
    return _eps_map(_wp_tanh_corrected(p), a * tanh(_half(a)), "kn_to_kdv_tanh_corrected")


def _cd_map(p, corrected):
    u = _U()
    al = _alpha(p)
    a1 = diff(al, u[0])
    a2 = diff(a1, u[0])
    uk = u[0] + p["k"]
    z = p["sign"] * u[1] / sqrt(u[1] ** 2 + al)
    pp = 3 * z / u[1]
    q = -Fr(3, 2) / al * (1 - z ** 2) * (1 + 2 * z)
    r = 6 * (1 - z) / uk + a1 * q
    if corrected:
        s = (a2 / 2 + 6 * (u[1] ** 2 + al) * z * (1 - z) / uk ** 2
             + 3 * z * (a2 / 2 - a1 / uk) + a1 ** 2 / 4 * q)
    else:
        s = a2 / 2 + 6 * al / uk ** 2 + 3 * z * (a2 / 2 - al / uk) + a1 ** 2 / 4 * q
    name = "cd_third_order" + ("_corrected" if corrected else "")
    return Substitution(pp * u[3] + q * u[2] ** 2 + r * u[2] + s, "u", "v", name)


@_register("cd_third_order", "map", "v = p u3 + q u2^2 + r u2 + s with z = sign u1/sqrt(u1^2 + alpha)",
           {**_CD, "sign": 1}, source="cd", target="kdv", sign_param="sign",
           notes="fails as printed for both signs; see cd_third_order_corrected")
def _m_cd(p):
    return _cd_map(p, False)


@_register("cd_third_order_corrected", "map",
           "third-order map with s = a''/2 + 6(u1^2+a) z(1-z)/(u+k)^2 + 3z(a''/2 - a'/(u+k)) + a'^2 q/4",
           {**_CD, "sign": 1}, source="cd", target="kdv", sign_param="sign")
def _m_cd_c(p):
    return _cd_map(p, True)


def psi_symbol(p):
    """Root of A psi^2 + (3/2 wp + C) psi + B = 0 for the resolved parameters."""
    wp, _ = weierstrass(p["g2"], p["g3"])
    C = p["C"]
    return quadratic_root_symbol("psi", p["A"], lambda X: Fr(3, 2) * wp(X) + C, p["B"])


@_register("psi_chain", "map", "v = 2 ln(u1 + sqrt(u1^2 + 1)) + ln psi(u)",
           {**_ROOTS, "A": Fr(2, 7)}, source="cd_normalized", target="exp_target")
def _m_psi(p):
    u = _U()
    psi = psi_symbol(p)
    phi = 2 * ln(u[1] + sqrt(u[1] ** 2 + 1)) + ln(psi(u[0]))
    return Substitution(phi, "u", "v", "psi_chain")


@_register("kn_half_argument", "map", "point map v = wp(u/2)", {**_WP, "k": 5},
           source="kn", target="cubic_form", point=True,
           notes="closed via the duplication formula; the target constants are derived",
           extra={"fit": ("a", "b", "c")})
def _m_half(p):
    return Substitution(weierstrass(p["g2"], p["g3"])[0](jet("u") / 2), "u", "v", "kn_half_argument")


def half_argument_rewrites(p, target_var="v"):
    """Rewrites turning wp(u), wp(u/2), wp'(u/2) into the new variable."""
    g2, g3 = p["g2"], p["g3"]
    wp, wpd = weierstrass(g2, g3)
    u = jet("u")
    P, Q = wp(u / 2), wpd(u / 2)
    dup = Fr(1, 4) * ((6 * P ** 2 - g2 / 2) / Q) ** 2 - 2 * P
    w = jet(target_var)
    return [(wp(u), dup), (P, w), (Q, sqrt(4 * w ** 3 - g2 * w - g3))]


def point_map_rewrites(name, bindings=None, target_var="v"):
    """Rewrites that close a point map fixture in the new variable."""
    if name == "kn_half_argument":
        return half_argument_rewrites(resolve_parameters(name, bindings), target_var)
    return []


@_register("scaling", "map", "v = lam u", {"lam": 3}, source="kdv_u", target="kdv_scaled")
def _m_scaling(p):
    return Substitution(p["lam"] * jet("u"), "u", "v", "scaling")


@_register("derivative", "map", "v = u1", source="linear_u", target="linear")
def _m_derivative(p):
    return Substitution(jet("u", 1), "u", "v", "derivative")


@_register("identity_kdv_linear", "map", "v = u from KdV to the linear flow",
           source="kdv_u", target="linear", notes="expected to fail")
def _m_identity(p):
    return Substitution(jet("u"), "u", "v", "identity_kdv_linear")


@_register("w_map", "map", "w = -3 v3/v1 + 3/2 v2^2/v1^2 - (a v^3 + b v + c)/v1^2",
           {"a": 5, "b": Fr(-5, 7), "c": Fr(-5, 12)}, source="cubic_form", target=None,
           verifiable=False, notes="target is a two-component system; stored only")
def _m_w(p):
    v = _U("v")
    phi = (-3 * v[3] / v[1] + Fr(3, 2) * v[2] ** 2 / v[1] ** 2
           - (p["a"] * v[0] ** 3 + p["b"] * v[0] + p["c"]) / v[1] ** 2)
    return Substitution(phi, "v", "w", "w_map")


# --------------------------------------------------------------------------
# symmetries


def _kn5(p, var, scale):
    u = _U(var)
    wp, wpd = weierstrass(p["g2"], p["g3"])
    W, Wd = wp(u[0]), wpd(u[0])
    Wdd = wpd.derivative_at(u[0])
    k = scale * p["k"]
    u1, u2, u3, u4, u5 = u[1:6]
    return (u5 - 5 * u2 * u4 / u1 - Fr(5, 2) * u3 ** 2 / u1
            + (Fr(25, 2) * u2 ** 2 / u1 ** 2 - Fr(5, 2) * k / u1 ** 2 - Fr(15, 2) * W * u1 ** 2) * u3
            - Fr(45, 8) * u2 ** 4 / u1 ** 3 + Fr(25, 4) * k * u2 ** 2 / u1 ** 3
            + Fr(15, 4) * W * u1 * u2 ** 2 - Fr(15, 2) * Wd * u1 ** 3 * u2
            - Fr(3, 2) * Wdd * u1 ** 5 + Fr(27, 8) * W ** 2 * u1 ** 5
            - Fr(5, 8) * k ** 2 / u1 ** 3 + Fr(5, 4) * k * W * u1)


@_register("kn_order5", "symmetry", "fifth-order symmetry candidate as printed", {**_WP, "k": 5},
           notes="fails as printed; see kn_order5_rescaled")
def _s_kn5(p, var):
    return _kn5(p, var, 1)


@_register("kn_order5_rescaled", "symmetry", "fifth-order symmetry with k replaced by 2k/3",
           {**_WP, "k": 5})
def _s_kn5r(p, var):
    return _kn5(p, var, Fr(2, 3))


@_register("x_translation", "symmetry", "u1")
def _s_x(p, var):
    return jet(var, 1)


@_register("kdv_order5", "symmetry", "u5 + 5/3 u u3 + 10/3 u1 u2 + 5/6 u^2 u1",
           extra={"var": "v"})
def _s_kdv5(p, var):
    u = _U(var)
    return u[5] + Fr(5, 3) * u[0] * u[3] + Fr(10, 3) * u[1] * u[2] + Fr(5, 6) * u[0] ** 2 * u[1]


# --------------------------------------------------------------------------
# operators


@_register("w_recursion", "operator", "D^2 - 2 w2/w1 D + w1 Dinv (w3/w1^2 - w2^2/w1^3) D",
           extra={"var": "w"})
def _o_w(p):
    return w_recursion("w")


@_register("identity", "operator", "the identity operator")
def _o_id(p):
    return identity_operator()


# --------------------------------------------------------------------------
# text round trip support


def function_symbols(e):
    """Named function symbols occurring in ``e`` (walks arguments too)."""
    from .expr import Add, Mul, Pow
    out = {}
    stack = [as_expr(e)]
    while stack:
        n = stack.pop()
        if isinstance(n, App):
            out[n.symbol.name] = n.symbol
            stack.append(n.arg)
        elif isinstance(n, Add):
            stack.extend(n.terms)
        elif isinstance(n, Mul):
            stack.extend(n.factors)
        elif isinstance(n, Pow):
            stack.append(n.base)
    return out


def context_for(*exprs):
    """A parse context that resolves every function symbol in ``exprs``."""
    funcs = {}
    for e in exprs:
        funcs.update(function_symbols(e))
    return make_context(functions=funcs)


def fixture_expressions(name, bindings=None):
    """The expressions that define a fixture (rhs, map, candidate or coefficients)."""
    fx = fixture(name)
    if fx.kind == "equation":
        return [get_equation(name, bindings).rhs]
    if fx.kind == "map":
        return [get_map(name, bindings).phi]
    if fx.kind == "symmetry":
        return [get_symmetry(name, bindings)]
    L = get_operator(name, bindings)
    out = list(L.local.coeffs)
    for left, inner in L.nonlocal_terms:
        out.append(left)
        out.extend(inner.coeffs)
    return out


__all__ = [
    "Fixture", "fixture", "get_equation", "get_map", "get_symmetry", "get_operator",
    "list_catalog", "names", "resolve_parameters", "half_argument_rewrites", "psi_symbol",
    "point_map_rewrites",
    "context_for", "fixture_expressions", "function_symbols",
]
