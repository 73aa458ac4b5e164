"""Named verification checks producing structured reports.

Each check takes an options mapping (fixture names or expression texts),
parameter bindings, and a :class:`CheckConfig`, and returns a JSON-ready
report.  The command-line driver and the suite runner are thin layers over
:func:`run_check`.
"""

from __future__ import annotations

import json
import signal
import threading
import time
from dataclasses import dataclass
from importlib import resources

from . import _frac as R
from . import catalog as C
from .diffalg import (
    EvolutionEquation, combine, conserved_density_residual, euler_operator, jet_order_limit,
    solve_linear_ansatz, solve_linear_combination, symmetry_residual, total_x_derivative,
)
from .errors import JetAlgError, ManifestError, NotClosedForm, TimeBudgetExceeded
from .expr import Param, as_expr, canonicalize, diff, jet, substitute
from .oracle import LIKELY_ZERO, NONZERO, PROVEN_ZERO, Verdict, oracle_settings, zero_test
from .parser import make_context, parse
from .psdo import apply_psdo
from .taylor import taylor_pushforward, taylor_symmetry
from .transform import (
    ImplicitRelation, Substitution, explicit_as_implicit, implicit_invariance_residual,
    point_pushforward, pushforward_residual,
)

SCHEMA = 1


@dataclass(frozen=True)
class CheckConfig:
    trials: int = 20
    seed: int = 0
    max_jet_order: int = 12
    time_budget: float = 300.0
    strict: bool = False
    strict_threshold: int = 50
    cross_check: bool = False
    residual_limit: int = 2000
    fallback_trials: int = 50


# --------------------------------------------------------------------------
# helpers


class _Budget:
    """Raise TimeBudgetExceeded in the main thread after ``seconds``."""

    def __init__(self, seconds):
        self.seconds = seconds
        self.active = (seconds and seconds > 0 and hasattr(signal, "setitimer")
                       and threading.current_thread() is threading.main_thread())

    def _fire(self, signum, frame):
        raise TimeBudgetExceeded(f"time budget of {self.seconds} s exceeded")

    def __enter__(self):
        if self.active:
            self._old = signal.signal(signal.SIGALRM, self._fire)
            signal.setitimer(signal.ITIMER_REAL, self.seconds)
        return self

    def __exit__(self, *exc):
        if self.active:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, self._old)
        return False


def _truncate(s, limit):
    s = str(s)
    if len(s) > limit:
        return s[:limit] + f"... [{len(s) - limit} more characters]"
    return s


def _status(verdict, cfg):
    if verdict.kind == PROVEN_ZERO:
        return "verified"
    if verdict.kind == LIKELY_ZERO:
        need = cfg.strict_threshold if cfg.strict else 20
        return "verified" if verdict.trials >= need else "inconclusive"
    return "falsified"


def _exit_code(status):
    return {"verified": 0, "ok": 0, "falsified": 1, "inconclusive": 1}.get(status, 2)


def _params_out(p):
    return {k: str(as_expr(v)) for k, v in sorted(p.items())}


def _is_fixture(name, kind):
    return isinstance(name, str) and name in C.names(kind)


def _context(params, *exprs):
    funcs = {}
    for e in exprs:
        funcs.update(C.function_symbols(e))
    vals = {k: v for k, v in params.items() if not str(k).startswith("_")}
    return make_context(functions=funcs, values=vals, g2=params.get("g2"), g3=params.get("g3"))


def _guess_var(e, default="u"):
    names = {n for n, _ in R.to_frac(as_expr(e)).jets()}
    if len(names) == 1:
        return names.pop()
    return default


def _text_vars(exprs):
    out = set()
    for e in exprs:
        out |= {n for n, _ in R.to_frac(as_expr(e)).jets()}
    return out


def _relabel(eq, exprs):
    """Rename the equation's variable to ``u`` when free-text inputs are written in ``u``.

    Catalog equations that serve as targets use ``v``; text candidates are
    conventionally written in ``u``.
    """
    used = _text_vars(exprs)
    if eq.var == "u" or used != {"u"} or _text_vars([eq.rhs]) - {eq.var}:
        return eq
    ren = {jet(eq.var, k): jet("u", k) for k in range(eq.order + 1)}
    return EvolutionEquation(substitute(eq.rhs, ren), var="u", name=eq.name, anchor=eq.anchor)


class _Resolved:
    """Fixture or parsed-expression inputs plus the parameters in play."""

    def __init__(self, bindings):
        self.bindings = dict(bindings or {})
        self.params = {}
        self.fixtures = {}

    def _note(self, role, name):
        self.fixtures[role] = name
        self.params.update(C.resolve_parameters(name, self.bindings))

    def equation(self, spec, role="equation", var=None):
        if _is_fixture(spec, "equation"):
            self._note(role, spec)
            return C.get_equation(spec, self.bindings)
        self.fixtures[role] = None
        rhs = self.expr(spec)
        return EvolutionEquation(rhs, var=var or _guess_var(rhs))

    def expr(self, text, *related):
        if not isinstance(text, str):
            return as_expr(text)
        vals = dict(self.params)
        for k, v in self.bindings.items():
            vals[k] = parse(v) if isinstance(v, str) else as_expr(v)
        return parse(text, _context(vals, *related))


def _symbolic(fn, fallback, cfg):
    """Run the canonical route under the time budget, else the series oracle."""
    try:
        with _Budget(cfg.time_budget):
            res = fn()
        return res.verdict, res.expression, False
    except TimeBudgetExceeded:
        if fallback is None:
            raise
        return fallback(max(cfg.trials, cfg.fallback_trials)), None, True


def _cross(verdict, fallback, cfg, report):
    if not cfg.cross_check or fallback is None:
        return
    tv = fallback(cfg.trials)
    report["cross_check"] = tv.to_dict()
    if tv.is_zero != verdict.is_zero:
        report["status"] = "error"
        report["error"] = {"type": "OracleDisagreement",
                           "message": "the canonical and series oracles disagree"}


def _verdict_report(report, verdict, residual, fell_back, cfg):
    report["verdict"] = verdict.to_dict()
    report["residual"] = None if residual is None else _truncate(residual, cfg.residual_limit)
    report["trials"] = verdict.trials
    report["seed"] = verdict.seed
    report["fallback"] = fell_back
    report["status"] = _status(verdict, cfg)
    return report


# --------------------------------------------------------------------------
# checks


def check_symmetry(opts, bindings, cfg):
    r = _Resolved(bindings)
    eq = r.equation(opts["eq"], var=opts.get("var"))
    cand = opts["candidate"]
    if cand == "@rhs":
        G = eq.rhs
        r.fixtures["candidate"] = "@rhs"
    elif _is_fixture(cand, "symmetry"):
        r._note("candidate", cand)
        G = C.get_symmetry(cand, r.bindings, var=eq.var)
    else:
        G = r.expr(cand, eq.rhs)
        r.fixtures["candidate"] = None
        eq = _relabel(eq, [G])
    report = {"fixtures": r.fixtures, "parameters": _params_out(r.params),
              "equation": str(eq), "candidate": str(canonicalize(G))}

    def fallback(n):
        return taylor_symmetry(eq, G, trials=n, seed=cfg.seed)

    v, res, fb = _symbolic(lambda: symmetry_residual(eq, G), fallback, cfg)
    _verdict_report(report, v, res, fb, cfg)
    _cross(v, fallback, cfg, report)
    return report


def _sign_label(s):
    return "+" if s > 0 else "-"


def _branches(fx, sign):
    if fx is None or not fx.sign_param:
        return [None]
    if sign in ("+", "+1", "1"):
        return [1]
    if sign in ("-", "-1"):
        return [-1]
    return [1, -1]


def verify_map(opts, bindings, cfg):
    r = _Resolved(bindings)
    spec = opts["map"]
    fx = C.fixture(spec) if _is_fixture(spec, "map") else None
    if fx is not None and not fx.verifiable:
        raise JetAlgError(f"verification of {spec!r} is disabled: {fx.notes}")
    src_name = opts.get("source") or (fx.source if fx else None)
    tgt_name = opts.get("target") or (fx.target if fx else None)
    if src_name is None or tgt_name is None:
        if fx is None and isinstance(spec, str) and spec.isidentifier():
            C.fixture(spec)  # raises UnknownFixture for a mistyped name
        raise JetAlgError("source and target equations are required")
    source = r.equation(src_name, "source")
    if fx is not None and fx.point:
        return _verify_point_map(fx, source, tgt_name, r, cfg)
    target = r.equation(tgt_name, "target")
    branches = []
    for s in _branches(fx, opts.get("sign", "both")):
        b = dict(r.bindings)
        if s is not None:
            b[fx.sign_param] = s
        if fx is not None:
            r._note("map", spec)
            S = C.get_map(spec, b)
        else:
            S = Substitution(r.expr(spec, source.rhs, target.rhs), source.var, target.var)
            r.fixtures["map"] = None

        def fallback(n, S=S):
            return taylor_pushforward(S, source, target, trials=n, seed=cfg.seed)

        v, res, fb = _symbolic(lambda S=S: pushforward_residual(S, source, target), fallback, cfg)
        br = _verdict_report({"sign": None if s is None else _sign_label(s),
                              "map": str(canonicalize(S.phi))}, v, res, fb, cfg)
        _cross(v, fallback, cfg, br)
        branches.append(br)
    report = {"fixtures": r.fixtures, "parameters": _params_out(r.params),
              "source": str(source), "target": str(target), "branches": branches}
    good = [b for b in branches if b["status"] == "verified"]
    lead = good[0] if good else branches[0]
    for key in ("verdict", "residual", "trials", "seed", "fallback"):
        report[key] = lead[key]
    if any(b["status"] == "error" for b in branches):
        report["status"] = "error"
        report["error"] = next(b["error"] for b in branches if b["status"] == "error")
    elif good:
        report["status"] = "verified"
    else:
        report["status"] = "inconclusive" if any(b["status"] == "inconclusive" for b in branches) \
            else "falsified"
    if branches[0]["sign"] is not None:
        report["sign"] = [b["sign"] for b in good] if good else None
    return report


def _verify_point_map(fx, source, tgt_name, r, cfg):
    r._note("map", fx.name)
    S = C.get_map(fx.name, r.bindings)
    tvar = C.fixture(tgt_name).extra.get("var", "v") if _is_fixture(tgt_name, "equation") else "v"
    report = {"fixtures": r.fixtures, "source": str(source), "map": str(S.phi), "point": True}
    try:
        with _Budget(cfg.time_budget):
            eq = point_pushforward(S.phi, source, tvar, C.point_map_rewrites(fx.name, r.bindings, tvar))
    except NotClosedForm as exc:
        report.update(parameters=_params_out(r.params), status="falsified",
                      verdict=Verdict(NONZERO).to_dict(), residual=_truncate(exc.rhs, cfg.residual_limit),
                      error={"type": "NotClosedForm", "message": str(exc)})
        return report
    report["transformed"] = str(eq)
    fit = fx.extra.get("fit", ())
    consts = {}
    if fit and _is_fixture(tgt_name, "equation"):
        sym = C.get_equation(tgt_name, {**r.bindings, **{n: Param(n) for n in fit}})
        base = substitute(sym.rhs, {Param(n): 0 for n in fit})
        basis = [diff(sym.rhs, Param(n)) for n in fit]
        sol = solve_linear_combination(eq.rhs - base, basis, unknowns=fit)
        if sol is None:
            report.update(parameters=_params_out(r.params), status="falsified",
                          verdict=Verdict(NONZERO).to_dict(), residual=None,
                          error={"type": "NoFit", "message": "transformed rhs is not of the target form"})
            return report
        consts = dict(zip(fit, sol))
        report["constants"] = {k: str(v) for k, v in consts.items()}
    target = C.get_equation(tgt_name, {**r.bindings, **consts}) if _is_fixture(tgt_name, "equation") \
        else r.equation(tgt_name, "target", var=tvar)
    r.fixtures["target"] = tgt_name if _is_fixture(tgt_name, "equation") else None
    report["target"] = str(target)
    res = eq.rhs - target.rhs
    v = zero_test(res)
    report["parameters"] = _params_out({k: v_ for k, v_ in r.params.items() if k not in consts})
    return _verdict_report(report, v, canonicalize(res), False, cfg)


def verify_implicit(opts, bindings, cfg):
    r = _Resolved(bindings)
    spec = opts["relation"]
    fx = C.fixture(spec) if _is_fixture(spec, "map") else None
    src_name = opts.get("source") or (fx.source if fx else None)
    tgt_name = opts.get("target") or (fx.target if fx else None)
    if src_name is None or tgt_name is None:
        if fx is None and isinstance(spec, str) and spec.isidentifier():
            C.fixture(spec)  # raises UnknownFixture for a mistyped name
        raise JetAlgError("source and target equations are required")
    source = r.equation(src_name, "source")
    target = r.equation(tgt_name, "target")
    if fx is not None:
        r._note("relation", spec)
        b = dict(r.bindings)
        if fx.sign_param:
            s = _branches(fx, opts.get("sign", "+"))[0]
            b[fx.sign_param] = s
        rel = explicit_as_implicit(C.get_map(spec, b))
    else:
        elim = opts.get("eliminate") or target.var
        name = elim.rstrip("0123456789_")
        order = int(elim[len(name):].lstrip("_") or 0)
        rel = ImplicitRelation(r.expr(spec, source.rhs, target.rhs), (name, order), source.var)
        r.fixtures["relation"] = None
    v, res, fb = _symbolic(lambda: implicit_invariance_residual(rel, source, target), None, cfg)
    report = {"fixtures": r.fixtures, "parameters": _params_out(r.params), "relation": str(rel.relation),
              "eliminate": list(rel.eliminate), "source": str(source), "target": str(target)}
    return _verdict_report(report, v, res, fb, cfg)


def check_density(opts, bindings, cfg):
    r = _Resolved(bindings)
    eq = r.equation(opts["eq"], var=opts.get("var"))
    rho = r.expr(opts["density"], eq.rhs)
    eq = _relabel(eq, [rho])
    v, res, fb = _symbolic(lambda: conserved_density_residual(eq, rho), None, cfg)
    report = {"fixtures": r.fixtures, "parameters": _params_out(r.params),
              "equation": str(eq), "density": str(canonicalize(rho))}
    return _verdict_report(report, v, res, fb, cfg)


def apply_recursion(opts, bindings, cfg):
    r = _Resolved(bindings)
    name = opts.get("operator", "w_recursion")
    fx = C.fixture(name)
    if fx.kind != "operator":
        raise JetAlgError(f"{name!r} is not an operator fixture")
    r._note("operator", name)
    L = C.get_operator(name, r.bindings)
    var = opts.get("var") or fx.extra.get("var", "u")
    eq = r.equation(opts["eq"], var=var) if opts.get("eq") else None
    cur = r.expr(opts["arg"], *(x for x in [eq.rhs] if eq is not None))
    depth = int(opts.get("depth", 1))
    steps = []
    status = "ok"
    with _Budget(cfg.time_budget):
        for _ in range(depth):
            cur = apply_psdo(L, cur, var)
            step = {"result": _truncate(cur, cfg.residual_limit)}
            if eq is not None:
                res = symmetry_residual(eq, cur)
                step["verdict"] = res.verdict.to_dict()
                step["status"] = _status(res.verdict, cfg)
            steps.append(step)
    if eq is not None:
        bad = [s for s in steps if s["status"] != "verified"]
        status = "verified" if not bad else bad[0]["status"]
    report = {"fixtures": r.fixtures, "parameters": _params_out(r.params), "operator": str(L),
              "argument": str(canonicalize(r.expr(opts["arg"]))), "steps": steps,
              "result": steps[-1]["result"] if steps else None, "status": status}
    if eq is not None:
        report["equation"] = str(eq)
        report["verdict"] = steps[-1]["verdict"]
    return report


def euler(opts, bindings, cfg):
    r = _Resolved(bindings)
    e = r.expr(opts["expr"])
    var = opts.get("var") or _guess_var(e)
    return {"expression": str(canonicalize(e)), "var": var,
            "result": _truncate(euler_operator(e, var), cfg.residual_limit), "status": "ok"}


def ddx(opts, bindings, cfg):
    r = _Resolved(bindings)
    e = r.expr(opts["expr"])
    k = int(opts.get("order", 1))
    out = e
    for _ in range(k):
        out = total_x_derivative(out)
    return {"expression": str(canonicalize(e)), "order": k,
            "result": _truncate(canonicalize(out), cfg.residual_limit), "status": "ok"}


def solve_ansatz(opts, bindings, cfg):
    r = _Resolved(bindings)
    eq = r.equation(opts["eq"], var=opts.get("var"))
    basis = opts["basis"]
    if isinstance(basis, str):
        basis = [b for b in (t.strip() for t in basis.split(";")) if b]
    exprs = [r.expr(b, eq.rhs) for b in basis]
    eq = _relabel(eq, exprs)
    sols = solve_linear_ansatz(eq, exprs)
    confirmed = []
    for v in sols:
        G = combine(v, exprs)
        confirmed.append({"symmetry": str(G), "verdict": symmetry_residual(eq, G).verdict.to_dict()})
    ok = sols and all(c["verdict"]["kind"] != NONZERO for c in confirmed)
    return {"fixtures": r.fixtures, "parameters": _params_out(r.params), "equation": str(eq),
            "basis": [str(canonicalize(e)) for e in exprs],
            "solutions": [[str(c) for c in v] for v in sols], "dimension": len(sols),
            "confirmed": confirmed, "status": "verified" if ok else "falsified"}


def list_catalog(opts, bindings, cfg):
    return {"fixtures": C.list_catalog(opts.get("kind")), "status": "ok"}


CHECKS = {
    "check-symmetry": check_symmetry,
    "verify-map": verify_map,
    "verify-implicit": verify_implicit,
    "check-density": check_density,
    "apply-recursion": apply_recursion,
    "euler": euler,
    "ddx": ddx,
    "solve-ansatz": solve_ansatz,
    "list-catalog": list_catalog,
}


def run_check(command, opts=None, bindings=None, cfg=None):
    """Run one check; errors become a report with status "error" (exit code 2)."""
    cfg = cfg or CheckConfig()
    opts = dict(opts or {})
    t0 = time.perf_counter()
    base = {"schema": SCHEMA, "check": command}
    try:
        fn = CHECKS[command]
    except KeyError:
        report = {"status": "error", "error": {"type": "UnknownCheck", "message": f"unknown check {command!r}"}}
    else:
        try:
            with jet_order_limit(cfg.max_jet_order), oracle_settings(trials=cfg.trials, seed=cfg.seed):
                report = fn(opts, bindings or {}, cfg)
        except Exception as exc:  # noqa: BLE001  reported as a status-2 error
            err = exc.to_dict() if isinstance(exc, JetAlgError) else {"type": type(exc).__name__,
                                                                      "message": str(exc)}
            report = {"status": "error", "error": err}
    out = {**base, **report}
    out["timing"] = round(time.perf_counter() - t0, 4)
    out["exit_code"] = _exit_code(out["status"])
    return out


# --------------------------------------------------------------------------
# suites


BUNDLED = {"full": "full.json", "paper-full": "full.json"}


def load_manifest(path_or_name):
    """Parse a manifest file, or a bundled manifest by name."""
    try:
        if path_or_name in BUNDLED:
            text = resources.files("jetalg").joinpath("manifests", BUNDLED[path_or_name]).read_text()
        else:
            with open(path_or_name, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path_or_name!r}: {exc}") from exc
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if isinstance(data, list):
        data = {"checks": data}
    if not isinstance(data, dict) or not isinstance(data.get("checks", []), list):
        raise ManifestError("manifest must be an object with a 'checks' list")
    for i, c in enumerate(data.get("checks", [])):
        if not isinstance(c, dict) or "command" not in c:
            raise ManifestError(f"check #{i} has no 'command'")
        if c["command"] not in CHECKS:
            raise ManifestError(f"check #{i}: unknown command {c['command']!r}")
        for key in ("options", "parameters"):
            if not isinstance(c.get(key, {}), dict):
                raise ManifestError(f"check #{i}: {key!r} must be an object")
    return data


def run_suite(manifest, cfg=None, on_result=None):
    """Run every check of a manifest in order; the aggregate is verified iff all are."""
    cfg = cfg or CheckConfig()
    data = manifest if isinstance(manifest, dict) else load_manifest(manifest)
    results = []
    for i, c in enumerate(data.get("checks", [])):
        settings = c.get("settings", {})
        ccfg = CheckConfig(**{**cfg.__dict__, **settings}) if settings else cfg
        rep = run_check(c["command"], c.get("options", {}), c.get("parameters", {}), ccfg)
        rep["id"] = c.get("id", f"check-{i + 1}")
        if "expect" in c:
            rep["expect"] = c["expect"]
            rep["matches_expectation"] = rep["status"] == c["expect"]
        results.append(rep)
        if on_result is not None:
            on_result(rep)
    counts = {}
    for rep in results:
        counts[rep["status"]] = counts.get(rep["status"], 0) + 1
    ok = all(rep["exit_code"] == 0 for rep in results)
    summary = {"total": len(results), **counts,
               "unexpected": sum(1 for rep in results if rep.get("matches_expectation") is False)}
    return {"schema": SCHEMA, "suite": data.get("name", str(manifest) if isinstance(manifest, str) else "inline"),
            "summary": summary, "results": results, "status": "verified" if ok else "falsified",
            "exit_code": 0 if ok else 1}


__all__ = ["CheckConfig", "run_check", "run_suite", "load_manifest", "CHECKS", "SCHEMA"]
