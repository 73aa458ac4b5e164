"""Command-line driver: ``jetalg <subcommand> [options] [--param value ...]``.

Each check prints one JSON report on stdout and a one-line summary on
stderr.  Exit codes: 0 verified (or ok), 1 falsified or inconclusive,
2 error.  Options not recognised by a subcommand are read as parameter
bindings, so ``--k 5 --g2 4/7`` overrides fixture defaults.
"""

from __future__ import annotations

import argparse
import json
import sys

from .checks import CheckConfig, load_manifest, run_check, run_suite
from .errors import JetAlgError

# subcommand -> ((option, required), ...)
_OPTIONS = {
    "check-symmetry": (("eq", True), ("candidate", True), ("var", False)),
    "verify-map": (("map", True), ("source", False), ("target", False)),
    "verify-implicit": (("relation", True), ("source", False), ("target", False), ("eliminate", False)),
    "check-density": (("eq", True), ("density", True), ("var", False)),
    "apply-recursion": (("arg", True), ("operator", False), ("eq", False), ("depth", False), ("var", False)),
    "euler": (("expr", True), ("var", False)),
    "ddx": (("expr", True), ("order", False)),
    "solve-ansatz": (("eq", True), ("basis", True), ("var", False)),
    "list-catalog": (("kind", False),),
}

_HELP = {
    "check-symmetry": "test whether a candidate is a symmetry of an evolution equation",
    "verify-map": "verify that a differential substitution maps one equation to another",
    "verify-implicit": "verify a substitution given as an implicit relation",
    "check-density": "test whether an expression is a conserved density",
    "apply-recursion": "apply a recursion operator, optionally checking the result is a symmetry",
    "euler": "apply the Euler operator",
    "ddx": "apply the total x-derivative",
    "solve-ansatz": "find all symmetries in the span of a basis (separate basis elements with ';')",
    "list-catalog": "list catalog fixtures",
    "run-suite": "run every check in a manifest (a file path or a bundled name)",
}


def _common(p):
    p.add_argument("--trials", type=int, default=20, help="oracle sample count (default 20)")
    p.add_argument("--seed", type=int, default=0, help="oracle seed (default 0)")
    p.add_argument("--max-jet-order", type=int, default=12, help="jet order cutoff (default 12)")
    p.add_argument("--time-budget", type=float, default=300.0,
                   help="seconds per check before falling back to series sampling (default 300)")
    p.add_argument("--sign", choices=["+", "-", "both"], default="both",
                   help="sign branch for maps with a sign parameter (default both)")
    p.add_argument("--strict", action="store_true",
                   help="accept LikelyZero only with at least --strict-threshold trials")
    p.add_argument("--strict-threshold", type=int, default=50)
    p.add_argument("--cross-check", action="store_true",
                   help="also run the series oracle and report disagreement as an error")
    p.add_argument("--residual-limit", type=int, default=2000,
                   help="truncate printed residuals beyond this many characters")
    p.add_argument("--compact", action="store_true", help="print JSON on a single line")


def build_parser():
    parser = argparse.ArgumentParser(prog="jetalg", description="Symbolic checks on evolution equations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in _OPTIONS.items():
        p = sub.add_parser(name, help=_HELP[name], allow_abbrev=False)
        for opt, required in opts:
            p.add_argument(f"--{opt}", required=required)
        _common(p)
    p = sub.add_parser("run-suite", help=_HELP["run-suite"], allow_abbrev=False)
    p.add_argument("manifest", help="manifest path, or 'full' / 'paper-full' for the bundled one")
    _common(p)
    return parser


def parse_bindings(extra):
    """``['--k', '5', '--g2=4/7']`` -> ``{'k': '5', 'g2': '4/7'}``."""
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise JetAlgError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise JetAlgError(f"parameter --{key} needs a value")
            val = extra[i + 1]
            i += 2
        if not key.isidentifier():
            raise JetAlgError(f"invalid parameter name {key!r}")
        out[key] = val
    return out


def _config(ns):
    return CheckConfig(trials=ns.trials, seed=ns.seed, max_jet_order=ns.max_jet_order,
                       time_budget=ns.time_budget, strict=ns.strict,
                       strict_threshold=ns.strict_threshold, cross_check=ns.cross_check,
                       residual_limit=ns.residual_limit)


def _summary(rep):
    head = f"[{rep['status']}] {rep['check']}"
    if rep.get("id"):
        head += f" {rep['id']}"
    bits = []
    v = rep.get("verdict")
    if isinstance(v, dict):
        bits.append(f"{v['kind']} ({v.get('method', '')})")
    if rep.get("sign"):
        bits.append("sign " + ",".join(rep["sign"]))
    if rep.get("error"):
        bits.append(f"{rep['error']['type']}: {rep['error']['message']}")
    bits.append(f"{rep.get('timing', 0):.2f}s")
    return head + " " + "; ".join(bits)


def _emit(rep, compact):
    print(json.dumps(rep, indent=None if compact else 2, sort_keys=False), flush=True)


def main(argv=None):
    parser = build_parser()
    ns, extra = parser.parse_known_args(argv)
    try:
        cfg = _config(ns)
        if ns.command == "run-suite":
            if extra:
                raise JetAlgError(f"unexpected arguments {extra}")
            manifest = load_manifest(ns.manifest)

            def each(rep):
                _emit(rep, True)
                print(_summary(rep), file=sys.stderr, flush=True)

            agg = run_suite(manifest, cfg, on_result=each)
            s = agg["summary"]
            counts = ", ".join(f"{k} {v}" for k, v in s.items() if k not in ("total",))
            print(f"suite {agg['suite']}: {s['total']} checks; {counts}", file=sys.stderr)
            _emit({k: v for k, v in agg.items() if k != "results"}, True)
            return agg["exit_code"]
        opts = {k: getattr(ns, k) for k, _ in _OPTIONS[ns.command] if getattr(ns, k) is not None}
        if ns.command in ("verify-map", "verify-implicit"):
            opts["sign"] = ns.sign
        rep = run_check(ns.command, opts, parse_bindings(extra), cfg)
    except JetAlgError as exc:
        rep = {"schema": 1, "check": ns.command, "status": "error", "error": exc.to_dict(), "exit_code": 2}
    except Exception as exc:  # noqa: BLE001  any crash is reported, never a traceback
        rep = {"schema": 1, "check": ns.command, "status": "error",
               "error": {"type": type(exc).__name__, "message": str(exc)}, "exit_code": 2}
    _emit(rep, ns.compact or ns.command == "run-suite")
    print(_summary(rep), file=sys.stderr)
    return rep["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
