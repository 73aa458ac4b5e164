from __future__ import annotations

import json

import pytest

from jetalg.checks import CheckConfig, load_manifest, run_check, run_suite
from jetalg.cli import main, parse_bindings
from jetalg.errors import JetAlgError, ManifestError


def run_cli(capsys, *argv):
    code = main(list(argv) + ["--compact"]) if argv[0] != "run-suite" else main(list(argv))
    out, err = capsys.readouterr()
    lines = [json.loads(x) for x in out.splitlines() if x.strip()]
    return code, lines, err


def test_symmetry_example_exit_codes(capsys):
    code, (rep,), err = run_cli(capsys, "check-symmetry", "--eq", "kdv", "--candidate", "u2")
    assert code == 1
    assert rep["residual"] == "2*u1*u2"
    assert rep["schema"] == 1 and rep["status"] == "falsified"
    assert "falsified" in err


def test_second_order_map_example(capsys):
    code, (rep,), _ = run_cli(capsys, "verify-map", "--map", "order2_second",
                              "--source", "order2_second_eq", "--target", "kdv")
    assert code == 0
    assert rep["verdict"]["kind"] == "ProvenZero"


def test_printed_fifth_order_example_is_falsified(capsys):
    code, (rep,), _ = run_cli(capsys, "check-symmetry", "--eq", "kn", "--candidate", "kn_order5",
                              "--g2", "4/7", "--g3", "1/3", "--k", "5")
    assert code == 1
    assert rep["parameters"] == {"g2": "4/7", "g3": "1/3", "k": "5"}
    code, _, _ = run_cli(capsys, "check-symmetry", "--eq", "kn", "--candidate", "kn_order5_rescaled",
                         "--g2", "4/7", "--g3", "1/3", "--k", "5")
    assert code == 0


def test_sign_branches_are_reported(capsys):
    code, (rep,), _ = run_cli(capsys, "verify-map", "--map", "kn_to_kdv_const_wp")
    assert code == 0 and rep["sign"] == ["+", "-"]
    code, (rep,), _ = run_cli(capsys, "verify-map", "--map", "cd_third_order_corrected", "--sign", "-")
    assert code == 0 and rep["sign"] == ["-"]
    assert [b["sign"] for b in rep["branches"]] == ["-"]


def test_errors_exit_two(capsys):
    code, (rep,), _ = run_cli(capsys, "euler", "--expr", "u1 +")
    assert code == 2
    assert rep["error"]["type"] == "ExprSyntaxError" and rep["error"]["column"] == 5
    code, (rep,), _ = run_cli(capsys, "verify-map", "--map", "no_such_map")
    assert code == 2 and rep["error"]["type"] == "UnknownFixture"
    code, (rep,), _ = run_cli(capsys, "check-symmetry", "--eq", "kdv", "--candidate", "u1", "stray")
    assert code == 2


def test_small_commands(capsys):
    code, (rep,), _ = run_cli(capsys, "euler", "--expr", "u1^2")
    assert code == 0 and rep["result"] == "-2*u2"
    code, (rep,), _ = run_cli(capsys, "ddx", "--expr", "u*u1")
    assert rep["result"] in ("u1^2 + u*u2", "u*u2 + u1^2")
    code, (rep,), _ = run_cli(capsys, "check-density", "--eq", "kdv", "--density", "u^2")
    assert code == 0
    code, (rep,), _ = run_cli(capsys, "list-catalog", "--kind", "symmetry")
    assert {d["name"] for d in rep["fixtures"]} >= {"kn_order5", "kdv_order5"}


def test_solve_ansatz(capsys):
    code, (rep,), _ = run_cli(capsys, "solve-ansatz", "--eq", "kdv", "--basis", "u5; u*u3; u1*u2; u^2*u1")
    assert code == 0
    assert rep["solutions"] == [["1", "5/3", "10/3", "5/6"]]
    assert rep["confirmed"][0]["verdict"]["kind"] == "ProvenZero"
    code, (rep,), _ = run_cli(capsys, "solve-ansatz", "--eq", "kdv", "--basis", "u2")
    assert code == 1 and rep["dimension"] == 0


def test_recursion_command(capsys):
    code, (rep,), _ = run_cli(capsys, "apply-recursion", "--arg", "w1", "--eq", "w_eq", "--depth", "2")
    assert code == 0
    assert rep["steps"][0]["result"] == "w3 - 3*w2^2/(2*w1)"


def test_bindings_parser():
    assert parse_bindings(["--k", "5", "--g2=4/7", "--a", "-1"]) == {"k": "5", "g2": "4/7", "a": "-1"}
    with pytest.raises(JetAlgError):
        parse_bindings(["--k"])
    with pytest.raises(JetAlgError):
        parse_bindings(["5"])


def test_reports_are_deterministic():
    a = run_check("check-symmetry", {"eq": "kn", "candidate": "u2"}, {}, CheckConfig(seed=4))
    b = run_check("check-symmetry", {"eq": "kn", "candidate": "u2"}, {}, CheckConfig(seed=4))
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_time_budget_falls_back_to_series():
    # fresh parameter values so that no cached normal form makes the canonical route instant
    b = {"k1": "7/13", "k2": "-3/11", "k3": "5/17", "k4": "2/19", "k": "4/23"}
    r = run_check("verify-map", {"map": "cd_third_order_corrected", "sign": "+"}, b,
                  CheckConfig(time_budget=0.01, trials=5, fallback_trials=8))
    assert r["status"] == "inconclusive"  # 8 series trials are below the acceptance floor of 20
    assert r["fallback"] is True
    assert r["verdict"]["method"] == "taylor" and r["verdict"]["kind"] == "LikelyZero"


def test_strict_mode_threshold():
    cfg = CheckConfig(time_budget=0.001, trials=20, strict=True, strict_threshold=60)
    r = run_check("check-symmetry", {"eq": "kdv_u", "candidate": "kdv_order5"}, {}, cfg)
    if r["verdict"]["kind"] == "LikelyZero":
        assert r["status"] == "inconclusive" and r["exit_code"] == 1
    cfg = CheckConfig(trials=60, strict=True, strict_threshold=60, time_budget=0.001)
    r = run_check("check-symmetry", {"eq": "kdv_u", "candidate": "kdv_order5"}, {}, cfg)
    assert r["exit_code"] == 0


def test_cross_check_agreement():
    r = run_check("verify-map", {"map": "kn_to_kdv_rational"}, {}, CheckConfig(cross_check=True, trials=3))
    assert r["status"] == "verified"
    assert r["branches"][0]["cross_check"]["kind"] == "LikelyZero"


def test_point_map_fit():
    r = run_check("verify-map", {"map": "kn_half_argument"}, {"g2": "g2", "g3": "g3", "k": "k"})
    assert r["status"] == "verified"
    assert r["constants"] == {"a": "k", "b": "-g2*k/4", "c": "-g3*k/4"}


def test_manifest_handling(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"schema": 1, "checks": []}))
    code, lines, _ = run_cli(capsys, "run-suite", str(empty))
    assert code == 0 and lines[-1]["summary"]["total"] == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"checks": [{"command": "check-symmetry", "options": {"eq": "kdv", "candidate": "u2"}}]}))
    code, lines, _ = run_cli(capsys, "run-suite", str(bad))
    assert code == 1 and lines[0]["status"] == "falsified"
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(str(broken))
    with pytest.raises(ManifestError):
        load_manifest(str(tmp_path / "missing.json"))
    with pytest.raises(ManifestError):
        load_manifest_data({"checks": [{"command": "bogus"}]}, tmp_path)
    with pytest.raises(ManifestError):
        load_manifest_data({"checks": [{"command": "ddx", "options": []}]}, tmp_path)
    code, lines, _ = run_cli(capsys, "run-suite", str(broken))
    assert code == 2


def load_manifest_data(data, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(data))
    return load_manifest(str(p))


def test_bundled_manifest_order_and_expectations():
    data = load_manifest("paper-full")
    assert data["name"] == "paper-full"
    agg = run_suite(data)
    assert [r["id"] for r in agg["results"]] == [c["id"] for c in data["checks"]]
    assert agg["summary"]["unexpected"] == 0
    assert agg["exit_code"] == 1  # printed identities that fail are part of the suite
