import json

import pytest

from riskward.cli import main
from riskward.demos import consistent_policy, inconsistent_policy


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


@pytest.fixture
def example_file(tmp_path, capsys):
    code, _, _ = run(capsys, "demo", "example1", "--out-dir", tmp_path)
    assert code == 0
    return tmp_path / "example1.json"


def write_policy(tmp_path, policy, name="policy.json"):
    path = tmp_path / name
    path.write_text(json.dumps(policy))
    return path


def test_solve(capsys, example_file, tmp_path):
    code, out, _ = run(capsys, "solve", example_file)
    assert code == 0 and "optimal value = 4" in out
    out_path = tmp_path / "dp.json"
    code, out, _ = run(capsys, "solve", example_file, "--out", out_path)
    assert json.loads(out_path.read_text()) == {k: int(v) for k, v in consistent_policy().items()}
    code, out, _ = run(capsys, "solve", example_file, "--brute-force")
    assert code == 0 and "4 optimal policies" in out


def test_solve_records(capsys, example_file):
    code, out, _ = run(capsys, "--format", "records", "solve", example_file, "--brute-force")
    recs = records(out)
    assert recs[0] == {"record": "optimal_value", "value": 4.0}
    assert [r for r in recs if r["record"] == "optimum_count"][0]["count"] == 4


def test_solve_error_codes(capsys, tmp_path, example_file, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text('{"tree": [1,\n')
    code, _, err = run(capsys, "solve", bad)
    assert code == 1 and "bad.json:2" in err
    data = json.loads(example_file.read_text())
    data["tree"][1]["cond_prob"] = 0.4
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps(data))
    code, _, err = run(capsys, "solve", invalid)
    assert code == 2 and "cond probs sum" in err
    monkeypatch.setenv("RISKWARD_ENUM_CAP", "3")
    code, _, _ = run(capsys, "solve", example_file, "--brute-force")
    assert code == 3


def test_audit(capsys, tmp_path, example_file):
    code, out, _ = run(capsys, "audit", example_file, "--policy", write_policy(tmp_path, inconsistent_policy()))
    assert code == 4
    assert "node w2_1: tail 2, optimal 1, gap 1" in out
    assert "first witness node w2_1" in out
    code, out, _ = run(capsys, "audit", example_file, "--policy", write_policy(tmp_path, consistent_policy()))
    assert code == 0 and "verdict: time consistent" in out


def test_audit_records(capsys, tmp_path, example_file):
    code, out, _ = run(capsys, "--format", "records", "audit", example_file,
                       "--policy", write_policy(tmp_path, inconsistent_policy()))
    recs = records(out)
    audit = {r["node"]: r for r in recs if r["record"] == "audit"}
    assert (audit["w2_1"]["tail"], audit["w2_1"]["optimal"], audit["w2_1"]["gap"]) == (2, 1, 1)
    verdict = recs[-1]
    assert verdict["record"] == "verdict" and verdict["witness"] == "w2_1" and not verdict["time_consistent"]


def test_audit_policy_errors(capsys, tmp_path, example_file):
    missing = {k: v for k, v in consistent_policy().items() if k != "w3_4"}
    code, _, err = run(capsys, "audit", example_file, "--policy", write_policy(tmp_path, missing))
    assert code == 5 and "w3_4" in err
    offgrid = {**consistent_policy(), "w3_1": 1.5}
    code, _, _ = run(capsys, "audit", example_file, "--policy", write_policy(tmp_path, offgrid))
    assert code == 5
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    code, _, _ = run(capsys, "audit", example_file, "--policy", broken)
    assert code == 1


def test_check_monotonicity(capsys):
    code, out, _ = run(capsys, "check-monotonicity", "--measure", "avar", "--alpha", 0.5, "--atoms", 4)
    assert code == 6
    assert "Z  = (1, 2, 3, 4)" in out and "Z' = (0, 1, 3, 4)" in out and "common value 3.5" in out
    code, out, _ = run(capsys, "check-monotonicity", "--measure", "expectation", "--atoms", 4)
    assert code == 0 and "strictly monotone" in out
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "esssup", "--atoms", 2)
    assert code == 6
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "avar", "--alpha", 2, "--atoms", 4)
    assert code == 2
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "avar", "--atoms", 4)
    assert code == 2


def test_check_monotonicity_spectral(capsys):
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "spectral",
                     "--breakpoints", 0, 0.5, 1, "--levels", 0, 2, "--atoms", 4)
    assert code == 6
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "spectral",
                     "--breakpoints", 0, 0.5, 1, "--levels", 0.5, 1.5, "--atoms", 4)
    assert code == 0
    code, _, _ = run(capsys, "check-monotonicity", "--measure", "spectral",
                     "--breakpoints", 0, 0.5, 1, "--levels", 1, 2, "--atoms", 4)
    assert code == 2


def test_check_monotonicity_records(capsys):
    code, out, _ = run(capsys, "--format", "records", "check-monotonicity", "--measure", "avar",
                       "--alpha", 0.5, "--atoms", 4)
    rec = records(out)[0]
    assert rec["Z_prime"] == [0, 1, 3, 4] and rec["zero_set"] == ["a1", "a2"] and rec["value"] == 3.5


@pytest.mark.parametrize("name", ["example1", "example1-avar"])
def test_demo(capsys, tmp_path, name):
    code, out, _ = run(capsys, "demo", name, "--out-dir", tmp_path)
    assert code == 0
    assert "optimal value = 4" in out
    assert "at node w2_1: tail 2, conditional optimum 1, gap 1" in out
    assert (tmp_path / f"{name}.json").exists()
    code, out, _ = run(capsys, "solve", tmp_path / f"{name}.json")
    assert "optimal value = 4" in out


def test_demo_records(capsys):
    code, out, _ = run(capsys, "--format", "records", "demo", "example1-avar", "--no-write")
    recs = {r["record"]: r for r in records(out)}
    assert recs["optimal_value"]["value"] == 4
    bad = recs["inconsistent_policy"]
    assert (bad["node"], bad["tail"], bad["optimal"], bad["gap"]) == ("w2_1", 2, 1, 1)


def test_demo_unknown(capsys):
    code, _, err = run(capsys, "demo", "bogus")
    assert code == 2 and "example1" in err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "riskward", "demo", "example1", "--no-write"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "optimal value = 4" in proc.stdout
