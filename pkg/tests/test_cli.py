import json
import subprocess
import sys

import pytest

from conftest import DATA
from proofgate import cli
from proofgate.cli import run_cli

GOLDEN = (DATA / "sample_obligations.golden").read_text(encoding="utf-8")


def run(capsys, *argv):
    code = run_cli([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_emit_matches_golden(capsys, sample_proof_path):
    code, out, _ = run(capsys, "emit", sample_proof_path)
    assert code == 0
    assert out == GOLDEN


def test_emit_out_dir(capsys, sample_proof_path, tmp_path):
    code, out, _ = run(capsys, "emit", sample_proof_path, "--out-dir", tmp_path / "ob")
    assert code == 0 and out == ""
    names = sorted(p.name for p in (tmp_path / "ob").iterdir())
    assert names == ["sample_proof.step4.p", "sample_proof.step5.p", "sample_proof.step7.p"]
    assert (tmp_path / "ob" / "sample_proof.step4.p").read_text().startswith("fof(r4,conjecture, a = b ). \n")


def test_emit_dimacs(capsys, sample_proof_path, tmp_path):
    code, _, _ = run(capsys, "emit", sample_proof_path, "--emit-dimacs", "--out-dir", tmp_path)
    assert code == 0
    text = (tmp_path / "sample_proof.step7.cnf").read_text()
    assert "c step 7" in text
    assert "p cnf " in text


def test_check_verified(capsys, sample_proof_path, tmp_path):
    dot = tmp_path / "proof.dot"
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "check", sample_proof_path, "--jobs", 1, "--dot", dot, "--report", report, "--normalize")
    assert code == 0
    assert out.startswith("proof sample_proof: PROOF_VERIFIED")
    assert dot.read_text().startswith("digraph proof {")
    data = json.loads(report.read_text())
    assert data["overall"] == "PROOF_VERIFIED"
    assert [s["verdict"] for s in data["steps"]] == ["VERIFIED"] * 3


def test_check_refuted_json(capsys):
    code, out, _ = run(capsys, "check", DATA / "mutated_step4.txt", "--jobs", 1, "--json")
    assert code == 1
    data = json.loads(out)
    assert data["first_failure"] == "4"
    assert data["explanations"][0]["kind"] == "FIRST_UNSOUND_STEP"


def test_check_incomplete(capsys, tmp_path):
    path = tmp_path / "theory.txt"
    path.write_text("1. ~$less(a, $sum(a, 1)) [input]\n2. $less(a, $sum(a, 1)) [theory instance 1]\n3. $false [resolution 1,2]\n")
    code, out, _ = run(capsys, "check", path, "--jobs", 1, "--budget-secs", "0.2")
    assert code == 2
    assert "UNCHECKED" in out


def test_step_command(capsys, sample_proof_path):
    assert run(capsys, "step", sample_proof_path, "--node", "5")[0] == 0
    code, out, _ = run(capsys, "step", DATA / "mutated_step4.txt", "--node", "4")
    assert code == 1
    assert "domain = " in out
    code, _, err = run(capsys, "step", sample_proof_path, "--node", "1")
    assert code == 3 and "leaf" in err
    assert run(capsys, "step", sample_proof_path, "--node", "99")[0] == 3


def test_model_command(capsys, tmp_path):
    sat = tmp_path / "sat.p"
    sat.write_text("fof(a,axiom, a != b).\nfof(c,conjecture, a = c).\n")
    code, out, _ = run(capsys, "model", sat)
    assert code == 0 and out.startswith("MODEL size 2")
    unsat = tmp_path / "unsat.p"
    unsat.write_text("fof(a,axiom, p(a)).\nfof(c,conjecture, p(a)).\n")
    code, out, _ = run(capsys, "model", unsat, "--max-domain", 2)
    assert code == 1 and out == "NO_MODEL_UP_TO 2\n"


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1. p(a [input]\n")
    code, _, err = run(capsys, "check", bad)
    assert code == 3
    assert "bad.txt:1:" in err


def test_missing_file_and_bad_flag(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.txt")[0] == 3
    with pytest.raises(SystemExit) as info:
        run_cli(["check", "x", "--budget-secs", "0"])
    assert info.value.code == 3
    with pytest.raises(SystemExit) as info:
        run_cli(["frobnicate"])
    assert info.value.code == 3


def test_internal_error_exit(capsys, sample_proof_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(cli, "check_proof", boom)
    code, _, err = run(capsys, "check", sample_proof_path)
    assert code == 4
    assert "kaboom" in err


def test_module_entry_point(sample_proof_path):
    proc = subprocess.run(
        [sys.executable, "-m", "proofgate", "emit", str(sample_proof_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout == GOLDEN
