"""Command-line front end: exit codes, spec errors, determinism, golden output."""

import io
import json
import shutil
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from opealg.cli import SpecError, load_spec, main, parse_spec_text

ROOT = Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"
GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines()]


@pytest.mark.parametrize("name, extra", [
    ("boson", []),
    ("fermion", []),
    ("tensor", ["--only", "creativity,locality,skew-symmetry,chiral-subalgebra,vbbk-support"]),
    ("corrupt", []),
])
def test_json_lines_match_golden(name, extra):
    code, text = run("check", "--format", "json-lines", *extra, SPECS / f"{name}.spec")
    assert text == (GOLDEN / f"{name}.jsonl").read_text()
    assert code == (1 if name == "corrupt" else 0)


def test_json_lines_are_deterministic_and_structured():
    args = ("check", "--format", "json-lines", "--only", "creativity,locality,skew-symmetry",
            SPECS / "fermion.spec")
    first, second = run(*args), run(*args)
    assert first == second
    recs = records(first[1])
    assert recs[0]["record"] == "report" and recs[-1]["record"] == "summary"
    verdicts = [r for r in recs if r["record"] == "verdict"]
    assert recs[-1]["total"] == len(verdicts) and recs[-1]["failed"] == 0
    assert all("time" not in json.dumps(r) for r in recs)


def test_corrupt_spec_reports_counterexamples():
    code, text = run("check", "--format", "json-lines", SPECS / "corrupt.spec")
    assert code == 1
    failing = {r["check"] for r in records(text) if r.get("status") == "fails"}
    assert {"locality", "duality-direct", "duality-exchange", "module-dual", "existence"} <= failing
    assert "creativity" not in failing
    assert all("counterexample" in r for r in records(text) if r.get("status") == "fails")


def test_text_format(capsys):
    code, text = run("check", "--only", "creativity,locality", SPECS / "boson.spec")
    assert code == 0
    assert "[PASS] creativity" in text and "[PASS] locality" in text
    assert text.strip().endswith("verdicts, 0 failed")


def test_malformed_spec_gives_line_and_column(capsys):
    code, _ = run("check", SPECS / "malformed.spec")
    assert code == 2
    err = capsys.readouterr().err
    assert "malformed.spec:3:9:" in err and "level" in err


@pytest.mark.parametrize("text, where", [
    ("[algebra]\nbackend = heisenberg\ncolour = red\n", (3, 1)),
    ("[algebra]\nbackend = boson\n", (2, 11)),
    ("[algebra]\n  window = -1\nbackend = fermion\n", (2, 12)),
    ("[algebra]\nbackend = fermion\n[nope]\n", (3, 2)),
    ("backend = fermion\n", (1, 1)),
    ("[algebra]\nbackend fermion\n", (2, 1)),
    ("[algebra]\nbackend = fermion\nbackend = fermion\n", (3, 1)),
])
def test_spec_errors_point_at_the_problem(text, where):
    with pytest.raises(SpecError) as info:
        parse_spec_text(text)
    assert (info.value.line, info.value.col) == where


def test_spec_defaults_and_overrides():
    spec = load_spec("[algebra]\nbackend = heisenberg\n")
    assert spec.max_weight == 3 and spec.window == 2 and spec.corpus == 3
    spec = load_spec("[algebra]\nbackend = heisenberg\n[check]\ncorpus = 5\n", max_weight=2, window=4)
    assert spec.max_weight == 2 and spec.window == 4 and spec.corpus == 2
    a = load_spec("[algebra]\nbackend = fermion\n# comment\n")
    b = load_spec("# header\n[algebra]\nbackend = fermion\n")
    assert a.digest() == b.digest()
    assert a.digest() != load_spec("[algebra]\nbackend = fermion\nmax_weight = 5/2\n").digest()
    with pytest.raises(SpecError):
        load_spec("[algebra]\nbackend = tensor\n")


def test_usage_errors_exit_two(tmp_path, capsys):
    assert run("check", "--only", "nonsense", SPECS / "boson.spec")[0] == 2
    assert run("check", tmp_path / "missing.spec")[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("ope", SPECS / "boson.spec", "alpha", "beta")[0] == 2


def test_ope_command():
    code, text = run("ope", SPECS / "boson.spec", "alpha", "alpha")
    assert code == 0 and "vh=(2,0)" in text
    code, text = run("ope", SPECS / "fermion.spec", "psi", "psi")
    assert code == 0 and "vh=(1,0)" in text
    code, text = run("ope", SPECS / "corrupt.spec", "alpha", "alpha")
    assert code == 1 and text.startswith("not local")


def test_product_command():
    code, text = run("product", SPECS / "boson.spec", "alpha", "1", "-1", "alpha")
    assert code == 0 and "state: 1*1" in text
    code, text = run("product", SPECS / "boson.spec", "alpha", "-1", "-1", "alpha")
    assert "state: 1*alpha[-1]alpha[-1]1" in text
    code, text = run("product", SPECS / "boson.spec", "alpha", "0", "0", "alpha")
    assert code == 0 and "(zero)" in text


def test_construct_and_closure_commands():
    code, text = run("construct", SPECS / "fermion.spec")
    assert code == 0 and "existence: HOLDS" in text
    code, text = run("closure", SPECS / "fermion.spec")
    assert code == 0 and "HOLDS" in text
    code, text = run("closure", SPECS / "corrupt.spec")
    assert code == 1


@pytest.mark.skipif(shutil.which("opealg") is None, reason="console script not installed")
def test_console_script_end_to_end():
    proc = subprocess.run(["opealg", "check", "--only", "creativity", str(SPECS / "boson.spec")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "[PASS] creativity" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "opealg.cli", "check", str(SPECS / "malformed.spec")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
