import io
import re
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from chainfree.cli import run
from chainfree.formula import evaluate, parse

DATA = Path(__file__).parent / "data"


def cli(*args):
    out = io.StringIO()
    code = run([str(a) for a in args], out)
    return code, out.getvalue()


def models(text):
    return {m.group(1): tuple(m.group(2)) for m in re.finditer(r'^model: (\S+) = "(.*)"$', text, re.M)}


def test_sat_with_model():
    code, out = cli(DATA / "xyzz.smt", "--model")
    assert code == 0
    assert out.splitlines()[0] == "verdict: sat"
    assert "clause 1: chain-free sat" in out
    m = models(out)
    assert set(m) == {"x", "y", "z"}
    assert evaluate(parse((DATA / "xyzz.smt").read_text()), m)


def test_unsat_exit_code():
    code, out = cli(DATA / "id_shorter.smt")
    assert code == 1 and out.startswith("verdict: unsat")


def test_out_of_fragment():
    code, out = cli(DATA / "transducer_loop.smt")
    assert code == 2
    lines = out.splitlines()
    assert lines[0] == "verdict: out-of-fragment"
    assert "out-of-fragment: non-benign chain" in lines
    assert any(l.startswith("witness: ") and ("(1,L,1)" in l or "(1,R,1)" in l) for l in lines)


def test_weakly_chaining_file():
    code, out = cli(DATA / "benign_pair.smt", "--model")
    assert code == 0 and "weakly-chaining sat" in out


def with_literals(problem, model):
    """Printed models hide the helper variables _l_<c> that stand for the letter c."""
    return {v: model[v] if not v.startswith("_l_") else (v[3:],) for v in problem.variables}


def test_sanitizer_model_is_valid():
    code, out = cli(DATA / "sanitizer.smt", "--model")
    assert code == 0
    problem = parse((DATA / "sanitizer.smt").read_text())
    assert evaluate(problem, with_literals(problem, models(out)))


def test_classify_only():
    code, out = cli(DATA / "benign_pair.smt", "--classify-only")
    assert code == 0
    assert out.splitlines() == ["verdict: weakly-chaining", "clause 1: weakly-chaining"]


def test_oracle_mode():
    code, out = cli(DATA / "xyzz.smt", "--oracle", "--model")
    assert code == 0 and 'model: x = ""' in out
    code, out = cli(DATA / "id_shorter.smt", "--oracle", "--bound", "2")
    assert code == 2
    assert out.strip() == "verdict: unknown (no witness up to length 2)"


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.smt"
    bad.write_text("(declare-alphabet a)\n(assert (= x")
    code, _ = cli(bad)
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_missing_file_and_bad_usage(tmp_path):
    assert cli(tmp_path / "nope.smt")[0] == 3
    assert cli("--classify-only", "--oracle", DATA / "xyzz.smt")[0] == 3
    assert cli(DATA / "xyzz.smt", "--backend", "bogus")[0] == 3


def test_emit_lia(tmp_path):
    target = tmp_path / "out.smt2"
    code, _ = cli(DATA / "id_shorter.smt", "--emit-lia", target)
    text = target.read_text()
    assert code == 1
    assert "(set-logic QF_LIA)" in text and "(check-sat)" in text


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not on PATH")
def test_external_backend():
    assert cli(DATA / "id_shorter.smt", "--backend", "external:z3 -in")[0] == 1
    assert cli(DATA / "xyzz.smt", "--backend", "external:z3 -in")[0] == 0


def test_trace_goes_to_stderr(capsys):
    code, out = cli(DATA / "xyzz.smt", "--trace")
    err = capsys.readouterr().err
    assert code == 0 and "chainfree" in err
    assert "chainfree" not in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chainfree", str(DATA / "id_shorter.smt")],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout.startswith("verdict: unsat")
