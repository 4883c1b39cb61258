from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest
from conftest import CORPUS

from bfo.cli import SCHEMA, main

GOLDEN = Path(__file__).parent / "golden"
REGEN = bool(os.environ.get("BFO_REGEN_GOLDEN"))


def bfo(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *args):
    code, out, _ = bfo(capsys, *args, "--json")
    data = json.loads(out)
    assert data["schema"] == SCHEMA and data["exit"] == code
    return code, data


def test_check_ok(capsys):
    code, out, _ = bfo(capsys, "check", CORPUS / "consort-demo.bfo")
    assert code == 0 and out.strip().endswith(": ok")


def test_check_dump_env(capsys):
    code, out, _ = bfo(capsys, "check", CORPUS / "rusthorn-demo-typed.bfo", "--dump-env")
    assert code == 0 and "y := 1;  // x:ref<α,0 lend β:1>, y:ref<β,1>" in out


def test_check_rejects_cyclic_borrow(capsys):
    code, _, err = bfo(capsys, "check", CORPUS / "cyclic-borrow.bfo")
    assert code == 1
    assert "cyclic-borrow.bfo:6:1: error[LifetimeOrderViolation]" in err


def test_missing_file_is_an_io_error(capsys):
    code, _, err = bfo(capsys, "check", "no/such/file.bfo")
    assert code == 2 and "cannot read" in err


def test_parse_error_is_semantic(tmp_path, capsys):
    f = tmp_path / "bad.bfo"
    f.write_text("let x = in 0")
    code, _, err = bfo(capsys, "check", f)
    assert code == 1 and "error[ParseError]" in err


def test_run_source_fail(tmp_path, capsys):
    f = tmp_path / "fail.bfo"
    f.write_text("fail\n")
    code, out, _ = bfo(capsys, "run-source", f)
    assert code == 1 and "status: Fail" in out


def test_run_source_havoc_list(capsys):
    code, data = report(capsys, "run-source", CORPUS / "table/inc-max-unsafe.bfo", "--havoc=-1,2")
    assert code == 1 and data["status"] == "Fail" and data["havoc"] == [-1, 2]
    code, data = report(capsys, "run-source", CORPUS / "table/inc-max-unsafe.bfo", "--havoc=2,-1")
    assert code == 0 and data["status"] == "Done"


def test_run_source_trace(capsys):
    code, out, _ = bfo(capsys, "run-source", CORPUS / "rusthorn-demo.bfo", "--trace", "--audit")
    assert code == 0 and "Rs-MkRef" in out and "Rs-Endlft" in out


def test_seeded_runs_are_deterministic(capsys):
    a = bfo(capsys, "run-source", CORPUS / "table/minmax-unsafe.bfo", "--seed", "7", "--json")
    b = bfo(capsys, "run-source", CORPUS / "table/minmax-unsafe.bfo", "--seed", "7", "--json")
    assert a == b


def test_translate_to_file(tmp_path, capsys):
    out = tmp_path / "out.ml"
    code, text, _ = bfo(capsys, "translate", CORPUS / "consort-demo.bfo", "-o", out)
    assert code == 0 and out.read_text().startswith("let nondet () =")


@pytest.mark.parametrize("fmt,marker", [("ml", "let main ="), ("sexp", ";; bfo-target-sexp 1"),
                                        ("tgt", "let x = (fst y, snd x) in")])
def test_translate_formats(capsys, fmt, marker):
    code, out, _ = bfo(capsys, "translate", CORPUS / "consort-demo.bfo", "--emit", fmt)
    assert code == 0 and marker in out


def test_run_target_explore(capsys):
    code, out, _ = bfo(capsys, "run-target", CORPUS / "rusthorn-demo-target.tgt", "--explore", "--domain", "0,1")
    assert code == 0 and "fail reachable: no" in out
    code, out, _ = bfo(capsys, "run-target", CORPUS / "table/minmax-unsafe.bfo", "--explore")
    assert code == 1 and "fail reachable: yes" in out


def test_run_target_infeasible(capsys):
    code, out, _ = bfo(capsys, "run-target", CORPUS / "nondet-assume.tgt")
    assert code == 1 and "status: Infeasible" in out


def test_audit_only_reports_the_violation(capsys):
    code, data = report(capsys, "audit", CORPUS / "cyclic-borrow.bfo", "--audit-only")
    assert code == 1
    [v] = data["violations"]
    assert v["own_sum"] == "2" and v["kind"] == "fraction"


def test_audit_without_audit_only_rejects(capsys):
    code, _, _ = bfo(capsys, "audit", CORPUS / "cyclic-borrow.bfo")
    assert code == 1


def test_crosscheck_file(capsys):
    code, data = report(capsys, "crosscheck", CORPUS / "table/inc-max-unsafe.bfo", "--streams", "10")
    assert code == 0 and data["ok"] and data["source_failed"] and data["explore"]["fail_reachable"]


def test_crosscheck_needs_a_file(capsys):
    code, _, err = bfo(capsys, "crosscheck")
    assert code == 2 and "FILE or --corpus" in err


def test_crosscheck_corpus_in_a_worker_pool(tmp_path, capsys):
    (tmp_path / "table").mkdir()
    for name in ("consort-demo.bfo", "table/inc-max-unsafe.bfo"):
        (tmp_path / name).write_text((CORPUS / name).read_text())
    (tmp_path / "manifest.json").write_text(json.dumps({"schema": "bfo-corpus/1", "entries": [
        {"name": "a", "path": "consort-demo.bfo", "group": "figure"},
        {"name": "b", "path": "table/inc-max-unsafe.bfo", "group": "table", "safety": "unsafe"},
    ]}))
    env = dict(os.environ, BFO_CORPUS=str(tmp_path))
    proc = subprocess.run([sys.executable, "-m", "bfo.cli", "crosscheck", "--corpus", "--jobs", "2",
                           "--streams", "5", "--json"], capture_output=True, text=True, env=env, timeout=300)
    assert proc.returncode == 0, proc.stderr
    data = json.loads(proc.stdout)
    assert sorted(data["results"]) == ["consort-demo.bfo", "table/inc-max-unsafe.bfo"]
    assert data["ok"]


def test_bad_domain_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["run-target", str(CORPUS / "nondet-assume.tgt"), "--domain", "x"])
    assert ei.value.code == 2


# ---------------------------------------------------------------- JSON goldens

CASES = {
    "check-rusthorn-demo": ["check", "rusthorn-demo.bfo"],
    "check-cyclic-borrow": ["check", "cyclic-borrow.bfo"],
    "run-source-inc-max-unsafe": ["run-source", "table/inc-max-unsafe.bfo", "--havoc=-1,2"],
    "run-target-borrow-demo": ["run-target", "rusthorn-demo-target.tgt", "--havoc=1,1"],
    "explore-borrow-demo": ["run-target", "rusthorn-demo-target.tgt", "--explore", "--domain", "0,1"],
    "explore-minmax-unsafe": ["run-target", "table/minmax-unsafe.bfo", "--explore"],
    "audit-cyclic-borrow": ["audit", "cyclic-borrow.bfo", "--audit-only"],
    "crosscheck-borrow-demo": ["crosscheck", "rusthorn-demo.bfo", "--streams", "2"],
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_json_report_golden(capsys, name):
    cmd, rel, *rest = CASES[name]
    code, data = report(capsys, cmd, CORPUS / rel, *rest)
    data["input"] = rel
    if isinstance(data.get("explore"), dict):
        data["explore"].pop("stats", None)
    path = GOLDEN / f"{name}.json"
    if REGEN:
        path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    assert data == json.loads(path.read_text(encoding="utf-8"))
