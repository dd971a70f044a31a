import csv
import json
import subprocess
import sys

import pytest

from rmltq.cli import main


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path / "out"), "--cache", str(tmp_path / "cache")])


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["search", "--case"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["search", "--case", "4.zz"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["search", "--threads", "0"])
    assert e.value.code == 2


def test_classify_without_search_is_an_error(tmp_path):
    assert _run(tmp_path, "classify", "--case", "4.b") == 1


def test_search_classify_report(tmp_path, capsys):
    assert _run(tmp_path, "catalog", "--case", "4.a") == 0
    assert _run(tmp_path, "search", "--case", "4.a") == 0
    assert _run(tmp_path, "classify", "--case", "4.a") == 0
    out = tmp_path / "out"
    assert (out / "cliques" / "4.a-48.jsonl").exists()
    rows = {r["case_id"]: r for r in csv.DictReader(open(out / "classification.csv"))}
    assert rows["4.a-48"]["parastrophy_classes"] == "2"
    capsys.readouterr()
    assert _run(tmp_path, "report", "--case", "4.a") == 0
    report = capsys.readouterr().out
    assert "4.a-96" in report and "FAIL" not in report


def test_budget_exit_code(tmp_path):
    assert _run(tmp_path, "search", "--case", "4.b", "--budget-nodes", "2") == 3


def test_obstruct_json_and_skip(tmp_path, capsys):
    assert _run(tmp_path, "obstruct", "--case", "4.k", "4.m", "--format", "json") == 0
    out = tmp_path / "out"
    certs = json.loads((out / "certificates.json").read_text())
    assert {c["case_id"] for c in certs} == {"4.k-360", "4.k-720"}
    assert all(c["hypothesis_holds"] for c in certs)
    summary = json.loads((out / "obstruct_summary.json").read_text())
    assert any(s["case_id"] == "4.m" and "skipped" in s["verdict"] for s in summary)
    assert "SKIP" in capsys.readouterr().out.upper()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rmltq", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "obstruct" in r.stdout
