import csv
import json
import subprocess
import sys

import pytest

from singdeg import cli
from singdeg.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_SOLVER, SweepConfig, fmt, main

FAST = {"n_schedule": [1, 2, 4, 8], "cells": [48]}
LONG = {"n_schedule": [2**k for k in range(41)], "cells": [64, 128], "grading": 2.0, "tol_fix": 1e-13}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_fmt_fixed_formatting():
    assert fmt(None) == "" and fmt(True) == "1" and fmt(False) == "0" and fmt(7) == "7"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == ""
    assert float(fmt(1 / 3)) == 1 / 3


def test_solve_case2_passes_and_writes_files(tmp_path):
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 1, "gamma": 2,
                                              "source": {"kind": "power", "a_exp": 2.9}, "m": 1},
                                     "protocol": LONG})
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["regime"]["case_id"] == "Case2" and rep["overall"] is True
    assert rep["claims"] == {"GlobalH1": True}
    for c in rep["checks"]:
        assert set(c) >= {"name", "measured", "bound", "tolerance", "passed"}
    assert rep["exponents"]["two_star"] == 6.0
    lines = (out / "trace.csv").read_text().split("\n")
    assert lines[0] == ",".join(cli.CSV_COLUMNS)
    assert len(lines) == 1 + 2 * 41 + 1 and lines[-1] == ""


def test_solve_out_of_theorem_exits_zero(tmp_path):
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 2.5, "gamma": 0.5}, "protocol": FAST})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["regime"]["case_id"] == "OutOfTheorem"
    assert not any(c["mandatory"] for c in rep["checks"])


def test_solve_failed_verdict_exits_one(tmp_path):
    # a short schedule leaves the Case2 H1 trace still growing
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 1, "gamma": 2}, "protocol": FAST})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_FAILED


@pytest.mark.parametrize("spec", [
    {"dimension": 3, "p": 1, "gamma": 2, "source": {"kind": "power", "a_exp": 3.0}, "m": 1},
    {"dimension": 3, "p": 1, "gamma": 2, "colour": "red"},
    {"dimension": 2, "p": 1, "gamma": 2},
    {"dimension": 3, "p": 1, "gamma": 2, "source": {"kind": "power", "a_exp": 2.0}},
])
def test_solve_config_errors(tmp_path, spec):
    cfg = write(tmp_path, "c.json", {"spec": spec})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_solve_missing_or_malformed_config(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == EXIT_CONFIG
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 1, "gamma": 2}, "protocol": {"cells": [4]}})
    assert main(["solve", "--config", cfg]) == EXIT_CONFIG


def test_solve_nonconvergence_exits_three(tmp_path):
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 1, "gamma": 2},
                                     "protocol": {**FAST, "max_iter": 2}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_SOLVER


def test_m_accepts_inf_string(tmp_path):
    cfg = cli.RunConfig.from_dict({"spec": {"dimension": 3, "p": 1, "gamma": 1, "m": "inf"}})
    assert cfg.spec.m == float("inf")


# --- sweep -----------------------------------------------------------------------

SWEEP = {
    "base": {"spec": {"dimension": 3, "p": 1.0, "gamma": 1.0}, "protocol": FAST},
    "grid": {"spec.gamma": [0.5, 2.0, 3.0]},
}


def test_sweep_three_regimes(tmp_path):
    cfg = write(tmp_path, "s.json", SWEEP)
    code = main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")])
    assert code in (EXIT_OK, EXIT_FAILED)
    rows = list(csv.DictReader((tmp_path / "s" / "summary.csv").open()))
    assert [r["regime"] for r in rows] == ["Case1a", "Case2", "Case3"]
    assert [r["case"] for r in rows] == ["case-0000", "case-0001", "case-0002"]
    for r in rows:
        assert (tmp_path / "s" / r["case"] / "report.json").exists()
        assert (tmp_path / "s" / r["case"] / "trace.csv").exists()


def test_sweep_enumeration_order():
    sweep = SweepConfig.from_dict({"base": {"spec": {}}, "grid": {"spec.p": [2, 1], "spec.dimension": [4, 3]}})
    order = [(c["spec"]["dimension"], c["spec"]["p"]) for c in sweep.cases()]
    assert order == [(4, 2), (4, 1), (3, 2), (3, 1)]
    assert sweep.size() == 4


def test_sweep_is_byte_identical_across_runs_and_workers(tmp_path):
    cfg = write(tmp_path, "s.json", SWEEP)
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--jobs", "3"])
    for rel in ("summary.csv", "case-0001/report.json", "case-0002/trace.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_sweep_empty_list_and_cap(tmp_path):
    cfg = write(tmp_path, "s.json", {**SWEEP, "grid": {"spec.gamma": []}})
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    cfg = write(tmp_path, "s.json", {**SWEEP, "max_cases": 2})
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    cfg = write(tmp_path, "s.json", {**SWEEP, "grid": {"spec.gamma": list(range(1, 101)), "spec.p": list(range(101))}})
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG


def test_sweep_records_bad_cases_and_continues(tmp_path):
    cfg = write(tmp_path, "s.json", {**SWEEP, "grid": {"spec.gamma": [0.5, -1.0]}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_FAILED
    rows = list(csv.DictReader((tmp_path / "s" / "summary.csv").open()))
    assert [r["status"] for r in rows] == ["ok", "config_error"]


# --- manufactured ----------------------------------------------------------------


def test_manufactured_examples(tmp_path, capsys):
    out = tmp_path / "m"
    assert main(["manufactured", "--dim", "3", "--p", "1", "--gamma", "2", "--cells", "64,128,256",
                 "--out", str(out)]) == EXIT_OK
    assert "observed order: 1.99" in capsys.readouterr().out
    rows = list(csv.reader((out / "mms.csv").open()))
    assert rows[0] == ["cells", "h", "sup_error"] and len(rows) == 4
    assert main(["manufactured", "--dim", "3", "--p", "0", "--gamma", "1", "--cells", "64,128,256",
                 "--out", str(out)]) == EXIT_OK


def test_manufactured_argument_errors(tmp_path):
    assert main(["manufactured", "--dim", "3", "--p", "1", "--gamma", "2", "--cells", "64,128"]) == EXIT_CONFIG
    assert main(["manufactured", "--dim", "2", "--p", "1", "--gamma", "2", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["manufactured", "--dim", "3", "--p", "1", "--gamma", "2", "--n", "2",
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["manufactured", "--dim", "3", "--p", "1", "--gamma", "2", "--cells", "64,x"]) == EXIT_CONFIG


def test_manufactured_solver_failure_exits_three(tmp_path, monkeypatch):
    from singdeg.solver import NonConvergence

    def boom(*a, **k):
        raise NonConvergence(1000, 1.0, 500)

    monkeypatch.setattr(cli, "manufactured_study", boom)
    assert main(["manufactured", "--dim", "3", "--p", "1", "--gamma", "2", "--out", str(tmp_path)]) == EXIT_SOLVER


# --- report / entry points ----------------------------------------------------------


def test_report_pretty_prints(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"spec": {"dimension": 3, "p": 0.5, "gamma": 2}, "protocol": FAST})
    main(["solve", "--config", cfg, "--out", str(tmp_path / "o")])
    capsys.readouterr()
    assert main(["report", "--in", str(tmp_path / "o")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "regime Case3" in text and "energy_inequality@48" in text
    assert main(["report", "--in", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_unknown_command_is_config_error():
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "singdeg", "manufactured", "--dim", "3", "--p", "1",
                           "--gamma", "2", "--cells", "16,32", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
