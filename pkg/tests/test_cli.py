import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from tucker_sscg.cli import (REPORT_SCHEMA, SWEEP_FIELDS, UsageError, expand_grid, main,
                             normalize_config)


def run_cli(tmp_path, *args):
    out = tmp_path / "report.json"
    code = main(["run", *args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() and out.stat().st_size else None)


def test_run_converges_and_validates(tmp_path):
    code, rep = run_cli(tmp_path, "--example", "1", "--n", "100", "--tol", "1e-3",
                        "--method", "cg", "--maxrank", "10")
    assert code == 0 and rep["converged"]
    assert rep["residual_history"][-1] < 1e-3
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["config"]["n"] == 100 and rep["config"]["maxit"] == 300


def test_run_not_converged_exit_1(tmp_path):
    code, rep = run_cli(tmp_path, "--n", "20", "--tol", "1e-9", "--maxit", "2", "--method", "sd")
    assert code == 1 and rep["status"] == "not_converged"
    jsonschema.validate(rep, REPORT_SCHEMA)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"example": 2, "n": 20, "tol": 1e-2, "precond": "fft"}))
    code, rep = run_cli(tmp_path, "--config", str(cfg), "--tol", "1e-3")
    assert code == 0
    assert rep["config"]["example"] == 2 and rep["config"]["tol"] == 1e-3
    assert rep["config"]["precond"] == "fft"


def test_csv_history(tmp_path):
    out = tmp_path / "hist.csv"
    assert main(["run", "--n", "20", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["iteration"] == "0" and float(rows[0]["relative_residual"]) == pytest.approx(1)
    assert float(rows[-1]["relative_residual"]) < 1e-3
    assert "x" in rows[-1]["rank_x"]


@pytest.mark.parametrize("args", [["run", "--method", "gmres"], ["run", "--example", "7"],
                                  ["run", "--n", "0"], ["run", "--delta", "1.5"],
                                  ["run", "--bogus"], ["frobnicate"], []])
def test_usage_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "error" in capsys.readouterr().err


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"colour": "red"}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_normalize_config():
    cfg = normalize_config({"n": "50", "tol": "1e-4"})
    assert cfg["n"] == 50 and cfg["tol"] == 1e-4 and cfg["method"] == "cg"
    with pytest.raises(UsageError):
        normalize_config({"n": 2.5})


def test_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TUCKER_SSCG_THREADS", "1")
    assert run_cli(tmp_path, "--n", "10")[0] == 0
    monkeypatch.setenv("TUCKER_SSCG_THREADS", "many")
    assert main(["run", "--n", "10"]) == 2


def test_expand_grid():
    grid = {"example": 1, "n": [100], "tol": [1e-3, 1e-4],
            "solvers": [["cg", "none"], ["sd", "none"], ["sd", "innout"], ["sd", "fft"],
                        ["sd", "eig"]]}
    cells = expand_grid(grid)
    assert len(cells) == 10
    assert cells[3] == {"example": 1, "n": 100, "tol": 1e-3, "method": "sd", "precond": "fft"}
    assert len(expand_grid({"method": ["sd", "cg"], "precond": ["none", "fft"], "n": 5})) == 4
    assert expand_grid({"n": []}) == []
    with pytest.raises(UsageError):
        expand_grid({"colour": [1]})


def test_sweep_rows_and_failures(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"n": [10], "tol": 1e-3, "method": ["cg", "sd"],
                                "precond": ["none", "bogus"]}))
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", str(grid), "--out", str(out)])
    rows = list(csv.DictReader(out.open()))
    assert code == 1 and len(rows) == 4
    assert [r["status"] for r in rows] == ["converged", "error", "converged", "error"]
    assert "precond" in rows[1]["error"]


def test_empty_sweep(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"n": [], "tol": 1e-3}))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(grid), "--out", str(out)]) == 0
    assert out.read_text().strip().split(",") == SWEEP_FIELDS


def test_solver_abort_recorded(tmp_path, monkeypatch):
    from tucker_sscg import cli
    from tucker_sscg.errors import DefinitenessError

    def boom(*a, **k):
        raise DefinitenessError("negative curvature")

    monkeypatch.setattr(cli, "solve", boom)
    code, rep = run_cli(tmp_path, "--n", "5")
    assert code == 1 and rep["status"] == "error" and "negative" in rep["error"]
    jsonschema.validate(rep, REPORT_SCHEMA)


def test_determinism(tmp_path):
    a = run_cli(tmp_path, "--n", "30", "--example", "2")[1]
    b = run_cli(tmp_path, "--n", "30", "--example", "2")[1]
    assert a["residual_history"] == b["residual_history"]


def test_schema_command_and_module_entry(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out)["properties"]["schema_version"]
    proc = subprocess.run([sys.executable, "-m", "tucker_sscg", "run", "--n", "8"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    jsonschema.validate(json.loads(proc.stdout), REPORT_SCHEMA)
