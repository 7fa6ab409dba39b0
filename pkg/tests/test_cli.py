import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gapflow import cli
from gapflow.nls import FieldGrid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(args):
    return cli.main([str(a) for a in args])


def test_reconstruct_onegap(tmp_path):
    assert run(["reconstruct", "--config", CONFIGS / "reconstruct-onegap.json", "--out", tmp_path]) == cli.EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "ok" and rep["results"]["constant_oracle_error"] <= 1e-12
    fg = FieldGrid.from_bytes((tmp_path / "field.gfld").read_bytes())
    # phi = e^{-2it} from phi(0) = 1
    assert np.max(np.abs(fg.u - np.exp(-2j * fg.t)[:, None])) <= 1e-10
    assert rep["time_convention"]["verdict"] == "consistent"
    assert len(rep["config_hash"]) == 64
    names = {a["name"] for a in rep["artifacts"]}
    assert names == {"field.gfld", "field.csv"}


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["reconstruct", "--config", bad, "--out", tmp_path / "o"]) == cli.EXIT_CONFIG


def test_schema_violation(tmp_path):
    assert run(["reconstruct", "--config", CONFIGS / "bad-schema.json", "--out", tmp_path]) == cli.EXIT_CONFIG


def test_command_mismatch(tmp_path):
    assert run(["nls-compare", "--config", CONFIGS / "reconstruct-onegap.json", "--out", tmp_path]) == cli.EXIT_CONFIG


def test_check_failure_exit_3(tmp_path):
    cfg = json.loads((CONFIGS / "abel-linearize-twogap.json").read_text())
    cfg["params"]["threshold"] = 1e-30
    path = tmp_path / "strict.json"
    path.write_text(json.dumps(cfg))
    assert run(["abel-linearize", "--config", path, "--out", tmp_path / "o"]) == cli.EXIT_NUMERIC
    diag = json.loads((tmp_path / "o" / "diagnostic.json").read_text())
    assert diag["error"] == "CheckFailed"
    assert json.loads((tmp_path / "o" / "report.json").read_text())["status"] == "check failed"


def test_flags_override_config(tmp_path):
    cfg = cli.resolve_config("mp-certify", str(CONFIGS / "mp-certify-example.json"), {"seed": 11, "tol": None})
    assert cfg["seed"] == 11


def test_config_hash_ignores_threads_and_out():
    a = {"command": "reconstruct", "params": {"x": 1}, "threads": 4, "out": "a"}
    b = {"command": "reconstruct", "params": {"x": 1}}
    assert cli.config_hash(a) == cli.config_hash(b)
    assert cli.config_hash(b) != cli.config_hash({"command": "reconstruct", "params": {"x": 2}})


@pytest.mark.parametrize("name", ["mp-certify-example", "craig-check-exponential", "dubrovin-evolve-twogap"])
def test_determinism(tmp_path, name):
    cfg = CONFIGS / f"{name}.json"
    command = json.loads(cfg.read_text())["command"]
    assert run([command, "--config", cfg, "--out", tmp_path / "a", "--seed", 3]) == cli.EXIT_OK
    assert run([command, "--config", cfg, "--out", tmp_path / "b", "--seed", 3]) == cli.EXIT_OK
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_threads_do_not_change_numbers(tmp_path):
    cfg = CONFIGS / "jl-check-constant.json"
    assert run(["jl-check", "--config", cfg, "--out", tmp_path / "a", "--threads", 1]) == cli.EXIT_OK
    assert run(["jl-check", "--config", cfg, "--out", tmp_path / "b", "--threads", 3]) == cli.EXIT_OK
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert a["results"] == b["results"] and a["config_hash"] == b["config_hash"]


def test_all_configs_run(tmp_path):
    for path in sorted(CONFIGS.glob("*.json")):
        if path.stem in ("bad-schema", "nls-compare-twogap", "gap-report-cosine", "spectrum-scan-cosine"):
            continue
        command = json.loads(path.read_text())["command"]
        assert run([command, "--config", path, "--out", tmp_path / path.stem]) == cli.EXIT_OK, path.name
        rep = json.loads((tmp_path / path.stem / "report.json").read_text())
        assert rep["provenance"]["numbers"], path.name


def test_gap_report(tmp_path):
    assert run(["gap-report", "--config", CONFIGS / "gap-report-cosine.json", "--out", tmp_path]) == cli.EXIT_OK
    res = json.loads((tmp_path / "report.json").read_text())["results"]
    assert res["decay_fit"]["r"] > 0 and res["distance_shape"]["holds"]
    header = (tmp_path / "scan.csv").read_text().splitlines()[0]
    assert header == "lam,gamma,rho,in_gap,label"


def test_nls_compare(tmp_path):
    assert run(["nls-compare", "--config", CONFIGS / "nls-compare-twogap.json", "--out", tmp_path]) == cli.EXIT_OK
    res = json.loads((tmp_path / "report.json").read_text())["results"]
    assert res["sup_error"] <= 1e-4 and res["passed"]


def test_emit_report_empty():
    rep = cli.emit_report([])
    assert rep["warnings"] == ["empty artifact list"] and rep["reports"] == {} and rep["acceptance"] == []


def test_emit_report_merge(tmp_path):
    assert run(["craig-check", "--config", CONFIGS / "craig-check-exponential.json", "--out", tmp_path / "c"]) == 0
    acc = tmp_path / "acceptance.json"
    acc.write_text(json.dumps({"criteria": [{"criterion": 2, "status": "PASS"}, {"criterion": 1, "status": "PASS"}]}))
    rep = cli.emit_report([tmp_path / "c", acc, tmp_path / "missing.json"])
    assert "craig-check" in rep["reports"]
    assert [r["criterion"] for r in rep["acceptance"]] == [1, 2]
    assert rep["partial"] and rep["missing"]


def test_report_subcommand(tmp_path):
    out = tmp_path / "merged.json"
    assert run(["report", "--out", out]) == cli.EXIT_OK
    assert json.loads(out.read_text())["warnings"] == ["empty artifact list"]


def test_schema_subcommand(capsys):
    assert run(["schema", "reconstruct"]) == 0
    assert json.loads(capsys.readouterr().out)["additionalProperties"] is False


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gapflow.cli", "reconstruct", "--config",
                          str(CONFIGS / "bad-schema.json"), "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 2 and "config" in out.stderr
