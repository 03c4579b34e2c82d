import csv
import io
import json
import subprocess
import sys

import pytest

from handover.cli import main
from handover.scenario import shipped_path

A = str(shipped_path("scenario_a.ini"))
B = str(shipped_path("scenario_b.ini"))
HEAVY = str(shipped_path("signaling_heavy_weights.ini"))
VOICE = str(shipped_path("voice_pairwise.ini"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_text(capsys):
    code, out, _ = run(capsys, "evaluate", "--scenario", B)
    assert code == 0
    assert "EFMIPv6" in out and "3 delay cell(s)" in out and "documented anomaly" in out


def test_evaluate_parametric_csv(capsys):
    code, out, _ = run(capsys, "evaluate", "--scenario", A, "--mode", "parametric", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][0] == "Algorithm" and len(rows) == 6
    assert rows[3][2] == "4T+4f"


def test_evaluate_json_is_byte_identical(capsys):
    _, first, _ = run(capsys, "evaluate", "--scenario", A, "--format", "json")
    _, second, _ = run(capsys, "evaluate", "--scenario", A, "--format", "json")
    assert first == second
    assert json.loads(first)["meta"]["reference_mismatches"] == []


def test_rank_weights(capsys):
    code, out, _ = run(capsys, "rank", "--scenario", B, "--weights", HEAVY, "--format", "json")
    assert code == 0
    assert json.loads(out)["order"] == ["EFMIPv6", "SMIPv6", "HMIPv6", "FMIPv6", "MIPv6"]


def test_rank_pairwise_text(capsys):
    code, out, _ = run(capsys, "rank", "--scenario", A, "--pairwise", VOICE)
    assert code == 0 and "CR =" in out and "1. " in out


def test_rank_override(capsys):
    code, out, _ = run(capsys, "rank", "--scenario", B, "--override-blocking")
    assert code == 0 and "published values" in out


def test_blocking_sweep(capsys):
    code, out, _ = run(capsys, "blocking", "--scenario", A, "--sweep")
    lines = out.splitlines()
    assert code == 0
    assert sum(l.startswith("hard") for l in lines) == 10
    assert sum(l.startswith("soft") for l in lines) == 5


def test_blocking_bad_sweep(capsys):
    code, _, err = run(capsys, "blocking", "--scenario", A, "--sweep", "g=0-3")
    assert code == 1 and "sweep" in err


def test_simulate_json(capsys):
    args = ("simulate", "--scenario", A, "--arrivals", "20000", "--seed", "3", "--format", "json")
    code, out, _ = run(capsys, *args)
    assert code == 0
    payload = json.loads(out)
    assert payload["meta"]["seed"] == 3 and payload["meta"]["prng"].startswith("numpy")
    _, again, _ = run(capsys, *args)
    assert again == out


def test_ahp(capsys):
    code, out, _ = run(capsys, "ahp", "--pairwise", VOICE, "--format", "json")
    payload = json.loads(out)
    assert code == 0
    assert abs(sum(payload["weights"]) - 1) < 1e-12
    assert payload["consistent"] is True


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(shipped_path("scenario_a.ini").read_text().replace("guard_channels = 3", "guard_channels = 10"))
    code, _, err = run(capsys, "evaluate", "--scenario", str(bad))
    assert code == 1 and "cell.guard_channels" in err and "line" in err


def test_io_error_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "evaluate", "--scenario", str(tmp_path / "missing.ini"))
    assert code == 3 and "error" in err


def test_computation_error_exit_code(tmp_path, capsys, monkeypatch):
    from handover import cli
    from handover.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("no convergence")

    monkeypatch.setattr(cli, "cell_blocking", boom)
    code, _, err = run(capsys, "blocking", "--scenario", A)
    assert code == 2 and "no convergence" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "handover", "evaluate", "--scenario", A, "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("Algorithm")
