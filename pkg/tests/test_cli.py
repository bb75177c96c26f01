import filecmp
import json
from pathlib import Path

import pytest

from idtraj.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_top_level_help_matches_golden(capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "80")
    assert main(["--help"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "idtraj_help.txt").read_text()


def test_synth_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        code, _, _ = run_cli(capsys, "synth", "--out", tmp_path / name, "--days", 6, "--products", 2,
                             "--seed", 4)
        assert code == 0
    for f in ("grids.csv", "fundamentals.csv", "meta.json", "truth.json"):
        assert filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False)


def test_synth_overrides_and_raw_ingest_round_trip(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "synth", "--out", tmp_path / "s", "--days", 5, "--products", 1,
                         "--raw", "nu=6.5")
    assert code == 0
    assert json.loads((tmp_path / "s" / "truth.json").read_text())["truth"]["nu"] == 6.5
    raw = tmp_path / "s" / "raw"
    code, _, _ = run_cli(capsys, "ingest", "--trades", raw / "trades.csv", "--da", raw / "da_prices.csv",
                         "--fundamentals", raw / "fundamentals.csv", "--out", tmp_path / "i")
    assert code == 0
    assert filecmp.cmp(tmp_path / "s" / "grids.csv", tmp_path / "i" / "grids.csv", shallow=False)


def test_backtest_evaluate_dm_report(tmp_path, capsys):
    run_cli(capsys, "synth", "--out", tmp_path / "d", "--days", 32, "--products", 1)
    code, out, _ = run_cli(capsys, "backtest", "--data", tmp_path / "d", "--out", tmp_path / "r",
                           "--models", "Naive,RW.N", "in_sample_days=30", "out_of_sample_days=2",
                           "n_members=40")
    assert code == 0 and "Naive" in out
    assert run_cli(capsys, "evaluate", "--out", tmp_path / "r")[0] == 0
    assert run_cli(capsys, "report", "--out", tmp_path / "r")[0] == 0
    assert (tmp_path / "r" / "report" / "es_by_hour.csv").exists()
    assert run_cli(capsys, "copula", "--out", tmp_path / "r", "--model", "Naive")[0] == 0
    # fewer than 30 out-of-sample days: the DM test is refused with a structured error
    code, _, err = run_cli(capsys, "dm", "--out", tmp_path / "r")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["command"] == "dm"


def test_exit_codes(tmp_path, capsys):
    assert run_cli(capsys, "synth", "--out", tmp_path / "x", "bogus=1")[0] == 2
    assert run_cli(capsys, "synth", "--out", tmp_path / "x", "nu=1.5")[0] == 2
    assert run_cli(capsys, "backtest")[0] == 2
    code, _, err = run_cli(capsys, "evaluate", "--out", tmp_path / "missing")
    assert code == 1
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["command"] == "evaluate" and doc["error"] == "DataError"


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "idtraj", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "backtest" in res.stdout
