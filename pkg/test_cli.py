"""
Test della riga di comando: simulate, report, suites e diagnostica degli errori
"""

import json
from pathlib import Path

import pandas as pd
import pytest

import dataM
from allocation_manager import decision_record_violations
from main_cli import EXIT_DATA_ERROR, EXIT_IO_ERROR, EXIT_OK, main
from partition_engine import split_record_violations
from scenario_manager import SUITES

SCENARIOS = Path(__file__).parent / "data" / "scenarios"


def _small_config(tmp_path, **overrides):
    doc = {
        "name": "cli_small",
        "seed": 5,
        "grid": {"w": 3, "h": 3},
        "origin_fog": 4,
        "workload": {"requests": [12], "mix": 0.25, "window_ms": 1500},
        "methods": [["propart", "mr"], ["none", "mect"]],
        "repetitions": 2,
    }
    doc.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def test_simulate_minimal_scenario(tmp_path):
    out = tmp_path / "runs.csv"
    code = main(["simulate", "--config", str(SCENARIOS / "minimal.json"), "--out", str(out),
                 "--parallel", "1"])
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(dataM.RUN_COLUMNS)
    assert len(lines) == 1 + 3
    df = dataM.load_runs_csv(out)
    assert set(df["method"]) == {"propart/mr"}
    assert list(df["seed"]) == [7 * 10 ** 8, 7 * 10 ** 8 + 1, 7 * 10 ** 8 + 2]


def test_simulate_logs_summary_per_method(tmp_path, capsys):
    out = tmp_path / "runs.csv"
    assert main(["simulate", "--config", str(_small_config(tmp_path)), "--out", str(out),
                 "--parallel", "1"]) == EXIT_OK
    err = capsys.readouterr().err
    assert "📊 propart/mr: meet rate" in err
    assert "📊 none/mect: meet rate" in err
    assert "(2 run)" in err


def test_simulate_is_byte_identical(tmp_path):
    config = _small_config(tmp_path)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(config), "--out", str(first), "--parallel", "1"]) == 0
    assert main(["simulate", "--config", str(config), "--out", str(second), "--parallel", "2"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_simulate_rows_follow_cell_method_repetition(tmp_path):
    out = tmp_path / "runs.csv"
    main(["simulate", "--config", str(_small_config(tmp_path)), "--out", str(out),
          "--parallel", "1"])
    df = dataM.load_runs_csv(out)
    assert list(df["method"]) == ["propart/mr"] * 2 + ["none/mect"] * 2
    # stessa cella, stesse etichette di seme per entrambi i metodi
    assert list(df["seed"][:2]) == list(df["seed"][2:])


def test_simulate_writes_checkable_trace(tmp_path):
    out = tmp_path / "runs.csv"
    assert main(["simulate", "--config", str(_small_config(tmp_path)), "--out", str(out),
                 "--parallel", "1", "--trace"]) == EXIT_OK
    records = dataM.read_trace_lines(out.with_suffix(".trace.jsonl"))
    assert records
    assert {r["kind"] for r in records} == {"partition", "allocation"}
    for r in records:
        if r["kind"] == "partition":
            assert split_record_violations(r) == []
        elif r["run_method"] == "propart/mr":
            assert decision_record_violations(r) == []


def test_report_writes_summary_and_deltas(tmp_path, capsys):
    runs = tmp_path / "runs.csv"
    main(["simulate", "--config", str(_small_config(tmp_path)), "--out", str(runs),
          "--parallel", "1"])
    capsys.readouterr()
    assert main(["report", "--in", str(runs), "--out", str(tmp_path / "agg")]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "propart/mr" in printed

    summary = pd.read_csv(tmp_path / "agg_summary.csv")
    assert list(summary["n"]) == [2, 2]
    deltas = pd.read_csv(tmp_path / "agg_deltas.csv")
    assert len(deltas) == 2
    assert "meet_rate_hw" in deltas.columns


def test_report_rejects_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("scenario,method,requests\nx,y,1\n", encoding="utf-8")
    assert main(["report", "--in", str(bad)]) == EXIT_DATA_ERROR

    header = ",".join(dataM.RUN_COLUMNS)
    bad.write_text(f"{header}\ns,a,10,0.0,4,1,not-a-number,10.0\n", encoding="utf-8")
    assert main(["report", "--in", str(bad)]) == EXIT_DATA_ERROR


def test_report_rejects_single_run_cells(tmp_path):
    csv = tmp_path / "one.csv"
    dataM.save_runs_csv([{"scenario": "s", "method": "a", "requests": 10, "mix": 0.0,
                          "degree": 4, "seed": 1, "meet_rate": 0.5, "avg_makespan_ms": 9.0}], csv)
    assert main(["report", "--in", str(csv)]) == EXIT_DATA_ERROR


def test_suites_lists_every_preset(capsys):
    assert main(["suites"]) == EXIT_OK
    first = capsys.readouterr().out
    for name in SUITES:
        assert name in first
    main(["suites"])
    assert capsys.readouterr().out == first


def test_config_errors_exit_with_data_error(tmp_path):
    config = _small_config(tmp_path, methods=[["propart", "round-robin"]])
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == \
        EXIT_DATA_ERROR
    assert not (tmp_path / "x.csv").exists()


def test_bad_parallel_value(tmp_path):
    config = _small_config(tmp_path)
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv"),
                 "--parallel", "0"]) == EXIT_DATA_ERROR


def test_unwritable_output_is_io_error(tmp_path):
    config = _small_config(tmp_path)
    out = tmp_path / "missing" / "runs.csv"
    assert main(["simulate", "--config", str(config), "--out", str(out),
                 "--parallel", "1"]) == EXIT_IO_ERROR


def test_missing_config_is_io_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.csv")]) == EXIT_IO_ERROR


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
