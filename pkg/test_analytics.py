"""
Test per verificare il funzionamento dell'Analytics
"""

import math

import pandas as pd
import pytest

from analytics_engine import (AnalyticsEngine, aggregate, format_table, half_width,
                              method_deltas, summary_by_method)
from sim_errors import MissingDataError


def _row(method, meet, makespan=100.0, requests=100, degree=4, seed=0):
    return {"scenario": "s", "method": method, "requests": requests, "mix": 0.0,
            "degree": degree, "seed": seed, "meet_rate": meet, "avg_makespan_ms": makespan}


def test_mean_and_half_width():
    summary = aggregate(pd.DataFrame([_row("a", 0.4), _row("a", 0.6, seed=1)]))
    assert len(summary) == 1
    row = summary.iloc[0]
    assert row["n"] == 2
    assert math.isclose(row["meet_rate_mean"], 0.5)
    assert abs(row["meet_rate_hw"] - 0.196) < 1e-3
    assert row["avg_makespan_ms_hw"] == 0.0


def test_identical_runs_have_zero_width():
    summary = aggregate(pd.DataFrame([_row("a", 0.7, seed=s) for s in range(5)]))
    assert summary.iloc[0]["meet_rate_hw"] == 0.0


def test_half_width_helper():
    assert abs(half_width([0.4, 0.6]) - 0.196) < 1e-3
    with pytest.raises(MissingDataError):
        half_width([0.5])


def test_thin_or_empty_cells_are_rejected():
    with pytest.raises(MissingDataError):
        aggregate(pd.DataFrame([_row("a", 0.5)]))
    with pytest.raises(MissingDataError):
        aggregate(pd.DataFrame())


def test_cells_are_separated():
    rows = [_row(m, v, requests=r, seed=s)
            for m, v in (("a", 0.8), ("b", 0.5))
            for r in (100, 200)
            for s in range(3)]
    summary = AnalyticsEngine(rows).summary()
    assert len(summary) == 4
    assert set(summary["n"]) == {3}


def test_deltas_between_methods():
    rows = ([_row("a", v, seed=s) for s, v in enumerate((0.8, 0.9))] +
            [_row("b", v, seed=s) for s, v in enumerate((0.5, 0.6))])
    engine = AnalyticsEngine(rows)
    deltas = engine.deltas([("a", "b")])
    assert len(deltas) == 1
    d = deltas.iloc[0]
    assert math.isclose(d["meet_rate_delta"], 0.3)
    hw = half_width([0.8, 0.9])
    assert math.isclose(d["meet_rate_hw"], math.sqrt(2) * hw)

    everything = method_deltas(engine.summary())
    assert set(zip(everything["method_a"], everything["method_b"])) == {("a", "b"), ("b", "a")}


def test_cell_value_lookup():
    engine = AnalyticsEngine([_row("a", 0.4, seed=0), _row("a", 0.6, seed=1)])
    assert math.isclose(engine.cell_value("a", requests=100, degree=4), 0.5)
    with pytest.raises(MissingDataError):
        engine.cell_value("a", requests=999)


def test_formatting_helpers():
    assert format_table(pd.DataFrame()) == "(vuoto)"
    text = format_table(aggregate(pd.DataFrame([_row("a", 0.4), _row("a", 0.6, seed=1)])))
    assert "meet_rate_mean" in text and "0.5000" in text
    quick = summary_by_method([_row("a", 0.4), _row("b", 0.6)])
    assert list(quick["method"]) == ["a", "b"]
    assert list(quick["runs"]) == [1, 1]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
