"""
Test delle verifiche di accettazione: oracoli rapidi e codice di uscita di scripts/run_acceptance.py
"""

import importlib.util
from pathlib import Path

import pytest

_SCRIPT = Path(__file__).parent / "scripts" / "run_acceptance.py"
_spec = importlib.util.spec_from_file_location("run_acceptance", _SCRIPT)
run_acceptance = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(run_acceptance)


def test_engine_oracle_passes():
    runner = run_acceptance.AcceptanceRunner(repetitions=1, parallel=1)
    runner.engine_oracle()
    assert runner.failures == []


def test_mincut_oracle_passes():
    runner = run_acceptance.AcceptanceRunner(repetitions=1, parallel=1)
    runner.mincut_oracle(dags=20)
    assert runner.failures == []


def test_quick_run_without_suites_exits_zero():
    assert run_acceptance.main(["--quick", "--skip-suites", "--parallel", "1"]) == 0


def test_failed_check_gives_exit_one(monkeypatch):
    runner_cls = run_acceptance.AcceptanceRunner
    for name in ("distribution_oracle", "mincut_oracle", "determinism"):
        monkeypatch.setattr(runner_cls, name, lambda self, *args, **kwargs: None)
    monkeypatch.setattr(runner_cls, "engine_oracle",
                        lambda self: self.check("oracolo rotto", ["fine 301.0 invece di 300.0"]))
    assert run_acceptance.main(["--quick", "--skip-suites"]) == 1


def test_check_collects_failures():
    runner = run_acceptance.AcceptanceRunner()
    runner.check("ok", [])
    runner.check("ko", ["uno", "due"])
    assert runner.failures == ["ko"]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
