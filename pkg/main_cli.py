"""
FogPartSim - interfaccia a riga di comando
Comandi: simulate (sweep di uno scenario su CSV), report (medie e IC al 95%), suites (elenco preset)
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

import dataM
from analytics_engine import AnalyticsEngine, format_table, summary_by_method
from scenario_manager import describe_suites, load_scenario
from sim_errors import FogSimError
from sim_utils import PARALLEL_ENV_VAR, default_parallelism, format_elapsed, run_sweep, setup_logging

logger = logging.getLogger("fogsim")

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_IO_ERROR = 2


def trace_path(out_path: Path) -> Path:
    return out_path.with_suffix(".trace.jsonl")


def cmd_simulate(config: str, out: str, parallel: Optional[int] = None, trace: bool = False) -> int:
    scenario = load_scenario(config)
    runs = scenario.expand(trace=trace)
    parallel = parallel or default_parallelism()
    logger.info("🚀 Scenario %s: %d run (%d celle x %d metodi x %d ripetizioni), %d processi",
                scenario.name, len(runs), len(scenario.cells()), len(scenario.methods),
                scenario.repetitions, parallel)

    step = max(1, len(runs) // 10)

    def progress(done: int, total: int):
        if done % step == 0 or done == total:
            logger.info("   %d/%d run completati", done, total)

    started = time.monotonic()
    reports = run_sweep(runs, parallel, progress)
    rows = [r.to_row() for r in reports]
    out_path = Path(out)
    dataM.save_runs_csv(rows, out_path)
    logger.info("✓ %d righe scritte in %s (%s)", len(rows), out_path,
                format_elapsed(time.monotonic() - started))
    for m in summary_by_method(rows).itertuples(index=False):
        logger.info("📊 %s: meet rate %.3f, makespan %.1f ms (%d run)",
                    m.method, m.meet_rate, m.avg_makespan_ms, m.runs)

    if trace:
        records = []
        for index, report in enumerate(reports):
            for record in report.trace:
                records.append({"run": index, "run_method": report.method, "seed": report.seed,
                                "requests": report.requests, "degree": report.degree, **record})
        count = dataM.write_trace_lines(records, trace_path(out_path))
        logger.info("✓ Traccia: %d record in %s", count, trace_path(out_path))
    return EXIT_OK


def _reference_method(methods: List[str]) -> str:
    if "propart/mr" in methods:
        return "propart/mr"
    mr = [m for m in methods if m.endswith("/mr")]
    return mr[0] if mr else sorted(methods)[0]


def cmd_report(csv_in: str, out_prefix: Optional[str] = None) -> int:
    df = dataM.load_runs_csv(csv_in)
    engine = AnalyticsEngine(df)
    summary = engine.summary()
    deltas = engine.deltas()

    print("📊 Medie per cella (semi-ampiezza IC 95%)")
    print(format_table(summary))

    reference = _reference_method(sorted(df["method"].unique()))
    shown = deltas[deltas["method_a"] == reference]
    print()
    print(f"📈 Differenze rispetto a {reference}")
    print(format_table(shown))

    prefix = Path(out_prefix) if out_prefix else Path(csv_in).with_suffix("")
    summary_path = prefix.parent / f"{prefix.name}_summary.csv"
    deltas_path = prefix.parent / f"{prefix.name}_deltas.csv"
    summary.to_csv(summary_path, index=False, lineterminator="\n")
    deltas.to_csv(deltas_path, index=False, lineterminator="\n")
    logger.info("✓ Riepilogo in %s, differenze in %s", summary_path, deltas_path)
    return EXIT_OK


def cmd_list_suites() -> int:
    print(describe_suites())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogsim", description="Simulatore di federazioni fog")
    parser.add_argument("-v", "--verbose", action="store_true", help="log di debug")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="esegue la sweep di uno scenario")
    simulate.add_argument("--config", required=True, help="file JSON dello scenario")
    simulate.add_argument("--out", required=True, help="CSV di uscita")
    simulate.add_argument("--parallel", type=int, default=None,
                          help=f"processi concorrenti (default: ${PARALLEL_ENV_VAR} o numero di core)")
    simulate.add_argument("--trace", action="store_true",
                          help="scrive le decisioni in <out>.trace.jsonl")

    report = sub.add_parser("report", help="aggrega un CSV di run")
    report.add_argument("--in", dest="csv_in", required=True, help="CSV prodotto da simulate")
    report.add_argument("--out", dest="out_prefix", default=None,
                        help="prefisso dei CSV di riepilogo")

    sub.add_parser("suites", help="elenca le suite predefinite")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.command == "simulate":
            if args.parallel is not None and args.parallel < 1:
                logger.error("✗ --parallel deve essere >= 1")
                return EXIT_DATA_ERROR
            return cmd_simulate(args.config, args.out, args.parallel, args.trace)
        if args.command == "report":
            return cmd_report(args.csv_in, args.out_prefix)
        return cmd_list_suites()
    except FogSimError as e:
        logger.error("✗ Errore: %s", e)
        return EXIT_DATA_ERROR
    except OSError as e:
        logger.error("✗ Errore di I/O: %s", e)
        return EXIT_IO_ERROR
    except KeyboardInterrupt:
        logger.warning("⚠ Interrotto dall'utente")
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
