#!/usr/bin/env python3
"""
Verifiche di accettazione FogPartSim
Oracoli lenti (Monte-Carlo, min-cut esaustivo), determinismo, micro-oracolo del motore,
controlli direzionali sulle suite e ricontrollo offline delle tracce
"""

import argparse
import itertools
import logging
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

ROOT_DIR = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT_DIR))

import dataM  # noqa: E402
from allocation_manager import AllocationMethod, decision_record_violations  # noqa: E402
from analytics_engine import AnalyticsEngine  # noqa: E402
from federation_manager import EtcMatrix, EttMatrix, build_grid  # noqa: E402
from latency_dist import LatencyPmf, NormalSpec, convolve, pmf_from_normal, prob_on_time  # noqa: E402
from main_cli import cmd_simulate  # noqa: E402
from partition_engine import (PartitionConfig, PartitionMethod, min_cut,  # noqa: E402
                              split_record_violations)
from scenario_manager import scenario_for_suite  # noqa: E402
from sim_engine import FogSimulator  # noqa: E402
from sim_utils import format_elapsed, run_sweep, setup_logging  # noqa: E402
from workflow_model import Edge, MicroServiceSpec, Request, WorkflowSpec  # noqa: E402


logger = logging.getLogger("fogsim.acceptance")

PP = 0.01  # un punto percentuale


class AcceptanceRunner:
    def __init__(self, repetitions: int = 30, parallel=None):
        self.repetitions = repetitions
        self.parallel = parallel
        self.failures = []

    def log(self, message):
        logger.info(message)

    def check(self, name, problems):
        if problems:
            self.log(f"✗ {name}: {len(problems)} problemi")
            for p in problems[:10]:
                self.log(f"    - {p}")
            self.failures.append(name)
        else:
            self.log(f"✓ {name}")

    # ===== ORACOLI =====

    def distribution_oracle(self, pairs=50, samples=1_000_000):
        """Convoluzione contro l'istogramma Monte-Carlo della somma"""
        self.log(f"Oracolo Monte-Carlo su {pairs} coppie di normali...")
        rng = np.random.default_rng(50)
        problems = []
        for k in range(pairs):
            mu = rng.uniform(50.0, 500.0, size=2)
            sigma = rng.uniform(2.0, 50.0, size=2)
            c = convolve(pmf_from_normal(NormalSpec(mu[0], sigma[0])),
                         pmf_from_normal(NormalSpec(mu[1], sigma[1])))
            total = np.rint(rng.normal(mu[0], sigma[0], samples) + rng.normal(mu[1], sigma[1], samples))
            lo = int(min(total.min(), c.origin))
            hi = int(max(total.max(), c.support_max))
            hist = np.bincount((total - lo).astype(int), minlength=hi - lo + 1) / samples
            ours = np.zeros(hi - lo + 1)
            start = int(round(c.origin)) - lo
            ours[start:start + c.size] = c.mass
            l1 = float(np.abs(hist - ours).sum())
            if l1 > 0.02:
                problems.append(f"coppia {k}: L1 = {l1:.4f}")
            deadline = float(np.quantile(total, rng.uniform(0.1, 0.9)))
            gap = abs(prob_on_time(c, deadline) - float(np.mean(total <= deadline)))
            if gap > 0.01:
                problems.append(f"coppia {k}: coda fuori di {gap:.4f}")
        self.check("distribuzioni (convolve / prob_on_time)", problems)

    def mincut_oracle(self, dags=200):
        """min_cut contro l'enumerazione di tutte le bisezioni chiuse"""
        self.log(f"Oracolo min-cut su {dags} DAG casuali...")
        rng = np.random.default_rng(200)
        problems = []
        for k in range(dags):
            n = int(rng.integers(2, 11))
            names = [f"v{i}" for i in range(n)]
            pairs = {(int(rng.integers(0, i)), i) for i in range(1, n)}
            pairs |= {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.25}
            vertices = tuple(MicroServiceSpec(v, "Test", v, NormalSpec(1.0, 0.0), 1.0) for v in names)
            w = WorkflowSpec("dag", vertices,
                             tuple(Edge(names[i], names[j], 1.0) for i, j in sorted(pairs)))
            weights = {(e.src, e.dst): float(rng.uniform(0.1, 10.0)) for e in w.edges}

            entries, exits = set(w.entries()), set(w.exits())
            best = math.inf
            for r in range(1, n):
                for side in itertools.combinations(names, r):
                    s = set(side)
                    if not entries <= s or s & exits:
                        continue
                    if any(e.dst in s and e.src not in s for e in w.edges):
                        continue
                    best = min(best, math.fsum(weights[(e.src, e.dst)] for e in w.edges
                                               if e.src in s and e.dst not in s))
            cut = min_cut(w, weights)
            if not math.isclose(cut.cut_weight, best, rel_tol=1e-9, abs_tol=1e-9):
                problems.append(f"DAG {k}: {cut.cut_weight} invece di {best}")
        self.check("min-cut esatto", problems)

    def engine_oracle(self):
        """Un fog, un nodo, 100 ms per microservizio, arrivi ogni 40 ms: singolo e catena a->b->c"""
        self.log("Micro-oracolo del motore...")
        topo = build_grid(1, 1, seed=0, node_count=1)
        problems = []
        for names in ("x", "abc"):
            etc = EtcMatrix({(v, 0): LatencyPmf.point(100.0) for v in names})
            services = [MicroServiceSpec(v, "Test", v, NormalSpec(1.0, 0.0), 1.0) for v in names]
            w = WorkflowSpec.chain(names, services)
            requests = [Request(k, 40.0 * k, w, False, 0, {v: 1e6 for v in names}, 3e6)
                        for k in range(10)]
            sim = FogSimulator(topo, etc, EttMatrix({}),
                               PartitionConfig(method=PartitionMethod.NO_PARTITION),
                               AllocationMethod.NO_FEDERATION, np.random.default_rng(0))
            service_ms = 100.0 * len(names)
            problems += [f"{names}, richiesta {o.request_id}: fine {o.completion_ms} "
                         f"invece di {service_ms * (k + 1)}"
                         for k, o in enumerate(sim.run_requests(requests))
                         if o.completion_ms != service_ms * (k + 1)]
        self.check("micro-oracolo in ordine di arrivo", problems)

    def determinism(self):
        self.log("Determinismo di simulate...")
        config = ROOT_DIR / "data" / "scenarios" / "minimal.json"
        with tempfile.TemporaryDirectory() as tmp:
            a, b = Path(tmp) / "a.csv", Path(tmp) / "b.csv"
            cmd_simulate(str(config), str(a), parallel=1)
            cmd_simulate(str(config), str(b), parallel=self.parallel)
            same = a.read_bytes() == b.read_bytes()
        self.check("CSV identici byte per byte", [] if same else ["i due CSV differiscono"])

    # ===== TRACCE =====

    def check_trace_records(self, records, name):
        problems = []
        for record in records:
            if record.get("kind") == "partition":
                problems += [f"run {record.get('run')} richiesta {record['request']}: {p}"
                             for p in split_record_violations(record)]
            elif record.get("kind") == "allocation" and \
                    str(record.get("run_method", "")).endswith("/mr"):
                problems += [f"run {record.get('run')} richiesta {record['request']}: {p}"
                             for p in decision_record_violations(record)]
        self.check(name, problems)

    def trace_file(self, path):
        self.log(f"Ricontrollo della traccia {path}...")
        self.check_trace_records(dataM.read_trace_lines(path), f"traccia {Path(path).name}")

    # ===== SUITE =====

    def _suite(self, name):
        scenario = scenario_for_suite(name, repetitions=self.repetitions)
        self.log(f"Suite {name}: {scenario.run_count} run...")
        started = time.monotonic()
        reports = run_sweep(scenario.expand(trace=True), self.parallel)
        self.log(f"   completata in {format_elapsed(time.monotonic() - started)}")
        records = []
        for index, report in enumerate(reports):
            records += [{"run": index, "run_method": report.method, **r} for r in report.trace]
        self.check_trace_records(records, f"contratti ProPart/MR in {name}")
        return AnalyticsEngine(r.to_row() for r in reports).summary()

    @staticmethod
    def _value(summary, method, metric="meet_rate", **cell):
        mask = summary["method"] == method
        for key, value in cell.items():
            mask &= summary[key] == value
        return float(summary.loc[mask, f"{metric}_mean"].iloc[0])

    def _trend(self, summary, metric, tolerance, relative=False):
        problems = []
        for method, group in summary.groupby("method"):
            values = list(group.sort_values("requests")[f"{metric}_mean"])
            for a, b in zip(values, values[1:]):
                slack = tolerance * abs(a) if relative else tolerance
                bad = b > a + slack if metric == "meet_rate" else b < a - slack
                if bad:
                    problems.append(f"{method}: {metric} {a:.4f} -> {b:.4f}")
        return problems

    def suite_partitioning(self):
        s = self._suite("fig5_partitioning")
        problems = []
        for load in sorted(s["requests"].unique()):
            gain = self._value(s, "propart/mr", requests=load) - self._value(s, "none/mr", requests=load)
            if gain < 5 * PP:
                problems.append(f"carico {load}: ProPart - NoPartition = {gain:.3f}")
        problems += self._trend(s, "meet_rate", 2 * PP)
        self.check("partizionamento: ProPart migliora e il meet rate scende col carico", problems)

    def suite_monolithic(self):
        s = self._suite("fig7_alloc_monolithic")
        problems = []
        top = int(s["requests"].max())
        mr = self._value(s, "none/mr", requests=top)
        for other in ("none/mect", "none/mcc"):
            if mr - self._value(s, other, requests=top) < 5 * PP:
                problems.append(f"{top} richieste: MR non supera {other} di 5 pp")
        for load in sorted(x for x in s["requests"].unique() if x >= 800):
            nofed = self._value(s, "none/nofed", requests=load)
            rest = [self._value(s, m, requests=load) for m in ("none/mr", "none/mect", "none/mcc")]
            if not nofed < min(rest):
                problems.append(f"carico {load}: No-Federation non e' il peggiore")
        self.check("allocazione monolitica: MR avanti, No-Federation ultimo", problems)

    def suite_scaling(self):
        wf = self._suite("fig11_scaling_workflows")
        problems = []
        gain = self._value(wf, "propart/mr", degree=4) - self._value(wf, "propart/mr", degree=1)
        if gain < 10 * PP:
            problems.append(f"grado 4 - grado 1 = {gain:.3f}")
        mono = self._suite("fig12_scaling_monolithic")
        for degree in (2, 3, 4):
            mr = self._value(mono, "none/mr", degree=degree)
            for other in ("none/mect", "none/mcc"):
                if mr - self._value(mono, other, degree=degree) < 5 * PP:
                    problems.append(f"grado {degree}: MR non supera {other} di 5 pp")
        self.check("scalabilita' con il grado del fog di origine", problems)

    def suite_makespan(self):
        wf = self._suite("fig9_makespan_workflows")
        mono = self._suite("fig10_makespan_monolithic")
        problems = self._trend(wf, "avg_makespan_ms", 0.05, relative=True)
        problems += self._trend(mono, "avg_makespan_ms", 0.05, relative=True)
        top = int(mono["requests"].max())
        mcc = self._value(mono, "none/mcc", "avg_makespan_ms", requests=top)
        mr = self._value(mono, "none/mr", "avg_makespan_ms", requests=top)
        if not mcc > mr:
            problems.append(f"{top} richieste: makespan MCC {mcc:.1f} <= MR {mr:.1f}")
        self.check("makespan crescente col carico, MCC peggio di MR", problems)

    def run(self, suites=True, quick=False):
        self.log("=== AVVIO VERIFICHE DI ACCETTAZIONE ===")
        started = time.monotonic()
        self.distribution_oracle(pairs=5 if quick else 50)
        self.mincut_oracle(dags=20 if quick else 200)
        self.engine_oracle()
        self.determinism()
        if suites:
            self.suite_partitioning()
            self.suite_monolithic()
            self.suite_scaling()
            self.suite_makespan()
        self.log(f"=== TERMINATO in {format_elapsed(time.monotonic() - started)} ===")
        if self.failures:
            self.log(f"✗ {len(self.failures)} verifiche fallite: {', '.join(self.failures)}")
        else:
            self.log("✓ Tutte le verifiche superate")
        return 1 if self.failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(description="Verifiche di accettazione FogPartSim")
    parser.add_argument("--trace-file", help="ricontrolla solo una traccia JSON-lines esistente")
    parser.add_argument("--repetitions", type=int, default=30, help="ripetizioni per le suite")
    parser.add_argument("--parallel", type=int, default=None, help="processi concorrenti")
    parser.add_argument("--skip-suites", action="store_true", help="solo oracoli e determinismo")
    parser.add_argument("--quick", action="store_true", help="oracoli ridotti")
    args = parser.parse_args(argv)

    setup_logging()
    runner = AcceptanceRunner(args.repetitions, args.parallel)
    if args.trace_file:
        runner.trace_file(args.trace_file)
        return 1 if runner.failures else 0
    return runner.run(suites=not args.skip_suites, quick=args.quick)


if __name__ == "__main__":
    sys.exit(main())
