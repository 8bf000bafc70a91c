"""
Motore di simulazione a eventi discreti per FogPartSim
Arrivo delle richieste, decisione al gateway (partizionamento + allocazione),
trasferimenti, esecuzione sui nodi dei fog in ordine di arrivo delle richieste
e raccolta delle metriche
"""

import heapq
import logging
import math
import zlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from allocation_manager import (AllocationContext, AllocationMethod, QueueEstimate, allocate)
from federation_manager import (DEFAULT_NODE_COUNT, EtcMatrix, EttMatrix, FederationTopology,
                                LinkProfile, build_etc, build_ett, build_grid, hop_distance,
                                mean_exec_table)
from latency_dist import DEFAULT_BIN_WIDTH_MS, DEFAULT_CI_LEVEL, LatencyPmf, sample
from partition_engine import (PartitionConfig, PartitionMethod, SuccessEstimator, make_plan)
from sim_errors import InvalidParameterError, SimulationInvariantError
from workflow_model import (REFERENCE_COLUMN, REFERENCE_MIPS, DeadlinePolicy, Request,
                            WorkflowSpec, assign_deadlines, builtin_catalog,
                            catalog_from_documents, input_sizes, to_monolithic,
                            topological_order, workload_types)

logger = logging.getLogger(__name__)


# ===== CARICO =====

@dataclass(frozen=True)
class WorkloadSpec:
    total_requests: int
    mix: float = 0.0                 # frazione di richieste monolitiche
    window_ms: float = 100_000.0

    def __post_init__(self):
        if self.total_requests < 1:
            raise InvalidParameterError(f"total_requests < 1: {self.total_requests}")
        if not 0.0 <= self.mix <= 1.0:
            raise InvalidParameterError(f"mix fuori da [0,1]: {self.mix}")
        if not self.window_ms > 0:
            raise InvalidParameterError(f"finestra non positiva: {self.window_ms}")


def monolithic_flags(total: int, mix: float) -> List[bool]:
    """Interleaving deterministico: l'elemento i e' monolitico quando floor((i+1)*mix) cresce"""
    return [math.floor((i + 1) * mix + 1e-9) - math.floor(i * mix + 1e-9) == 1
            for i in range(total)]


def _reference_exec(catalog: Mapping[str, WorkflowSpec]) -> Dict[str, float]:
    # tempo medio sul fog di riferimento, quando la ETC non e' disponibile
    return {t: spec.work.mean * 1000.0 / REFERENCE_MIPS
            for t, spec in workload_types(catalog).items()}


def generate_workload(spec: WorkloadSpec, seed, catalog: Optional[Mapping[str, WorkflowSpec]] = None,
                      mean_exec: Optional[Mapping[str, float]] = None,
                      policy: Optional[DeadlinePolicy] = None, origin_fog: int = 0) -> List[Request]:
    """
    Richieste con arrivi di Poisson nella finestra (condizionati al numero totale).

    Le applicazioni ruotano in round-robin dentro ogni classe; il contatore dei
    monolitici riparte da dove si e' fermato quello dei workflow, cosi' ogni
    applicazione riceve lo stesso numero di richieste a meno di una.
    """
    catalog = dict(catalog) if catalog is not None else builtin_catalog()
    mean_exec = mean_exec if mean_exec is not None else _reference_exec(catalog)
    policy = policy or DeadlinePolicy()
    apps = list(catalog)

    rng = np.random.default_rng(seed)
    arrivals = np.sort(rng.uniform(0.0, spec.window_ms, size=spec.total_requests))
    flags = monolithic_flags(spec.total_requests, spec.mix)
    n_workflow = flags.count(False)

    requests = []
    wf_count, mono_count = 0, 0
    for i, (arrival, mono) in enumerate(zip(arrivals, flags)):
        if mono:
            app = apps[(n_workflow + mono_count) % len(apps)]
            mono_count += 1
            workflow = to_monolithic(catalog[app])
        else:
            app = apps[wf_count % len(apps)]
            wf_count += 1
            workflow = catalog[app]
        requests.append(assign_deadlines(workflow, float(arrival), policy, mean_exec,
                                         request_id=i, origin_fog=origin_fog, monolithic=mono))
    return requests


# ===== ESITI =====

@dataclass(frozen=True)
class RequestOutcome:
    request_id: int
    app: str
    monolithic: bool
    arrival_ms: float
    completion_ms: float
    deadline_ms: float
    partitions: int = 1
    remote_partitions: int = 0

    @property
    def makespan_ms(self) -> float:
        return self.completion_ms - self.arrival_ms

    @property
    def met(self) -> bool:
        return self.completion_ms <= self.deadline_ms + 1e-9


@dataclass
class SimReport:
    scenario: str
    method: str
    requests: int
    mix: float
    degree: int
    seed: int
    outcomes: List[RequestOutcome] = field(default_factory=list)
    trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def requests_met(self) -> int:
        return sum(1 for o in self.outcomes if o.met)

    @property
    def requests_missed(self) -> int:
        return len(self.outcomes) - self.requests_met

    @property
    def meet_rate(self) -> float:
        return self.requests_met / len(self.outcomes) if self.outcomes else 0.0

    @property
    def avg_makespan_ms(self) -> float:
        if not self.outcomes:
            return 0.0
        return math.fsum(o.makespan_ms for o in self.outcomes) / len(self.outcomes)

    def to_row(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "method": self.method,
            "requests": self.requests,
            "mix": self.mix,
            "degree": self.degree,
            "seed": self.seed,
            "meet_rate": self.meet_rate,
            "avg_makespan_ms": self.avg_makespan_ms,
        }


# ===== MOTORE =====

class EventKind(IntEnum):
    ARRIVAL = 0
    TRANSFER_DONE = 1
    EXEC_DONE = 2


@dataclass(order=True)
class SimEvent:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)


@dataclass
class _RequestRun:
    request: Request
    fog_of: Dict[str, int]
    rank: Dict[str, int]  # posizione nell'ordine topologico
    pending_inputs: Dict[str, int]
    exits_left: int
    partitions: int
    remote_partitions: int
    done: set = field(default_factory=set)


@dataclass
class FogRuntime:
    fog_id: int
    node_count: int
    # heap di (arrivo della richiesta, id richiesta, posizione topologica, vertice)
    ready_queue: List[Tuple[float, int, int, str]] = field(default_factory=list)
    busy: List[Optional[Tuple[int, str, float, float]]] = field(default_factory=list)
    pending_mean_ms: float = 0.0  # media delle istanze in viaggio o in coda, non ancora avviate

    def __post_init__(self):
        if not self.busy:
            self.busy = [None] * self.node_count

    def first_idle(self) -> Optional[int]:
        for i, slot in enumerate(self.busy):
            if slot is None:
                return i
        return None


class FogSimulator:
    """
    Un'istanza per run, elaborazione degli eventi strettamente sequenziale.

    Gli eventi sono ordinati per (tempo, seq); a parita' di tempo vale l'ordine
    di inserimento. Le istanze pronte di un fog escono per arrivo della
    richiesta, poi per id, poi per posizione topologica: il vertice successivo
    di una richiesta gia' iniziata passa davanti alle richieste arrivate dopo.
    Il primo nodo libero (indice piu' basso) prende il lavoro.
    """

    def __init__(self, topology: FederationTopology, etc: EtcMatrix, ett: EttMatrix,
                 partition_config: PartitionConfig, allocation_method: AllocationMethod,
                 rng: np.random.Generator, ci_level: float = DEFAULT_CI_LEVEL,
                 mismatch_factor: float = 1.0, trace: bool = False):
        if not mismatch_factor > 0:
            raise InvalidParameterError(f"mismatch_factor non positivo: {mismatch_factor}")
        self.topology = topology
        self.etc = etc
        self.ett = ett
        self.partition_config = partition_config
        self.allocation_method = allocation_method
        self.rng = rng
        self.ci_level = ci_level
        self.mismatch_factor = mismatch_factor
        self.trace_enabled = trace
        self.trace: List[Dict[str, Any]] = []

        self._ctx = AllocationContext(topology, etc, ett, ci_level)
        self._fogs = {f.id: FogRuntime(f.id, f.node_count) for f in topology.fogs}
        self._events: List[SimEvent] = []
        self._seq = 0
        self._now = 0.0
        self._runs: Dict[int, _RequestRun] = {}
        self._outcomes: Dict[int, RequestOutcome] = {}

    # ---- coda degli eventi ----

    def _push(self, time: float, kind: EventKind, payload=None):
        if time < self._now - 1e-9:
            raise SimulationInvariantError(f"evento nel passato: {time} < {self._now}")
        heapq.heappush(self._events, SimEvent(time, self._seq, kind, payload))
        self._seq += 1

    @property
    def now(self) -> float:
        return self._now

    def schedule(self, requests: Sequence[Request]):
        """Mette in coda gli arrivi, in ordine di tempo e poi di id"""
        for r in sorted(requests, key=lambda r: (r.arrival_time, r.id)):
            self._push(r.arrival_time, EventKind.ARRIVAL, r)

    def step(self) -> bool:
        """Elabora il prossimo evento; False quando la coda e' vuota"""
        if not self._events:
            return False
        event = heapq.heappop(self._events)
        if event.time < self._now - 1e-9:
            raise SimulationInvariantError("tempo degli eventi non monotono")
        self._now = event.time
        if event.kind == EventKind.ARRIVAL:
            self._on_arrival(event.payload)
        elif event.kind == EventKind.TRANSFER_DONE:
            self._deliver(*event.payload)
        else:
            self._on_exec_done(*event.payload)
        return True

    def run_requests(self, requests: Sequence[Request]) -> List[RequestOutcome]:
        self.schedule(requests)
        while self.step():
            pass

        if len(self._outcomes) != len(requests):
            raise SimulationInvariantError(
                f"richieste non concluse: {len(requests) - len(self._outcomes)}")
        return [self._outcomes[r.id] for r in sorted(requests, key=lambda r: r.id)]

    # ---- gateway ----

    def queue_snapshot(self) -> QueueEstimate:
        backlog = {}
        for fog_id, fog in self._fogs.items():
            running = 0.0
            for slot in fog.busy:
                if slot is not None:
                    _, _, start, mean = slot
                    running += max(0.0, mean - (self._now - start))
            backlog[fog_id] = fog.pending_mean_ms + running
        return QueueEstimate.from_backlog(backlog, self.topology)

    def _on_arrival(self, request: Request):
        queues = self.queue_snapshot()
        estimator = SuccessEstimator.for_gateway(self.etc, self.topology, request.origin_fog,
                                                 queues.waits)
        plan = make_plan(self.partition_config.method, request, self.partition_config, estimator)
        decisions = allocate(self.allocation_method, plan, request, self._ctx, queues)

        if self.trace_enabled:
            self.trace.append({"kind": "partition", "request": request.id, **plan.to_record()})
            for d in decisions:
                self.trace.append({"kind": "allocation", "request": request.id, **d.to_record()})

        w = request.workflow
        fog_of = {}
        for part, decision in zip(plan.partitions, decisions):
            if part.must_run_local and decision.fog != request.origin_fog:
                raise SimulationInvariantError(f"partizione vincolata inviata al fog {decision.fog}")
            for v in part.workflow.vertex_ids:
                fog_of[v] = decision.fog
        if set(fog_of) != set(w.vertex_ids):
            raise SimulationInvariantError(f"piano incompleto per la richiesta {request.id}")

        run = _RequestRun(
            request=request,
            fog_of=fog_of,
            rank={v: i for i, v in enumerate(topological_order(w))},
            pending_inputs={v: max(1, len(w.predecessors(v))) for v in w.vertex_ids},
            exits_left=len(w.exits()),
            partitions=len(plan.partitions),
            remote_partitions=sum(1 for d in decisions if d.remote),
        )
        self._runs[request.id] = run

        for v in w.entries():
            fog_id = fog_of[v]
            hops = hop_distance(self.topology, request.origin_fog, fog_id)
            self._fogs[fog_id].pending_mean_ms += self.etc.mean(v, fog_id)
            self._transfer(run, v, self.ett.get(v, fog_id, hops) if hops else None)

    # ---- trasferimenti ed esecuzione ----

    def _transfer(self, run: _RequestRun, vertex: str, latency: Optional[LatencyPmf]):
        """Senza PMF (stesso fog) la consegna e' immediata"""
        if latency is None:
            self._deliver(run.request.id, vertex)
            return
        delay = sample(latency, self.rng)
        self._push(self._now + delay, EventKind.TRANSFER_DONE, (run.request.id, vertex))

    def _deliver(self, request_id: int, vertex: str):
        run = self._runs[request_id]
        run.pending_inputs[vertex] -= 1
        if run.pending_inputs[vertex] < 0:
            raise SimulationInvariantError(f"input in eccesso per {vertex}")
        if run.pending_inputs[vertex] == 0:
            w = run.request.workflow
            if any(p not in run.done for p in w.predecessors(vertex)):
                raise SimulationInvariantError(f"{vertex} pronto prima dei predecessori")
            fog = self._fogs[run.fog_of[vertex]]
            key = (run.request.arrival_time, request_id, run.rank[vertex], vertex)
            heapq.heappush(fog.ready_queue, key)
            self._dispatch(fog)

    def _dispatch(self, fog: FogRuntime):
        while fog.ready_queue:
            node = fog.first_idle()
            if node is None:
                return
            _, request_id, _, vertex = heapq.heappop(fog.ready_queue)
            mean = self.etc.mean(vertex, fog.fog_id)
            fog.pending_mean_ms = max(0.0, fog.pending_mean_ms - mean)
            duration = sample(self.etc.get(vertex, fog.fog_id), self.rng) * self.mismatch_factor
            fog.busy[node] = (request_id, vertex, self._now, mean)
            self._push(self._now + duration, EventKind.EXEC_DONE, (fog.fog_id, node))

    def _on_exec_done(self, fog_id: int, node: int):
        fog = self._fogs[fog_id]
        slot = fog.busy[node]
        if slot is None:
            raise SimulationInvariantError(f"nodo {node} del fog {fog_id} gia' libero")
        request_id, vertex, _, _ = slot
        fog.busy[node] = None

        run = self._runs[request_id]
        run.done.add(vertex)
        w = run.request.workflow
        for succ in w.successors(vertex):
            target = run.fog_of[succ]
            if all(p in run.done for p in w.predecessors(succ)):
                # da qui l'istanza pesa sull'attesa stimata del fog di destinazione
                self._fogs[target].pending_mean_ms += self.etc.mean(succ, target)
            hops = hop_distance(self.topology, fog_id, target)
            data_mb = w.edge_data_mb(vertex, succ)
            self._transfer(run, succ, self.ett.transfer(data_mb, hops) if hops else None)

        if not w.successors(vertex):
            run.exits_left -= 1
            if run.exits_left == 0:
                self._complete(run)
        self._dispatch(fog)

    def _complete(self, run: _RequestRun):
        r = run.request
        if r.id in self._outcomes:
            raise SimulationInvariantError(f"richiesta {r.id} conclusa due volte")
        self._outcomes[r.id] = RequestOutcome(
            request_id=r.id,
            app=r.workflow.name,
            monolithic=r.monolithic,
            arrival_ms=r.arrival_time,
            completion_ms=self._now,
            deadline_ms=r.workflow_deadline,
            partitions=run.partitions,
            remote_partitions=run.remote_partitions,
        )
        del self._runs[r.id]


# ===== RUN COMPLETO =====

@dataclass(frozen=True)
class RunSpec:
    """Parametri completamente risolti di un singolo run"""
    scenario: str
    partition_method: PartitionMethod
    allocation_method: AllocationMethod
    workload: WorkloadSpec
    grid: Tuple[int, int] = (3, 3)
    origin_fog: int = 4
    master_seed: int = 0
    cell: int = 0
    repetition: int = 0
    node_count: int = DEFAULT_NODE_COUNT
    alpha: float = 0.5
    ci_level: float = DEFAULT_CI_LEVEL
    link: LinkProfile = LinkProfile()
    bin_width_ms: float = DEFAULT_BIN_WIDTH_MS
    reference_mips: float = REFERENCE_MIPS
    reference_column: str = REFERENCE_COLUMN
    deadline: DeadlinePolicy = DeadlinePolicy()
    pin_entry: bool = True
    mismatch_factor: float = 1.0
    workflows: Tuple[Mapping[str, Any], ...] = ()
    trace: bool = False

    @property
    def method_label(self) -> str:
        return f"{self.partition_method.value}/{self.allocation_method.value}"

    @property
    def seed_label(self) -> int:
        return self.master_seed * 10 ** 8 + self.cell * 10 ** 4 + self.repetition

    def seed_sequence(self) -> np.random.SeedSequence:
        # uguale per tutti i metodi della stessa cella (numeri casuali comuni)
        name_key = zlib.crc32(self.scenario.encode("utf-8"))
        return np.random.SeedSequence([self.master_seed, name_key, self.cell, self.repetition])


def build_catalog(spec: RunSpec) -> Dict[str, WorkflowSpec]:
    custom = catalog_from_documents(list(spec.workflows))
    if custom is not None:
        return custom
    return builtin_catalog(spec.reference_mips, spec.reference_column, spec.pin_entry)


def run(spec: RunSpec) -> SimReport:
    """Esegue un run fino alla quiescenza; stesso RunSpec, stesso report"""
    topology_seed, workload_seed, sampling_seed = spec.seed_sequence().spawn(3)
    topology = build_grid(spec.grid[0], spec.grid[1], topology_seed, spec.node_count)
    topology.fog(spec.origin_fog)

    catalog = build_catalog(spec)
    types = workload_types(catalog)
    etc = build_etc(topology, {t: s.work for t, s in types.items()}, spec.bin_width_ms)
    ett = build_ett(topology, spec.link, input_sizes(catalog), spec.bin_width_ms)
    mean_exec = mean_exec_table(etc, types)

    requests = generate_workload(spec.workload, workload_seed, catalog, mean_exec,
                                 spec.deadline, spec.origin_fog)
    simulator = FogSimulator(
        topology, etc, ett,
        PartitionConfig(spec.alpha, spec.partition_method),
        spec.allocation_method,
        np.random.default_rng(sampling_seed),
        ci_level=spec.ci_level,
        mismatch_factor=spec.mismatch_factor,
        trace=spec.trace,
    )
    outcomes = simulator.run_requests(requests)
    report = SimReport(
        scenario=spec.scenario,
        method=spec.method_label,
        requests=spec.workload.total_requests,
        mix=spec.workload.mix,
        degree=topology.degree(spec.origin_fog),
        seed=spec.seed_label,
        outcomes=outcomes,
        trace=simulator.trace,
    )
    if report.requests_met + report.requests_missed != spec.workload.total_requests:
        raise SimulationInvariantError("conservazione delle richieste violata")
    logger.debug("run %s %s seed %d: meet %.3f", spec.scenario, spec.method_label,
                 report.seed, report.meet_rate)
    return report
