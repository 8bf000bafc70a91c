"""
Modello di dominio dei workflow per FogPartSim
Micro-servizi, DAG dei workflow, i quattro template Industry 4.0, varianti
monolitiche, richieste e assegnazione delle deadline
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from latency_dist import NormalSpec
from sim_errors import (ConfigError, InvalidParameterError, MissingProfileError,
                        NotADagError)

APPS = ("Fire", "HAR", "Oil", "AIE")
REFERENCE_MIPS = 2000.0
REFERENCE_COLUMN = "gpu"

# Tempi di esecuzione (ms) misurati sulle cinque classi di macchine AWS: (media, dev. std)
MACHINE_PROFILES_MS: Dict[str, Dict[str, Tuple[float, float]]] = {
    "Fire": {"mem_opt": (1461.8, 457.3), "ml_opt": (1281.7, 387.93), "gpu": (1349.5, 418.9),
             "general": (1534.8, 494.7), "compute_opt": (1421.4, 441.8)},
    "HAR": {"mem_opt": (1.27, 0.082), "ml_opt": (0.66, 0.006), "gpu": (0.51, 0.006),
            "general": (1.17, 0.042), "compute_opt": (0.66, 0.003)},
    "Oil": {"mem_opt": (269.9, 1.01), "ml_opt": (218.8, 0.66), "gpu": (65.98, 0.47),
            "general": (667.1, 2.26), "compute_opt": (242.9, 0.68)},
    "AIE": {"mem_opt": (7.02, 0.02), "ml_opt": (6.41, 0.03), "gpu": (7.55, 0.04),
            "general": (9.35, 0.06), "compute_opt": (7.95, 0.02)},
}

SERVICE_NAMES: Dict[str, Tuple[str, ...]] = {
    "Fire": ("capture", "pre-processing", "noise removal", "feature extraction",
             "fire detection", "location mapping", "alert generation"),
    "Oil": ("pre-processing", "dark spot detection", "feature extraction",
            "classification", "segmentation"),
    "HAR": ("pre-processing", "feature extraction", "classification", "activity recognition"),
    "AIE": ("pre-processing", "initial model development", "inversion",
            "acoustic impedance estimation"),
}

# Dati in uscita per vertice (MB): Fire parte dai segmenti video e si riduce fino agli alert
OUTPUT_DATA_MB: Dict[str, Tuple[float, ...]] = {
    "Fire": (10.0, 10.0, 8.0, 2.0, 1.0, 0.5, 0.1),
    "Oil": (1.0,) * 5,
    "HAR": (1.0,) * 4,
    "AIE": (1.0,) * 4,
}
INPUT_DATA_MB: Dict[str, float] = {"Fire": 10.0, "Oil": 1.0, "HAR": 1.0, "AIE": 1.0}


@dataclass(frozen=True)
class MicroServiceSpec:
    id: str
    app: str
    name: str
    work: NormalSpec            # milioni di istruzioni (MI)
    output_data: float          # MB
    location_pinned: bool = False

    def __post_init__(self):
        if self.output_data < 0:
            raise InvalidParameterError(f"output_data negativo per {self.id}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    data_mb: float


@dataclass(frozen=True)
class WorkflowSpec:
    """DAG di micro-servizi; la validazione completa e' in validate_dag"""
    name: str
    vertices: Tuple[MicroServiceSpec, ...]
    edges: Tuple[Edge, ...] = ()
    input_mb: float = 1.0

    @classmethod
    def chain(cls, name: str, vertices: Sequence[MicroServiceSpec],
              input_mb: float = 1.0) -> "WorkflowSpec":
        """Catena lineare: ogni arco trasporta l'output del vertice di partenza"""
        vertices = tuple(vertices)
        edges = tuple(Edge(a.id, b.id, a.output_data) for a, b in zip(vertices, vertices[1:]))
        return cls(name, vertices, edges, input_mb)

    @cached_property
    def _by_id(self) -> Dict[str, MicroServiceSpec]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(v.id for v in self.vertices)
        for e in self.edges:
            g.add_edge(e.src, e.dst, data_mb=e.data_mb)
        return g

    @property
    def vertex_ids(self) -> List[str]:
        return [v.id for v in self.vertices]

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, vertex_id: str) -> MicroServiceSpec:
        try:
            return self._by_id[vertex_id]
        except KeyError:
            raise InvalidParameterError(f"vertice sconosciuto: {vertex_id}") from None

    def predecessors(self, vertex_id: str) -> List[str]:
        return sorted(e.src for e in self.edges if e.dst == vertex_id)

    def successors(self, vertex_id: str) -> List[str]:
        return sorted(e.dst for e in self.edges if e.src == vertex_id)

    def entries(self) -> List[str]:
        targets = {e.dst for e in self.edges}
        return sorted(v.id for v in self.vertices if v.id not in targets)

    def exits(self) -> List[str]:
        sources = {e.src for e in self.edges}
        return sorted(v.id for v in self.vertices if v.id not in sources)

    @property
    def pinned(self) -> bool:
        return any(v.location_pinned for v in self.vertices)

    def input_data_mb(self, vertex_id: str) -> float:
        """Dati in ingresso al vertice: archi entranti, oppure il payload della richiesta"""
        incoming = [e.data_mb for e in self.edges if e.dst == vertex_id]
        return math.fsum(incoming) if incoming else self.input_mb

    def edge_data_mb(self, src: str, dst: str) -> float:
        try:
            return self.graph.edges[src, dst]["data_mb"]
        except KeyError:
            raise InvalidParameterError(f"arco sconosciuto: {src}->{dst}") from None

    def subgraph(self, vertex_ids) -> "WorkflowSpec":
        keep = set(vertex_ids)
        vertices = tuple(v for v in self.vertices if v.id in keep)
        edges = tuple(e for e in self.edges if e.src in keep and e.dst in keep)
        return WorkflowSpec(self.name, vertices, edges, self.input_mb)


@dataclass(frozen=True)
class DeadlinePolicy:
    epsilon: float = 50.0          # slack costante del fog (ms)
    mean_comm_delay: float = 20.0  # d_c (ms)

    def __post_init__(self):
        if self.epsilon < 0 or self.mean_comm_delay < 0:
            raise InvalidParameterError("epsilon e mean_comm_delay devono essere >= 0")


@dataclass(frozen=True, eq=False)
class Request:
    id: int
    arrival_time: float
    workflow: WorkflowSpec
    monolithic: bool
    origin_fog: int
    per_service_deadlines: Mapping[str, float] = field(default_factory=dict)
    workflow_deadline: float = 0.0

    @property
    def relative_deadline(self) -> float:
        return self.workflow_deadline - self.arrival_time

    def slack(self, vertex_id: str) -> float:
        return self.per_service_deadlines[vertex_id] - self.arrival_time

    def sub_deadline(self, vertex_ids) -> float:
        """Deadline relativa di una partizione: somma degli slack dei suoi vertici"""
        return math.fsum(self.slack(v) for v in vertex_ids)


@dataclass
class DagReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ===== TEMPLATE APPLICATIVI =====

def app_work_profile(app: str, column: str = REFERENCE_COLUMN,
                     reference_mips: float = REFERENCE_MIPS) -> NormalSpec:
    """Lavoro complessivo dell'applicazione in MI, calibrato sul fog di riferimento"""
    try:
        mean_ms, std_ms = MACHINE_PROFILES_MS[app][column]
    except KeyError:
        raise InvalidParameterError(f"profilo sconosciuto: {app}/{column}") from None
    return NormalSpec(mean_ms, std_ms).scaled(reference_mips / 1000.0)


def builtin_app(app: str, reference_mips: float = REFERENCE_MIPS,
                column: str = REFERENCE_COLUMN, pin_entry: bool = True) -> WorkflowSpec:
    """
    Catena lineare del template richiesto.

    Il lavoro dell'applicazione e' ripartito in parti uguali tra i vertici
    (media mu/n, dev. std sigma/sqrt(n)), cosi' la versione monolitica
    ritrova esattamente il profilo misurato.
    """
    if app not in SERVICE_NAMES:
        raise InvalidParameterError(f"applicazione sconosciuta: {app}")
    names = SERVICE_NAMES[app]
    n = len(names)
    total = app_work_profile(app, column, reference_mips)
    per_vertex = NormalSpec(total.mean / n, total.std_dev / math.sqrt(n))
    vertices = [
        MicroServiceSpec(
            id=f"{app.lower()}.{i}.{name.replace(' ', '_')}",
            app=app,
            name=name,
            work=per_vertex,
            output_data=OUTPUT_DATA_MB[app][i],
            location_pinned=(pin_entry and app == "Fire" and i == 0),
        )
        for i, name in enumerate(names)
    ]
    return WorkflowSpec.chain(app, vertices, INPUT_DATA_MB[app])


def builtin_catalog(reference_mips: float = REFERENCE_MIPS, column: str = REFERENCE_COLUMN,
                    pin_entry: bool = True) -> Dict[str, WorkflowSpec]:
    return {app: builtin_app(app, reference_mips, column, pin_entry) for app in APPS}


def to_monolithic(w: WorkflowSpec) -> WorkflowSpec:
    """Collassa il workflow in un'unica unita' con media e varianza sommate"""
    if len(w.vertices) == 1:
        return w
    mean = math.fsum(v.work.mean for v in w.vertices)
    std = math.sqrt(math.fsum(v.work.std_dev ** 2 for v in w.vertices))
    exits = set(w.exits())
    output = math.fsum(v.output_data for v in w.vertices if v.id in exits)
    unit = MicroServiceSpec(
        id=f"{w.name.lower()}.mono",
        app=w.vertices[0].app,
        name="monolithic",
        work=NormalSpec(mean, std),
        output_data=output,
        location_pinned=w.pinned,
    )
    return WorkflowSpec(w.name, (unit,), (), w.input_mb)


# ===== VALIDAZIONE E ORDINAMENTO =====

def validate_dag(w: WorkflowSpec) -> DagReport:
    report = DagReport()
    if not w.vertices:
        report.violations.append("workflow senza vertici")
        return report

    ids = [v.id for v in w.vertices]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        report.violations.append(f"id duplicati: {duplicates}")

    known = set(ids)
    for e in w.edges:
        if e.src not in known or e.dst not in known:
            report.violations.append(f"arco {e.src}->{e.dst} con estremi sconosciuti")
    if report.violations:
        return report

    g = w.graph
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        report.violations.append(f"ciclo: {' -> '.join(u for u, _ in cycle)}")
    if not nx.is_weakly_connected(g):
        report.violations.append("grafo non connesso")

    for e in w.edges:
        expected = w.vertex(e.src).output_data
        if not math.isclose(e.data_mb, expected, abs_tol=1e-9):
            report.violations.append(
                f"arco {e.src}->{e.dst}: {e.data_mb} MB ma output di {e.src} = {expected} MB")

    entries = set(w.entries())
    if len(w.vertices) > 1 and not w.exits():
        report.violations.append("nessun vertice di uscita")
    pinned_inner = [v.id for v in w.vertices if v.location_pinned and v.id not in entries]
    if pinned_inner:
        report.violations.append(f"vertici vincolati non di ingresso: {pinned_inner}")
    return report


def topological_order(w: WorkflowSpec) -> List[str]:
    """Ordine topologico deterministico, parita' risolte per id crescente"""
    g = w.graph
    if not nx.is_directed_acyclic_graph(g):
        raise NotADagError(f"il workflow {w.name} contiene un ciclo")
    return list(nx.lexicographical_topological_sort(g))


# ===== DEADLINE =====

def assign_deadlines(w: WorkflowSpec, arrival: float, policy: DeadlinePolicy,
                     mean_exec: Mapping[str, float], request_id: int = 0,
                     origin_fog: int = 0, monolithic: bool = False) -> Request:
    """
    Deadline del vertice i: arrival + E_i + epsilon + d_c.
    Deadline del workflow: arrival + somma degli slack relativi.
    """
    deadlines = {}
    slacks = []
    for v in w.vertices:
        if v.id not in mean_exec:
            raise MissingProfileError(f"tempo medio di esecuzione mancante per {v.id}")
        e_i = mean_exec[v.id]
        if e_i <= 0:
            raise InvalidParameterError(f"tempo medio non positivo per {v.id}: {e_i}")
        slack = e_i + policy.epsilon + policy.mean_comm_delay
        slacks.append(slack)
        deadlines[v.id] = arrival + slack
    return Request(
        id=request_id,
        arrival_time=arrival,
        workflow=w,
        monolithic=monolithic,
        origin_fog=origin_fog,
        per_service_deadlines=deadlines,
        workflow_deadline=arrival + math.fsum(slacks),
    )


# ===== JSON =====

def workflow_from_dict(doc: Mapping[str, Any], field_prefix: str = "workflow") -> WorkflowSpec:
    """Legge un workflow dal formato {vertices:[...], edges:[{from,to}]}"""
    try:
        raw_vertices = doc["vertices"]
    except (KeyError, TypeError):
        raise ConfigError("chiave 'vertices' mancante", field=f"{field_prefix}.vertices") from None

    vertices = []
    for i, raw in enumerate(raw_vertices):
        where = f"{field_prefix}.vertices[{i}]"
        try:
            work = raw["work"]
            vertices.append(MicroServiceSpec(
                id=str(raw["id"]),
                app=str(raw.get("app", doc.get("name", "custom"))),
                name=str(raw.get("name", raw["id"])),
                work=NormalSpec(float(work["mean_mi"]), float(work.get("std_mi", 0.0))),
                output_data=float(raw.get("output_mb", 0.0)),
                location_pinned=bool(raw.get("pinned", False)),
            ))
        except KeyError as e:
            raise ConfigError(f"chiave mancante {e}", field=where) from None
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), field=where) from None

    by_id = {v.id: v for v in vertices}
    edges = []
    for i, raw in enumerate(doc.get("edges", [])):
        where = f"{field_prefix}.edges[{i}]"
        try:
            src, dst = str(raw["from"]), str(raw["to"])
        except (KeyError, TypeError):
            raise ConfigError("arco senza 'from'/'to'", field=where) from None
        if src not in by_id or dst not in by_id:
            raise ConfigError(f"arco {src}->{dst} con estremi sconosciuti", field=where)
        edges.append(Edge(src, dst, by_id[src].output_data))

    name = str(doc.get("name", vertices[0].app if vertices else "custom"))
    spec = WorkflowSpec(name, tuple(vertices), tuple(edges), float(doc.get("input_mb", 1.0)))
    report = validate_dag(spec)
    if not report.ok:
        raise ConfigError("; ".join(report.violations), field=field_prefix)
    return spec


def workload_types(catalog: Mapping[str, WorkflowSpec]) -> Dict[str, MicroServiceSpec]:
    """Tutti i tipi di micro-servizio dello scenario, inclusi i monolitici"""
    types: Dict[str, MicroServiceSpec] = {}
    for w in catalog.values():
        for v in w.vertices:
            types[v.id] = v
        for v in to_monolithic(w).vertices:
            types[v.id] = v
    return types


def input_sizes(catalog: Mapping[str, WorkflowSpec]) -> Dict[str, float]:
    """Dati in ingresso (MB) per tipo, usati per costruire la ETT"""
    sizes: Dict[str, float] = {}
    for w in catalog.values():
        for v in w.vertices:
            sizes[v.id] = w.input_data_mb(v.id)
        mono = to_monolithic(w)
        for v in mono.vertices:
            sizes[v.id] = mono.input_data_mb(v.id)
    return sizes


def catalog_from_documents(docs: Optional[Sequence[Mapping[str, Any]]]) -> Optional[Dict[str, WorkflowSpec]]:
    """Catalogo di workflow da documenti JSON; None se non ce ne sono"""
    if not docs:
        return None
    specs = [workflow_from_dict(d, f"workflows[{i}]") for i, d in enumerate(docs)]
    return {w.name: w for w in specs}
