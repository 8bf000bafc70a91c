"""
Gestore degli scenari per FogPartSim
Definizione degli scenari, suite predefinite, validazione della configurazione JSON
ed espansione delle griglie di esperimenti in run singoli
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from allocation_manager import AllocationMethod
from dataM import load_json_document, load_workflow_file
from federation_manager import DEFAULT_NODE_COUNT, LinkProfile
from latency_dist import DEFAULT_BIN_WIDTH_MS, DEFAULT_CI_LEVEL, NormalSpec
from partition_engine import PartitionMethod
from sim_engine import RunSpec, WorkloadSpec
from sim_errors import ConfigError, FogSimError
from workflow_model import (MACHINE_PROFILES_MS, REFERENCE_COLUMN, REFERENCE_MIPS,
                            DeadlinePolicy, workflow_from_dict)

logger = logging.getLogger(__name__)

MethodPair = Tuple[PartitionMethod, AllocationMethod]

DEFAULT_REPETITIONS = 30
MAX_INDEX = 10 ** 4  # cella e ripetizione devono stare in 4 cifre dell'etichetta del seme

# grado del fog di origine -> (griglia (w, h), fog di origine)
DEGREE_TOPOLOGIES: Dict[int, Tuple[Tuple[int, int], int]] = {
    1: ((2, 1), 0),
    2: ((3, 1), 1),
    3: ((3, 2), 1),
    4: ((3, 3), 4),
}

ALL_ALLOCATORS = (AllocationMethod.MR, AllocationMethod.MECT, AllocationMethod.MCC,
                  AllocationMethod.NO_FEDERATION)


@dataclass(frozen=True)
class Scenario:
    name: str
    methods: Tuple[MethodPair, ...]
    loads: Tuple[int, ...]
    degrees: Tuple[int, ...] = ()  # vuoto: si usano grid e origin_fog
    mix: float = 0.0
    window_ms: float = 100_000.0
    grid: Tuple[int, int] = (3, 3)
    origin_fog: int = 4
    node_count: int = DEFAULT_NODE_COUNT
    repetitions: int = DEFAULT_REPETITIONS
    master_seed: int = 0
    alpha: float = 0.5
    ci_level: float = DEFAULT_CI_LEVEL
    link: LinkProfile = LinkProfile()
    bin_width_ms: float = DEFAULT_BIN_WIDTH_MS
    reference_mips: float = REFERENCE_MIPS
    reference_column: str = REFERENCE_COLUMN
    deadline: DeadlinePolicy = DeadlinePolicy()
    pin_entry: bool = True
    mismatch_factor: float = 1.0
    workflows: Tuple[Mapping[str, Any], ...] = field(default=(), compare=False)
    description: str = ""

    def cells(self) -> List[Tuple[int, int, Optional[int]]]:
        """Punti (indice, carico, grado) della griglia, condivisi da tutti i metodi"""
        degrees = self.degrees or (None,)
        points = [(load, degree) for degree in degrees for load in self.loads]
        return [(i, load, degree) for i, (load, degree) in enumerate(points)]

    def expand(self, trace: bool = False) -> List[RunSpec]:
        """Run in ordine deterministico (cella, metodo, ripetizione)"""
        runs = []
        for cell, load, degree in self.cells():
            grid, origin = DEGREE_TOPOLOGIES[degree] if degree else (self.grid, self.origin_fog)
            for partition, allocation in self.methods:
                for rep in range(self.repetitions):
                    runs.append(RunSpec(
                        scenario=self.name,
                        partition_method=partition,
                        allocation_method=allocation,
                        workload=WorkloadSpec(load, self.mix, self.window_ms),
                        grid=grid,
                        origin_fog=origin,
                        master_seed=self.master_seed,
                        cell=cell,
                        repetition=rep,
                        node_count=self.node_count,
                        alpha=self.alpha,
                        ci_level=self.ci_level,
                        link=self.link,
                        bin_width_ms=self.bin_width_ms,
                        reference_mips=self.reference_mips,
                        reference_column=self.reference_column,
                        deadline=self.deadline,
                        pin_entry=self.pin_entry,
                        mismatch_factor=self.mismatch_factor,
                        workflows=self.workflows,
                        trace=trace,
                    ))
        return runs

    @property
    def run_count(self) -> int:
        return len(self.cells()) * len(self.methods) * self.repetitions


def _pairs(partition: PartitionMethod, allocators=ALL_ALLOCATORS) -> Tuple[MethodPair, ...]:
    return tuple((partition, a) for a in allocators)


# ===== SUITE PREDEFINITE =====

_WORKFLOW_LOADS = (100, 200, 300, 400)
_MONOLITHIC_LOADS = (400, 600, 800, 1000)
_WORKFLOW_WINDOW_MS = 4_000.0
_MONOLITHIC_WINDOW_MS = 10_000.0

SUITES: Dict[str, Scenario] = {
    "fig5_partitioning": Scenario(
        name="fig5_partitioning",
        methods=tuple((p, AllocationMethod.MR) for p in (
            PartitionMethod.NO_PARTITION, PartitionMethod.MIN_CUT,
            PartitionMethod.LEAST_DATA, PartitionMethod.PROPART)),
        loads=_WORKFLOW_LOADS,
        window_ms=_WORKFLOW_WINDOW_MS,
        description="metodi di partizionamento con allocazione MR, carichi 100-400 workflow",
    ),
    "fig6_alloc_workflows": Scenario(
        name="fig6_alloc_workflows",
        methods=_pairs(PartitionMethod.PROPART),
        loads=_WORKFLOW_LOADS,
        window_ms=_WORKFLOW_WINDOW_MS,
        description="MR / MECT / MCC / No-Federation su workflow partizionati con ProPart",
    ),
    "fig7_alloc_monolithic": Scenario(
        name="fig7_alloc_monolithic",
        methods=_pairs(PartitionMethod.NO_PARTITION),
        loads=_MONOLITHIC_LOADS,
        mix=1.0,
        window_ms=_MONOLITHIC_WINDOW_MS,
        pin_entry=False,
        description="allocatori su richieste monolitiche, carichi 400-1000",
    ),
    "fig8_mixed": Scenario(
        name="fig8_mixed",
        methods=_pairs(PartitionMethod.PROPART),
        loads=_MONOLITHIC_LOADS,
        mix=0.5,
        window_ms=_MONOLITHIC_WINDOW_MS,
        description="carico misto, 50% monolitiche",
    ),
    "fig9_makespan_workflows": Scenario(
        name="fig9_makespan_workflows",
        methods=_pairs(PartitionMethod.PROPART),
        loads=_WORKFLOW_LOADS,
        window_ms=_WORKFLOW_WINDOW_MS,
        description="makespan medio dei workflow per allocatore",
    ),
    "fig10_makespan_monolithic": Scenario(
        name="fig10_makespan_monolithic",
        methods=_pairs(PartitionMethod.NO_PARTITION),
        loads=_MONOLITHIC_LOADS,
        mix=1.0,
        window_ms=_MONOLITHIC_WINDOW_MS,
        pin_entry=False,
        description="makespan medio delle richieste monolitiche per allocatore",
    ),
    "fig11_scaling_workflows": Scenario(
        name="fig11_scaling_workflows",
        methods=_pairs(PartitionMethod.PROPART),
        loads=(400,),
        degrees=(1, 2, 3, 4),
        window_ms=_WORKFLOW_WINDOW_MS,
        description="grado del fog di origine da 1 a 4, 400 workflow",
    ),
    "fig12_scaling_monolithic": Scenario(
        name="fig12_scaling_monolithic",
        methods=_pairs(PartitionMethod.NO_PARTITION),
        loads=(1000,),
        degrees=(1, 2, 3, 4),
        mix=1.0,
        window_ms=_MONOLITHIC_WINDOW_MS,
        pin_entry=False,
        description="grado del fog di origine da 1 a 4, 1000 richieste monolitiche",
    ),
}


def describe_suites() -> str:
    """Elenco testuale delle suite (stesso testo a ogni chiamata)"""
    lines = []
    for name, s in SUITES.items():
        methods = ", ".join(f"{p.value}/{a.value}" for p, a in s.methods)
        lines.append(f"{name}: {s.description}")
        lines.append(f"    metodi: {methods}")
        lines.append(f"    carichi: {', '.join(str(x) for x in s.loads)}  mix: {s.mix}")
        if s.degrees:
            lines.append(f"    gradi: {', '.join(str(d) for d in s.degrees)}")
        lines.append(f"    ripetizioni: {s.repetitions}  finestra: {s.window_ms:.0f} ms")
    return "\n".join(lines)


# ===== CONFIGURAZIONE JSON =====

_TOP_LEVEL_KEYS = {
    "suite", "name", "description", "grid", "origin_fog", "node_count", "seed", "link",
    "bin_width_ms", "reference_mips", "reference_column", "workload", "partition", "allocation",
    "methods", "degrees", "repetitions", "deadline", "pin_entry", "mismatch_factor", "ci_level",
    "workflows",
}


def _section(doc: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = doc.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError("atteso un oggetto JSON", field=key)
    return value


def _number(value, where: str, minimum: Optional[float] = None, integer: bool = False,
            strict: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"atteso un numero, trovato {value!r}", field=where)
    if integer and int(value) != value:
        raise ConfigError(f"atteso un intero, trovato {value!r}", field=where)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        raise ConfigError(f"valore fuori intervallo: {value}", field=where)
    return int(value) if integer else float(value)


def _enum(enum_cls, value, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"valore {value!r} non valido (ammessi: {allowed})", field=where) from None


def _int_list(value, where: str, minimum: int) -> Tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError("attesa una lista non vuota", field=where)
    return tuple(_number(v, f"{where}[{i}]", minimum, integer=True) for i, v in enumerate(value))


def _methods(doc: Mapping[str, Any], base: Optional[Scenario]) -> Tuple[MethodPair, ...]:
    if "methods" in doc:
        raw = doc["methods"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("attesa una lista non vuota di coppie", field="methods")
        pairs = []
        for i, pair in enumerate(raw):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("attesa una coppia [partizione, allocazione]",
                                  field=f"methods[{i}]")
            pairs.append((_enum(PartitionMethod, pair[0], f"methods[{i}][0]"),
                          _enum(AllocationMethod, pair[1], f"methods[{i}][1]")))
        return tuple(pairs)

    part = _section(doc, "partition").get("methods")
    alloc = _section(doc, "allocation").get("methods")
    if part is None and alloc is None:
        if base is None:
            raise ConfigError("nessun metodo configurato", field="methods")
        return base.methods
    if part is None:
        part = sorted({p.value for p, _ in base.methods}) if base else ["propart"]
    if alloc is None:
        alloc = sorted({a.value for _, a in base.methods}) if base else ["mr"]
    for key, values in (("partition.methods", part), ("allocation.methods", alloc)):
        if not isinstance(values, list) or not values:
            raise ConfigError("attesa una lista non vuota", field=key)
    return tuple((_enum(PartitionMethod, p, "partition.methods"),
                  _enum(AllocationMethod, a, "allocation.methods"))
                 for p in part for a in alloc)


def _workflows(raw, base_dir: Optional[Path]) -> Tuple[Mapping[str, Any], ...]:
    if not isinstance(raw, list):
        raise ConfigError("attesa una lista", field="workflows")
    docs = []
    for i, item in enumerate(raw):
        where = f"workflows[{i}]"
        if isinstance(item, str):
            path = Path(item)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            item = load_workflow_file(path)
        if not isinstance(item, Mapping):
            raise ConfigError("atteso un documento di workflow o un percorso", field=where)
        workflow_from_dict(item, where)
        docs.append(item)
    return tuple(docs)


def scenario_from_dict(doc: Mapping[str, Any], base_dir: Optional[Path] = None) -> Scenario:
    """
    Costruisce lo scenario da un documento JSON.
    Con "suite" si parte dal preset e si sovrascrivono solo le chiavi presenti.
    """
    if not isinstance(doc, Mapping):
        raise ConfigError("il documento deve essere un oggetto JSON")
    unknown = sorted(set(doc) - _TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"chiave sconosciuta {unknown[0]!r}", field=unknown[0])

    base = None
    if "suite" in doc:
        base = SUITES.get(doc["suite"])
        if base is None:
            raise ConfigError(f"suite sconosciuta {doc['suite']!r}", field="suite")

    values: Dict[str, Any] = {}
    if "name" in doc:
        if not isinstance(doc["name"], str) or not doc["name"]:
            raise ConfigError("atteso un nome non vuoto", field="name")
        values["name"] = doc["name"]
    elif base is None:
        raise ConfigError("chiave obbligatoria mancante", field="name")
    if "description" in doc:
        values["description"] = str(doc["description"])

    values["methods"] = _methods(doc, base)

    workload = _section(doc, "workload")
    if "requests" in workload:
        values["loads"] = _int_list(workload["requests"], "workload.requests", 1)
    elif base is None:
        raise ConfigError("chiave obbligatoria mancante", field="workload.requests")
    if "mix" in workload:
        mix = _number(workload["mix"], "workload.mix", 0.0)
        if mix > 1.0:
            raise ConfigError(f"valore fuori intervallo: {mix}", field="workload.mix")
        values["mix"] = mix
    if "window_ms" in workload:
        values["window_ms"] = _number(workload["window_ms"], "workload.window_ms", 0.0, strict=True)

    if "grid" in doc:
        grid = _section(doc, "grid")
        values["grid"] = (_number(grid.get("w"), "grid.w", 1, integer=True),
                          _number(grid.get("h"), "grid.h", 1, integer=True))
    if "origin_fog" in doc:
        values["origin_fog"] = _number(doc["origin_fog"], "origin_fog", 0, integer=True)
    elif "grid" in doc:
        w, h = values["grid"]
        values["origin_fog"] = (h // 2) * w + (w // 2)
    if "degrees" in doc:
        degrees = _int_list(doc["degrees"], "degrees", 1)
        for i, d in enumerate(degrees):
            if d not in DEGREE_TOPOLOGIES:
                raise ConfigError(f"grado non supportato: {d}", field=f"degrees[{i}]")
        values["degrees"] = degrees

    simple = {
        "node_count": ("node_count", 1, True),
        "repetitions": ("repetitions", 1, True),
        "seed": ("master_seed", 0, True),
        "bin_width_ms": ("bin_width_ms", 0.0, False),
        "reference_mips": ("reference_mips", 0.0, False),
        "mismatch_factor": ("mismatch_factor", 0.0, False),
    }
    for key, (attr, minimum, integer) in simple.items():
        if key in doc:
            values[attr] = _number(doc[key], key, minimum, integer=integer,
                                   strict=not integer)
    if values.get("repetitions", 1) >= MAX_INDEX:
        raise ConfigError(f"al massimo {MAX_INDEX - 1} ripetizioni", field="repetitions")

    if "ci_level" in doc:
        level = _number(doc["ci_level"], "ci_level", 0.0, strict=True)
        if level >= 1.0:
            raise ConfigError(f"valore fuori intervallo: {level}", field="ci_level")
        values["ci_level"] = level
    if "reference_column" in doc:
        column = doc["reference_column"]
        if column not in next(iter(MACHINE_PROFILES_MS.values())):
            raise ConfigError(f"colonna sconosciuta {column!r}", field="reference_column")
        values["reference_column"] = column
    if "pin_entry" in doc:
        if not isinstance(doc["pin_entry"], bool):
            raise ConfigError("atteso true/false", field="pin_entry")
        values["pin_entry"] = doc["pin_entry"]

    partition = _section(doc, "partition")
    if "alpha" in partition:
        alpha = _number(partition["alpha"], "partition.alpha", 0.0)
        if alpha > 1.0:
            raise ConfigError(f"valore fuori intervallo: {alpha}", field="partition.alpha")
        values["alpha"] = alpha

    if "link" in doc:
        link = _section(doc, "link")
        default = LinkProfile()
        try:
            values["link"] = LinkProfile(
                _number(link.get("bandwidth_mbps", default.bandwidth_mbps),
                        "link.bandwidth_mbps", 0.0, strict=True),
                NormalSpec(
                    _number(link.get("hop_mean_ms", default.per_hop_latency.mean),
                            "link.hop_mean_ms", 0.0, strict=True),
                    _number(link.get("hop_std_ms", default.per_hop_latency.std_dev),
                            "link.hop_std_ms", 0.0)),
            )
        except FogSimError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e), field="link") from None

    if "deadline" in doc:
        deadline = _section(doc, "deadline")
        default = DeadlinePolicy()
        values["deadline"] = DeadlinePolicy(
            _number(deadline.get("epsilon_ms", default.epsilon), "deadline.epsilon_ms", 0.0),
            _number(deadline.get("comm_delay_ms", default.mean_comm_delay),
                    "deadline.comm_delay_ms", 0.0),
        )

    if "workflows" in doc:
        values["workflows"] = _workflows(doc["workflows"], base_dir)

    if base is not None:
        scenario = replace(base, **values)
    else:
        scenario = Scenario(**values)
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> None:
    """Controlli incrociati che non dipendono da una singola chiave"""
    if not s.methods:
        raise ConfigError("nessun metodo configurato", field="methods")
    if not s.loads:
        raise ConfigError("nessun carico configurato", field="workload.requests")
    if len(s.cells()) >= MAX_INDEX:
        raise ConfigError("troppe celle nella griglia", field="workload.requests")
    if not s.degrees:
        w, h = s.grid
        if not 0 <= s.origin_fog < w * h:
            raise ConfigError(f"fog di origine {s.origin_fog} fuori dalla griglia {w}x{h}",
                              field="origin_fog")


def load_scenario(path) -> Scenario:
    """Legge e valida un file di scenario; gli errori di campo riportano anche la riga"""
    path = Path(path)
    doc, text = load_json_document(path)
    try:
        return scenario_from_dict(doc, path.parent)
    except ConfigError as e:
        if e.line is None and e.field:
            line = _line_of_key(text, e.field)
            if line is not None:
                raise ConfigError(e.message, field=e.field, line=line) from None
        raise


def _line_of_key(text: str, field_path: str) -> Optional[int]:
    """Riga della prima occorrenza della chiave piu' interna del percorso"""
    key = field_path.split(".")[-1].split("[")[0]
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def scenario_for_suite(name: str, **overrides) -> Scenario:
    try:
        base = SUITES[name]
    except KeyError:
        raise ConfigError(f"suite sconosciuta {name!r}", field="suite") from None
    return replace(base, **overrides) if overrides else base


def method_labels(s: Scenario) -> List[str]:
    return [f"{p.value}/{a.value}" for p, a in s.methods]


def seed_labels(s: Scenario) -> List[int]:
    """Etichette di seme di tutte le combinazioni (cella, ripetizione)"""
    return [s.master_seed * 10 ** 8 + cell * 10 ** 4 + rep
            for cell, _, _ in s.cells() for rep in range(s.repetitions)]
