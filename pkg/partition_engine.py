"""
Motore di partizionamento dei workflow per FogPartSim
Min-cut s-t esatto sui DAG, ProPart ricorsivo e i metodi di confronto
(nessuna partizione, Min-Cut, Least-Data-Transfer)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from federation_manager import EtcMatrix, FederationTopology
from latency_dist import LatencyPmf, prob_on_time, shift
from sim_errors import InvalidParameterError, NotPartitionableError
from workflow_model import Edge, Request, WorkflowSpec, topological_order

logger = logging.getLogger(__name__)

_SOURCE = ("__source__",)
_SINK = ("__sink__",)

Weights = Mapping[Tuple[str, str], float]


class PartitionMethod(str, Enum):
    NO_PARTITION = "none"
    MIN_CUT = "mincut"
    LEAST_DATA = "leastdata"
    PROPART = "propart"


@dataclass(frozen=True)
class PartitionConfig:
    alpha: float = 0.5
    method: PartitionMethod = PartitionMethod.PROPART

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha fuori da [0,1]: {self.alpha}")


@dataclass(frozen=True)
class CutResult:
    side_s: FrozenSet[str]
    side_t: FrozenSet[str]
    cut_edges: Tuple[Edge, ...]
    cut_weight: float


@dataclass(frozen=True)
class Partition:
    index: int
    workflow: WorkflowSpec
    est_success: Optional[float] = None
    must_run_local: bool = False

    @property
    def vertex_ids(self) -> List[str]:
        return topological_order(self.workflow)


@dataclass(frozen=True)
class SplitDecision:
    parent: Tuple[str, ...]
    parent_probability: float
    children: Tuple[Tuple[str, ...], Tuple[str, ...]]
    child_probabilities: Tuple[float, float]
    accepted: bool
    cut_weight: float

    def to_record(self) -> Dict[str, Any]:
        return {
            "parent": list(self.parent),
            "p_parent": self.parent_probability,
            "children": [list(c) for c in self.children],
            "p_children": list(self.child_probabilities),
            "accepted": self.accepted,
            "cut_weight": self.cut_weight,
        }


@dataclass
class PartitionPlan:
    method: PartitionMethod
    partitions: List[Partition]
    trace: List[SplitDecision] = field(default_factory=list)
    root_probability: Optional[float] = None

    @property
    def est_success(self) -> Dict[int, Optional[float]]:
        return {p.index: p.est_success for p in self.partitions}

    def to_record(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "partitions": [p.vertex_ids for p in self.partitions],
            "must_run_local": [p.must_run_local for p in self.partitions],
            "root_probability": self.root_probability,
            "trace": [d.to_record() for d in self.trace],
        }


class SuccessEstimator:
    """
    Probabilita' di completamento entro la deadline stimata dalla sola ETC.

    fog_ids sono i fog che l'allocatore puo' scegliere (il locale e i suoi
    vicini); il locale e' sempre incluso. queue_wait (ms per fog) trasla la
    distribuzione di completamento.
    """

    def __init__(self, etc: EtcMatrix, fog_ids: Sequence[int], local_fog: int,
                 queue_wait: Optional[Mapping[int, float]] = None):
        self.etc = etc
        self.fog_ids = list(dict.fromkeys([local_fog, *fog_ids]))
        self.local_fog = local_fog
        self.queue_wait = dict(queue_wait or {})

    @classmethod
    def for_gateway(cls, etc: EtcMatrix, topology: FederationTopology, local_fog: int,
                    queue_wait: Optional[Mapping[int, float]] = None) -> "SuccessEstimator":
        return cls(etc, topology.neighbors(local_fog), local_fog, queue_wait)

    def completion(self, w: WorkflowSpec, fog_id: int) -> LatencyPmf:
        chain = self.etc.chain(topological_order(w), fog_id)
        return shift(chain, self.queue_wait.get(fog_id, 0.0))

    def local_probability(self, w: WorkflowSpec, deadline: float) -> float:
        return prob_on_time(self.completion(w, self.local_fog), deadline)

    def best_probability(self, w: WorkflowSpec, deadline: float) -> float:
        return max(prob_on_time(self.completion(w, f), deadline) for f in self.fog_ids)

    def placement_probability(self, w: WorkflowSpec, deadline: float) -> float:
        """Probabilita' del workflow intero dove puo' davvero andare: locale se vincolato"""
        if w.pinned:
            return self.local_probability(w, deadline)
        return self.best_probability(w, deadline)


# ===== MIN-CUT =====

def _crossing(w: WorkflowSpec, side_s, weights: Weights) -> Tuple[Tuple[Edge, ...], float]:
    edges = tuple(e for e in w.edges if e.src in side_s and e.dst not in side_s)
    return edges, math.fsum(weights[(e.src, e.dst)] for e in edges)


def _is_ancestor_closed(w: WorkflowSpec, side_s) -> bool:
    return not any(e.dst in side_s and e.src not in side_s for e in w.edges)


def _best_prefix_cut(w: WorkflowSpec, weights: Weights) -> CutResult:
    """Miglior taglio tra prefissi dell'ordine topologico; parita' al prefisso piu' corto"""
    order = topological_order(w)
    best = None
    for k in range(1, len(order)):
        side_s = frozenset(order[:k])
        edges, weight = _crossing(w, side_s, weights)
        if best is None or weight < best.cut_weight - 1e-12:
            best = CutResult(side_s, frozenset(order[k:]), edges, weight)
    return best


def min_cut(w: WorkflowSpec, weights: Weights) -> CutResult:
    """
    Taglio s-t di peso minimo che lascia il lato sorgente chiuso rispetto agli antenati.

    Gli ingressi sono collegati a una sorgente virtuale e le uscite a un pozzo
    virtuale con capacita' infinita; ogni arco ha anche un arco inverso di
    capacita' infinita, quindi nessun taglio finito puo' rompere le precedenze.
    Il lato sorgente e' l'insieme raggiungibile nel grafo residuo del flusso
    massimo, cioe' il piu' piccolo tra i tagli minimi.
    """
    if len(w.vertices) < 2:
        raise NotPartitionableError(f"il workflow {w.name} ha un solo vertice")
    for key, value in weights.items():
        if value < 0:
            raise InvalidParameterError(f"peso negativo sull'arco {key}: {value}")

    g = nx.DiGraph()
    g.add_nodes_from(w.vertex_ids)
    for e in w.edges:
        g.add_edge(e.src, e.dst, capacity=float(weights[(e.src, e.dst)]))
    for e in w.edges:
        g.add_edge(e.dst, e.src)  # capacita' infinita
    for v in w.entries():
        g.add_edge(_SOURCE, v)
    for v in w.exits():
        g.add_edge(v, _SINK)

    try:
        residual = edmonds_karp(g, _SOURCE, _SINK, capacity="capacity")
    except nx.NetworkXUnbounded:
        # vertici isolati sono ingresso e uscita insieme
        logger.debug("flusso illimitato su %s: taglio per prefissi", w.name)
        return _best_prefix_cut(w, weights)

    tolerance = 1e-9 * max([1.0] + [abs(x) for x in weights.values()])
    reachable = {_SOURCE}
    stack = [_SOURCE]
    while stack:
        u = stack.pop()
        for v, attr in residual[u].items():
            if v not in reachable and attr["capacity"] - attr["flow"] > tolerance:
                reachable.add(v)
                stack.append(v)

    side_s = frozenset(v for v in reachable if v not in (_SOURCE, _SINK))
    side_t = frozenset(w.vertex_ids) - side_s
    if not side_s or not side_t or not _is_ancestor_closed(w, side_s):
        return _best_prefix_cut(w, weights)
    edges, weight = _crossing(w, side_s, weights)
    return CutResult(side_s, side_t, edges, weight)


def data_weights(w: WorkflowSpec) -> Dict[Tuple[str, str], float]:
    return {(e.src, e.dst): e.data_mb for e in w.edges}


def unit_weights(w: WorkflowSpec) -> Dict[Tuple[str, str], float]:
    return {(e.src, e.dst): 1.0 for e in w.edges}


# ===== PIANI =====

def _plan(method: PartitionMethod, parts: Sequence[Tuple[WorkflowSpec, Optional[float]]],
          trace: Optional[List[SplitDecision]] = None,
          root_probability: Optional[float] = None) -> PartitionPlan:
    partitions = [Partition(i, sub, p, sub.pinned) for i, (sub, p) in enumerate(parts)]
    return PartitionPlan(method, partitions, trace or [], root_probability)


def _bisection(method: PartitionMethod, w: WorkflowSpec, cut: CutResult) -> PartitionPlan:
    return _plan(method, [(w.subgraph(cut.side_s), None), (w.subgraph(cut.side_t), None)])


def no_partition(w: WorkflowSpec) -> PartitionPlan:
    return _plan(PartitionMethod.NO_PARTITION, [(w, None)])


def baseline_mincut(w: WorkflowSpec, weights: Optional[Weights] = None) -> PartitionPlan:
    """Una sola bisezione con pesi unitari"""
    if len(w.vertices) < 2:
        return _plan(PartitionMethod.MIN_CUT, [(w, None)])
    cut = min_cut(w, weights if weights is not None else unit_weights(w))
    return _bisection(PartitionMethod.MIN_CUT, w, cut)


def baseline_least_data(w: WorkflowSpec) -> PartitionPlan:
    """Taglio per prefisso topologico con il minimo volume di dati attraversante"""
    if len(w.vertices) < 2:
        return _plan(PartitionMethod.LEAST_DATA, [(w, None)])
    cut = _best_prefix_cut(w, data_weights(w))
    return _bisection(PartitionMethod.LEAST_DATA, w, cut)


def propart(w: WorkflowSpec, request: Request, config: PartitionConfig,
            estimator: SuccessEstimator) -> PartitionPlan:
    """
    Partizionamento probabilistico ricorsivo.

    La soglia alpha si applica solo alla radice, sulla probabilita' locale.
    Sotto soglia il grafo viene bisecato con il min-cut pesato sui dati; la
    bisezione e' accettata solo se entrambe le meta' hanno probabilita'
    (migliore sui fog raggiungibili) strettamente maggiore del genitore,
    altrimenti si torna al genitore come partizione finale. Alla radice il
    genitore vale quanto il workflow intero nel posto migliore che puo' avere,
    quindi una richiesta che un vicino servirebbe intera non viene spezzata.
    """
    deadline = request.sub_deadline(w.vertex_ids)
    p_root = estimator.local_probability(w, deadline)
    if p_root >= config.alpha or len(w.vertices) == 1:
        return _plan(PartitionMethod.PROPART, [(w, p_root)], root_probability=p_root)
    p_whole = estimator.placement_probability(w, deadline)

    weights = data_weights(w)
    trace: List[SplitDecision] = []

    def split(sub: WorkflowSpec, parent_p: float) -> List[Tuple[WorkflowSpec, float]]:
        if len(sub.vertices) == 1:
            return [(sub, parent_p)]
        cut = min_cut(sub, weights)
        left, right = sub.subgraph(cut.side_s), sub.subgraph(cut.side_t)
        p_left = estimator.best_probability(left, request.sub_deadline(left.vertex_ids))
        p_right = estimator.best_probability(right, request.sub_deadline(right.vertex_ids))
        accepted = p_left > parent_p and p_right > parent_p
        trace.append(SplitDecision(
            parent=tuple(topological_order(sub)),
            parent_probability=parent_p,
            children=(tuple(topological_order(left)), tuple(topological_order(right))),
            child_probabilities=(p_left, p_right),
            accepted=accepted,
            cut_weight=cut.cut_weight,
        ))
        if not accepted:
            return [(sub, parent_p)]
        return split(left, p_left) + split(right, p_right)

    parts = split(w, p_whole)
    logger.debug("ProPart %s: %d partizioni (P radice %.3f)", w.name, len(parts), p_root)
    return _plan(PartitionMethod.PROPART, parts, trace, p_root)


def make_plan(method: PartitionMethod, request: Request, config: PartitionConfig,
              estimator: Optional[SuccessEstimator]) -> PartitionPlan:
    """Applica il metodo configurato; le richieste monolitiche non si partizionano mai"""
    w = request.workflow
    if request.monolithic or method == PartitionMethod.NO_PARTITION:
        return no_partition(w)
    if method == PartitionMethod.MIN_CUT:
        return baseline_mincut(w)
    if method == PartitionMethod.LEAST_DATA:
        return baseline_least_data(w)
    if estimator is None:
        raise InvalidParameterError("ProPart richiede uno stimatore di successo")
    return propart(w, request, config, estimator)


def plan_violations(w: WorkflowSpec, plan: PartitionPlan) -> List[str]:
    """Controlla copertura, disgiunzione e ordine di precedenza delle partizioni"""
    problems = []
    position: Dict[str, int] = {}
    for p in plan.partitions:
        for v in p.workflow.vertex_ids:
            if v in position:
                problems.append(f"vertice {v} in piu' partizioni")
            position[v] = p.index
        if p.workflow.pinned and not p.must_run_local:
            problems.append(f"partizione {p.index} vincolata ma non locale")
    missing = set(w.vertex_ids) - set(position)
    if missing:
        problems.append(f"vertici non coperti: {sorted(missing)}")
    for e in w.edges:
        if e.src in position and e.dst in position and position[e.src] > position[e.dst]:
            problems.append(f"arco {e.src}->{e.dst} verso una partizione precedente")
    for d in plan.trace:
        improving = all(p > d.parent_probability for p in d.child_probabilities)
        if d.accepted != improving:
            problems.append(f"decisione incoerente sul genitore {list(d.parent)}")
    return problems


def split_record_violations(record: Mapping[str, Any]) -> List[str]:
    """Stesso controllo di plan_violations su un record di traccia JSON"""
    problems = []
    for d in record.get("trace", []):
        improving = all(p > d["p_parent"] for p in d["p_children"])
        if d["accepted"] != improving:
            problems.append(f"decisione incoerente sul genitore {d['parent']}")
    return problems
