"""
Gestore dell'allocazione delle partizioni per FogPartSim
Maximum Probability (MR) con test di sovrapposizione degli IC, MECT, MCC e No-Federation
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from federation_manager import EtcMatrix, EttMatrix, FederationTopology, hop_distance
from latency_dist import (DEFAULT_CI_LEVEL, CiInterval, central_ci, ci_disjoint, convolve,
                          prob_on_time, shift)
from partition_engine import Partition, PartitionPlan
from sim_errors import InvalidParameterError
from workflow_model import Request, topological_order

logger = logging.getLogger(__name__)


class AllocationMethod(str, Enum):
    MR = "mr"
    MECT = "mect"
    MCC = "mcc"
    NO_FEDERATION = "nofed"


class AllocationReason(str, Enum):
    LOCAL_DEFAULT = "Local-Default"
    LOCAL_HIGHER_P = "Local-Higher-P"
    LOCAL_CI_OVERLAP = "Local-CI-Overlap"
    REMOTE_CI_DISJOINT = "Remote-CI-Disjoint"
    FORCED_LOCAL_PINNED = "Forced-Local-Pinned"
    MECT_ARGMIN = "MECT-Argmin"
    MCC_ARGMAX = "MCC-Argmax"
    MCC_NO_POSITIVE_CERTAINTY = "MCC-No-Positive-Certainty"


@dataclass(frozen=True)
class CandidateRecord:
    fog: int
    hop: int = 0
    probability: Optional[float] = None
    ci: Optional[CiInterval] = None
    summary: Optional[Dict[str, float]] = None
    expected_completion: Optional[float] = None
    blocked_by_overlap: bool = False

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"fog": self.fog, "hop": self.hop}
        if self.probability is not None:
            record["p"] = self.probability
        if self.ci is not None:
            record["ci"] = self.ci.to_dict()
        if self.summary is not None:
            record["end_to_end"] = self.summary
        if self.expected_completion is not None:
            record["expected_completion_ms"] = self.expected_completion
        if self.blocked_by_overlap:
            record["blocked_by_overlap"] = True
        return record


@dataclass(frozen=True)
class AllocationDecision:
    partition: int
    fog: int
    local_fog: int
    reason: AllocationReason
    candidate_log: Tuple[CandidateRecord, ...] = ()
    examined: Tuple[int, ...] = ()  # ordine di F

    @property
    def remote(self) -> bool:
        return self.fog != self.local_fog

    def candidate(self, fog_id: int) -> Optional[CandidateRecord]:
        for c in self.candidate_log:
            if c.fog == fog_id:
                return c
        return None

    def to_record(self) -> Dict[str, Any]:
        return {
            "partition": self.partition,
            "fog": self.fog,
            "local_fog": self.local_fog,
            "reason": self.reason.value,
            "examined": list(self.examined),
            "candidates": [c.to_record() for c in self.candidate_log],
        }


@dataclass
class QueueEstimate:
    """
    Attesa attesa (ms) per fog: somma delle medie residue delle istanze in coda,
    in esecuzione o in viaggio verso il fog, divisa per il numero di nodi
    """
    waits: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for fog_id, wait in self.waits.items():
            if wait < 0:
                raise InvalidParameterError(f"attesa negativa sul fog {fog_id}: {wait}")

    @classmethod
    def from_backlog(cls, backlog_ms: Mapping[int, float],
                     topology: FederationTopology) -> "QueueEstimate":
        return cls({f.id: max(0.0, backlog_ms.get(f.id, 0.0)) / f.node_count
                    for f in topology.fogs})

    def wait(self, fog_id: int) -> float:
        return self.waits.get(fog_id, 0.0)


@dataclass(frozen=True)
class AllocationContext:
    topology: FederationTopology
    etc: EtcMatrix
    ett: EttMatrix
    ci_level: float = DEFAULT_CI_LEVEL


def _forced_local(part: Partition, local: int, records=()) -> AllocationDecision:
    return AllocationDecision(part.index, local, local, AllocationReason.FORCED_LOCAL_PINNED,
                              tuple(records) or (CandidateRecord(local),))


# ===== MAXIMUM PROBABILITY =====

def allocate_mr(plan: PartitionPlan, local: int, topology: FederationTopology, etc: EtcMatrix,
                ett: EttMatrix, queues: QueueEstimate, deadlines: Sequence[float],
                ci_level: float = DEFAULT_CI_LEVEL) -> List[AllocationDecision]:
    """
    Maximum Probability sulle partizioni in ordine di precedenza.

    Per ogni partizione si confronta la probabilita' locale P_r con quella dei
    fog adiacenti P_g (calcolo remoto piu' trasferimento del tipo sorgente dal
    fog scelto per la partizione precedente). Anche P_r paga il trasferimento
    quando la partizione precedente e' andata altrove. F raccoglie i vicini con
    P_g > P_r in ordine decrescente; vince il primo il cui IC e' disgiunto da
    quello locale, altrimenti la partizione resta locale.
    """
    if len(deadlines) != len(plan.partitions):
        raise InvalidParameterError("serve una deadline per ogni partizione")

    decisions = []
    origin = local
    for part, delta in zip(plan.partitions, deadlines):
        types = topological_order(part.workflow)
        source = types[0]

        hop_r = hop_distance(topology, origin, local)
        e_r = etc.chain(types, local)
        if hop_r:
            # i dati tornano dal fog della partizione precedente
            e_r = convolve(e_r, ett.get(source, local, hop_r))
        e_r = shift(e_r, queues.wait(local))
        p_r = prob_on_time(e_r, delta)
        ci_r = central_ci(e_r, ci_level)
        local_record = CandidateRecord(local, hop_r, p_r, ci_r, e_r.summary(ci_level))

        if part.must_run_local:
            decisions.append(_forced_local(part, local, [local_record]))
            origin = local
            continue

        neighbors = topology.neighbors(local)
        if not neighbors:
            decisions.append(AllocationDecision(part.index, local, local,
                                                AllocationReason.LOCAL_DEFAULT, (local_record,)))
            origin = local
            continue

        remote = {}
        for g in neighbors:
            hop = hop_distance(topology, origin, g)
            e_g = shift(convolve(etc.chain(types, g), ett.get(source, g, hop)), queues.wait(g))
            remote[g] = CandidateRecord(g, hop, prob_on_time(e_g, delta),
                                        central_ci(e_g, ci_level), e_g.summary(ci_level))

        f_order = sorted((g for g, r in remote.items() if r.probability > p_r),
                         key=lambda g: (-remote[g].probability, g))
        chosen = local
        blocked = set()
        for g in f_order:
            if ci_disjoint(remote[g].ci, ci_r):
                chosen = g
                break
            blocked.add(g)

        if chosen != local:
            reason = AllocationReason.REMOTE_CI_DISJOINT
        elif f_order:
            reason = AllocationReason.LOCAL_CI_OVERLAP
        else:
            reason = AllocationReason.LOCAL_HIGHER_P

        log = [local_record] + [
            CandidateRecord(r.fog, r.hop, r.probability, r.ci, r.summary,
                            blocked_by_overlap=r.fog in blocked)
            for r in (remote[g] for g in neighbors)
        ]
        decisions.append(AllocationDecision(part.index, chosen, local, reason, tuple(log),
                                            tuple(f_order)))
        origin = chosen
    return decisions


# ===== BASELINE =====

def _candidates(local: int, topology: FederationTopology) -> List[int]:
    return [local] + [g for g in topology.neighbors(local) if g != local]


def _completions(part: Partition, local: int, topology: FederationTopology, etc: EtcMatrix,
                 queues: QueueEstimate) -> Dict[int, float]:
    types = topological_order(part.workflow)
    return {g: queues.wait(g) + etc.chain_mean(types, g) for g in _candidates(local, topology)}


def _tie_key(local: int, g: int) -> Tuple[int, int]:
    return (0 if g == local else 1, g)


def allocate_mect(part: Partition, local: int, topology: FederationTopology, etc: EtcMatrix,
                  queues: QueueEstimate) -> AllocationDecision:
    """Minimo tempo di completamento atteso; parita' al locale, poi all'id piu' basso"""
    completions = _completions(part, local, topology, etc, queues)
    log = tuple(CandidateRecord(g, expected_completion=c) for g, c in completions.items())
    if part.must_run_local:
        return _forced_local(part, local, log)
    chosen = min(completions, key=lambda g: (completions[g],) + _tie_key(local, g))
    return AllocationDecision(part.index, chosen, local, AllocationReason.MECT_ARGMIN, log)


def allocate_mcc(part: Partition, local: int, topology: FederationTopology, etc: EtcMatrix,
                 queues: QueueEstimate, deadline: float) -> AllocationDecision:
    """
    Massima certezza: deadline meno completamento atteso.
    Concorrono solo i fog con certezza positiva; se non ce ne sono si resta in locale.
    """
    completions = _completions(part, local, topology, etc, queues)
    log = tuple(CandidateRecord(g, expected_completion=c) for g, c in completions.items())
    if part.must_run_local:
        return _forced_local(part, local, log)
    certainty = {g: deadline - c for g, c in completions.items()}
    positive = [g for g, c in certainty.items() if c > 0]
    if not positive:
        return AllocationDecision(part.index, local, local,
                                  AllocationReason.MCC_NO_POSITIVE_CERTAINTY, log)
    chosen = min(positive, key=lambda g: (-certainty[g],) + _tie_key(local, g))
    return AllocationDecision(part.index, chosen, local, AllocationReason.MCC_ARGMAX, log)


def allocate_no_federation(part: Partition, local: int) -> AllocationDecision:
    return AllocationDecision(part.index, local, local, AllocationReason.LOCAL_DEFAULT,
                              (CandidateRecord(local),))


def allocate(method: AllocationMethod, plan: PartitionPlan, request: Request,
             ctx: AllocationContext, queues: QueueEstimate) -> List[AllocationDecision]:
    """Applica il metodo di allocazione a tutte le partizioni della richiesta"""
    local = request.origin_fog
    deadlines = [request.sub_deadline(p.workflow.vertex_ids) for p in plan.partitions]
    if method == AllocationMethod.MR:
        return allocate_mr(plan, local, ctx.topology, ctx.etc, ctx.ett, queues, deadlines,
                           ctx.ci_level)
    if method == AllocationMethod.MECT:
        return [allocate_mect(p, local, ctx.topology, ctx.etc, queues) for p in plan.partitions]
    if method == AllocationMethod.MCC:
        return [allocate_mcc(p, local, ctx.topology, ctx.etc, queues, d)
                for p, d in zip(plan.partitions, deadlines)]
    return [allocate_no_federation(p, local) for p in plan.partitions]


# ===== VERIFICA DEI LOG =====

def decision_record_violations(record: Mapping[str, Any]) -> List[str]:
    """
    Ricontrolla una decisione MR a partire dal record JSON.
    Un'assegnazione remota richiede P_g > P_r e IC disgiunti; un candidato
    bloccato per sovrapposizione non puo' essere stato scelto.
    """
    problems = []
    candidates = {c["fog"]: c for c in record.get("candidates", [])}
    local = candidates.get(record["local_fog"])
    chosen = record["fog"]
    reason = record["reason"]

    if chosen != record["local_fog"]:
        remote = candidates.get(chosen)
        if reason != AllocationReason.REMOTE_CI_DISJOINT.value:
            if reason not in (AllocationReason.MECT_ARGMIN.value, AllocationReason.MCC_ARGMAX.value):
                problems.append(f"fog remoto {chosen} con motivo {reason}")
        elif remote is None or local is None:
            problems.append("record dei candidati incompleto")
        else:
            if not remote["p"] > local["p"]:
                problems.append(f"P_g={remote['p']} non supera P_r={local['p']}")
            a = CiInterval(**remote["ci"])
            b = CiInterval(**local["ci"])
            if not ci_disjoint(a, b):
                problems.append(f"IC sovrapposti per il fog {chosen}")
            if remote.get("blocked_by_overlap"):
                problems.append(f"fog {chosen} scelto pur essendo bloccato")
    if reason == AllocationReason.REMOTE_CI_DISJOINT.value and chosen == record["local_fog"]:
        problems.append("motivo remoto su assegnazione locale")

    examined = record.get("examined", [])
    ps = [candidates[g]["p"] for g in examined if g in candidates]
    if any(x < y for x, y in zip(ps, ps[1:])):
        problems.append("F non e' in ordine decrescente")
    return problems
