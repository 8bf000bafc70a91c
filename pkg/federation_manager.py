"""
Gestore della federazione di fog per FogPartSim
Topologia a griglia, capacita' dei fog e costruzione delle matrici ETC/ETT
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from latency_dist import (DEFAULT_BIN_WIDTH_MS, LatencyPmf, NormalSpec, convolve,
                          convolve_chain, pmf_from_normal, shift)
from sim_errors import InvalidIdError, InvalidParameterError, MissingProfileError

logger = logging.getLogger(__name__)

DEFAULT_NODE_COUNT = 8
MIPS_RANGE = (1500.0, 2500.0)


@dataclass(frozen=True)
class FogSystem:
    id: int
    grid_pos: Tuple[int, int]
    node_mips: float
    node_count: int = DEFAULT_NODE_COUNT

    def __post_init__(self):
        if self.node_count < 1:
            raise InvalidParameterError(f"fog {self.id}: node_count < 1")
        if not MIPS_RANGE[0] <= self.node_mips <= MIPS_RANGE[1]:
            raise InvalidParameterError(f"fog {self.id}: MIPS fuori intervallo ({self.node_mips})")


@dataclass(frozen=True)
class LinkProfile:
    bandwidth_mbps: float = 1000.0
    per_hop_latency: NormalSpec = NormalSpec(20.0, 5.0)

    def __post_init__(self):
        if not self.bandwidth_mbps > 0:
            raise InvalidParameterError(f"banda non positiva: {self.bandwidth_mbps}")

    def transfer_ms(self, data_mb: float) -> float:
        return data_mb * 8.0 / self.bandwidth_mbps * 1000.0


@dataclass(frozen=True, eq=False)
class FederationTopology:
    fogs: Tuple[FogSystem, ...]
    adjacency: Mapping[int, Tuple[int, ...]]

    @property
    def fog_ids(self) -> List[int]:
        return [f.id for f in self.fogs]

    def fog(self, fog_id: int) -> FogSystem:
        for f in self.fogs:
            if f.id == fog_id:
                return f
        raise InvalidIdError(f"fog sconosciuto: {fog_id}")

    def neighbors(self, fog_id: int) -> Tuple[int, ...]:
        self.fog(fog_id)
        return self.adjacency.get(fog_id, ())

    def degree(self, fog_id: int) -> int:
        return len(self.neighbors(fog_id))

    @property
    def max_hops(self) -> int:
        xs = [f.grid_pos[0] for f in self.fogs]
        ys = [f.grid_pos[1] for f in self.fogs]
        return (max(xs) - min(xs)) + (max(ys) - min(ys))

    def mips_vector(self) -> np.ndarray:
        return np.array([f.node_mips for f in self.fogs])


def build_grid(width: int, height: int, seed, node_count: int = DEFAULT_NODE_COUNT) -> FederationTopology:
    """
    Federazione width x height con adiacenza a 4 vicini.

    Gli id sono assegnati riga per riga (id = y * width + x); i MIPS sono estratti
    uniformemente in [1500, 2500] dallo stream con il seme dato.
    """
    if width < 1 or height < 1:
        raise InvalidParameterError(f"dimensioni della griglia non valide: {width}x{height}")
    rng = np.random.default_rng(seed)
    mips = rng.uniform(MIPS_RANGE[0], MIPS_RANGE[1], size=width * height)

    fogs = []
    adjacency: Dict[int, Tuple[int, ...]] = {}
    for y in range(height):
        for x in range(width):
            fog_id = y * width + x
            fogs.append(FogSystem(fog_id, (x, y), float(mips[fog_id]), node_count))
            neighbors = []
            for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
                nx_, ny_ = x + dx, y + dy
                if 0 <= nx_ < width and 0 <= ny_ < height:
                    neighbors.append(ny_ * width + nx_)
            adjacency[fog_id] = tuple(sorted(neighbors))
    return FederationTopology(tuple(fogs), adjacency)


def hop_distance(topology: FederationTopology, src: int, dst: int) -> int:
    """Distanza di Manhattan sulla griglia"""
    a = topology.fog(src).grid_pos
    b = topology.fog(dst).grid_pos
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class EtcMatrix:
    """Latenze di calcolo (tipo di micro-servizio, fog) -> PMF in ms"""

    def __init__(self, entries: Mapping[Tuple[str, int], LatencyPmf]):
        self.entries = dict(entries)
        self._chains: Dict[Tuple[Tuple[str, ...], int], LatencyPmf] = {}

    @property
    def types(self) -> List[str]:
        return sorted({t for t, _ in self.entries})

    @property
    def fog_ids(self) -> List[int]:
        return sorted({f for _, f in self.entries})

    def get(self, service_type: str, fog_id: int) -> LatencyPmf:
        try:
            return self.entries[(service_type, fog_id)]
        except KeyError:
            raise MissingProfileError(f"voce ETC mancante: ({service_type}, fog {fog_id})") from None

    def mean(self, service_type: str, fog_id: int) -> float:
        return self.get(service_type, fog_id).mean

    def chain(self, types: Sequence[str], fog_id: int) -> LatencyPmf:
        """Convoluzione della catena di tipi sul fog, memorizzata per riuso"""
        key = (tuple(types), fog_id)
        cached = self._chains.get(key)
        if cached is None:
            cached = convolve_chain([self.get(t, fog_id) for t in types])
            self._chains[key] = cached
        return cached

    def chain_mean(self, types: Iterable[str], fog_id: int) -> float:
        return math.fsum(self.mean(t, fog_id) for t in types)


class EttMatrix:
    """
    Latenze di comunicazione verso il fog di destinazione, in ms.

    `get` legge la voce (tipo, fog, hop) usata per l'input della richiesta;
    `transfer` da' la latenza di un carico qualsiasi su h hop e serve agli archi
    tra micro-servizi, ognuno con la propria quantita' di dati.
    """

    def __init__(self, entries: Mapping[Tuple[str, int, int], LatencyPmf],
                 link: Optional[LinkProfile] = None,
                 latency_by_hops: Sequence[LatencyPmf] = ()):
        self.entries = dict(entries)
        self.link = link
        self.latency_by_hops = list(latency_by_hops)
        self._transfers: Dict[Tuple[float, int], LatencyPmf] = {}

    def get(self, service_type: str, fog_id: int, hops: int) -> LatencyPmf:
        try:
            return self.entries[(service_type, fog_id, hops)]
        except KeyError:
            raise MissingProfileError(
                f"voce ETT mancante: ({service_type}, fog {fog_id}, {hops} hop)") from None

    def transfer(self, data_mb: float, hops: int) -> LatencyPmf:
        """Latenza per hop convoluta h volte, traslata di h tempi di trasmissione del carico"""
        if data_mb < 0:
            raise InvalidParameterError(f"dati negativi: {data_mb} MB")
        if hops == 0:
            return self.latency_by_hops[0] if self.latency_by_hops else LatencyPmf.point(0.0)
        if self.link is None or not 0 < hops < len(self.latency_by_hops):
            raise MissingProfileError(f"profilo dei link mancante per {hops} hop")
        key = (round(data_mb, 9), hops)
        cached = self._transfers.get(key)
        if cached is None:
            cached = shift(self.latency_by_hops[hops], hops * self.link.transfer_ms(data_mb))
            self._transfers[key] = cached
        return cached


def build_etc(topology: FederationTopology, profiles: Mapping[str, NormalSpec],
              bin_width: float = DEFAULT_BIN_WIDTH_MS) -> EtcMatrix:
    """ETC(i, j): lavoro in MI del tipo i diviso per la velocita' del fog j, in ms"""
    if not profiles:
        raise InvalidParameterError("nessun profilo di lavoro per la ETC")
    entries = {}
    for fog in topology.fogs:
        scale = 1000.0 / fog.node_mips
        for service_type, work in profiles.items():
            entries[(service_type, fog.id)] = pmf_from_normal(work.scaled(scale), bin_width)
    logger.debug("ETC costruita: %d tipi x %d fog", len(profiles), len(topology.fogs))
    return EtcMatrix(entries)


def build_ett(topology: FederationTopology, link: LinkProfile, data_mb: Mapping[str, float],
              bin_width: float = DEFAULT_BIN_WIDTH_MS) -> EttMatrix:
    """
    ETT per ogni hop fino al diametro della griglia.

    h hop: convoluzione h volte della latenza per hop, traslata di h tempi di
    trasferimento; 0 hop e' una massa unitaria in 0 ms.
    """
    hop_pmf = pmf_from_normal(link.per_hop_latency, bin_width)
    latency_by_hops = [LatencyPmf.point(0.0, bin_width)]
    for _ in range(topology.max_hops):
        latency_by_hops.append(hop_pmf if len(latency_by_hops) == 1
                               else convolve(latency_by_hops[-1], hop_pmf))

    matrix = EttMatrix({}, link, latency_by_hops)
    for service_type, size in data_mb.items():
        per_hop = [latency_by_hops[0]] + [
            matrix.transfer(size, h) for h in range(1, len(latency_by_hops))
        ]
        for fog in topology.fogs:
            for hops, pmf in enumerate(per_hop):
                matrix.entries[(service_type, fog.id, hops)] = pmf
    return matrix


def mean_exec_profile(etc: EtcMatrix, service_type: str) -> float:
    """Media sui fog delle medie ETC del tipo (E_i della formula delle deadline)"""
    means = [pmf.mean for (t, _), pmf in etc.entries.items() if t == service_type]
    if not means:
        raise MissingProfileError(f"profilo sconosciuto: {service_type}")
    return math.fsum(means) / len(means)


def mean_exec_table(etc: EtcMatrix, types: Iterable[str]) -> Dict[str, float]:
    return {t: mean_exec_profile(etc, t) for t in types}


