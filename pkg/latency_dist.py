"""
Algebra delle distribuzioni di latenza per FogPartSim
PMF discrete a larghezza di bin fissa: costruzione, convoluzione, probabilita' di
completamento entro la deadline, quantili, intervalli di confidenza e campionamento
"""

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Dict, Mapping, Sequence

import numpy as np
from scipy import signal
from scipy.stats import norm

from sim_errors import (IncompatibleDistributionsError, InvalidComparisonError,
                        InvalidParameterError)

DEFAULT_BIN_WIDTH_MS = 1.0
DEFAULT_TRUNCATION = 4.0
DEFAULT_CI_LEVEL = 0.95
MASS_TOLERANCE = 1e-9

# tolleranza sui confronti tra centri di bin e soglie
_EPS = 1e-9


@dataclass(frozen=True)
class NormalSpec:
    """Media e deviazione standard (ms oppure MI, a seconda del contesto)"""
    mean: float
    std_dev: float

    def __post_init__(self):
        if not self.mean > 0:
            raise InvalidParameterError(f"media non positiva: {self.mean}")
        if self.std_dev < 0:
            raise InvalidParameterError(f"deviazione standard negativa: {self.std_dev}")

    def scaled(self, factor: float) -> "NormalSpec":
        return NormalSpec(self.mean * factor, self.std_dev * factor)


@dataclass(frozen=True)
class CiInterval:
    lo: float
    hi: float
    level: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidParameterError(f"intervallo invertito: [{self.lo}, {self.hi}]")
        if not 0 < self.level < 1:
            raise InvalidParameterError(f"livello fuori da (0,1): {self.level}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> Dict[str, float]:
        return {"lo": self.lo, "hi": self.hi, "level": self.level}


@dataclass(frozen=True, eq=False)
class LatencyPmf:
    """
    PMF discreta sulla latenza.

    Il bin k ha centro origin + k * bin_width. L'oggetto e' immutabile: l'array
    delle masse viene copiato e reso read-only alla costruzione.
    """
    bin_width: float
    origin: float
    mass: np.ndarray

    def __post_init__(self):
        mass = np.array(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size == 0:
            raise InvalidParameterError("la PMF richiede un vettore di masse non vuoto")
        if not self.bin_width > 0:
            raise InvalidParameterError(f"bin_width non positivo: {self.bin_width}")
        if self.origin < -_EPS:
            raise InvalidParameterError(f"origine negativa: {self.origin}")
        if np.any(mass < 0):
            raise InvalidParameterError("masse negative nella PMF")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise InvalidParameterError(f"la massa totale vale {total}, atteso 1")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "origin", max(0.0, float(self.origin)))
        object.__setattr__(self, "bin_width", float(self.bin_width))

    # ---- costruttori di comodo ----

    @classmethod
    def point(cls, value: float, bin_width: float = DEFAULT_BIN_WIDTH_MS) -> "LatencyPmf":
        """Massa unitaria nel bin piu' vicino a value"""
        return cls(bin_width, round(value / bin_width) * bin_width, [1.0])

    @classmethod
    def from_mapping(cls, masses: Mapping[float, float],
                     bin_width: float = DEFAULT_BIN_WIDTH_MS) -> "LatencyPmf":
        """Costruisce la PMF da {centro_ms: probabilita'}; i centri devono stare sulla griglia"""
        if not masses:
            raise InvalidParameterError("mappa di masse vuota")
        origin = min(masses)
        size = int(round((max(masses) - origin) / bin_width)) + 1
        mass = np.zeros(size)
        for center, prob in masses.items():
            offset = (center - origin) / bin_width
            index = int(round(offset))
            if abs(offset - index) > 1e-6:
                raise InvalidParameterError(f"il centro {center} non cade sulla griglia dei bin")
            mass[index] += prob
        return cls(bin_width, origin, mass)

    # ---- grandezze derivate ----

    @property
    def size(self) -> int:
        return int(self.mass.size)

    @cached_property
    def centers(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(self.size)

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    @cached_property
    def mean(self) -> float:
        return float(np.dot(self.centers, self.mass))

    @property
    def support_max(self) -> float:
        return self.origin + self.bin_width * (self.size - 1)

    def summary(self, level: float = DEFAULT_CI_LEVEL) -> Dict[str, float]:
        """Riassunto compatto per i log delle decisioni"""
        ci = central_ci(self, level)
        return {
            "mean_ms": round(self.mean, 6),
            "min_ms": self.origin,
            "max_ms": self.support_max,
            "ci_lo_ms": ci.lo,
            "ci_hi_ms": ci.hi,
        }

    def allclose(self, other: "LatencyPmf", atol: float = 1e-12) -> bool:
        return (math.isclose(self.bin_width, other.bin_width)
                and math.isclose(self.origin, other.origin, abs_tol=_EPS)
                and self.size == other.size
                and bool(np.allclose(self.mass, other.mass, rtol=0.0, atol=atol)))


def _check_same_width(a: LatencyPmf, b: LatencyPmf):
    if not math.isclose(a.bin_width, b.bin_width, rel_tol=1e-12):
        raise IncompatibleDistributionsError(
            f"bin_width diversi: {a.bin_width} vs {b.bin_width}")


def _normalised(bin_width: float, origin: float, mass: np.ndarray) -> LatencyPmf:
    """Ripulisce il rumore numerico (FFT), taglia le code nulle e rinormalizza"""
    mass = np.clip(mass, 0.0, None)
    nonzero = np.flatnonzero(mass > 1e-16)
    if nonzero.size == 0:
        raise InvalidParameterError("la convoluzione ha prodotto massa nulla")
    first, last = nonzero[0], nonzero[-1]
    mass = mass[first:last + 1]
    return LatencyPmf(bin_width, origin + first * bin_width, mass / mass.sum())


def pmf_from_normal(spec: NormalSpec, bin_width: float = DEFAULT_BIN_WIDTH_MS,
                    truncation: float = DEFAULT_TRUNCATION) -> LatencyPmf:
    """
    Discretizza una normale troncata su [max(0, mu - t*sigma), mu + t*sigma].

    I bin sono allineati ai multipli di bin_width; la probabilita' di ogni bin e'
    la differenza della CDF normale sui bordi del bin, tagliati all'intervallo di
    troncamento, poi rinormalizzata.
    """
    if not bin_width > 0:
        raise InvalidParameterError(f"bin_width non positivo: {bin_width}")
    if truncation < 1:
        raise InvalidParameterError(f"troncamento inferiore a 1 sigma: {truncation}")

    mu, sigma = spec.mean, spec.std_dev
    if sigma == 0:
        return LatencyPmf.point(mu, bin_width)

    lo = max(0.0, mu - truncation * sigma)
    hi = mu + truncation * sigma
    k_lo = math.floor(lo / bin_width + 0.5)
    k_hi = math.floor(hi / bin_width + 0.5)
    ks = np.arange(k_lo, k_hi + 1)
    left = np.clip((ks - 0.5) * bin_width, lo, hi)
    right = np.clip((ks + 0.5) * bin_width, lo, hi)
    mass = norm.cdf(right, loc=mu, scale=sigma) - norm.cdf(left, loc=mu, scale=sigma)
    if not mass.sum() > 0:
        return LatencyPmf.point(mu, bin_width)
    return _normalised(bin_width, k_lo * bin_width, mass)


def convolve(a: LatencyPmf, b: LatencyPmf) -> LatencyPmf:
    """Convoluzione discreta esatta: distribuzione della somma di due latenze indipendenti"""
    _check_same_width(a, b)
    mass = signal.convolve(a.mass, b.mass, method="auto")
    return _normalised(a.bin_width, a.origin + b.origin, mass)


def convolve_chain(parts: Sequence[LatencyPmf]) -> LatencyPmf:
    parts = list(parts)
    if not parts:
        raise InvalidParameterError("catena di distribuzioni vuota")
    if len(parts) == 1:
        return parts[0]
    return reduce(convolve, parts)


def prob_on_time(d: LatencyPmf, deadline: float) -> float:
    """P(D <= deadline): massa dei bin con centro <= deadline"""
    index = math.floor((deadline - d.origin) / d.bin_width + _EPS)
    if index < 0:
        return 0.0
    if index >= d.size - 1:
        return 1.0
    return float(min(1.0, max(0.0, d.cdf[index])))


def quantile(d: LatencyPmf, p: float) -> float:
    """Centro del primo bin con CDF >= p"""
    index = int(np.searchsorted(d.cdf, p - 1e-12, side="left"))
    return float(d.origin + d.bin_width * min(index, d.size - 1))


def central_ci(d: LatencyPmf, level: float = DEFAULT_CI_LEVEL) -> CiInterval:
    if not 0 < level < 1:
        raise InvalidParameterError(f"livello fuori da (0,1): {level}")
    tail = (1.0 - level) / 2.0
    return CiInterval(quantile(d, tail), quantile(d, 1.0 - tail), level)


def ci_disjoint(a: CiInterval, b: CiInterval) -> bool:
    """Vero se i due intervalli non si toccano; un estremo in comune conta come sovrapposizione"""
    if not math.isclose(a.level, b.level):
        raise InvalidComparisonError(f"livelli diversi: {a.level} vs {b.level}")
    return a.hi < b.lo or b.hi < a.lo


def shift(d: LatencyPmf, offset: float) -> LatencyPmf:
    """Trasla la PMF di offset ms, arrotondato al multiplo di bin piu' vicino"""
    if offset < 0:
        raise InvalidParameterError(f"traslazione negativa: {offset}")
    bins = round(offset / d.bin_width)
    if bins == 0:
        return d
    return LatencyPmf(d.bin_width, d.origin + bins * d.bin_width, d.mass)


def sample(d: LatencyPmf, rng: np.random.Generator) -> float:
    index = int(np.searchsorted(d.cdf, rng.random(), side="right"))
    return float(d.origin + d.bin_width * min(index, d.size - 1))


def sample_many(d: LatencyPmf, rng: np.random.Generator, size: int) -> np.ndarray:
    indexes = np.searchsorted(d.cdf, rng.random(size), side="right")
    return d.origin + d.bin_width * np.minimum(indexes, d.size - 1)
