"""
Analytics Engine per FogPartSim
Aggregazione dei run: medie, intervalli di confidenza al 95% e differenze tra metodi
"""

import logging
import math
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from sim_errors import MissingDataError

logger = logging.getLogger(__name__)

CELL_KEYS = ["scenario", "method", "requests", "mix", "degree"]
DELTA_KEYS = ["scenario", "requests", "mix", "degree"]
METRICS = ["meet_rate", "avg_makespan_ms"]
Z_95 = 1.96


class AnalyticsEngine:
    """Motore per l'analisi delle righe prodotte da simulate"""

    def __init__(self, runs):
        if isinstance(runs, pd.DataFrame):
            self.df = runs.copy()
        else:
            self.df = pd.DataFrame(list(runs))

    @property
    def empty(self) -> bool:
        return self.df.empty

    def summary(self) -> pd.DataFrame:
        return aggregate(self.df)

    def deltas(self, pairs: Optional[Sequence[Sequence[str]]] = None) -> pd.DataFrame:
        return method_deltas(self.summary(), pairs)

    def cell_value(self, method: str, metric: str = "meet_rate", **cell) -> float:
        """Media di una metrica per un metodo in una cella (requests=..., degree=...)"""
        s = self.summary()
        mask = s["method"] == method
        for key, value in cell.items():
            mask &= s[key] == value
        hits = s.loc[mask, f"{metric}_mean"]
        if hits.empty:
            raise MissingDataError(f"nessuna cella per {method} {cell}")
        return float(hits.iloc[0])


def aggregate(df: pd.DataFrame) -> pd.DataFrame:
    """
    Media e semi-ampiezza dell'IC al 95% (1.96 * s / sqrt(n)) per cella.
    Ogni cella deve contenere almeno due run.
    """
    if df.empty:
        raise MissingDataError("nessun run da aggregare")

    grouped = df.groupby(CELL_KEYS, sort=True)
    counts = grouped.size()
    thin = counts[counts < 2]
    if not thin.empty:
        cell = dict(zip(CELL_KEYS, thin.index[0]))
        raise MissingDataError(f"cella con meno di due run: {cell}")

    stats = grouped[METRICS].agg(["mean", "std"])
    out = pd.DataFrame(index=stats.index)
    out["n"] = counts
    for metric in METRICS:
        out[f"{metric}_mean"] = stats[(metric, "mean")]
        std = stats[(metric, "std")].fillna(0.0)
        out[f"{metric}_hw"] = Z_95 * std / np.sqrt(counts)
    return out.reset_index()


def method_deltas(summary: pd.DataFrame,
                  pairs: Optional[Iterable[Sequence[str]]] = None) -> pd.DataFrame:
    """
    Differenze tra metodi nella stessa cella (A - B).

    La semi-ampiezza combinata e' sqrt(h_A^2 + h_B^2). Senza pairs si
    considerano tutte le coppie ordinate di metodi presenti nella cella.
    """
    merged = summary.merge(summary, on=DELTA_KEYS, suffixes=("_a", "_b"))
    merged = merged[merged["method_a"] != merged["method_b"]]
    if pairs is not None:
        wanted = {(a, b) for a, b in pairs}
        keep = [(a, b) in wanted for a, b in zip(merged["method_a"], merged["method_b"])]
        merged = merged[keep]

    out = merged[DELTA_KEYS + ["method_a", "method_b"]].copy()
    for metric in METRICS:
        out[f"{metric}_delta"] = merged[f"{metric}_mean_a"] - merged[f"{metric}_mean_b"]
        out[f"{metric}_hw"] = np.sqrt(merged[f"{metric}_hw_a"] ** 2 + merged[f"{metric}_hw_b"] ** 2)
    return out.sort_values(DELTA_KEYS + ["method_a", "method_b"]).reset_index(drop=True)


def half_width(values: Sequence[float]) -> float:
    """Semi-ampiezza dell'IC al 95% di un campione (stessa formula di aggregate)"""
    n = len(values)
    if n < 2:
        raise MissingDataError("servono almeno due valori")
    return Z_95 * float(np.std(values, ddof=1)) / math.sqrt(n)


def format_table(df: pd.DataFrame) -> str:
    if df.empty:
        return "(vuoto)"
    return df.to_string(index=False, float_format=lambda x: f"{x:.4f}")


def summary_by_method(rows: List[Mapping]) -> pd.DataFrame:
    """Riassunto per metodo su tutte le celle, loggato a fine sweep da simulate"""
    df = pd.DataFrame(rows)
    if df.empty:
        return df
    return df.groupby("method").agg(
        runs=("seed", "count"),
        meet_rate=("meet_rate", "mean"),
        avg_makespan_ms=("avg_makespan_ms", "mean"),
    ).reset_index()
