"""
Utilità per FogPartSim
Include: configurazione del logging, parallelismo di default, esecuzione delle sweep
"""

import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence

from sim_engine import RunSpec, SimReport, run
from sim_errors import ConfigError

PARALLEL_ENV_VAR = "FOGSIM_PARALLEL"
LOG_FORMAT = "[%(asctime)s] %(message)s"
LOG_DATEFMT = "%H:%M:%S"


def setup_logging(verbose: bool = False, stream=None) -> None:
    """Formato [HH:MM:SS] messaggio sulla console, DEBUG con --verbose"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        stream=stream or sys.stderr,
        force=True,
    )


def default_parallelism() -> int:
    raw = os.environ.get(PARALLEL_ENV_VAR)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{PARALLEL_ENV_VAR} deve essere un intero, trovato {raw!r}") from None
        if value < 1:
            raise ConfigError(f"{PARALLEL_ENV_VAR} deve essere >= 1")
        return value
    return os.cpu_count() or 1


def format_elapsed(seconds: float) -> str:
    minutes, secs = divmod(int(round(seconds)), 60)
    return f"{minutes}m {secs:02d}s" if minutes else f"{secs}s"


def run_sweep(runs: Sequence[RunSpec], parallel: Optional[int] = None,
              progress: Optional[Callable[[int, int], None]] = None) -> List[SimReport]:
    """
    Esegue i run e restituisce i report nell'ordine di ingresso.

    Con parallel > 1 i run vanno su un pool di processi; map conserva l'ordine
    quindi il CSV non dipende dall'ordine di completamento.
    """
    parallel = parallel or default_parallelism()
    total = len(runs)
    reports: List[SimReport] = []
    started = time.monotonic()

    if parallel <= 1 or total <= 1:
        for spec in runs:
            reports.append(run(spec))
            if progress:
                progress(len(reports), total)
    else:
        with ProcessPoolExecutor(max_workers=min(parallel, total)) as pool:
            for report in pool.map(run, runs, chunksize=max(1, total // (parallel * 8))):
                reports.append(report)
                if progress:
                    progress(len(reports), total)

    logging.getLogger(__name__).debug("sweep di %d run in %s", total,
                                      format_elapsed(time.monotonic() - started))
    return reports
