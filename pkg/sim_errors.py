"""
Eccezioni di FogPartSim
Gerarchia unica: il codice di libreria solleva, solo la CLI intercetta e stampa
"""

from typing import Optional


class FogSimError(Exception):
    """Radice di tutti gli errori del simulatore"""


class InvalidParameterError(FogSimError, ValueError):
    """Parametro o argomento fuori dominio"""


class IncompatibleDistributionsError(FogSimError, ValueError):
    """Distribuzioni con bin_width diversi"""


class InvalidComparisonError(FogSimError, ValueError):
    """Confronto tra intervalli di confidenza con livelli diversi"""


class MissingProfileError(FogSimError, KeyError):
    """Voce ETC/ETT o tempo medio di esecuzione mancante"""

    def __str__(self):
        # KeyError mette il messaggio tra apici
        return str(self.args[0]) if self.args else ""


class NotADagError(FogSimError, ValueError):
    """Il grafo del workflow contiene un ciclo"""


class NotPartitionableError(FogSimError, ValueError):
    """Workflow con un solo vertice"""


class InvalidIdError(FogSimError, KeyError):
    """Identificativo di fog sconosciuto"""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MissingDataError(FogSimError, ValueError):
    """Celle di aggregazione vuote o con meno di due run"""


class SimulationInvariantError(FogSimError, AssertionError):
    """Violazione di causalita', esclusivita' dei nodi o conservazione"""


class ConfigError(FogSimError, ValueError):
    """Errore di configurazione con diagnostica campo/riga"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"riga {line}")
        if field:
            location.append(f"campo '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class CsvFormatError(FogSimError, ValueError):
    """CSV dei run malformato"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"[riga {row}] " if row is not None else ""
        super().__init__(f"{prefix}{message}")
