#dataM.py
#File di managing dati: documenti JSON di scenario/workflow, CSV dei run, tracce JSON-lines
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Tuple

import pandas as pd

from sim_errors import ConfigError, CsvFormatError

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["scenario", "method", "requests", "mix", "degree", "seed", "meet_rate",
               "avg_makespan_ms"]

#=====JSON FUNCTIONS=====
def load_json_document(path) -> Tuple[Any, str]:
    """Legge un documento JSON; gli errori di sintassi riportano riga e colonna"""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON non valido: {e.msg} (colonna {e.colno})", line=e.lineno) from None


def load_workflow_file(path) -> Dict[str, Any]:
    doc, _ = load_json_document(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: atteso un oggetto JSON", field="workflows")
    return doc


#=====RUN CSV FUNCTIONS=====
def runs_dataframe(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=RUN_COLUMNS)


def save_runs_csv(rows: Iterable[Mapping[str, Any]], path) -> None:
    """Una riga per run, nell'ordine ricevuto; stessi valori, stessi byte"""
    df = runs_dataframe(rows)
    df.to_csv(path, index=False, lineterminator="\n")


def load_runs_csv(path) -> pd.DataFrame:
    """
    Rilegge il CSV dei run controllando header e tipi.
    Le righe sono numerate come nel file (l'header e' la riga 1).
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise CsvFormatError("file vuoto", row=1) from None
    except pd.errors.ParserError as e:
        raise CsvFormatError(f"CSV non leggibile: {e}") from None

    if list(df.columns) != RUN_COLUMNS:
        raise CsvFormatError(f"header inatteso: {','.join(df.columns)}", row=1)

    numeric = {"requests": int, "mix": float, "degree": int, "seed": int,
               "meet_rate": float, "avg_makespan_ms": float}
    records: List[Dict[str, Any]] = []
    for i, raw in enumerate(df.to_dict("records")):
        row_number = i + 2
        record: Dict[str, Any] = {"scenario": raw["scenario"], "method": raw["method"]}
        if not record["scenario"] or not record["method"]:
            raise CsvFormatError("scenario o metodo vuoto", row=row_number)
        for column, cast in numeric.items():
            try:
                record[column] = cast(raw[column])
            except (TypeError, ValueError):
                raise CsvFormatError(f"valore non valido in '{column}': {raw[column]!r}",
                                     row=row_number) from None
        if not 0.0 <= record["meet_rate"] <= 1.0:
            raise CsvFormatError(f"meet_rate fuori da [0,1]: {record['meet_rate']}", row=row_number)
        if record["avg_makespan_ms"] < 0:
            raise CsvFormatError("avg_makespan_ms negativo", row=row_number)
        records.append(record)
    return pd.DataFrame(records, columns=RUN_COLUMNS)

#=====TRACE FUNCTIONS=====
def write_trace_lines(records: Iterable[Mapping[str, Any]], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            json.dump(record, f, sort_keys=True)
            f.write("\n")
            count += 1
    return count


def read_trace_lines(path) -> List[Dict[str, Any]]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ConfigError(f"traccia non valida: {e.msg}", line=number) from None
    return records
