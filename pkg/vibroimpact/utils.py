"""
Utility functions for result files.

Writers for the CSV tables and JSON-lines lock reports produced by the
command-line interface. Numbers are printed with 9 significant digits.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """
    Format one CSV cell.

    Args:
        value: number, bool, string or None

    Returns:
        Floats with 9 significant digits, booleans as true/false, None as empty
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.9g}"
    return str(value)


def write_csv(
    path: PathLike, columns: Sequence[str], rows: Iterable[Dict[str, Any]]
) -> int:
    """
    Write rows to a CSV file with a fixed header.

    Args:
        path: destination file, parent directories are created
        columns: header, also the column order
        rows: dictionaries keyed by column name

    Returns:
        Number of data rows written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return count


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def append_jsonl(path: PathLike, record: Dict[str, Any]):
    """Append one JSON record per line; non-finite floats become null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clean = {key: _json_safe(value) for key, value in record.items()}
    with path.open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(clean, sort_keys=True) + "\n")


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]
