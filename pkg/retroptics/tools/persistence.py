"""Saving and loading records, plan netlists and plot-ready CSV files."""

import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

RECORD_TYPES = [
    "engineered_target",
    "multiport_plan",
    "counts",
    "analytic",
    "analysis",
]

RECORD_VERSION = 1

PathLike = Union[str, Path]


def save_record(
    path: PathLike,
    record_type: str,
    content: Dict[str, Any],
    name: Optional[str] = None,
) -> Dict[str, str]:
    """
    Write a JSON record with a metadata header.

    Only ``metadata`` carries a timestamp, so ``content`` is identical across
    reruns with the same inputs.

    Args:
        path: Output file
        record_type: One of RECORD_TYPES
        content: JSON-serializable payload
        name: Optional human-readable name stored in the metadata

    Returns:
        dict: {"filepath": str, "timestamp": str}

    Raises:
        ValueError: If record_type is not recognized
    """
    if record_type not in RECORD_TYPES:
        raise ValueError(
            f"Invalid record_type '{record_type}'. Must be one of: {RECORD_TYPES}"
        )
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().isoformat()
    metadata = {
        "name": name or filepath.stem,
        "record_type": record_type,
        "version": RECORD_VERSION,
        "timestamp": timestamp,
    }
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump({"metadata": metadata, "content": content}, f, indent=2)
        f.write("\n")

    return {"filepath": str(filepath), "timestamp": timestamp}


def load_record(path: PathLike, record_type: Optional[str] = None) -> Dict[str, Any]:
    """
    Read a record written by :func:`save_record`.

    Plain JSON documents without a metadata header are returned as content.

    Args:
        path: Record file
        record_type: Expected record type (optional)

    Returns:
        dict: {"metadata": dict, "content": dict}

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the record type does not match
    """
    filepath = Path(path)
    if not filepath.exists():
        raise FileNotFoundError(f"Record file not found: {filepath}")
    with open(filepath, "r", encoding="utf-8") as f:
        data = json.load(f)

    if not isinstance(data, dict) or "metadata" not in data or "content" not in data:
        return {"metadata": {}, "content": data}

    found = data["metadata"].get("record_type")
    if record_type is not None and found != record_type:
        raise ValueError(f"Expected a '{record_type}' record, found '{found}'")
    return data


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """
    Write rows with a header; floats use ``%.12g`` and None becomes empty.

    Returns:
        str: Path written
    """
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    return str(filepath)


def _sanitize_filename(name: str) -> str:
    """
    Sanitize a string for use as a filename.

    Args:
        name: String to sanitize

    Returns:
        str: Sanitized filename
    """
    # Replace spaces and special characters with underscores
    safe_name = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)

    while "__" in safe_name:
        safe_name = safe_name.replace("__", "_")

    safe_name = safe_name.strip("_").lower()

    if len(safe_name) > 100:
        safe_name = safe_name[:100]

    return safe_name or "record"
