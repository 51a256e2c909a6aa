"""Deterministic writers for CSV, JSON and SVG outputs.

CSV files are RFC 4180 (comma separated, CRLF records, minimal quoting)
preceded by ``#`` comment lines carrying the tool version and the resolved
config as one-line JSON. Floats are written with ``repr`` so they round-trip
exactly and never depend on locale.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from scalewave import __version__

TOOL = f"scalewave {__version__}"


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    if hasattr(x, "item"):  # numpy scalar
        return fmt(x.item())
    return str(x)


def clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats turned into strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def config_line(config: dict) -> str:
    return json.dumps(clean(config), sort_keys=True, separators=(",", ":"))


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]], config: dict) -> str:
    buf = io.StringIO(newline="")
    buf.write(f"# {TOOL}\r\n")
    buf.write(f"# config: {config_line(config)}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows, config) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(columns, rows, config))
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a file written by :func:`write_csv`: ``(meta, header, rows)``."""
    meta: dict = {}
    body = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# config: "):
                meta["config"] = json.loads(line[len("# config: "):])
            elif line.startswith("# "):
                meta["tool"] = line[2:].strip()
            else:
                body.append(line)
    records = list(csv.reader(io.StringIO("".join(body), newline="")))
    if not records:
        raise ValueError(f"{path}: missing header row")
    return meta, records[0], records[1:]


def json_text(payload: dict, config: dict) -> str:
    doc = {"tool": TOOL, "config": config, **payload}
    return json.dumps(clean(doc), sort_keys=True, indent=2) + "\n"


def write_json(path, payload: dict, config: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json_text(payload, config))
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
