"""Result files and run manifests.

Records are flat dicts. Each record type has a fixed field list (see
``SCHEMAS``); CSV files always start with that header, so an empty run still
yields a parseable file. Floats are written in shortest round-trip form,
which makes files byte-stable and exactly re-parseable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA_VERSION = 1

_ESTIMATE_FIELDS = ("n", "hits", "ambiguous", "p_hat", "ci_lo", "ci_hi", "ci_level",
                    "p_hat_pessimistic", "ci_hi_pessimistic")

SCHEMAS: dict[str, tuple[str, ...]] = {
    "sieve": ("index", "p", "log_p", "inv_sqrt_p"),
    "lemma-a1": ("m", "P", "Q", "sum", "main_term", "residual", "step_change"),
    "mgf-check": ("case", "kind", "p", "lam1", "lam2", "h1", "h2", "series", "quadrature",
                  "abs_diff", "passed"),
    "bounds": ("name", "value"),
    "tail": ("event", "r", "k", "v", "h", "x", "threshold") + _ESTIMATE_FIELDS
            + ("c", "bound", "fitted_c"),
    "continuity": ("r", "k", "v", "h", "x", "a", "threshold") + _ESTIMATE_FIELDS
                  + ("c", "c_tilde", "bound", "fitted_c_tilde"),
    "joint": ("r", "k", "v", "x", "y", "h1", "h2") + _ESTIMATE_FIELDS
             + ("c", "c_tilde", "bound"),
    "gap": ("r", "k", "K", "L", "grid_count", "resolution") + _ESTIMATE_FIELDS
           + ("bound", "gap_mean", "gap_std", "gap_min", "gap_median", "gap_q90", "gap_q99",
              "gap_max", "max_enclosure_width", "negative_slack", "min_lower_gap"),
}


def format_value(value) -> str:
    """CSV cell text: ``repr`` for floats, plain integers, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def _json_value(value):
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else repr(value)
    return value


def render(records: Iterable[dict], fmt: str, fields: Sequence[str]) -> bytes:
    records = list(records)
    for rec in records:
        extra = set(rec) - set(fields)
        if extra:
            raise ValueError(f"record has fields outside the schema: {sorted(extra)}")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        for rec in records:
            writer.writerow([format_value(rec.get(f)) for f in fields])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        rows = [{f: _json_value(rec.get(f)) for f in fields} for rec in records]
        return (json.dumps(rows, indent=1, allow_nan=False) + "\n").encode("utf-8")
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def write_results(records: Iterable[dict], fmt: str, path: str | os.PathLike,
                  fields: Sequence[str]) -> str:
    """Write ``records`` to ``path``; returns the SHA-256 hex digest of the bytes written."""
    data = render(records, fmt, fields)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_results(path: str | os.PathLike) -> list[dict]:
    """Parse a CSV or JSON result file back into records."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return [{h: _parse_cell(c) for h, c in zip(header, row)} for row in body]


def file_digest(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(out: str | os.PathLike) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(path: str | os.PathLike, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_manifest(path: str | os.PathLike) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
