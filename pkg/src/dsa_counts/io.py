"""File formats: count CSVs, event JSON, draws/density CSVs and JSON reports.

Count CSV layout::

    # N=1000
    # M=50
    interval_end,count
    1.0,12
    2.0,30

``X_0 = 0`` is implicit. Floats are written with the shortest repr that
round-trips, UTF-8, ``\\n`` line endings.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .simulate import CountData, EventRecord

__all__ = [
    "format_float",
    "write_counts_csv",
    "read_counts_csv",
    "write_events_json",
    "read_events_json",
    "write_draws_csv",
    "write_density_csv",
    "read_table_csv",
    "write_json",
]

COUNTS_HEADER = "interval_end,count"


def format_float(x) -> str:
    return repr(float(x))


def _write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_counts_csv(data: CountData, path):
    lines = []
    if data.N is not None:
        lines.append(f"# N={data.N}")
    if data.M is not None:
        lines.append(f"# M={data.M}")
    lines.append(f"# T={format_float(data.T)}")
    lines.append(COUNTS_HEADER)
    for x, y in zip(data.schedule[1:], data.counts):
        lines.append(f"{format_float(x)},{int(y)}")
    _write_text(path, "\n".join(lines) + "\n")


def _parse_int(value: str, line: int, what: str) -> int:
    try:
        f = float(value)
    except ValueError:
        raise ParseError(f"{what} is not a number: {value!r}", line) from None
    if not math.isfinite(f) or f != int(f):
        raise ParseError(f"{what} must be an integer, got {value!r}", line)
    return int(f)


def read_counts_csv(path, N: int | None = None, M: int | None = None) -> CountData:
    """Parse a count CSV. ``N``/``M`` arguments override the metadata block."""
    text = Path(path).read_text(encoding="utf-8")
    meta: dict[str, str] = {}
    times, counts = [0.0], []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise ParseError("metadata must precede the header", lineno)
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = (part.strip() for part in body.split("=", 1))
            meta[key] = value
            continue
        if not header_seen:
            if line.replace(" ", "") != COUNTS_HEADER:
                raise ParseError(f"expected header {COUNTS_HEADER!r}, got {line!r}", lineno)
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        try:
            x = float(fields[0])
        except ValueError:
            raise ParseError(f"interval_end is not a number: {fields[0]!r}", lineno) from None
        y = _parse_int(fields[1], lineno, "count")
        if not math.isfinite(x) or x <= times[-1]:
            raise ParseError(f"interval_end must increase strictly (got {fields[0]} after {times[-1]})", lineno)
        if y < 0:
            raise ParseError(f"negative count {y}", lineno)
        times.append(x)
        counts.append(y)
    if not header_seen:
        raise ParseError(f"missing header {COUNTS_HEADER!r}")
    if not counts:
        raise ParseError("no data rows")
    if N is None and meta.get("N", "").lower() not in ("", "unknown", "none"):
        N = _parse_int(meta["N"], None, "N")
    if M is None and meta.get("M", "").lower() not in ("", "unknown", "none"):
        M = _parse_int(meta["M"], None, "M")
    if "T" in meta:
        try:
            T = float(meta["T"])
        except ValueError:
            raise ParseError(f"T is not a number: {meta['T']!r}") from None
        if T != times[-1]:
            raise ParseError(f"declared T={T} differs from the last interval_end {times[-1]}")
    try:
        return CountData(np.array(times), np.array(counts), N, M)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(obj, path):
    _write_text(path, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def events_to_dict(events: EventRecord) -> dict:
    return {
        "N": events.N,
        "M": events.M,
        "T": events.T,
        "infection_times": events.infection_times,
        "infectious_periods": events.infectious_periods,
        "censored": events.censored,
        "initial_recoveries": events.initial_recoveries,
    }


def write_events_json(events: EventRecord, path):
    write_json(events_to_dict(events), path)


def read_events_json(path) -> EventRecord:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return EventRecord(
            np.array(raw["infection_times"], dtype=float),
            np.array(raw["infectious_periods"], dtype=float),
            np.array(raw["censored"], dtype=bool),
            np.array(raw["initial_recoveries"], dtype=float),
            int(raw["N"]), int(raw["M"]), float(raw["T"]),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid event record: {exc}") from None


def _write_table(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def write_draws_csv(chain, path):
    """Retained draws, one row each, plus the log posterior."""
    rows = np.column_stack([chain.retained, chain.log_post[chain.burn_in:]])
    _write_table(path, list(chain.names) + ["log_post"], rows)


def write_density_csv(t, density, path):
    _write_table(path, ["t", "density"], np.column_stack([t, density]))


def read_table_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:] if line], dtype=float)
    return header, data.reshape(-1, len(header))
