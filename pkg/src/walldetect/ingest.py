"""Flight-log files and corpus manifests.

A flight log is UTF-8 comma-separated text with one header line naming the
columns in :data:`~walldetect.core.COLUMNS` order. A manifest is a JSON array
of ``{"path", "label", "flight_id"}`` objects; relative paths resolve against
the manifest's directory. Labels come from the manifest only.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import (
    BLOCKING_RULES,
    COLUMNS,
    NOMINAL_RATE_HZ,
    FlightLog,
    LabelError,
    WallLabel,
    decode_label,
    encode_label,
    validate_flight_log,
)

HEADER = ",".join(COLUMNS)


class LogParseError(ValueError):
    """Malformed flight-log content. ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None, flight_id: str | None = None):
        self.line = line
        self.flight_id = flight_id
        where = []
        if flight_id is not None:
            where.append(f"flight {flight_id}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class LogValidationError(ValueError):
    def __init__(self, flight_id: str, violations):
        self.flight_id = flight_id
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"flight {flight_id}: {shown}{more}")


class ManifestError(ValueError):
    pass


def parse_flight_log(
    content: bytes | str,
    label: WallLabel,
    flight_id: str,
    sample_rate_hz: float = NOMINAL_RATE_HZ,
) -> FlightLog:
    """Parse one flight-log file.

    Raises :class:`LogParseError` for structural problems and
    :class:`LogValidationError` when a blocking invariant fails (timestamps
    not strictly increasing, non-finite values, attitude out of range).
    Short logs and off-nominal sample rates are allowed here; they show up in
    :func:`~walldetect.core.validate_flight_log`.
    """
    text = content.decode("utf-8") if isinstance(content, (bytes, bytearray)) else content
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise LogParseError("empty file", 1, flight_id)
    header = [h.strip() for h in lines[0].split(",")]
    if tuple(header) != COLUMNS:
        raise LogParseError(f"unexpected header {lines[0]!r}, want {HEADER!r}", 1, flight_id)

    ncol = len(COLUMNS)
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != ncol:
            raise LogParseError(f"expected {ncol} columns, found {len(fields)}", lineno, flight_id)
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise LogParseError(f"non-numeric field ({exc})", lineno, flight_id) from None
    if not rows:
        raise LogParseError("no samples", None, flight_id)

    log = FlightLog(np.array(rows, dtype=np.float64), label, flight_id, sample_rate_hz)
    blocking = [v for v in validate_flight_log(log) if v.rule in BLOCKING_RULES]
    if blocking:
        raise LogValidationError(flight_id, blocking)
    return log


def render_flight_log(log: FlightLog) -> bytes:
    """Inverse of :func:`parse_flight_log`; floats use shortest round-trip repr."""
    out = [HEADER]
    for row in log.data.tolist():
        out.append(",".join(map(repr, row)))
    out.append("")
    return "\n".join(out).encode("utf-8")


def read_flight_log(path: str | os.PathLike, label: WallLabel, flight_id: str) -> FlightLog:
    return parse_flight_log(Path(path).read_bytes(), label, flight_id)


def write_flight_log(log: FlightLog, path: str | os.PathLike) -> None:
    Path(path).write_bytes(render_flight_log(log))


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: WallLabel
    flight_id: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for e in self.entries:
            if e.flight_id in seen:
                raise ManifestError(f"duplicate flight_id {e.flight_id!r}")
            seen.add(e.flight_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_label(self) -> dict[WallLabel, list[ManifestEntry]]:
        out: dict[WallLabel, list[ManifestEntry]] = {}
        for e in self.entries:
            out.setdefault(e.label, []).append(e)
        return out

    def check_files(self) -> None:
        for e in self.entries:
            if not e.path.is_file():
                raise ManifestError(f"missing flight-log file {str(e.path)!r} (flight {e.flight_id})")

    def to_json(self, base: str | os.PathLike | None = None) -> bytes:
        items = []
        for e in self.entries:
            p = e.path
            if base is not None:
                try:
                    p = p.relative_to(Path(base))
                except ValueError:
                    pass
            items.append({"path": p.as_posix(), "label": encode_label(e.label), "flight_id": e.flight_id})
        return (json.dumps(items, indent=2) + "\n").encode("utf-8")


def manifest_from_json(content: bytes | str, base: str | os.PathLike = ".") -> CorpusManifest:
    try:
        items = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(items, list):
        raise ManifestError("manifest must be a JSON array")
    entries = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or {"path", "label", "flight_id"} - set(item):
            raise ManifestError(f"manifest entry {i} needs path, label and flight_id")
        try:
            label = decode_label(str(item["label"]))
        except LabelError as exc:
            raise ManifestError(f"manifest entry {i}: {exc}") from None
        p = Path(item["path"])
        if not p.is_absolute():
            p = Path(base) / p
        entries.append(ManifestEntry(p, label, str(item["flight_id"])))
    return CorpusManifest(tuple(entries))


def read_manifest(path: str | os.PathLike) -> CorpusManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {str(path)!r}")
    return manifest_from_json(path.read_bytes(), base=path.parent)


def write_manifest(manifest: CorpusManifest, path: str | os.PathLike) -> None:
    path = Path(path)
    path.write_bytes(manifest.to_json(base=path.parent))


def load_corpus(manifest: CorpusManifest | Iterable[ManifestEntry]) -> list[FlightLog]:
    """Read every flight named in the manifest, in manifest order."""
    if not isinstance(manifest, CorpusManifest):
        manifest = CorpusManifest(tuple(manifest))
    manifest.check_files()
    logs = []
    for e in manifest.entries:
        try:
            logs.append(read_flight_log(e.path, e.label, e.flight_id))
        except LogParseError as exc:
            if exc.flight_id is None:
                exc.flight_id = e.flight_id
            raise
    return logs
