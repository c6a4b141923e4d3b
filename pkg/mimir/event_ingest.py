"""Parsing of raw session logs into the canonical event schema.

Canonical CSV header::

    event_id,timestamp,session_id,action_type,raw_source_label,node_id,node_kind,connected_from,origin,payload

``connected_from`` is ``;``-joined in CSV and an array in JSON-lines.
"""

import csv
import io
import json
import logging
from dataclasses import replace
from typing import BinaryIO, Dict, Iterator, List, Tuple, Union

from .errors import ConflictingEventId, MalformedRecord, MissingRequiredField, MixedSessions
from .models import DEFAULT_KIND, ORIGINS, ParseReport, RawEvent, SessionLog
from .util import format_timestamp, parse_timestamp

__all__ = [
    "FIELDS",
    "FORMATS",
    "parse_events",
    "split_sessions",
    "normalize",
    "dump_events",
    "event_to_dict",
    "event_from_dict",
]

log = logging.getLogger(__name__)

FIELDS = (
    "event_id",
    "timestamp",
    "session_id",
    "action_type",
    "raw_source_label",
    "node_id",
    "node_kind",
    "connected_from",
    "origin",
    "payload",
)
REQUIRED = ("event_id", "timestamp", "action_type")
FORMATS = ("csv", "jsonl")

Source = Union[bytes, str, BinaryIO]


def _read_text(data: Source) -> str:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise MalformedRecord(0, f"input is not UTF-8: {e}")
    return data


def _csv_records(text: str) -> Iterator[Tuple[int, Dict[str, str]]]:
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    for row in reader:
        if header is None:
            if not row:
                continue
            header = [h.strip() for h in row]
            missing = [f for f in REQUIRED if f not in header]
            if missing:
                raise MissingRequiredField(reader.line_num, missing[0])
            continue
        if not row or row == [""]:
            continue
        if len(row) != len(header):
            yield reader.line_num, MalformedRecord(reader.line_num, f"expected {len(header)} columns, got {len(row)}")
            continue
        yield reader.line_num, dict(zip(header, row))


def _jsonl_records(text: str) -> Iterator[Tuple[int, Dict]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            yield lineno, MalformedRecord(lineno, f"invalid JSON: {e.msg}")
            continue
        if not isinstance(record, dict):
            yield lineno, MalformedRecord(lineno, "record is not an object")
            continue
        yield lineno, record


def _text(record, name, line) -> str:
    value = record.get(name)
    if value is None:
        return ""
    if not isinstance(value, str):
        raise MalformedRecord(line, f"field '{name}' must be a string")
    return value


def _to_event(record: Dict, line: int) -> RawEvent:
    for name in REQUIRED:
        if not _text(record, name, line).strip():
            raise MissingRequiredField(line, name)

    try:
        timestamp = parse_timestamp(record["timestamp"])
    except (ValueError, OverflowError) as e:
        raise MalformedRecord(line, f"bad timestamp: {e}")

    parents = record.get("connected_from")
    if parents is None:
        parents = ()
    elif isinstance(parents, str):
        parents = tuple(p.strip() for p in parents.split(";") if p.strip())
    elif isinstance(parents, list) and all(isinstance(p, str) for p in parents):
        parents = tuple(parents)
    else:
        raise MalformedRecord(line, "connected_from must be a list of node ids")

    node_id = _text(record, "node_id", line) or None
    if node_id is not None and node_id in parents:
        raise MalformedRecord(line, f"node '{node_id}' lists itself in connected_from")

    origin = _text(record, "origin", line).strip().lower() or "user"
    if origin not in ORIGINS:
        raise MalformedRecord(line, f"unknown origin '{origin}'")

    return RawEvent(
        event_id=record["event_id"],
        timestamp=timestamp,
        session_id=_text(record, "session_id", line),
        action_type=record["action_type"],
        raw_source_label=_text(record, "raw_source_label", line),
        node_id=node_id,
        node_kind=_text(record, "node_kind", line).strip().lower() or DEFAULT_KIND,
        connected_from=parents,
        origin=origin,
        payload=_text(record, "payload", line),
    )


def _parse(data: Source, fmt: str, strict: bool) -> Tuple[List[RawEvent], ParseReport]:
    if fmt not in FORMATS:
        raise MalformedRecord(0, f"unknown format '{fmt}'")
    text = _read_text(data)
    records = _csv_records(text) if fmt == "csv" else _jsonl_records(text)

    events = []
    errors = []
    seen = 0
    for line, record in records:
        seen += 1
        try:
            if isinstance(record, MalformedRecord):
                raise record
            events.append(_to_event(record, line))
        except MalformedRecord as e:
            if strict:
                raise
            log.warning("Skipping malformed record: %s", e)
            errors.append(str(e))

    report = ParseReport(records=seen, skipped=len(errors), errors=tuple(errors))
    log.info("Parsed %d events from %s (%d skipped)", len(events), fmt, report.skipped)
    return events, report


def split_sessions(data: Source, fmt: str = "csv", strict: bool = True) -> List[SessionLog]:
    """Parses a stream and groups its events by session, in first-seen order."""
    events, report = _parse(data, fmt, strict)
    grouped: Dict[str, List[RawEvent]] = {}
    for event in events:
        grouped.setdefault(event.session_id, []).append(event)
    if not grouped:
        return [SessionLog("", (), fmt, report)]
    return [SessionLog(sid, tuple(evs), fmt, report) for sid, evs in grouped.items()]


def parse_events(data: Source, fmt: str = "csv", strict: bool = True) -> SessionLog:
    sessions = split_sessions(data, fmt, strict)
    if len(sessions) > 1:
        raise MixedSessions(s.session_id for s in sessions)
    return sessions[0]


def normalize(session: SessionLog) -> SessionLog:
    """Sorts events by (timestamp, event_id) and drops exact duplicates."""
    by_id: Dict[str, RawEvent] = {}
    duplicates = 0
    for event in session.events:
        prior = by_id.get(event.event_id)
        if prior is None:
            by_id[event.event_id] = event
        elif prior == event:
            duplicates += 1
        else:
            raise ConflictingEventId(event.event_id)

    if duplicates:
        log.info("Dropped %d duplicate events from session %s", duplicates, session.session_id)

    events = sorted(by_id.values(), key=lambda e: (e.timestamp, e.event_id))
    report = replace(session.report, duplicates=session.report.duplicates + duplicates)
    return replace(session, events=tuple(events), report=report)


def event_to_dict(event: RawEvent) -> Dict:
    return {
        "event_id": event.event_id,
        "timestamp": format_timestamp(event.timestamp),
        "session_id": event.session_id,
        "action_type": event.action_type,
        "raw_source_label": event.raw_source_label,
        "node_id": event.node_id or "",
        "node_kind": event.node_kind,
        "connected_from": list(event.connected_from),
        "origin": event.origin,
        "payload": event.payload,
    }


def dump_events(session: SessionLog, fmt: str = "csv") -> str:
    """Writes a session in the canonical CSV or JSON-lines form."""
    out = io.StringIO(newline="")
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(FIELDS)
        for event in session.events:
            row = event_to_dict(event)
            row["connected_from"] = ";".join(row["connected_from"])
            writer.writerow([row[f] for f in FIELDS])
    elif fmt == "jsonl":
        for event in session.events:
            out.write(json.dumps(event_to_dict(event), sort_keys=True))
            out.write("\n")
    else:
        raise ValueError(f"unknown format '{fmt}'")
    return out.getvalue()


def event_from_dict(record: Dict, line: int = 0) -> RawEvent:
    return _to_event(record, line)
