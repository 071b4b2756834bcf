"""Persistent event collection: NDJSON on disk, time-ordered iteration.

Events are kept in ingest (seq) order on disk so provenance survives;
time ordering is applied at iteration, with seq as the tiebreaker.
"""

import json
from dataclasses import dataclass
from datetime import datetime

from .model import EventRecord, Severity, record_from_json_dict, record_to_json_dict


class StoreFormatError(Exception):
    """A store file that does not parse; message carries path and line number."""


@dataclass(frozen=True)
class StoreMeta:
    count: int
    first: datetime | None
    last: datetime | None
    hosts: tuple[str, ...]
    sources: tuple[str, ...]


class EventStore:
    """Append-only collection of EventRecords with store-assigned seq numbers."""

    def __init__(self, events: list[EventRecord] | None = None):
        self.events: list[EventRecord] = []
        self._next_seq = 0
        for record in events or []:
            self.append(record)

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, EventStore) and self.events == other.events

    def append(self, record: EventRecord) -> EventRecord:
        record.seq = self._next_seq
        self._next_seq += 1
        self.events.append(record)
        return record

    def iter_time_order(self) -> list[EventRecord]:
        return sorted(self.events, key=lambda r: (r.occurred_at, r.seq))

    @property
    def meta(self) -> StoreMeta:
        stamps = [r.occurred_at for r in self.events]
        return StoreMeta(
            count=len(self.events),
            first=min(stamps) if stamps else None,
            last=max(stamps) if stamps else None,
            hosts=tuple(sorted({r.host for r in self.events})),
            sources=tuple(sorted({r.source for r in self.events if r.source is not None})),
        )

    @classmethod
    def _from_stored(cls, events: list[EventRecord]) -> "EventStore":
        # Bypass seq reassignment: stored seq values are authoritative.
        store = cls()
        store.events = events
        store._next_seq = max((r.seq for r in events), default=-1) + 1
        return store


@dataclass
class EventFilter:
    """Conjunction of optional constraints; an empty filter matches everything.

    host/source/event_id/severity are exact matches, the time range is
    inclusive on both ends.
    """

    host: str | None = None
    source: str | None = None
    event_id: int | None = None
    severity: Severity | None = None
    since: datetime | None = None
    until: datetime | None = None

    def matches(self, record: EventRecord) -> bool:
        if self.host is not None and record.host != self.host:
            return False
        if self.source is not None and record.source != self.source:
            return False
        if self.event_id is not None and record.event_id != self.event_id:
            return False
        if self.severity is not None and record.severity != self.severity:
            return False
        if self.since is not None and record.occurred_at < self.since:
            return False
        if self.until is not None and record.occurred_at > self.until:
            return False
        return True


def select(store: EventStore, flt: EventFilter) -> list[EventRecord]:
    """Events satisfying every constraint, in (occurred_at, seq) order."""
    return [r for r in store.iter_time_order() if flt.matches(r)]


def dumps_record(record: EventRecord) -> str:
    # ensure_ascii escapes surrogate markers, keeping the file plain ASCII
    # and the raw bytes recoverable on read.
    return json.dumps(record_to_json_dict(record), ensure_ascii=True, separators=(",", ":"))


def write_store(store: EventStore, path: str) -> None:
    """One canonical NDJSON record per line; output is byte-stable."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for record in store.events:
            fh.write(dumps_record(record) + "\n")


def read_store(path: str) -> EventStore:
    """Load a store written by write_store; malformed lines are fatal."""
    events: list[EventRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise StoreFormatError(f"{path}:{lineno}: blank line")
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record is not a JSON object")
                events.append(record_from_json_dict(obj))
            except (json.JSONDecodeError, ValueError) as exc:
                msg = exc.msg if isinstance(exc, json.JSONDecodeError) else str(exc)
                raise StoreFormatError(f"{path}:{lineno}: {msg}") from None
    return EventStore._from_stored(events)
