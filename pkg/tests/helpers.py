"""Shared builders for test stores and records."""

from datetime import datetime, timedelta, timezone

from logmorph import EventRecord, EventStore, Severity

EPOCH = datetime(2012, 1, 1, 0, 0, 0, tzinfo=timezone.utc)


def rec(message, host="node1", ts=0, source=None, event_id=None,
        severity=Severity.UNKNOWN, pid=None, raw=None):
    return EventRecord(
        occurred_at=EPOCH + timedelta(seconds=ts),
        host=host,
        message=message,
        raw=message if raw is None else raw,
        severity=severity,
        source=source,
        event_id=event_id,
        pid=pid,
    )


def make_store(messages_or_records):
    store = EventStore()
    for i, item in enumerate(messages_or_records):
        store.append(item if isinstance(item, EventRecord) else rec(item, ts=i))
    return store
