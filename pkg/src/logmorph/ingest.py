"""Line parsers for the supported log formats plus bulk file ingestion.

Supported formats:
  syslog    BSD-style lines, optional <PRI> prefix, year supplied by caller
  wincsv    Windows event viewer CSV export with a header row
  sendmail  syslog lines whose message body is a key=value list
  ndjson    canonical store records, re-ingested with fresh sequence numbers
"""

import csv
import io
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .model import (
    ConfigError,
    EventRecord,
    MailEvent,
    ParseError,
    Severity,
    one_line,
    record_from_json_dict,
    scrub_surrogates,
)

FORMATS = ("syslog", "wincsv", "sendmail", "ndjson")

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

# <PRI> is optional; BSD timestamps pad single-digit days with a space.
_SYSLOG_LINE = re.compile(
    r"^(?:<(\d{1,3})>)?"
    r"([A-Z][a-z]{2}) {1,2}(\d{1,2}) "
    r"(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?"
    r"\s+(\S+)\s+(.*)$"
)

# "name[pid]: message" / "name: message" tag at the start of the free text.
_SYSLOG_TAG = re.compile(r"^([^\s:\[\]]+)(?:\[(\d+)\])?: ?(.*)$")

_QUEUE_ID = re.compile(r"^([A-Za-z0-9]{8,}): +(.*)$")
_MAIL_KV = re.compile(r"^([A-Za-z][\w.-]*)=(.*)$")

_WINDOWS_REQUIRED = ("level", "date and time", "source", "event id", "message")
_WINDOWS_LEVELS = {
    "error": Severity.ERROR,
    "warning": Severity.WARNING,
    "information": Severity.INFO,
}
_WINDOWS_TS_FORMATS = (
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
)


def decode_priority(pri: int) -> tuple[int, Severity]:
    """Split a syslog priority into (facility, severity): pri = 8*fac + sev."""
    if not 0 <= pri <= 191:
        raise ValueError(f"priority out of range 0..191: {pri}")
    return pri // 8, Severity(pri % 8)


def _to_utc(naive: datetime, tz_offset_min: int) -> datetime:
    # Log timestamps are local wall-clock at UTC+offset.
    return naive.replace(tzinfo=timezone.utc) - timedelta(minutes=tz_offset_min)


def parse_syslog_line(line: str, default_year: int, tz_offset_min: int = 0) -> EventRecord:
    """Parse one BSD-syslog line.

    The year is not part of the BSD timestamp and must be supplied.  Lines
    without a <PRI> prefix get severity UNKNOWN; a leading "tag[pid]:" is
    split into source and pid.
    """
    m = _SYSLOG_LINE.match(line)
    if not m:
        raise ParseError("unparseable syslog line", line=line)
    pri_s, mon_s, day_s, hh, mm, ss, frac, host, rest = m.groups()

    severity = Severity.UNKNOWN
    if pri_s is not None:
        try:
            _, severity = decode_priority(int(pri_s))
        except ValueError:
            raise ParseError(f"priority out of range: <{pri_s}>", line=line) from None

    month = _MONTHS.get(mon_s)
    if month is None:
        raise ParseError(f"unknown month {mon_s!r}", line=line)
    micro = int(frac.ljust(6, "0")) if frac else 0
    try:
        stamp = datetime(default_year, month, int(day_s), int(hh), int(mm), int(ss), micro)
    except ValueError as exc:
        raise ParseError(f"bad timestamp: {exc}", line=line) from None

    source = None
    pid = None
    message = rest
    tag = _SYSLOG_TAG.match(rest)
    if tag:
        source, pid_s, message = tag.groups()
        pid = int(pid_s) if pid_s is not None else None
    if not message.strip():
        raise ParseError("empty message", line=line)

    return EventRecord(
        occurred_at=_to_utc(stamp, tz_offset_min),
        host=host,
        message=scrub_surrogates(message),
        raw=line,
        severity=severity,
        source=source,
        pid=pid,
    )


def windows_header(cells: list[str]) -> dict[str, int]:
    """Map a Windows CSV header row to column indexes.

    Matching is by exact header name, case-insensitive.  Raises ConfigError
    when a required column is missing.
    """
    index = {}
    for i, name in enumerate(cells):
        index.setdefault(name.strip().lower(), i)
    missing = [name for name in _WINDOWS_REQUIRED if name not in index]
    if missing:
        raise ConfigError(f"missing required column(s): {', '.join(missing)}")
    return index


def _windows_timestamp(cell: str, line: str) -> datetime:
    text = cell.strip()
    for fmt in _WINDOWS_TS_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise ParseError(f"unparseable date/time cell: {cell!r}", line=line)


def parse_windows_csv_row(
    cells: list[str], header: dict[str, int], raw: str | None = None, tz_offset_min: int = 0
) -> EventRecord:
    """Parse one unescaped Windows CSV export row using a windows_header map."""
    if raw is None:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(cells)
        raw = buf.getvalue()

    def cell(name: str) -> str:
        i = header.get(name)
        if i is None or i >= len(cells):
            raise ParseError(f"row is missing the {name!r} cell", line=raw)
        return cells[i]

    severity = _WINDOWS_LEVELS.get(cell("level").strip().lower(), Severity.UNKNOWN)
    stamp = _windows_timestamp(cell("date and time"), raw)
    id_text = cell("event id").strip()
    try:
        event_id = int(id_text)
    except ValueError:
        raise ParseError(f"non-integer event ID: {id_text!r}", line=raw) from None
    if event_id < 0:
        raise ParseError(f"negative event ID: {id_text!r}", line=raw)

    host = ""
    if "computer" in header and header["computer"] < len(cells):
        host = cells[header["computer"]].strip()

    return EventRecord(
        occurred_at=_to_utc(stamp, tz_offset_min),
        host=host,
        message=scrub_surrogates(one_line(cell("message"))),
        raw=raw,
        severity=severity,
        source=cell("source").strip() or None,
        event_id=event_id,
    )


def parse_sendmail_line(line: str, default_year: int, tz_offset_min: int = 0) -> MailEvent:
    """Parse a sendmail log line: a syslog line whose body is key=value pairs.

    The body is split at commas; a leading alphanumeric token of length >= 8
    followed by ":" is the queue ID.  Fragments that are not key=value pairs
    are kept in `rest`.
    """
    base = parse_syslog_line(line, default_year, tz_offset_min)
    body = base.message
    queue_id = None
    qm = _QUEUE_ID.match(body)
    if qm:
        queue_id, body = qm.groups()

    kv: dict[str, str] = {}
    rest: list[str] = []
    duplicates = 0
    for fragment in body.split(","):
        fragment = fragment.strip()
        if not fragment:
            continue
        pair = _MAIL_KV.match(fragment)
        if pair:
            key, value = pair.groups()
            if key in kv:
                duplicates += 1
            kv[key] = value
        else:
            rest.append(fragment)
    return MailEvent(base=base, kv=kv, queue_id=queue_id, rest=rest, duplicate_keys=duplicates)


@dataclass
class IngestSummary:
    """Per-run ingest tallies; accepted + rejected equals the input line count."""

    accepted: int = 0
    rejected: int = 0
    per_file: dict[str, tuple[int, int]] = field(default_factory=dict)
    kv_duplicates: int = 0


def _read_lines(path: str) -> list[str]:
    # surrogateescape keeps undecodable bytes recoverable in `raw`.
    with open(path, "rb") as fh:
        data = fh.read().decode("utf-8", errors="surrogateescape")
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _ingest_lines(store, path, lines, parse, rejects):
    # Totality: every line is accepted or rejected, never dropped.
    accepted = rejected = 0
    for lineno, line in enumerate(lines, start=1):
        try:
            if not line.strip():
                raise ParseError("blank line", line=line)
            record = parse(line)
        except ParseError as exc:
            exc.path, exc.lineno = path, lineno
            rejects.append(exc)
            rejected += 1
            continue
        store.append(record)
        accepted += 1
    return accepted, rejected


def _ingest_wincsv(store, path, lines, tz_offset_min, rejects):
    reader = csv.reader(io.StringIO("\n".join(lines) + "\n", newline=""))
    try:
        header_row = next(reader)
    except StopIteration:
        return 0, 0
    header = windows_header(header_row)
    accepted = rejected = 0
    row_start = reader.line_num
    for row in reader:
        raw = "\n".join(lines[row_start:reader.line_num])
        lineno = row_start + 1
        row_start = reader.line_num
        try:
            if not any(cell.strip() for cell in row):
                raise ParseError("blank row", line=raw)
            record = parse_windows_csv_row(row, header, raw=raw, tz_offset_min=tz_offset_min)
        except ParseError as exc:
            exc.path, exc.lineno = path, lineno
            rejects.append(exc)
            rejected += 1
            continue
        store.append(record)
        accepted += 1
    return accepted, rejected


def ingest_files(
    store,
    paths: list[str],
    fmt: str,
    default_year: int | None = None,
    tz_offset_min: int = 0,
    rejects_path: str | None = None,
) -> IngestSummary:
    """Parse every file into the store, in argument order then line order.

    Per-line parse failures are tallied and written to the rejects file
    (tab-separated: file, line number, reason, raw line); an unreadable
    file is fatal.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if fmt in ("syslog", "sendmail") and default_year is None:
        raise ConfigError(f"format {fmt!r} requires a year (BSD timestamps omit it)")

    summary = IngestSummary()
    rejects: list[ParseError] = []

    for path in paths:
        lines = _read_lines(path)
        if fmt == "wincsv":
            accepted, rejected = _ingest_wincsv(store, path, lines, tz_offset_min, rejects)
        elif fmt == "syslog":
            accepted, rejected = _ingest_lines(
                store, path, lines,
                lambda ln: parse_syslog_line(ln, default_year, tz_offset_min), rejects)
        elif fmt == "sendmail":
            def parse_mail(ln):
                event = parse_sendmail_line(ln, default_year, tz_offset_min)
                summary.kv_duplicates += event.duplicate_keys
                return event.base
            accepted, rejected = _ingest_lines(store, path, lines, parse_mail, rejects)
        else:
            accepted, rejected = _ingest_lines(store, path, lines, _parse_ndjson_line, rejects)
        summary.per_file[path] = (accepted, rejected)
        summary.accepted += accepted
        summary.rejected += rejected

    if rejects_path is not None:
        with open(rejects_path, "w", encoding="utf-8", errors="surrogateescape", newline="") as fh:
            for exc in rejects:
                fh.write(f"{exc.path}\t{exc.lineno}\t{exc.reason}\t{exc.line}\n")
    return summary


def _parse_ndjson_line(line: str) -> EventRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", line=line) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", line=line)
    try:
        return record_from_json_dict(obj)
    except ValueError as exc:
        raise ParseError(str(exc), line=line) from None
