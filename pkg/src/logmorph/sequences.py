"""Event-pair statistics with confidence ratios and frequent n-gram mining.

Events are keyed by (source, event ID), mined template id, or rule class
name, partitioned into per-scope streams (default: one stream per host),
and pairs are counted between temporally adjacent events within a stream.
Confidence is kept as an exact rational so invariants hold with no
tolerance: for every antecedent the per-successor confidences sum to 1.
"""

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .rules import classify

MODES = ("id", "template", "class")
SCOPES = ("global", "host", "host_source")


@dataclass
class Streams:
    """Per-scope ordered key sequences plus the count of unkeyable events."""

    mode: str
    scope: str
    streams: dict[str, list[str]] = field(default_factory=dict)
    skipped: int = 0


@dataclass(frozen=True)
class PairStat:
    antecedent: str
    successor: str
    pair_count: int
    antecedent_total: int

    @property
    def confidence(self) -> Fraction:
        return Fraction(self.pair_count, self.antecedent_total)


@dataclass(frozen=True)
class SequenceStat:
    gram: tuple[str, ...]
    count: int


def build_stream(store, mode: str, scope: str = "host", catalog=None, rules=None) -> Streams:
    """Partition the store by scope and map each event to its key.

    Events with no key under the chosen mode (missing event ID, template
    outliers, unmatched by every rule) are excluded and tallied as skipped.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; expected one of {', '.join(SCOPES)}")
    if mode == "template" and catalog is None:
        raise ValueError("template mode requires a template catalog")
    if mode == "class" and rules is None:
        raise ValueError("class mode requires a ruleset")

    out = Streams(mode=mode, scope=scope, streams=defaultdict(list))
    for record in store.iter_time_order():
        if mode == "id":
            if record.event_id is None:
                out.skipped += 1
                continue
            key = f"{record.source or ''}:{record.event_id}"
        elif mode == "template":
            tid = catalog.assignments.get(record.seq)
            if tid is None:
                out.skipped += 1
                continue
            key = str(tid)
        else:
            match = classify(record, rules)
            if match is None:
                out.skipped += 1
                continue
            key = match.rule

        if scope == "global":
            scope_key = ""
        elif scope == "host":
            scope_key = record.host
        else:
            scope_key = f"{record.host}|{record.source or ''}"
        out.streams[scope_key].append(key)
    out.streams = dict(out.streams)
    return out


def mine_pairs(streams: Streams) -> list[PairStat]:
    """Count every adjacent key pair within each stream, never across streams.

    Ordered by pair count descending, then keys; a stream of length L
    contributes exactly L - 1 pairs.
    """
    pair_counts: Counter = Counter()
    for keys in streams.streams.values():
        pair_counts.update(zip(keys, keys[1:]))
    antecedent_totals: Counter = Counter()
    for (a, _), n in pair_counts.items():
        antecedent_totals[a] += n
    stats = [
        PairStat(antecedent=a, successor=b, pair_count=n, antecedent_total=antecedent_totals[a])
        for (a, b), n in pair_counts.items()
    ]
    stats.sort(key=lambda p: (-p.pair_count, p.antecedent, p.successor))
    return stats


def filter_confident(pairs: list[PairStat], c_min, support_min: int = 1) -> list[PairStat]:
    """Pairs with confidence >= c_min and antecedent_total >= support_min."""
    c_min = c_min if isinstance(c_min, Fraction) else Fraction(str(c_min))
    if not 0 < c_min <= 1:
        raise ValueError(f"c_min must be in (0,1], got {c_min}")
    if support_min < 1:
        raise ValueError(f"support_min must be >= 1, got {support_min}")
    return [p for p in pairs if p.confidence >= c_min and p.antecedent_total >= support_min]


def mine_ngrams(streams: Streams, n_max: int, min_support: int) -> list[SequenceStat]:
    """Contiguous n-grams (2..n_max) per stream; overlapping occurrences count.

    Ordered by n ascending, count descending, keys ascending.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    if min_support < 1:
        raise ValueError(f"min_support must be >= 1, got {min_support}")
    counts: Counter = Counter()
    for keys in streams.streams.values():
        for n in range(2, n_max + 1):
            for i in range(len(keys) - n + 1):
                counts[tuple(keys[i:i + n])] += 1
    stats = [SequenceStat(gram=g, count=c) for g, c in counts.items() if c >= min_support]
    stats.sort(key=lambda s: (len(s.gram), -s.count, s.gram))
    return stats


def render_confidence(c: Fraction) -> str:
    """Fixed 4-decimal rendering used by every report; no float involved."""
    n = round(c * 10000)
    return f"{n // 10000}.{n % 10000:04d}"


def profile_report(pairs: list[PairStat], ngrams: list[SequenceStat], tally=None,
                   top: int = 20) -> dict:
    """A diffable operational summary: top pairs, the deterministic
    (confidence 1) pairs, top n-grams, and class/category tallies."""
    deterministic = filter_confident(pairs, Fraction(1), 2) if pairs else []

    def pair_row(p: PairStat) -> dict:
        return {
            "antecedent": p.antecedent,
            "successor": p.successor,
            "pair_count": p.pair_count,
            "antecedent_total": p.antecedent_total,
            "confidence": render_confidence(p.confidence),
        }

    doc = {
        "pair_kinds": len(pairs),
        "top_pairs": [pair_row(p) for p in pairs[:top]],
        "deterministic_pairs": [pair_row(p) for p in deterministic],
        "top_ngrams": [
            {"n": len(s.gram), "keys": list(s.gram), "count": s.count}
            for s in sorted(ngrams, key=lambda s: (-s.count, len(s.gram), s.gram))[:top]
        ],
    }
    if tally is not None:
        doc["classes"] = dict(sorted(tally.per_class.items()))
        doc["categories"] = dict(sorted(tally.per_category.items()))
        doc["unmatched"] = tally.unmatched
    return doc
