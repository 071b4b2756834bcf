"""Corpus-level word and phrase statistics over event messages.

Words are tokenize() outputs, lower-cased, never masked.  No stemming:
the corpora are bilingual and stems would not be language-neutral.
"""

import re
from collections import Counter
from dataclasses import dataclass, field

from .templates import tokenize

DEFAULT_STOPWORDS = frozenset(
    "a an the of in on at to for from by with into onto over under "
    "and or is are was were be been".split()
)

DEFAULT_UBIQUITY_CUTOFF = 0.5


@dataclass
class WordTable:
    """Per-word occurrence counts plus per-word event (document) counts."""

    counts: Counter = field(default_factory=Counter)
    doc_counts: Counter = field(default_factory=Counter)
    total: int = 0
    event_count: int = 0

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def report(self) -> list[tuple[str, int]]:
        """Count descending, word ascending."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class PhraseHit:
    phrase: str
    seq: int
    offset: int


def _words(message: str) -> list[str]:
    return [t.text.lower() for t in tokenize(message)]


def word_frequencies(store) -> WordTable:
    table = WordTable(event_count=len(store.events))
    for record in store.events:
        words = _words(record.message)
        table.counts.update(words)
        table.doc_counts.update(set(words))
        table.total += len(words)
    return table


def find_phrases(store, phrases: list[str]) -> list[PhraseHit]:
    """Case-insensitive phrase occurrences, whitespace-normalized.

    Overlapping occurrences are all reported; the offset is the character
    position of the match start within the message.
    """
    if not phrases:
        raise ValueError("phrases must be a nonempty list")
    patterns = []
    for phrase in phrases:
        words = phrase.split()
        if not words:
            raise ValueError("empty phrase")
        patterns.append((phrase, re.compile(r"\s+".join(map(re.escape, words)), re.IGNORECASE)))

    hits = []
    for record in store.events:
        for phrase, rx in patterns:
            pos = 0
            while True:
                m = rx.search(record.message, pos)
                if not m:
                    break
                hits.append(PhraseHit(phrase=phrase, seq=record.seq, offset=m.start()))
                pos = m.start() + 1
    return hits


def negation_scan(store) -> WordTable:
    """Table of adjacent token bigrams whose first token is "not"."""
    table = WordTable(event_count=len(store.events))
    for record in store.events:
        words = _words(record.message)
        bigrams = [f"not {b}" for a, b in zip(words, words[1:]) if a == "not"]
        table.counts.update(bigrams)
        table.doc_counts.update(set(bigrams))
        table.total += len(bigrams)
    return table


def suggest_keywords(
    table: WordTable,
    tally=None,
    store=None,
    stopwords: frozenset = DEFAULT_STOPWORDS,
    ubiquity_cutoff: float = DEFAULT_UBIQUITY_CUTOFF,
) -> list[str]:
    """Rank words as rule-building keywords.

    Stopwords and words present in more than `ubiquity_cutoff` of events are
    dropped.  With a class tally (and the store it came from), each word's
    score is multiplied by how much more often it occurs inside events
    classified into non-info categories than in the corpus overall.
    """
    if not table.counts:
        raise ValueError("word table is empty")

    candidates = []
    for word, count in table.counts.items():
        if word in stopwords:
            continue
        if table.event_count and table.doc_counts[word] / table.event_count > ubiquity_cutoff:
            continue
        candidates.append((word, count))

    boost = _noninfo_rates(tally, store) if tally is not None and store is not None else None
    scored = []
    for word, count in candidates:
        score = float(count)
        if boost is not None:
            noninfo_rate, total_rate = boost(word), table.counts[word] / table.total
            score *= (noninfo_rate / total_rate) if total_rate else 0.0
        scored.append((word, score))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return [word for word, _ in scored]


def _noninfo_rates(tally, store):
    by_seq = {r.seq: r.message for r in store.events}
    counts: Counter = Counter()
    total = 0
    for match in tally.matches:
        if match.category == "info":
            continue
        words = _words(by_seq.get(match.seq, ""))
        counts.update(words)
        total += len(words)
    if total == 0:
        return None  # nothing classified non-info: boosting is undefined
    return lambda word: counts[word] / total
