"""Regex-driven event classification with named rules and category tallies.

Rule files are line-oriented, tab-separated:

    name <TAB> category <TAB> source-pattern|- <TAB> event-id|- <TAB> message-pattern [<TAB> priority]

Lines starting with "#" are comments.  Priority defaults to line order;
lower priority wins, ties break by file order.
"""

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .model import EventRecord, Severity

CATEGORIES = frozenset(
    {"info", "notice", "debug", "alert", "warning", "critical", "security", "error", "emergency"}
)


class RuleLoadError(Exception):
    """A rule file that does not load; message carries path and line number."""


@dataclass(frozen=True)
class ClassificationRule:
    name: str
    category: str
    message_pattern: re.Pattern
    source_pattern: re.Pattern | None = None
    id_match: int | None = None
    priority: int = 0
    order: int = 0

    def matches(self, record: EventRecord) -> bool:
        if self.id_match is not None and record.event_id != self.id_match:
            return False
        if self.source_pattern is not None:
            if record.source is None or not self.source_pattern.search(record.source):
                return False
        return bool(self.message_pattern.search(record.message))


class RuleSet:
    """Compiled rules in evaluation order (priority, then file order)."""

    def __init__(self, rules: list[ClassificationRule]):
        self.rules = sorted(rules, key=lambda r: (r.priority, r.order))
        self.by_name = {r.name: r for r in self.rules}

    def __len__(self) -> int:
        return len(self.rules)

    def category_tally(self) -> dict[str, int]:
        tally = Counter(r.category for r in self.rules)
        return dict(sorted(tally.items()))


@dataclass(frozen=True)
class ClassMatch:
    seq: int
    rule: str
    category: str


def _compile(pattern: str, what: str, where: str):
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise RuleLoadError(f"{where}: bad {what} pattern {pattern!r}: {exc}") from None


def parse_rules(text: str, origin: str = "<rules>") -> RuleSet:
    rules: list[ClassificationRule] = []
    names: set[str] = set()
    order = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        where = f"{origin}:{lineno}"
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (5, 6):
            raise RuleLoadError(f"{where}: expected 5 or 6 tab-separated fields, got {len(fields)}")
        name, category, source_pat, id_field, message_pat = (f.strip() for f in fields[:5])
        if not name:
            raise RuleLoadError(f"{where}: empty rule name")
        if name in names:
            raise RuleLoadError(f"{where}: duplicate rule name {name!r}")
        if category not in CATEGORIES:
            raise RuleLoadError(f"{where}: unknown category {category!r}")
        source = None if source_pat == "-" else _compile(source_pat, "source", where)
        id_match = None
        if id_field != "-":
            try:
                id_match = int(id_field)
            except ValueError:
                raise RuleLoadError(f"{where}: bad event id {id_field!r}") from None
        message = _compile(message_pat, "message", where)
        priority = order
        if len(fields) == 6:
            try:
                priority = int(fields[5].strip())
            except ValueError:
                raise RuleLoadError(f"{where}: bad priority {fields[5].strip()!r}") from None
        names.add(name)
        rules.append(ClassificationRule(
            name=name, category=category, message_pattern=message,
            source_pattern=source, id_match=id_match, priority=priority, order=order,
        ))
        order += 1
    return RuleSet(rules)


def load_rules(path: str) -> RuleSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read(), origin=str(path))


def builtin_ruleset(name: str) -> RuleSet:
    """Load a ruleset shipped with the package (currently: sendmail)."""
    text = resources.files("logmorph").joinpath(f"rulesets/{name}.rules").read_text("utf-8")
    return parse_rules(text, origin=f"builtin:{name}")


def classify(record: EventRecord, rules: RuleSet) -> ClassMatch | None:
    """First matching rule in priority order, or None when nothing matches."""
    for rule in rules.rules:
        if rule.matches(record):
            return ClassMatch(seq=record.seq, rule=rule.name, category=rule.category)
    return None


@dataclass
class ClassTally:
    """classify_all output; per_class + unmatched always sums to total."""

    total: int = 0
    unmatched: int = 0
    per_class: Counter = field(default_factory=Counter)
    per_category: Counter = field(default_factory=Counter)
    cross_tab: Counter = field(default_factory=Counter)  # (Severity, category) -> count
    matches: list[ClassMatch] = field(default_factory=list)


def classify_all(store, rules: RuleSet) -> ClassTally:
    """Classify every event; also cross-tabulate transport severity against
    rule category, which exposes how coarse the transport labels are."""
    tally = ClassTally(total=len(store.events))
    for record in store.events:
        match = classify(record, rules)
        if match is None:
            tally.unmatched += 1
            continue
        tally.per_class[match.rule] += 1
        tally.per_category[match.category] += 1
        tally.cross_tab[(record.severity, match.category)] += 1
        tally.matches.append(match)
    return tally
