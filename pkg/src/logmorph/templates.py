"""Automatic event class discovery from message text.

The pipeline: tokenize, mask volatile fields (timestamps, PIDs, hosts, ...),
split token positions into constants and variables by corpus-wide frequency,
merge near-duplicate templates by token-level edit distance, and annotate
variable slots with a guessed value type.

Masked timestamps render as "*", every other masked or mined variable
renders as "(...)".  All grouping and matching happens on those rendered
token texts, so a skeleton is exactly what the catalog file shows.
"""

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .model import ConfigError

_TRAILING_PUNCT = ",.;:"

WILDCARD = "*"
PLACEHOLDER = "(...)"


@dataclass(frozen=True)
class Token:
    """One message token; `mask` names the stage that masked it, if any."""

    text: str
    mask: str | None = None

    def rendered(self) -> str:
        if self.mask is None:
            return self.text
        return WILDCARD if self.mask == "timestamp" else PLACEHOLDER


@dataclass(frozen=True)
class MaskStage:
    """A volatile-field detector over a token or a two-token span.

    A token is masked when `pattern` matches it in full, or when the
    preceding token matches `after` and the token itself matches `value`
    (the "pid 812" case).  Only the value token is replaced, so masking
    always preserves sequence length.
    """

    kind: str
    pattern: re.Pattern
    after: re.Pattern | None = None
    value: re.Pattern | None = None

    def applies(self, token: "Token", prev: "Token | None") -> bool:
        if self.pattern.fullmatch(token.text):
            return True
        if self.after is not None and prev is not None:
            return bool(self.after.fullmatch(prev.text) and self.value.fullmatch(token.text))
        return False


_STAGE_PATTERNS = {
    "timestamp": (
        r"\d{1,2}:\d{2}(?::\d{2})?(?:[.,]\d+)?"
        r"|\d{4}-\d{2}-\d{2}(?:T\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2})?)?"
        r"|\d{1,2}/\d{1,2}/\d{2,4}"
    ),
    "pid": r"(?i:pid[=:]\d+)|\[\d+\]",
    "ip": r"\d{1,3}(?:\.\d{1,3}){3}(?::\d{1,5})?",
    "hex": r"0[xX][0-9a-fA-F]+|(?=[0-9a-fA-F]{8,}$)[0-9a-fA-F]*\d[0-9a-fA-F]*",
    "host": r"[A-Za-z][A-Za-z-]*\d+|[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+){2,}",
    "number": r"[+-]?\d+(?:\.\d+)?",
}

# Two-token spans: a bare number is a PID when it follows the word "pid".
_STAGE_CONTEXT = {
    "pid": (re.compile(r"(?i)pid"), re.compile(r"\d+")),
}

MASK_KINDS = tuple(_STAGE_PATTERNS)


def stages_for(names: list[str], extra_hosts: tuple[str, ...] = ()) -> list[MaskStage]:
    """Build mask stages in the given order.

    `extra_hosts` widens the host stage with literal node names (typically
    the store's distinct hosts).
    """
    stages = []
    for name in names:
        name = name.strip().lower()
        pattern = _STAGE_PATTERNS.get(name)
        if pattern is None:
            raise ConfigError(f"unknown mask stage {name!r}; expected one of {', '.join(MASK_KINDS)}")
        if name == "host" and extra_hosts:
            literals = "|".join(re.escape(h) for h in sorted(set(extra_hosts)) if h)
            if literals:
                pattern = f"{literals}|{pattern}"
        after, value = _STAGE_CONTEXT.get(name, (None, None))
        stages.append(MaskStage(name, re.compile(pattern), after=after, value=value))
    return stages


def tokenize(message: str) -> list[Token]:
    """Split on whitespace runs; trailing , . ; : are stripped per token."""
    tokens = []
    for piece in message.split():
        piece = piece.rstrip(_TRAILING_PUNCT)
        if piece:
            tokens.append(Token(piece))
    return tokens


def apply_masks(tokens: list[Token], stages: list[MaskStage]) -> list[Token]:
    """Mask each token with the first applicable stage; length is preserved."""
    out = []
    for i, token in enumerate(tokens):
        prev = tokens[i - 1] if i else None
        masked = token
        for stage in stages:
            if stage.applies(token, prev):
                masked = Token(token.text, stage.kind)
                break
        out.append(masked)
    return out


def _skeleton(message: str, stages: list[MaskStage]) -> str:
    return " ".join(t.rendered() for t in apply_masks(tokenize(message), stages))


def unique_skeleton_count(store, stages: list[MaskStage]) -> int:
    """Distinct rendered token sequences across the whole store."""
    return len({_skeleton(r.message, stages) for r in store.events})


@dataclass(frozen=True)
class Slot:
    """One template position: constant text, or a variable with an optional type."""

    text: str | None
    var_type: str | None = None
    type_ratio: float = 0.0

    @property
    def is_const(self) -> bool:
        return self.text is not None

    def rendered(self) -> str:
        if self.text is not None:
            return self.text
        if self.var_type:
            return f"{PLACEHOLDER}:{self.var_type}"
        return PLACEHOLDER


@dataclass(frozen=True)
class Template:
    id: int
    slots: tuple[Slot, ...]
    support: int
    example_seqs: tuple[int, ...] = ()

    @property
    def const_count(self) -> int:
        return sum(1 for s in self.slots if s.is_const)

    def skeleton(self) -> str:
        return " ".join(s.rendered() for s in self.slots)


@dataclass
class MinerConfig:
    """Mining knobs: absolute support s, slot-type threshold, merge distance.

    support=None derives s = max(2, ceil(0.001 * N)) from the corpus size.
    """

    support: int | None = None
    type_threshold: float = 0.9
    merge_distance: float = 0.2
    stage_names: tuple[str, ...] = ("timestamp", "pid")

    def __post_init__(self):
        if self.support is not None and self.support < 2:
            raise ConfigError(f"support must be >= 2, got {self.support}")
        if not 0 < self.type_threshold <= 1:
            raise ConfigError(f"type threshold must be in (0,1], got {self.type_threshold}")
        if not 0 <= self.merge_distance <= 1:
            raise ConfigError(f"merge distance must be in [0,1], got {self.merge_distance}")

    def resolved_support(self, corpus_size: int) -> int:
        if self.support is not None:
            return self.support
        return max(2, math.ceil(0.001 * corpus_size))


@dataclass
class TemplateCatalog:
    """Mined templates plus the event-to-template assignment.

    Events in no sufficiently supported cluster sit in the outlier bucket:
    len(outlier_seqs) + sum of supports == event_count, always.
    """

    templates: list[Template] = field(default_factory=list)
    assignments: dict[int, int] = field(default_factory=dict)
    outlier_seqs: list[int] = field(default_factory=list)
    stage_names: tuple[str, ...] = ()
    support: int = 2
    event_count: int = 0

    def by_id(self, template_id: int) -> Template:
        for t in self.templates:
            if t.id == template_id:
                return t
        raise KeyError(template_id)


def mine_templates(store, cfg: MinerConfig) -> TemplateCatalog:
    """Frequent-token clustering over masked token sequences.

    Corpus-wide (position, token) pairs with count >= s are frequent; each
    message's cluster key is its length plus its ordered frequent pairs.
    Clusters with >= s members become templates (frequent positions Const,
    the rest Var); everything else, including messages with no frequent
    token at all, falls into the outlier bucket.
    """
    stages = stages_for(list(cfg.stage_names))
    support = cfg.resolved_support(len(store.events))

    rendered: list[tuple[int, tuple[str, ...]]] = []
    pair_counts: Counter = Counter()
    for record in store.events:
        toks = tuple(t.rendered() for t in apply_masks(tokenize(record.message), stages))
        rendered.append((record.seq, toks))
        pair_counts.update(enumerate(toks))

    frequent = {pair for pair, n in pair_counts.items() if n >= support}

    clusters: dict[tuple, list[int]] = defaultdict(list)
    for seq, toks in rendered:
        key_pairs = tuple((i, t) for i, t in enumerate(toks) if (i, t) in frequent)
        clusters[(len(toks), key_pairs)].append(seq)

    kept = []
    outliers: list[int] = []
    for (length, key_pairs), members in clusters.items():
        if len(members) >= support and key_pairs:
            const_at = dict(key_pairs)
            slots = tuple(Slot(const_at.get(i)) for i in range(length))
            kept.append((slots, members))
        else:
            outliers.extend(members)
    outliers.sort()

    # Stable ids: strongest template first, slot structure as tiebreaker.
    kept.sort(key=lambda item: (-len(item[1]), len(item[0]),
                                tuple((s.is_const, s.text or "") for s in item[0])))
    templates = []
    assignments: dict[int, int] = {}
    for tid, (slots, members) in enumerate(kept, start=1):
        members.sort()
        templates.append(Template(id=tid, slots=slots, support=len(members),
                                  example_seqs=tuple(members[:3])))
        for seq in members:
            assignments[seq] = tid

    return TemplateCatalog(
        templates=templates,
        assignments=assignments,
        outlier_seqs=outliers,
        stage_names=tuple(cfg.stage_names),
        support=support,
        event_count=len(store.events),
    )


def _edit_distance(a, b, same) -> int:
    # Unit-cost insert/delete/substitute over two sequences.
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, xa in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, xb in enumerate(b, start=1):
            cost = 0 if same(xa, xb) else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def token_distance(a: list[Token], b: list[Token]) -> float:
    """Normalized token edit distance in [0,1]; compares rendered texts."""
    if not a and not b:
        return 0.0
    ra = [t.rendered() for t in a]
    rb = [t.rendered() for t in b]
    return _edit_distance(ra, rb, lambda x, y: x == y) / max(len(ra), len(rb))


def _slot_same(a: Slot, b: Slot) -> bool:
    # Var matches Var at zero cost; Const slots compare by text.
    if a.is_const != b.is_const:
        return False
    return (not a.is_const) or a.text == b.text


def merge_templates(catalog: TemplateCatalog, distance: float) -> TemplateCatalog:
    """Single-link merge of equal-length templates within the given distance.

    Merged templates keep the smallest member id and the union support;
    positions that are not the same constant in every member become Var.
    """
    if not 0 <= distance <= 1:
        raise ConfigError(f"merge distance must be in [0,1], got {distance}")
    if distance == 0 or len(catalog.templates) < 2:
        return catalog
    limit = Fraction(str(distance))

    by_length: dict[int, list[Template]] = defaultdict(list)
    for t in catalog.templates:
        by_length[len(t.slots)].append(t)

    parent = {t.id: t.id for t in catalog.templates}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for group in by_length.values():
        length = len(group[0].slots)
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                dist = _edit_distance(group[i].slots, group[j].slots, _slot_same)
                if Fraction(dist, length) <= limit:
                    ra, rb = find(group[i].id), find(group[j].id)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)

    members: dict[int, list[Template]] = defaultdict(list)
    for t in catalog.templates:
        members[find(t.id)].append(t)

    merged: list[Template] = []
    remap: dict[int, int] = {}
    for root_id in sorted(members):
        group = members[root_id]
        for t in group:
            remap[t.id] = root_id
        if len(group) == 1:
            merged.append(group[0])
            continue
        length = len(group[0].slots)
        slots = []
        for pos in range(length):
            texts = {t.slots[pos].text for t in group}
            slots.append(Slot(texts.pop()) if len(texts) == 1 and None not in texts else Slot(None))
        seqs = sorted(seq for t in group for seq in t.example_seqs)
        merged.append(Template(
            id=root_id,
            slots=tuple(slots),
            support=sum(t.support for t in group),
            example_seqs=tuple(seqs[:3]),
        ))

    merged.sort(key=lambda t: t.id)
    return TemplateCatalog(
        templates=merged,
        assignments={seq: remap[tid] for seq, tid in catalog.assignments.items()},
        outlier_seqs=list(catalog.outlier_seqs),
        stage_names=catalog.stage_names,
        support=catalog.support,
        event_count=catalog.event_count,
    )


# Variable slot typing.  ErrorCode accepts 0x-hex anywhere, but a plain
# signed integer only when the preceding constant reads like error/code.
_PORT = re.compile(r"\d{1,5}")
_WEB = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*://\S+|www\.\S+")
_VERSION = re.compile(r"\d+(?:\.\d+)+")
_FILENAME = re.compile(r".*[/\\].*|.+\.[A-Za-z][A-Za-z0-9]{0,5}")
_HEXCODE = re.compile(r"0[xX][0-9a-fA-F]+")
_SIGNED_INT = re.compile(r"[+-]?\d+")
_DECIMAL = re.compile(r"[+-]?\d+(?:\.\d+)?")
_ERROR_CONTEXT = re.compile(r"(?i).*(error|code)$")

VARIABLE_TYPES = ("Port", "WebAddress", "VersionNumber", "FileName", "ErrorCode", "Number")


def _has_error_context(slots: tuple[Slot, ...], pos: int) -> bool:
    prev = slots[pos - 1] if pos > 0 else None
    return prev is not None and prev.is_const and bool(_ERROR_CONTEXT.match(prev.text))


def _type_ratios(values: list[str], slots, pos) -> dict[str, float]:
    context = _has_error_context(slots, pos)
    matchers = (
        ("Port", lambda v: _PORT.fullmatch(v) and int(v) <= 65535),
        ("WebAddress", _WEB.fullmatch),
        ("VersionNumber", _VERSION.fullmatch),
        ("FileName", _FILENAME.fullmatch),
        ("ErrorCode", lambda v: _HEXCODE.fullmatch(v) or (context and _SIGNED_INT.fullmatch(v))),
        ("Number", _DECIMAL.fullmatch),
    )
    return {
        name: sum(1 for v in values if match(v)) / len(values)
        for name, match in matchers
    }


def type_variables(catalog: TemplateCatalog, store, threshold: float) -> TemplateCatalog:
    """Annotate Var slots whose absorbed values mostly match one type pattern."""
    if not 0 < threshold <= 1:
        raise ConfigError(f"type threshold must be in (0,1], got {threshold}")
    messages = {r.seq: r.message for r in store.events}
    values_by_slot: dict[tuple[int, int], list[str]] = defaultdict(list)
    for seq, tid in catalog.assignments.items():
        toks = tokenize(messages[seq])
        for pos, token in enumerate(toks):
            values_by_slot[(tid, pos)].append(token.text)

    templates = []
    for t in catalog.templates:
        slots = list(t.slots)
        for pos, slot in enumerate(slots):
            if slot.is_const:
                continue
            values = values_by_slot.get((t.id, pos), [])
            if not values:
                continue
            ratios = _type_ratios(values, t.slots, pos)
            best = None
            for name in VARIABLE_TYPES:
                ratio = ratios.get(name, 0.0)
                if ratio >= threshold and (best is None or ratio > best[1]):
                    best = (name, ratio)
            if best:
                slots[pos] = Slot(None, var_type=best[0], type_ratio=best[1])
        templates.append(replace(t, slots=tuple(slots)))

    return replace_catalog(catalog, templates)


def replace_catalog(catalog: TemplateCatalog, templates: list[Template]) -> TemplateCatalog:
    return TemplateCatalog(
        templates=templates,
        assignments=dict(catalog.assignments),
        outlier_seqs=list(catalog.outlier_seqs),
        stage_names=catalog.stage_names,
        support=catalog.support,
        event_count=catalog.event_count,
    )


def match_template(message: str, catalog: TemplateCatalog, stages: list[MaskStage]) -> int | None:
    """Find the template a new message instantiates, or None.

    Candidates must agree on length and on every Const slot; ties go to the
    template with more constants, then the lower id.
    """
    toks = [t.rendered() for t in apply_masks(tokenize(message), stages)]
    best = None
    for t in catalog.templates:
        if len(t.slots) != len(toks):
            continue
        if all(not s.is_const or s.text == tok for s, tok in zip(t.slots, toks)):
            rank = (-t.const_count, t.id)
            if best is None or rank < best[0]:
                best = (rank, t.id)
    return best[1] if best else None


def write_catalog(catalog: TemplateCatalog, fh) -> None:
    """One template per line (id, support, skeleton); outliers as a trailer."""
    for t in catalog.templates:
        fh.write(f"{t.id}\t{t.support}\t{t.skeleton()}\n")
    fh.write(f"# outliers\t{len(catalog.outlier_seqs)}\n")
