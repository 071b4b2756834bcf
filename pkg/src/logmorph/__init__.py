"""logmorph: explore application event logs.

Normalizes heterogeneous logs into one event model, classifies events with
regex rules, mines message templates by separating constant from variable
text, and characterizes operational profiles via word statistics and
event-pair/sequence mining.
"""

__version__ = "0.1.0"

from .ingest import (
    IngestSummary,
    decode_priority,
    ingest_files,
    parse_sendmail_line,
    parse_syslog_line,
    parse_windows_csv_row,
    windows_header,
)
from .model import (
    ConfigError,
    EventRecord,
    MailEvent,
    ParseError,
    Severity,
)
from .rules import (
    ClassificationRule,
    ClassMatch,
    ClassTally,
    RuleLoadError,
    RuleSet,
    builtin_ruleset,
    classify,
    classify_all,
    load_rules,
)
from .sequences import (
    PairStat,
    SequenceStat,
    Streams,
    build_stream,
    filter_confident,
    mine_ngrams,
    mine_pairs,
    profile_report,
)
from .store import (
    EventFilter,
    EventStore,
    StoreFormatError,
    read_store,
    select,
    write_store,
)
from .templates import (
    MaskStage,
    MinerConfig,
    Slot,
    Template,
    TemplateCatalog,
    Token,
    apply_masks,
    match_template,
    merge_templates,
    mine_templates,
    stages_for,
    token_distance,
    tokenize,
    type_variables,
    unique_skeleton_count,
    write_catalog,
)
from .textstats import (
    PhraseHit,
    WordTable,
    find_phrases,
    negation_scan,
    suggest_keywords,
    word_frequencies,
)
