"""Command-line surface: ingest -> classify -> templates -> words -> sequences.

Every report starts with a header block (tool version, config echo, input
digest) so a run is reproducible and two machines' profiles are diffable.
No wall-clock state is ever written: identical inputs and flags produce
byte-identical outputs.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .ingest import FORMATS, ingest_files
from .model import ConfigError
from .rules import RuleLoadError, builtin_ruleset, classify_all, load_rules
from .sequences import (
    MODES,
    SCOPES,
    build_stream,
    filter_confident,
    mine_ngrams,
    mine_pairs,
    profile_report,
    render_confidence,
)
from .store import EventStore, StoreFormatError, read_store, write_store
from .templates import (
    MASK_KINDS,
    MinerConfig,
    merge_templates,
    mine_templates,
    stages_for,
    type_variables,
    unique_skeleton_count,
    write_catalog,
)
from .textstats import find_phrases, negation_scan, word_frequencies

_FATAL = (OSError, ConfigError, StoreFormatError, RuleLoadError, ValueError)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _out_dir(args) -> str:
    out = os.environ.get("LOGMORPH_OUT") or args.out
    os.makedirs(out, exist_ok=True)
    return out


def _config_echo(args) -> str:
    skip = {"func", "out"}
    parts = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        if isinstance(value, list):
            value = ";".join(",".join(v) if isinstance(v, (list, tuple)) else str(v) for v in value)
        parts.append(f"{key}={value}")
    return " ".join(parts)


def _header_lines(args, command: str, input_path: str | None) -> list[str]:
    lines = [f"# logmorph {__version__}", f"# command: {command}", f"# config: {_config_echo(args)}"]
    if input_path:
        lines.append(f"# input: {input_path} sha256={_digest(input_path)}")
    return lines


def _write_report(path: str, header: list[str], columns: list[str], rows, fmt: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            for line in header:
                fh.write(line + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
        else:
            meta = {"tool": "logmorph", "version": __version__}
            for line in header[1:]:
                key, _, value = line[2:].partition(": ")
                meta[key] = value
            fh.write(json.dumps(meta, ensure_ascii=True) + "\n")
            for row in rows:
                fh.write(json.dumps(dict(zip(columns, row)), ensure_ascii=True) + "\n")


def _load_ruleset(value: str):
    if os.path.exists(value):
        return load_rules(value)
    if value == "sendmail":
        return builtin_ruleset(value)
    raise ConfigError(f"no such rule file or builtin ruleset: {value!r}")


def _miner_config(args) -> MinerConfig:
    return MinerConfig(
        support=args.support,
        type_threshold=args.type_threshold,
        merge_distance=args.merge_distance,
        stage_names=tuple(args.mask[-1]),
    )


def _mined_catalog(store, args):
    cfg = _miner_config(args)
    catalog = mine_templates(store, cfg)
    catalog = merge_templates(catalog, cfg.merge_distance)
    return catalog


# ---------------------------------------------------------------- commands


def _cmd_ingest(args) -> int:
    if args.format in ("syslog", "sendmail") and args.year is None:
        print(f"error: --year is required for format {args.format!r}", file=sys.stderr)
        return 2
    store = read_store(args.store) if os.path.exists(args.store) else EventStore()
    summary = ingest_files(
        store, args.files, args.format,
        default_year=args.year, tz_offset_min=args.tz, rejects_path=args.rejects,
    )
    write_store(store, args.store)
    print(f"ingested {summary.accepted} events, rejected {summary.rejected} "
          f"(store: {args.store}, total {len(store)})")
    return 0


def _cmd_classify(args) -> int:
    store = read_store(args.store)
    rules = _load_ruleset(args.rules)
    tally = classify_all(store, rules)
    out = _out_dir(args)
    header = _header_lines(args, "classify", args.store)

    by_name = {r.name: r.category for r in rules.rules}
    class_rows = [(name, by_name[name], count) for name, count in sorted(tally.per_class.items())]
    class_rows.append(("(unmatched)", "-", tally.unmatched))
    _write_report(os.path.join(out, f"classes.{args.format}"), header,
                  ["class", "category", "count"], class_rows, args.format)

    cross_rows = [
        (sev.name.lower(), cat, count)
        for (sev, cat), count in sorted(tally.cross_tab.items(), key=lambda kv: (kv[0][0], kv[0][1]))
    ]
    _write_report(os.path.join(out, f"severity_category.{args.format}"), header,
                  ["severity", "category", "count"], cross_rows, args.format)

    print(f"classified {tally.total} events: {len(tally.per_class)} classes, "
          f"{tally.unmatched} unmatched")
    return 0


def _cmd_templates(args) -> int:
    store = read_store(args.store)
    cfg = _miner_config(args)
    out = _out_dir(args)
    hostnames = store.meta.hosts

    unmasked = unique_skeleton_count(store, [])
    curve = [("unmasked", unmasked)]
    for names in args.mask:
        stages = stages_for(list(names), extra_hosts=hostnames)
        curve.append(("+".join(names), unique_skeleton_count(store, stages)))

    catalog = mine_templates(store, cfg)
    curve.append(("mined", len(catalog.templates)))
    catalog = merge_templates(catalog, cfg.merge_distance)
    curve.append(("merged", len(catalog.templates)))
    catalog = type_variables(catalog, store, cfg.type_threshold)

    header = _header_lines(args, "templates", args.store)
    with open(os.path.join(out, "catalog.tsv"), "w", encoding="utf-8", newline="") as fh:
        for line in header:
            fh.write(line + "\n")
        write_catalog(catalog, fh)
    _write_report(os.path.join(out, "refinement.csv"), header, ["step", "classes"],
                  curve, "csv")

    masked = curve[len(args.mask)][1]
    print(f"unique messages: {unmasked} -> {masked} after masking")
    print("classes: " + " ".join(f"{label}={n}" for label, n in curve))
    print(f"templates: {len(catalog.templates)} (support >= {catalog.support}, "
          f"outliers {len(catalog.outlier_seqs)})")
    return 0


def _cmd_words(args) -> int:
    store = read_store(args.store)
    table = word_frequencies(store)
    negations = negation_scan(store)
    out = _out_dir(args)
    header = _header_lines(args, "words", args.store)
    _write_report(os.path.join(out, f"words.{args.format}"), header,
                  ["word", "count"], table.report(), args.format)
    _write_report(os.path.join(out, f"negations.{args.format}"), header,
                  ["phrase", "count"], negations.report(), args.format)
    print(f"words: total={table.total} distinct={table.distinct} "
          f"not-bigrams={negations.total}")
    return 0


def _cmd_phrases(args) -> int:
    store = read_store(args.store)
    hits = find_phrases(store, args.phrase)
    out = _out_dir(args)
    header = _header_lines(args, "phrases", args.store)
    rows = [(h.phrase, h.seq, h.offset) for h in hits]
    _write_report(os.path.join(out, f"phrases.{args.format}"), header,
                  ["phrase", "seq", "offset"], rows, args.format)
    print(f"phrase hits: {len(hits)}")
    return 0


def _streams_for(args, store):
    catalog = rules = None
    if args.mode == "template":
        catalog = _mined_catalog(store, args)
    elif args.mode == "class":
        if args.rules is None:
            raise ConfigError("--rules is required for class mode")
        rules = _load_ruleset(args.rules)
    return build_stream(store, args.mode, args.scope, catalog=catalog, rules=rules)


def _cmd_pairs(args) -> int:
    store = read_store(args.store)
    streams = _streams_for(args, store)
    pairs = mine_pairs(streams)
    if args.min_confidence is not None:
        pairs = filter_confident(pairs, Fraction(args.min_confidence), args.min_count)
    elif args.min_count > 1:
        pairs = [p for p in pairs if p.antecedent_total >= args.min_count]
    out = _out_dir(args)
    header = _header_lines(args, "pairs", args.store)
    rows = [
        (p.antecedent, p.successor, p.pair_count, p.antecedent_total,
         render_confidence(p.confidence))
        for p in pairs
    ]
    _write_report(os.path.join(out, f"pairs.{args.format}"), header,
                  ["antecedent", "successor", "pair_count", "antecedent_total", "confidence"],
                  rows, args.format)
    print(f"pairs: {len(pairs)} (skipped {streams.skipped} events)")
    return 0


def _cmd_ngrams(args) -> int:
    store = read_store(args.store)
    streams = _streams_for(args, store)
    grams = mine_ngrams(streams, args.n_max, args.min_support)
    out = _out_dir(args)
    header = _header_lines(args, "ngrams", args.store)
    rows = [(len(s.gram), "|".join(s.gram), s.count) for s in grams]
    _write_report(os.path.join(out, f"ngrams.{args.format}"), header,
                  ["n", "keys", "count"], rows, args.format)
    print(f"ngrams: {len(grams)} (skipped {streams.skipped} events)")
    return 0


def _cmd_profile(args) -> int:
    store = read_store(args.store)
    streams = _streams_for(args, store)
    pairs = mine_pairs(streams)
    grams = mine_ngrams(streams, args.n_max, args.min_support)
    tally = classify_all(store, _load_ruleset(args.rules)) if args.rules is not None else None
    doc = {
        "tool": "logmorph",
        "version": __version__,
        "config": _config_echo(args),
        "input": {"store": args.store, "sha256": _digest(args.store)},
        "events": len(store),
        "scope_streams": len(streams.streams),
        "skipped": streams.skipped,
    }
    doc.update(profile_report(pairs, grams, tally, top=args.top))
    out = _out_dir(args)
    path = os.path.join(out, "profile.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(doc, ensure_ascii=True, indent=2) + "\n")
    print(f"profile written: {path}")
    return 0


# ---------------------------------------------------------------- parser


def _mask_list(value: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in value.split(",") if n.strip())
    for name in names:
        if name not in MASK_KINDS:
            raise argparse.ArgumentTypeError(
                f"unknown mask stage {name!r}; expected from: {', '.join(MASK_KINDS)}")
    return names


def _add_store_flag(p):
    p.add_argument("--store", required=True, help="event store (NDJSON) path")


def _add_output_flags(p):
    p.add_argument("--out", default=".", help="output directory (env LOGMORPH_OUT overrides)")
    p.add_argument("--format", choices=("csv", "ndjson"), default="csv",
                   help="report format (default csv)")


def _add_miner_flags(p):
    p.add_argument("--mask", action="append", type=_mask_list, default=None,
                   metavar="STAGES", help="comma-separated mask stages; repeatable, "
                   "last list is used for mining (default timestamp,pid)")
    p.add_argument("--support", type=int, default=None,
                   help="absolute support threshold (default max(2, 0.1%% of events))")
    p.add_argument("--type-threshold", type=float, default=0.9,
                   help="slot typing match-ratio threshold (default 0.9)")
    p.add_argument("--merge-distance", type=float, default=0.2,
                   help="template merge distance in [0,1] (default 0.2)")


def _add_sequence_flags(p):
    p.add_argument("--mode", choices=MODES, default="id",
                   help="event key: (source, event ID) / template id / class name")
    p.add_argument("--scope", choices=SCOPES, default="host",
                   help="stream partition (default host)")
    p.add_argument("--rules", default=None, help="rule file or builtin name (class mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logmorph",
        description="Explore application event logs: normalize, classify, "
                    "mine message templates, and profile event sequences.",
    )
    parser.add_argument("--version", action="version", version=f"logmorph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="parse log files into an event store")
    p.add_argument("files", nargs="+", help="input log files")
    p.add_argument("--fmt", "--format", dest="format", required=True, choices=FORMATS)
    p.add_argument("--year", type=int, default=None,
                   help="year for BSD timestamps (required for syslog/sendmail)")
    p.add_argument("--tz", type=int, default=0, help="input timezone offset in minutes")
    p.add_argument("--rejects", default=None, help="write rejected lines here (TSV)")
    _add_store_flag(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("classify", help="classify events with a regex ruleset")
    _add_store_flag(p)
    p.add_argument("--rules", required=True, help="rule file or builtin name (e.g. sendmail)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("templates", help="mine message templates")
    _add_store_flag(p)
    _add_miner_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_templates)

    p = sub.add_parser("words", help="word frequency table")
    _add_store_flag(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_words)

    p = sub.add_parser("phrases", help="find phrase occurrences")
    _add_store_flag(p)
    p.add_argument("--phrase", action="append", required=True, help="phrase to find; repeatable")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_phrases)

    p = sub.add_parser("pairs", help="adjacent event pairs with confidence")
    _add_store_flag(p)
    _add_sequence_flags(p)
    _add_miner_flags(p)
    p.add_argument("--min-confidence", default=None,
                   help="keep pairs with confidence >= this (exact rational, e.g. 0.5)")
    p.add_argument("--min-count", type=int, default=1,
                   help="keep pairs whose antecedent occurs at least this often (default 1)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("ngrams", help="frequent contiguous event sequences")
    _add_store_flag(p)
    _add_sequence_flags(p)
    _add_miner_flags(p)
    p.add_argument("--n-max", type=int, default=4, help="longest n-gram (default 4)")
    p.add_argument("--min-support", type=int, default=2,
                   help="minimum occurrence count (default 2)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_ngrams)

    p = sub.add_parser("profile", help="operational profile document")
    _add_store_flag(p)
    _add_sequence_flags(p)
    _add_miner_flags(p)
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--min-support", type=int, default=2)
    p.add_argument("--top", type=int, default=20, help="rows per profile section (default 20)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_profile)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if getattr(args, "mask", None) is None and hasattr(args, "mask"):
        args.mask = [("timestamp", "pid")]
    try:
        return args.func(args)
    except _FATAL as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
