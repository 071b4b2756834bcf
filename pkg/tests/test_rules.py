import pytest

from helpers import make_store, rec
from logmorph import (
    RuleLoadError,
    Severity,
    builtin_ruleset,
    classify,
    classify_all,
    load_rules,
)
from logmorph.rules import parse_rules

SIMPLE_RULES = """\
# test rules
user-unknown\tnotice\t-\t-\t[Uu]ser unknown
disk-error\tcritical\t-\t-\tdisk .*failed
update-ok\tinfo\t-\t-\tupdate (installed|complete)
"""


class TestLoadRules:
    def test_shipped_sendmail_tally(self):
        rules = builtin_ruleset("sendmail")
        assert rules.category_tally() == {
            "info": 26, "notice": 18, "debug": 2, "alert": 2,
            "warning": 1, "critical": 4, "security": 1,
        }

    def test_empty_rule_file(self, tmp_path):
        path = tmp_path / "empty.rules"
        path.write_text("# nothing here\n\n")
        rules = load_rules(str(path))
        assert len(rules) == 0
        assert rules.category_tally() == {}

    def test_duplicate_name_rejected(self):
        text = "a\tinfo\t-\t-\tx\na\tinfo\t-\t-\ty\n"
        with pytest.raises(RuleLoadError) as exc:
            parse_rules(text, origin="dup.rules")
        assert "dup.rules:2" in str(exc.value)

    def test_bad_pattern_rejected(self):
        with pytest.raises(RuleLoadError) as exc:
            parse_rules("a\tinfo\t-\t-\t[unclosed\n")
        assert ":1" in str(exc.value)

    def test_unknown_category_rejected(self):
        with pytest.raises(RuleLoadError):
            parse_rules("a\tfatal\t-\t-\tx\n")

    def test_wrong_field_count_rejected(self):
        with pytest.raises(RuleLoadError):
            parse_rules("a\tinfo\t-\tx\n")

    def test_explicit_priority_field(self):
        rules = parse_rules("late\tinfo\t-\t-\tmsg\t9\nearly\tinfo\t-\t-\tmsg\t5\n")
        assert [r.name for r in rules.rules] == ["early", "late"]

    def test_id_field_parsed(self):
        rules = parse_rules("by-id\tinfo\t-\t1033\tinstalled\n")
        assert rules.rules[0].id_match == 1033
        with pytest.raises(RuleLoadError):
            parse_rules("by-id\tinfo\t-\tnope\tinstalled\n")


class TestClassify:
    def test_paper_named_notice_example(self):
        rules = builtin_ruleset("sendmail")
        record = rec("q4AAbc01: to=<b@y>, stat=User unknown", source="sendmail")
        match = classify(record, rules)
        assert match is not None
        assert match.rule == "user-unknown"
        assert match.category == "notice"

    def test_unmatched(self):
        rules = parse_rules(SIMPLE_RULES)
        assert classify(rec("nothing of note"), rules) is None

    def test_priority_tiebreak(self):
        text = "second\tinfo\t-\t-\tshared\t9\nfirst\tnotice\t-\t-\tshared\t5\n"
        rules = parse_rules(text)
        match = classify(rec("shared message"), rules)
        assert match.rule == "first"

    def test_file_order_breaks_equal_priority(self):
        text = "one\tinfo\t-\t-\tshared\ntwo\tnotice\t-\t-\tshared\n"
        match = classify(rec("shared message"), parse_rules(text))
        assert match.rule == "one"

    def test_source_constraint(self):
        rules = parse_rules("mail-only\tinfo\tsendmail\t-\tqueued\n")
        assert classify(rec("queued ok", source="sendmail"), rules) is not None
        assert classify(rec("queued ok", source="httpd"), rules) is None
        assert classify(rec("queued ok"), rules) is None

    def test_id_constraint(self):
        rules = parse_rules("install\tinfo\t-\t1033\tinstalled\n")
        assert classify(rec("installed", event_id=1033), rules) is not None
        assert classify(rec("installed", event_id=1000), rules) is None
        assert classify(rec("installed"), rules) is None


class TestClassifyAll:
    def test_empty_store(self):
        tally = classify_all(make_store([]), parse_rules(SIMPLE_RULES))
        assert tally.total == 0
        assert tally.unmatched == 0
        assert not tally.per_class

    def test_single_class(self):
        store = make_store(["update installed", "update complete", "update installed"])
        tally = classify_all(store, parse_rules(SIMPLE_RULES))
        assert tally.per_class == {"update-ok": 3}
        assert tally.per_category == {"info": 3}
        assert tally.unmatched == 0

    def test_cross_tab_counts_severity_against_category(self):
        # Events whose transport label says Info land in a critical class:
        # exactly what the cross-tabulation is there to expose.
        store = make_store([
            rec("disk sda failed", severity=Severity.INFO),
            rec("disk sdb failed", severity=Severity.INFO),
            rec("update installed", severity=Severity.INFO),
            rec("user unknown", severity=Severity.ERROR),
        ])
        tally = classify_all(store, parse_rules(SIMPLE_RULES))
        expected = brute_force_crosstab(store, parse_rules(SIMPLE_RULES))
        assert dict(tally.cross_tab) == expected
        assert tally.cross_tab[(Severity.INFO, "critical")] == 2

    def test_conservation(self):
        store = make_store([
            "update installed", "user unknown", "mystery one", "mystery two",
            "disk scsi0 failed",
        ])
        tally = classify_all(store, parse_rules(SIMPLE_RULES))
        assert sum(tally.per_class.values()) + tally.unmatched == len(store)

    def test_adding_a_rule_never_decreases_matches(self):
        store = make_store(["alpha one", "beta two", "gamma three", "delta four"])
        base = parse_rules("a\tinfo\t-\t-\talpha\n")
        extended = parse_rules("a\tinfo\t-\t-\talpha\nb\tinfo\t-\t-\tbeta\n")
        matched = lambda rs: sum(classify_all(store, rs).per_class.values())
        assert matched(extended) >= matched(base)


def brute_force_crosstab(store, rules):
    """Independent oracle: loop events x rules in priority order."""
    table = {}
    for record in store.events:
        winner = None
        for rule in sorted(rules.rules, key=lambda r: (r.priority, r.order)):
            if rule.matches(record):
                winner = rule
                break
        if winner is not None:
            key = (record.severity, winner.category)
            table[key] = table.get(key, 0) + 1
    return table
