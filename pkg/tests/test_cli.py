import json
import os

import pytest

from generators import injected_sequence_store, template_corpus
from helpers import make_store, rec
from logmorph import write_store
from logmorph.cli import run

SYSLOG_FIXTURE = """\
<13>Mar  4 10:22:01 node7 sshd[812]: session opened for user root
<13>Mar  4 10:22:05 node7 sshd[812]: session closed for user root
<11>Mar  4 10:23:01 node7 kernel: disk sda reporting errors
Mar  4 10:24:01 node8 cron[44]: job started
this line is hopeless
"""


@pytest.fixture()
def syslog_file(tmp_path):
    path = tmp_path / "in.log"
    path.write_text(SYSLOG_FIXTURE)
    return str(path)


@pytest.fixture()
def store_file(tmp_path):
    store, _ = template_corpus(400, seed=15)
    path = tmp_path / "events.ndjson"
    write_store(store, str(path))
    return str(path)


def run_ok(args, capsys):
    code = run(args)
    captured = capsys.readouterr()
    assert code == 0, captured.err
    return captured.out


class TestUsage:
    def test_no_arguments(self, capsys):
        assert run([]) == 2

    def test_unknown_subcommand(self, capsys):
        assert run(["transmogrify"]) == 2

    def test_unknown_flag(self, capsys):
        assert run(["words", "--store", "x", "--frobnicate"]) == 2

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0
        assert "logmorph" in capsys.readouterr().out


class TestIngestCommand:
    def test_ingest_writes_store_and_reports_rejects(self, syslog_file, tmp_path, capsys):
        store_path = tmp_path / "s.ndjson"
        rejects = tmp_path / "rej.tsv"
        out = run_ok(["ingest", syslog_file, "--fmt", "syslog", "--year", "2011",
                      "--store", str(store_path), "--rejects", str(rejects)], capsys)
        assert "ingested 4 events, rejected 1" in out
        assert store_path.exists()
        assert "hopeless" in rejects.read_text()

    def test_year_required_for_syslog(self, syslog_file, tmp_path, capsys):
        code = run(["ingest", syslog_file, "--fmt", "syslog",
                    "--store", str(tmp_path / "s.ndjson")])
        assert code == 2

    def test_missing_input_file_is_fatal(self, tmp_path, capsys):
        code = run(["ingest", str(tmp_path / "nope.log"), "--fmt", "syslog",
                    "--year", "2011", "--store", str(tmp_path / "s.ndjson")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_ingest_appends_to_existing_store(self, syslog_file, tmp_path, capsys):
        store_path = str(tmp_path / "s.ndjson")
        run_ok(["ingest", syslog_file, "--fmt", "syslog", "--year", "2011",
                "--store", store_path], capsys)
        out = run_ok(["ingest", syslog_file, "--fmt", "syslog", "--year", "2011",
                      "--store", store_path], capsys)
        assert "total 8" in out


class TestClassifyCommand:
    def test_classify_with_builtin_ruleset(self, tmp_path, capsys):
        store = make_store([
            rec("q4AAbc01x: from=<a@x>, size=10, nrcpts=1", source="sendmail", ts=0),
            rec("q4AAbc01x: to=<b@y>, stat=Sent", source="sendmail", ts=1),
            rec("q4AAbc02x: to=<c@z>, stat=User unknown", source="sendmail", ts=2),
            rec("no rule covers this", ts=3),
        ])
        store_path = tmp_path / "mail.ndjson"
        write_store(store, str(store_path))
        out = run_ok(["classify", "--store", str(store_path), "--rules", "sendmail",
                      "--out", str(tmp_path)], capsys)
        assert "3 classes" in out and "1 unmatched" in out
        lines = (tmp_path / "classes.csv").read_text().splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == "class,category,count"
        assert "user-unknown,notice,1" in data
        assert "(unmatched),-,1" in data
        assert (tmp_path / "severity_category.csv").exists()

    def test_missing_store_is_fatal(self, tmp_path, capsys):
        assert run(["classify", "--store", str(tmp_path / "none.ndjson"),
                    "--rules", "sendmail", "--out", str(tmp_path)]) == 1


class TestTemplatesCommand:
    def test_reduction_summary_and_catalog(self, store_file, tmp_path, capsys):
        out_dir = tmp_path / "rep"
        out = run_ok(["templates", "--store", store_file, "--mask", "timestamp,pid",
                      "--out", str(out_dir)], capsys)
        assert "unique messages:" in out
        assert "-> " in out
        catalog = (out_dir / "catalog.tsv").read_text().splitlines()
        data = [ln for ln in catalog if not ln.startswith("#")]
        assert len(data) == 12
        assert catalog[-1].startswith("# outliers\t")

    def test_refinement_curve_non_increasing(self, store_file, tmp_path, capsys):
        out = run_ok(["templates", "--store", store_file,
                      "--mask", "timestamp,pid",
                      "--mask", "timestamp,pid,host",
                      "--merge-distance", "0.2",
                      "--out", str(tmp_path / "rep")], capsys)
        curve_line = [ln for ln in out.splitlines() if ln.startswith("classes:")][0]
        counts = [int(part.split("=")[1]) for part in curve_line.split()[1:]]
        assert counts == sorted(counts, reverse=True)


class TestWordsAndPhrases:
    def test_words_report(self, store_file, tmp_path, capsys):
        out = run_ok(["words", "--store", store_file, "--out", str(tmp_path)], capsys)
        assert "words: total=" in out
        lines = (tmp_path / "words.csv").read_text().splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == "word,count"

    def test_words_ndjson_format(self, store_file, tmp_path, capsys):
        run_ok(["words", "--store", store_file, "--out", str(tmp_path),
                "--format", "ndjson"], capsys)
        lines = (tmp_path / "words.ndjson").read_text().splitlines()
        header = json.loads(lines[0])
        assert header["tool"] == "logmorph"
        row = json.loads(lines[1])
        assert set(row) == {"word", "count"}

    def test_phrases_report(self, tmp_path, capsys):
        store = make_store(["server not able to start", "fine"])
        path = tmp_path / "s.ndjson"
        write_store(store, str(path))
        out = run_ok(["phrases", "--store", str(path), "--phrase", "not able",
                      "--out", str(tmp_path)], capsys)
        assert "phrase hits: 1" in out
        data = [ln for ln in (tmp_path / "phrases.csv").read_text().splitlines()
                if not ln.startswith("#")]
        assert data[1] == "not able,0,7"


class TestSequenceCommands:
    def test_pairs_min_confidence_one(self, tmp_path, capsys):
        store = make_store([
            rec(f"e {k}", event_id=k, ts=i)
            for i, k in enumerate([1, 2, 1, 2, 1, 3])
        ])
        path = tmp_path / "s.ndjson"
        write_store(store, str(path))
        run_ok(["pairs", "--store", str(path), "--min-confidence", "1.0",
                "--out", str(tmp_path)], capsys)
        data = [ln for ln in (tmp_path / "pairs.csv").read_text().splitlines()
                if not ln.startswith("#")][1:]
        assert data, "deterministic pairs expected"
        for row in data:
            assert row.endswith(",1.0000")
        antecedents = {row.split(",")[0] for row in data}
        assert ":1" not in antecedents  # 1 -> 2 twice, 1 -> 3 once: c = 2/3

    def test_ngrams_report(self, tmp_path, capsys):
        store = injected_sequence_store(noise_events=300, injections=10, seed=5)
        path = tmp_path / "s.ndjson"
        write_store(store, str(path))
        out = run_ok(["ngrams", "--store", str(path), "--n-max", "4",
                      "--min-support", "5", "--out", str(tmp_path)], capsys)
        text = (tmp_path / "ngrams.csv").read_text()
        assert "office:900|office:1066|office:902|office:1003,10" in text

    def test_profile_document(self, tmp_path, capsys):
        store = injected_sequence_store(noise_events=200, injections=5, seed=6)
        path = tmp_path / "s.ndjson"
        write_store(store, str(path))
        run_ok(["profile", "--store", str(path), "--out", str(tmp_path)], capsys)
        doc = json.loads((tmp_path / "profile.json").read_text())
        assert doc["tool"] == "logmorph"
        assert doc["events"] == len(store)
        assert "deterministic_pairs" in doc
        assert "top_ngrams" in doc

    def test_class_mode_requires_rules(self, store_file, tmp_path, capsys):
        code = run(["pairs", "--store", store_file, "--mode", "class",
                    "--out", str(tmp_path)])
        assert code == 1


class TestDeterminismAndEnv:
    def test_rerun_is_byte_identical(self, store_file, tmp_path, capsys):
        out_dir = tmp_path / "rep"
        args_sets = [
            ["templates", "--store", store_file, "--out", str(out_dir)],
            ["words", "--store", store_file, "--out", str(out_dir)],
            ["pairs", "--store", store_file, "--mode", "template", "--out", str(out_dir)],
            ["ngrams", "--store", store_file, "--mode", "template", "--out", str(out_dir)],
            ["profile", "--store", store_file, "--mode", "template", "--out", str(out_dir)],
        ]
        for args in args_sets:
            run_ok(args, capsys)
        first = {f: (out_dir / f).read_bytes() for f in os.listdir(out_dir)}
        for args in args_sets:
            run_ok(args, capsys)
        second = {f: (out_dir / f).read_bytes() for f in os.listdir(out_dir)}
        assert first == second

    def test_logmorph_out_overrides_flag(self, store_file, tmp_path, capsys, monkeypatch):
        env_dir = tmp_path / "from-env"
        flag_dir = tmp_path / "from-flag"
        monkeypatch.setenv("LOGMORPH_OUT", str(env_dir))
        run_ok(["words", "--store", store_file, "--out", str(flag_dir)], capsys)
        assert (env_dir / "words.csv").exists()
        assert not flag_dir.exists()
