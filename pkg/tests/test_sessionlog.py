from __future__ import annotations

import json

import pytest

from llmscape.sessionlog import (
    Category,
    LogEntry,
    SchemaViolation,
    SequenceViolation,
    SessionLog,
    SummaryError,
    canonical_json,
    summarize,
)


class TestCanonicalJson:
    def test_sorted_keys_and_fixed_floats(self):
        rendered = canonical_json({"b": 1.5, "a": [True, None, "x"]})
        assert rendered == '{"a":[true,null,"x"],"b":1.500000}'

    def test_float_six_decimals(self):
        assert canonical_json(0.1 + 0.2) == "0.300000"
        assert canonical_json(1.0 / 3.0) == "0.333333"
        assert canonical_json(-0.0) == "0.000000"

    def test_integers_stay_integers(self):
        assert canonical_json({"n": 42}) == '{"n":42}'

    def test_non_ascii_escaped(self):
        assert canonical_json("héllo") == '"h\\u00e9llo"'
        assert canonical_json("🙂") == '"\\ud83d\\ude42"'
        assert json.loads(canonical_json("🙂")) == "🙂"

    def test_control_characters_escaped(self):
        assert canonical_json("a\nb\tc") == '"a\\nb\\tc"'

    def test_round_trips_through_json(self):
        value = {"region": {"x": 1, "y": 2}, "magnitude": 0.9, "tags": ["a", "b"]}
        assert json.loads(canonical_json(value)) == {
            "region": {"x": 1, "y": 2},
            "magnitude": 0.9,
            "tags": ["a", "b"],
        }

    def test_rejects_nan(self):
        with pytest.raises(SchemaViolation):
            canonical_json(float("nan"))


def speech_payload(text="hello"):
    return {"speaker": "woman", "listener": "boy", "text": text, "conversation": "conv-1"}


class TestAppend:
    def test_valid_entry_grows_log_by_one(self, tmp_path):
        path = tmp_path / "log.jsonl"
        log = SessionLog(path)
        log.append(1, "woman", Category.SPEECH, speech_payload())
        log.close()
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["seq"] == 1
        assert record["category"] == "speech"

    def test_seq_assigned_densely(self):
        log = SessionLog()
        first = log.append(1, "woman", Category.SPEECH, speech_payload())
        second = log.append(1, "boy", Category.SPEECH, speech_payload("hi"))
        assert (first.seq, second.seq) == (1, 2)

    def test_explicit_seq_gap_rejected(self):
        log = SessionLog()
        log.append(1, "woman", Category.SPEECH, speech_payload())
        with pytest.raises(SequenceViolation):
            log.append(1, "woman", Category.SPEECH, speech_payload(), seq=5)
        assert len(log) == 1

    def test_schema_violation_rejected_and_surfaced(self):
        log = SessionLog()
        with pytest.raises(SchemaViolation):
            log.append(1, "woman", Category.SPEECH, {"speaker": "woman"})  # no text
        entries = log.entries()
        assert len(entries) == 1
        assert entries[0].category is Category.ERROR
        assert entries[0].payload["code"] == "schema_violation"

    def test_entries_since(self):
        log = SessionLog()
        for i in range(5):
            log.append(1, "woman", Category.SPEECH, speech_payload(f"t{i}"))
        suffix = log.entries_since(3)
        assert [entry.seq for entry in suffix] == [4, 5]
        assert log.entries_since(99) == []


class TestSummaries:
    def _write_log(self, tmp_path, entries):
        path = tmp_path / "log.jsonl"
        log = SessionLog(path)
        for tick, actor, category, payload in entries:
            log.append(tick, actor, category, payload)
        log.close()
        return path

    def test_empty_log(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text("")
        summary = summarize(path)
        assert summary.total == 0
        assert summary.by_category == {}

    def test_counts(self, tmp_path):
        entries = [
            (1, "woman", Category.SPEECH, speech_payload()),
            (1, "boy", Category.SPEECH, speech_payload("hi")),
            (2, "woman", Category.SPEECH, speech_payload("again")),
            (2, "boy", Category.ACTION, {"kind": "dance", "duration": 5}),
            (3, "boy", Category.ACTION, {"kind": "rest", "duration": 10}),
        ]
        summary = summarize(self._write_log(tmp_path, entries))
        assert summary.total == 5
        assert summary.by_category == {"speech": 3, "action": 2}
        assert summary.by_actor == {"woman": 2, "boy": 3}
        assert summary.by_action_kind == {"dance": 1, "rest": 1}

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = self._write_log(tmp_path, [(1, "woman", Category.SPEECH, speech_payload())])
        with open(path, "a") as handle:
            handle.write("this is not json\n")
        with pytest.raises(SummaryError) as err:
            summarize(path)
        assert err.value.line_number == 2

    def test_matches_independent_line_scan(self, tmp_path):
        from random import Random

        rng = Random(23)
        entries = []
        for _ in range(60):
            category = rng.choice([Category.SPEECH, Category.ACTION, Category.EVENT])
            if category is Category.SPEECH:
                payload = speech_payload("x")
            elif category is Category.ACTION:
                payload = {"kind": rng.choice(["dance", "rest", "wait"]), "duration": 1}
            else:
                payload = {"kind": "tremor", "magnitude": 0.7,
                           "region": {"x": 0, "y": 0, "width": 1, "height": 1}}
            entries.append((1, rng.choice(["woman", "boy"]), category, payload))
        path = self._write_log(tmp_path, entries)
        summary = summarize(path)
        # independent scan with plain json
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert summary.total == len(lines)
        for category in ("speech", "action", "event"):
            assert summary.by_category.get(category, 0) == sum(
                1 for record in lines if record["category"] == category
            )
        for kind in ("dance", "rest", "wait"):
            assert summary.by_action_kind.get(kind, 0) == sum(
                1 for record in lines
                if record["category"] == "action" and record["payload"]["kind"] == kind
            )


class TestEntryRender:
    def test_byte_stable_rendering(self):
        entry = LogEntry(7, 3, "woman", Category.EVENT,
                         {"kind": "tremor", "magnitude": 0.9,
                          "region": {"x": 1, "y": 2, "width": 3, "height": 3}})
        assert entry.render() == (
            '{"actor":"woman","category":"event","payload":{"kind":"tremor",'
            '"magnitude":0.900000,"region":{"height":3,"width":3,"x":1,"y":2}},'
            '"seq":7,"tick":3}'
        )
