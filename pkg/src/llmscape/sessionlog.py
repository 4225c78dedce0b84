"""Append-only session corpus: one JSONL line per speech, contemplation,
planning, action, event, or error record, plus summary and replay checks.

Lines are rendered canonically (sorted keys, ASCII, floats at fixed
6-decimal precision) so that byte-identical replay is meaningful.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable


class LogError(Exception):
    pass


class SchemaViolation(LogError):
    pass


class SequenceViolation(LogError):
    pass


class SummaryError(LogError):
    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {detail}")


class ReplayDivergence(LogError):
    def __init__(self, seq: int, expected: str, actual: str):
        self.seq = seq
        super().__init__(
            f"replay diverged at seq {seq}:\n  logged: {expected!r}\n  replay: {actual!r}"
        )


class Category(str, Enum):
    SPEECH = "speech"
    CONTEMPLATION = "contemplation"
    PLANNING = "planning"
    ACTION = "action"
    EVENT = "event"
    ERROR = "error"


# Required payload keys per category; extra keys are allowed.
PAYLOAD_SCHEMAS: dict[Category, frozenset[str]] = {
    Category.SPEECH: frozenset({"speaker", "text"}),
    Category.CONTEMPLATION: frozenset({"agent", "kind", "text"}),
    Category.PLANNING: frozenset({"agent", "goal", "steps"}),
    Category.ACTION: frozenset({"kind", "duration"}),
    Category.EVENT: frozenset({"kind", "magnitude", "region"}),
    Category.ERROR: frozenset({"where", "code"}),
}


def canonical_json(value: Any) -> str:
    """Deterministic JSON: sorted keys, ASCII escapes, floats as %.6f."""
    out: list[str] = []
    _render(value, out)
    return "".join(out)


def _render(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, Enum):
        _render(value.value, out)
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise SchemaViolation("non-finite floats cannot be logged")
        text = f"{value:.6f}"
        if text == "-0.000000":  # normalize signed zero
            text = "0.000000"
        out.append(text)
    elif isinstance(value, str):
        out.append(_render_string(value))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for index, item in enumerate(value):
            if index:
                out.append(",")
            _render(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        keys = list(value.keys())
        if any(not isinstance(key, str) for key in keys):
            raise SchemaViolation("payload keys must be strings")
        for index, key in enumerate(sorted(keys)):
            if index:
                out.append(",")
            out.append(_render_string(key))
            out.append(":")
            _render(value[key], out)
        out.append("}")
    else:
        # numpy scalars and similar duck-typed numbers
        if hasattr(value, "item"):
            _render(value.item(), out)
            return
        raise SchemaViolation(f"unserializable value of type {type(value).__name__}")


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _render_string(text: str) -> str:
    parts = ['"']
    for char in text:
        if char in _ESCAPES:
            parts.append(_ESCAPES[char])
        elif ord(char) < 0x20:
            parts.append(f"\\u{ord(char):04x}")
        elif ord(char) > 0x7E:
            code = ord(char)
            if code > 0xFFFF:  # surrogate pair
                code -= 0x10000
                parts.append(f"\\u{0xD800 + (code >> 10):04x}\\u{0xDC00 + (code & 0x3FF):04x}")
            else:
                parts.append(f"\\u{code:04x}")
        else:
            parts.append(char)
    parts.append('"')
    return "".join(parts)


def parse_line(line: str) -> dict:
    import json

    return json.loads(line)


@dataclass(frozen=True)
class LogEntry:
    seq: int
    tick: int
    actor: str  # agent name, "world", or "participant:<label>"
    category: Category
    payload: dict[str, Any]

    def render(self) -> str:
        return canonical_json(
            {
                "seq": self.seq,
                "tick": self.tick,
                "actor": self.actor,
                "category": self.category.value,
                "payload": self.payload,
            }
        )


def validate_payload(category: Category, payload: dict[str, Any]) -> None:
    required = PAYLOAD_SCHEMAS[category]
    missing = required - payload.keys()
    if missing:
        raise SchemaViolation(
            f"{category.value} payload missing keys: {', '.join(sorted(missing))}"
        )


class SessionLog:
    """Single-writer append-only log; readers may tail concurrently."""

    def __init__(self, path: str | Path | None = None):
        self._entries: list[LogEntry] = []
        self._lock = threading.Lock()
        self._appended = threading.Condition(self._lock)
        self._handle = open(path, "w", encoding="utf-8") if path is not None else None

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    @property
    def last_seq(self) -> int:
        with self._lock:
            return len(self._entries)

    def append(
        self,
        tick: int,
        actor: str,
        category: Category,
        payload: dict[str, Any],
        seq: int | None = None,
    ) -> LogEntry:
        """Append one record; seq is assigned densely (1, 2, 3, ...).

        A caller-supplied seq must be exactly the next one. A payload that
        fails its category schema is rejected and surfaced as an error
        entry in the log before the violation is raised.
        """
        with self._lock:
            next_seq = len(self._entries) + 1
            if seq is not None and seq != next_seq:
                raise SequenceViolation(f"seq {seq} would gap or duplicate; next is {next_seq}")
            try:
                validate_payload(category, payload)
                entry = LogEntry(next_seq, tick, actor, category, dict(payload))
                self._write(entry)
            except SchemaViolation as violation:
                error_entry = LogEntry(
                    next_seq,
                    tick,
                    "world",
                    Category.ERROR,
                    {"where": "session-log", "code": "schema_violation", "detail": str(violation)},
                )
                self._write(error_entry)
                raise
            return entry

    def _write(self, entry: LogEntry) -> None:
        line = entry.render()
        self._entries.append(entry)
        if self._handle is not None:
            self._handle.write(line + "\n")
            self._handle.flush()
        self._appended.notify_all()

    def entries_since(self, since_seq: int) -> list[LogEntry]:
        with self._lock:
            if since_seq >= len(self._entries):
                return []
            return list(self._entries[max(since_seq, 0):])

    def wait_for_entries(self, since_seq: int, timeout: float | None = None) -> list[LogEntry]:
        """Block until entries beyond since_seq exist (or timeout); may return []."""
        with self._lock:
            if since_seq < len(self._entries):
                return list(self._entries[max(since_seq, 0):])
            self._appended.wait(timeout)
            if since_seq < len(self._entries):
                return list(self._entries[max(since_seq, 0):])
            return []

    def entries(self) -> list[LogEntry]:
        with self._lock:
            return list(self._entries)

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


@dataclass
class LogSummary:
    total: int
    by_category: dict[str, int]
    by_actor: dict[str, int]
    by_action_kind: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "by_category": dict(sorted(self.by_category.items())),
            "by_actor": dict(sorted(self.by_actor.items())),
            "by_action_kind": dict(sorted(self.by_action_kind.items())),
        }


def iter_log_lines(path: str | Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line:
                yield line_number, line


def summarize(path: str | Path) -> LogSummary:
    """Exact per-category / per-actor / per-action-kind counts over a log file."""
    by_category: dict[str, int] = {}
    by_actor: dict[str, int] = {}
    by_action_kind: dict[str, int] = {}
    total = 0
    expected_seq = 1
    for line_number, line in iter_log_lines(path):
        try:
            record = parse_line(line)
            seq = record["seq"]
            category = record["category"]
            actor = record["actor"]
            payload = record["payload"]
        except Exception as err:
            raise SummaryError(line_number, f"malformed log line: {err}") from None
        if category not in {c.value for c in Category}:
            raise SummaryError(line_number, f"unknown category {category!r}")
        if seq != expected_seq:
            raise SummaryError(line_number, f"seq {seq} out of order; expected {expected_seq}")
        expected_seq += 1
        total += 1
        by_category[category] = by_category.get(category, 0) + 1
        by_actor[actor] = by_actor.get(actor, 0) + 1
        if category == Category.ACTION.value:
            kind = payload.get("kind", "?")
            by_action_kind[kind] = by_action_kind.get(kind, 0) + 1
    return LogSummary(total, by_category, by_actor, by_action_kind)


def replay(
    log_path: str | Path,
    scenario,
    script_path: str | Path | None,
    seed: int,
    ticks: int | None = None,
) -> str:
    """Re-run a scripted session and check it reproduces the log byte-identically.

    Returns the final terrain+agent state digest. `ticks` defaults to the
    last logged tick, which is only safe when the final ticks of the
    original session produced log entries; callers that know the true tick
    count should pass it.
    """
    from .engine import Simulation  # local import; engine depends on this module

    logged = [line for _, line in iter_log_lines(log_path)]
    if ticks is None:
        ticks = 0
        if logged:
            last = parse_line(logged[-1])
            ticks = int(last["tick"])

    simulation = Simulation.from_scenario(scenario, seed=seed, script_path=script_path)
    for _ in range(ticks):
        simulation.tick()
    replayed = [entry.render() for entry in simulation.log.entries()]

    for index in range(max(len(logged), len(replayed))):
        expected = logged[index] if index < len(logged) else "<missing>"
        actual = replayed[index] if index < len(replayed) else "<missing>"
        if expected != actual:
            raise ReplayDivergence(index + 1, expected, actual)
    return simulation.state_digest()
