"""Model backend boundary: budgeted prompt assembly, completion, tool-call parsing.

Two interchangeable backends: a live HTTP backend (endpoint and key from
LLMSCAPE_API_URL / LLMSCAPE_API_KEY) and a scripted backend that replays
canned replies keyed by (agent, step) for offline deterministic sessions.

The tool-call wire shape is deliberately minimal: a name plus a flat
arguments map, type-checked against per-tool parameter schemas.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .actions import ActionKind


class GatewayError(Exception):
    pass


class ConfigurationError(GatewayError):
    pass


class BackendError(GatewayError):
    """Transport failure or timeout talking to the live backend."""


class ToolCallParseError(GatewayError):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "string" | "number" | "array"
    required: bool = True


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    parameters: tuple[ParamSpec, ...] = ()

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": [
                {"name": p.name, "type": p.type, "required": p.required}
                for p in self.parameters
            ],
        }


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict[str, Any]


@dataclass
class ModelReply:
    """Exactly one of text / tool_calls is populated."""

    text: str | None = None
    tool_calls: list[ToolCall] | None = None

    def __post_init__(self) -> None:
        if (self.text is None) == (self.tool_calls is None):
            raise GatewayError("reply must carry exactly one of text or tool_calls")


# --- tool catalogue ---------------------------------------------------------

# Cognition tools the model uses to hand back structured plans and insights.
SET_PLAN = "set_plan"
REVISE_PLAN = "revise_plan"
RECORD_INSIGHTS = "record_insights"

_ACTION_DESCRIPTIONS = {
    ActionKind.TALK_TO: "Open a conversation with a nearby entity.",
    ActionKind.PILE_UP_SAND: "Pile up sand into a mound at a spot (defaults to where you stand).",
    ActionKind.REST: "Rest in place for a while.",
    ActionKind.WAIT: "Do nothing for a moment.",
    ActionKind.WANDER: "Wander towards a random spot.",
    ActionKind.GO_TO: "Walk in a straight line to the given coordinates.",
    ActionKind.SIT_DOWN: "Sit down (requires standing).",
    ActionKind.TAKE_NAP: "Lie down and nap (requires standing).",
    ActionKind.STAND_UP: "Stand up (requires sitting or napping).",
    ActionKind.DANCE: "Dance in place (requires standing).",
    ActionKind.FORMULATE_GOALS: "Form a fresh goal and a short plan of steps.",
    ActionKind.ADAPT_YOUR_PLAN: "Revise the remaining steps of your plan.",
    ActionKind.SELF_REFLECT: "Reflect on recent memories and record insights.",
    ActionKind.WHISTLE: "Whistle, audible to anyone within twice your perception radius.",
}

_ACTION_PARAMS: dict[ActionKind, tuple[ParamSpec, ...]] = {
    ActionKind.TALK_TO: (ParamSpec("target", "string"),),
    ActionKind.GO_TO: (ParamSpec("x", "number"), ParamSpec("y", "number")),
    ActionKind.PILE_UP_SAND: (
        ParamSpec("x", "number", required=False),
        ParamSpec("y", "number", required=False),
    ),
}


def action_tool_catalogue() -> list[ToolDescriptor]:
    """One tool per catalogue action, names verbatim."""
    return [
        ToolDescriptor(kind.value, _ACTION_DESCRIPTIONS[kind], _ACTION_PARAMS.get(kind, ()))
        for kind in ActionKind
    ]


def cognition_tool_catalogue() -> list[ToolDescriptor]:
    return [
        ToolDescriptor(SET_PLAN, "Set a goal and 2-5 plan steps.",
                       (ParamSpec("goal", "string"), ParamSpec("steps", "array"))),
        ToolDescriptor(REVISE_PLAN, "Replace the remaining plan steps.",
                       (ParamSpec("steps", "array"),)),
        ToolDescriptor(RECORD_INSIGHTS, "Record 1-3 reflection insights.",
                       (ParamSpec("insights", "array"),)),
    ]


def full_tool_catalogue() -> list[ToolDescriptor]:
    return action_tool_catalogue() + cognition_tool_catalogue()


# --- prompt assembly --------------------------------------------------------

def estimate_tokens(text: str) -> int:
    """Crude chars/4 estimate; a real tokenizer is a live-mode refinement."""
    return math.ceil(len(text) / 4)


@dataclass
class PromptContext:
    agent: str
    system_text: str
    world_context: str
    retrieved_memories: list[str] = field(default_factory=list)
    conversation_history: list[tuple[str, str]] = field(default_factory=list)
    tool_catalogue: list[ToolDescriptor] = field(default_factory=list)
    token_budget: int = 4096

    def estimated_tokens(self) -> int:
        total = estimate_tokens(self.system_text) + estimate_tokens(self.world_context)
        total += sum(estimate_tokens(m) for m in self.retrieved_memories)
        total += sum(estimate_tokens(f"{speaker}: {text}") for speaker, text in self.conversation_history)
        return total

    def messages(self) -> list[dict[str, str]]:
        """Flatten to chat messages for the live wire."""
        system = self.system_text + "\n\n" + self.world_context
        if self.retrieved_memories:
            system += "\n\nRelevant memories:\n" + "\n".join(
                f"- {m}" for m in self.retrieved_memories
            )
        messages = [{"role": "system", "content": system}]
        for speaker, text in self.conversation_history:
            role = "assistant" if speaker == self.agent else "user"
            messages.append({"role": role, "content": f"{speaker}: {text}"})
        return messages


def assemble_prompt(
    agent: str,
    system_text: str,
    world_context: str,
    memories: list[tuple[float, str]],
    history: list[tuple[str, str]],
    budget: int,
    tool_catalogue: list[ToolDescriptor] | None = None,
) -> PromptContext:
    """Pack the context without ever exceeding the token budget.

    System text and world context are always included. The remaining budget
    is filled with memories in descending score order, then with the most
    recent history turns; nothing is truncated mid-item, so the included
    memories are always a top-m prefix of the scored list.
    """
    base = estimate_tokens(system_text) + estimate_tokens(world_context)
    if budget < base:
        raise ConfigurationError(
            f"budget {budget} cannot fit system text and world context ({base} tokens)"
        )
    remaining = budget - base

    ranked = sorted(memories, key=lambda pair: -pair[0])  # stable: input order breaks ties
    included_memories: list[str] = []
    for _, text in ranked:
        cost = estimate_tokens(text)
        if cost > remaining:
            break
        included_memories.append(text)
        remaining -= cost

    included_history: list[tuple[str, str]] = []
    for speaker, text in reversed(history):
        cost = estimate_tokens(f"{speaker}: {text}")
        if cost > remaining:
            break
        included_history.append((speaker, text))
        remaining -= cost
    included_history.reverse()

    return PromptContext(
        agent=agent,
        system_text=system_text,
        world_context=world_context,
        retrieved_memories=included_memories,
        conversation_history=included_history,
        tool_catalogue=tool_catalogue if tool_catalogue is not None else full_tool_catalogue(),
        token_budget=budget,
    )


# --- tool-call parsing ------------------------------------------------------

def _check_argument(spec: ParamSpec, value: Any, tool: str) -> None:
    if spec.type == "string":
        ok = isinstance(value, str)
    elif spec.type == "number":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif spec.type == "array":
        ok = isinstance(value, list)
    else:
        ok = False
    if not ok:
        raise ToolCallParseError(
            "bad_argument_type", f"{tool}.{spec.name} expected {spec.type}, got {type(value).__name__}"
        )


def parse_tool_calls(raw: str | dict | list, catalogue: list[ToolDescriptor]) -> list[ToolCall]:
    """Validate raw model output into tool calls; never raises anything but ToolCallParseError.

    Accepts a JSON string or an already-decoded structure shaped either as
    {"tool_calls": [{"name": ..., "arguments": {...}}, ...]} or as a single
    {"name": ..., "arguments": {...}} object.
    """
    by_name = {tool.name: tool for tool in catalogue}

    if isinstance(raw, str):
        try:
            decoded = json.loads(raw)
        except (json.JSONDecodeError, RecursionError) as err:
            raise ToolCallParseError("malformed_reply", f"not valid JSON: {err}") from None
    else:
        decoded = raw

    if isinstance(decoded, dict) and "tool_calls" in decoded:
        entries = decoded["tool_calls"]
    elif isinstance(decoded, dict) and "name" in decoded:
        entries = [decoded]
    elif isinstance(decoded, list):
        entries = decoded
    else:
        raise ToolCallParseError("malformed_reply", "expected a tool call object or list")

    if not isinstance(entries, list) or not entries:
        raise ToolCallParseError("malformed_reply", "tool_calls must be a non-empty list")

    calls: list[ToolCall] = []
    for entry in entries:
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise ToolCallParseError("malformed_reply", "each call needs a string name")
        name = entry["name"]
        if name not in by_name:
            raise ToolCallParseError("unknown_tool", name)
        arguments = entry.get("arguments", {})
        if not isinstance(arguments, dict):
            raise ToolCallParseError("malformed_reply", f"{name} arguments must be a map")
        tool = by_name[name]
        known = {p.name: p for p in tool.parameters}
        for key in arguments:
            if key not in known:
                raise ToolCallParseError("unexpected_argument", f"{name}.{key}")
        for spec in tool.parameters:
            if spec.name not in arguments:
                if spec.required:
                    raise ToolCallParseError("missing_argument", f"{name}.{spec.name}")
                continue
            _check_argument(spec, arguments[spec.name], name)
        calls.append(ToolCall(name, dict(arguments)))
    return calls


# --- backends ---------------------------------------------------------------

def default_wait_reply() -> ModelReply:
    return ModelReply(tool_calls=[ToolCall(ActionKind.WAIT.value, {})])


class ScriptedBackend:
    """Replays canned replies from a JSONL script keyed by (agent, step).

    Each complete() call for an agent advances that agent's step counter by
    one; missing or exhausted steps fall back to a deterministic wait call.
    """

    def __init__(self, script: dict[tuple[str, int], ModelReply] | None = None):
        self._script = script or {}
        self._steps: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        script: dict[tuple[str, int], ModelReply] = {}
        with open(path, encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    record = json.loads(line)
                    agent = record["agent"]
                    step = int(record["step"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                    raise ConfigurationError(f"bad script line {line_number}: {err}") from None
                key = (agent, step)
                if key in script:
                    raise ConfigurationError(f"duplicate script key {key} at line {line_number}")
                if "text" in record:
                    script[key] = ModelReply(text=str(record["text"]))
                elif "tool" in record:
                    script[key] = ModelReply(
                        tool_calls=[ToolCall(str(record["tool"]), dict(record.get("args", {})))]
                    )
                else:
                    raise ConfigurationError(f"script line {line_number} needs 'text' or 'tool'")
        return cls(script)

    def step_of(self, agent: str) -> int:
        return self._steps.get(agent, 0)

    def complete(self, context: PromptContext) -> ModelReply:
        step = self._steps.get(context.agent, 0) + 1
        self._steps[context.agent] = step
        reply = self._script.get((context.agent, step))
        if reply is None:
            return default_wait_reply()
        return reply


class LiveBackend:
    """One-shot chat completion over HTTP with bounded retries.

    Expects the endpoint to accept {"messages": [...], "tools": [...]} and
    answer {"text": ...} or {"tool_calls": [{"name", "arguments"}, ...]}.
    """

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: tuple[float, ...] = (1.0, 2.0),
    ):
        self.url = url or os.environ.get("LLMSCAPE_API_URL", "")
        self.api_key = api_key or os.environ.get("LLMSCAPE_API_KEY", "")
        if not self.url:
            raise ConfigurationError("live backend needs LLMSCAPE_API_URL")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def complete(self, context: PromptContext) -> ModelReply:
        import requests

        body = {
            "messages": context.messages(),
            "tools": [tool.as_dict() for tool in context.tool_catalogue],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = requests.post(
                    self.url, json=body, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                payload = response.json()
                if "tool_calls" in payload:
                    return ModelReply(
                        tool_calls=[
                            ToolCall(str(c.get("name", "")), dict(c.get("arguments", {})))
                            for c in payload["tool_calls"]
                        ]
                    )
                if "text" in payload:
                    return ModelReply(text=str(payload["text"]))
                raise BackendError(f"reply carries neither text nor tool_calls: {payload!r}")
            except BackendError:
                raise
            except Exception as err:  # transport, timeout, bad JSON
                last_error = err
                if attempt < self.retries:
                    time.sleep(self.backoff[min(attempt, len(self.backoff) - 1)])
        raise BackendError(f"live backend failed after {self.retries + 1} attempts: {last_error}")


def complete(context: PromptContext, backend) -> ModelReply:
    """One completion round-trip; retries on invalid content are the caller's job."""
    return backend.complete(context)
