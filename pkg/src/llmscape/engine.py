"""The deterministic tick loop: drain participant inputs, derive events, run
perception / reflection / action / conversation per agent in roster order,
apply effects, and append everything to the session log.

One logical writer advances ticks; the service layer enqueues inputs and
reads immutable snapshots concurrently. All randomness flows from a single
seeded generator, so identical (scenario, seed, script) runs produce
byte-identical logs.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from random import Random
from typing import Any

import numpy as np

from . import mind
from .actions import (
    ActionKind,
    ActionRequest,
    ActionValidationError,
    execute_action,
    validate_action,
)
from .gateway import BackendError
from .memory import (
    MemoryKind,
    PreconditionError,
    ReflectionError,
    should_reflect,
    synthesize_reflection,
)
from .mind import AgentState, GatewayReflector
from .sessionlog import Category, SessionLog, canonical_json
from .world import (
    EntityPose,
    EventKind,
    Region,
    TerrainGrid,
    WorldClock,
    WorldEvent,
    advance_clock,
    apply_terrain_edit,
    detect_shadow,
    detect_tremor,
    step_towards,
)


class EngineError(Exception):
    pass


class InboxError(EngineError):
    """Malformed participant input."""


# --- participant inputs -------------------------------------------------------


@dataclass(frozen=True)
class TerrainEditInput:
    region: Region
    delta: float


@dataclass(frozen=True)
class UtteranceInput:
    speaker: str
    text: str
    target_agent: str | None = None


@dataclass(frozen=True)
class ShadowInput:
    mask: Any  # boolean array matching the grid


ParticipantInput = TerrainEditInput | UtteranceInput | ShadowInput


class InputInbox:
    """FIFO queue of participant inputs, drained fully at each tick start.

    enqueue is safe to call from service threads while a tick runs; inputs
    landing mid-tick take effect at the next tick.
    """

    def __init__(self) -> None:
        self._items: list[tuple[int, ParticipantInput]] = []
        self._arrivals = 0
        self._lock = threading.Lock()

    def enqueue(self, item: ParticipantInput) -> int:
        with self._lock:
            self._arrivals += 1
            order = self._arrivals
            self._items.append((order, item))
            return order

    def drain(self) -> list[tuple[int, ParticipantInput]]:
        with self._lock:
            items, self._items = self._items, []
            return items

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class SessionRng:
    """Single seeded stream behind all session randomness (wander targets)."""

    def __init__(self, seed: int):
        self.seed = seed
        self.position = 0
        self._rng = Random(seed)

    def uniform(self, low: float, high: float) -> float:
        self.position += 1
        return self._rng.uniform(low, high)


# --- conversations --------------------------------------------------------------

END_MARKER = "[END]"
MAX_CONSECUTIVE_TURN_FAILURES = 2


@dataclass
class Conversation:
    id: str
    participants: tuple[str, str]  # initiator first; initiator speaks first
    max_turns: int
    turns: list[tuple[str, str, int]] = field(default_factory=list)
    state: str = "open"
    consecutive_failures: int = 0

    def next_speaker(self) -> str:
        if not self.turns:
            return self.participants[0]
        last = self.turns[-1][0]
        return self.participants[1] if last == self.participants[0] else self.participants[0]

    def other(self, speaker: str) -> str:
        return self.participants[1] if speaker == self.participants[0] else self.participants[0]

    def history_pairs(self) -> list[tuple[str, str]]:
        return [(speaker, text) for speaker, text, _ in self.turns]


# --- configuration ---------------------------------------------------------------


@dataclass
class SimulationConfig:
    ticks_per_day: int = 400
    tremor_threshold: float = 0.5
    perception_radius: float = 10.0
    reflection_threshold: int = 50
    memory_dimension: int = 64
    half_life: float = 100.0
    retrieval_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    max_turns: int = 8
    move_speed: float = 1.0
    token_budget: int = 2048
    tremor_interrupts_plans: bool = True
    microphone_region: Region | None = None  # None = the whole grid


@dataclass
class TickReport:
    tick: int
    events_emitted: int
    actions_executed: list[str]
    entries_appended: int


# --- the simulation ---------------------------------------------------------------


class Simulation:
    def __init__(
        self,
        grid: TerrainGrid,
        agents: list[AgentState],
        backend,
        config: SimulationConfig | None = None,
        seed: int = 0,
        log_path=None,
    ):
        self.config = config or SimulationConfig()
        self.grid = grid
        self.clock = WorldClock(0, self.config.ticks_per_day)
        self.agents: dict[str, AgentState] = {}
        for agent in agents:  # roster order is execution order
            if agent.name in self.agents:
                raise EngineError(f"duplicate agent name {agent.name!r}")
            agent.last_phase = self.clock.phase
            self.agents[agent.name] = agent
        self.backend = backend
        self.rng = SessionRng(seed)
        self.inbox = InputInbox()
        self.log = SessionLog(log_path)
        self.conversations: dict[str, Conversation] = {}
        self._conversation_counter = 0
        self._pending_events: list[WorldEvent] = []
        self._known_participants: set[str] = {"participant"}
        self._state_lock = threading.Lock()

    # -- input side ---------------------------------------------------------

    def enqueue_participant_input(self, item: ParticipantInput) -> int:
        """Validate and queue one participant input; returns its arrival order."""
        if isinstance(item, TerrainEditInput):
            if not item.region.within(self.grid.width, self.grid.height):
                raise InboxError(f"region {item.region} out of bounds")
        elif isinstance(item, UtteranceInput):
            if not item.text.strip():
                raise InboxError("utterance text must be non-empty")
            if item.target_agent is not None and item.target_agent not in self.agents:
                raise InboxError(f"unknown target agent {item.target_agent!r}")
        elif isinstance(item, ShadowInput):
            mask = np.asarray(item.mask, dtype=bool)
            if mask.shape != (self.grid.height, self.grid.width):
                raise InboxError(
                    f"mask shape {mask.shape} != ({self.grid.height}, {self.grid.width})"
                )
        else:
            raise InboxError(f"unsupported input {type(item).__name__}")
        return self.inbox.enqueue(item)

    # -- log helpers ----------------------------------------------------------

    def _log(self, actor: str, category: Category, payload: dict) -> None:
        self.log.append(self.clock.tick, actor, category, payload)

    def _log_event(self, event: WorldEvent, actor: str = "world") -> None:
        payload = {
            "kind": event.kind.value,
            "magnitude": float(event.magnitude),
            "region": event.region.as_dict(),
        }
        if event.payload is not None:
            payload["text"] = event.payload
        if event.source is not None:
            payload["source"] = event.source
        self._log(actor, Category.EVENT, payload)

    def _log_error(self, where: str, code: str, agent: str | None = None, detail: str = "") -> None:
        payload: dict[str, Any] = {"where": where, "code": code}
        if agent is not None:
            payload["agent"] = agent
        if detail:
            payload["detail"] = detail[:400]
        self._log(agent or "world", Category.ERROR, payload)

    # -- tick stages ------------------------------------------------------------

    def tick(self) -> TickReport:
        """Advance the world by one tick in the fixed stage order."""
        with self._state_lock:
            entries_before = len(self.log)
            self.clock = advance_clock(self.clock)
            now = self.clock.tick

            events = self._drain_and_derive_events(now)
            actions = self._run_agents(now, events)
            self._advance_conversations(now)

            return TickReport(
                tick=now,
                events_emitted=len(events),
                actions_executed=actions,
                entries_appended=len(self.log) - entries_before,
            )

    def _drain_and_derive_events(self, now: int) -> list[WorldEvent]:
        events: list[WorldEvent] = list(self._pending_events)
        self._pending_events = []

        for _, item in self.inbox.drain():
            if isinstance(item, TerrainEditInput):
                self.grid, total_change = apply_terrain_edit(self.grid, item.region, item.delta)
                tremor = detect_tremor(total_change, self.config.tremor_threshold, item.region, now)
                if tremor is not None:
                    events.append(tremor)
                    self._log_event(tremor)
            elif isinstance(item, UtteranceInput):
                events.append(self._receive_utterance(item, now))
            elif isinstance(item, ShadowInput):
                poses = [agent.pose for agent in self.agents.values()]
                for shadow in detect_shadow(np.asarray(item.mask, dtype=bool), poses, self.grid, now):
                    events.append(shadow)
                    self._log_event(shadow)
        return events

    def _receive_utterance(self, item: UtteranceInput, now: int) -> WorldEvent:
        self._known_participants.add(item.speaker)
        if item.target_agent is not None:
            target_pose = self.agents[item.target_agent].pose
            cx, cy = target_pose.cell()
            region = Region(cx, cy, 1, 1)
        elif self.config.microphone_region is not None:
            region = self.config.microphone_region
        else:
            region = Region(0, 0, self.grid.width, self.grid.height)
        event = WorldEvent(
            EventKind.UTTERANCE, 0.0, region, now, payload=item.text, source=item.speaker
        )
        self._log_event(event, actor=f"participant:{item.speaker}")

        if item.target_agent is not None:
            agent = self.agents[item.target_agent]
            conversation = self.conversations.get(agent.conversation or "")
            human_free = not any(
                c.state == "open" and item.speaker in c.participants
                for c in self.conversations.values()
            )
            if conversation is not None and conversation.state == "open" and item.speaker in conversation.participants:
                if conversation.next_speaker() == item.speaker:
                    self._record_turn(conversation, item.speaker, item.text, now)
            elif agent.conversation is None and human_free:
                conversation = self._open_conversation(item.speaker, agent.name)
                self._record_turn(conversation, item.speaker, item.text, now)
        return event

    def _run_agents(self, now: int, events: list[WorldEvent]) -> list[str]:
        executed: list[str] = []
        for agent in self.agents.values():
            observations = mind.perceive(
                agent,
                self.clock.phase,
                [a.pose for a in self.agents.values()],
                events,
                self.config.perception_radius,
                now,
            )
            for record in observations:
                self._log(
                    agent.name,
                    Category.CONTEMPLATION,
                    {"agent": agent.name, "kind": "observation", "text": record.text},
                )

            if should_reflect(agent.memory, self.config.reflection_threshold):
                self._reflect(agent, now, forced=False)

            if self.config.tremor_interrupts_plans and agent.plan is not None:
                trigger = self._tremor_in_range(agent, events)
                if trigger is not None:
                    self._adapt_plan(agent, trigger, now)

            if agent.conversation is not None:
                continue  # conversing; stage 4 owns this agent's turn
            if agent.is_busy(now):
                self._continue_action(agent)
                continue
            kind = self._begin_new_action(agent, now)
            if kind is not None:
                executed.append(kind.value)
        return executed

    def _tremor_in_range(self, agent: AgentState, events: list[WorldEvent]) -> WorldEvent | None:
        for event in events:
            if event.kind is EventKind.TREMOR:
                if event.region.distance_to(agent.pose.x, agent.pose.y) <= self.config.perception_radius:
                    return event
        return None

    def _continue_action(self, agent: AgentState) -> None:
        if agent.move_target is not None:
            agent.pose = step_towards(agent.pose, agent.move_target, self.config.move_speed)
            if (agent.pose.x, agent.pose.y) == agent.move_target:
                agent.move_target = None

    def _begin_new_action(self, agent: AgentState, now: int) -> ActionKind | None:
        agent.current_action = None
        context = mind.build_action_context(
            agent,
            self.clock.phase,
            self.grid,
            [a.pose for a in self.agents.values()],
            now,
            self.config.perception_radius,
            self.config.token_budget,
        )
        choice = mind.choose_action(agent, context, self.backend, now)
        if choice.fallback_reason is not None:
            self._log_error("choose_action", "backend_fallback", agent.name, choice.fallback_reason)
        request = choice.request

        talking_to_human = (
            request.kind is ActionKind.TALK_TO
            and request.target_entity not in self.agents
            and request.target_entity in self._known_participants
        )
        if not talking_to_human:
            try:
                validate_action(
                    request,
                    agent.pose,
                    self.grid,
                    [a.pose for a in self.agents.values()],
                    self.config.perception_radius,
                    in_conversation=frozenset(
                        name for name, a in self.agents.items() if a.conversation is not None
                    ),
                )
            except ActionValidationError as err:
                self._log_error("validate_action", err.code, agent.name, str(err))
                request = ActionRequest(agent.name, ActionKind.WAIT, requested_tick=now)

        return self._execute(agent, request, now)

    def _execute(self, agent: AgentState, request: ActionRequest, now: int) -> ActionKind:
        wander_target = None
        if request.kind is ActionKind.WANDER:
            wander_target = (
                self.rng.uniform(0.0, self.grid.width - 1e-9),
                self.rng.uniform(0.0, self.grid.height - 1e-9),
            )
        effects = execute_action(
            request,
            agent.pose,
            self.grid,
            now,
            self.config.move_speed,
            self.config.perception_radius,
            wander_target,
        )

        agent.current_action = request.kind
        agent.busy_until = now + effects.duration_ticks
        agent.somatic = mind.update_somatic(agent.somatic, request.kind, effects.duration_ticks)

        if effects.posture is not None:
            agent.pose = EntityPose(agent.name, agent.pose.x, agent.pose.y, effects.posture)
        if effects.move_target is not None:
            agent.move_target = effects.move_target
            self._continue_action(agent)

        for region, delta in effects.terrain_edits:
            self.grid, total_change = apply_terrain_edit(self.grid, region, delta)
            tremor = detect_tremor(total_change, self.config.tremor_threshold, region, now)
            if tremor is not None:
                self._log_event(tremor)
                self._pending_events.append(tremor)
        for event in effects.spawned_events:
            self._log_event(event, actor=agent.name)
            self._pending_events.append(event)

        agent.memory.remember(now, MemoryKind.OBSERVATION, effects.observation)

        payload: dict[str, Any] = {"kind": request.kind.value, "duration": effects.duration_ticks}
        if request.target_entity is not None:
            payload["target"] = request.target_entity
        if request.target_point is not None:
            payload["target"] = [float(request.target_point[0]), float(request.target_point[1])]
        self._log(agent.name, Category.ACTION, payload)

        self._advance_plan_cursor(agent, request.kind)

        if effects.opens_conversation_with is not None:
            self._start_conversation_for(agent, effects.opens_conversation_with, now)
        if effects.cognition is not None:
            self._dispatch_cognition(agent, effects.cognition, now)
        return request.kind

    def _advance_plan_cursor(self, agent: AgentState, kind: ActionKind) -> None:
        plan = agent.plan
        if plan is None:
            return
        step = plan.current_step()
        if step is not None and step.action is kind:
            plan.cursor += 1

    # -- cognition dispatch -----------------------------------------------------

    def _reflect(self, agent: AgentState, now: int, forced: bool) -> None:
        reflector = GatewayReflector(agent, self.backend, self.config.token_budget)
        try:
            records = synthesize_reflection(
                agent.memory,
                reflector,
                now,
                self.config.reflection_threshold,
                force=forced,
                weights=self.config.retrieval_weights,
                half_life=self.config.half_life,
            )
        except (ReflectionError, BackendError, PreconditionError) as err:
            self._log_error("reflection", "reflection_failed", agent.name, str(err))
            return
        for record in records:
            self._log(
                agent.name,
                Category.CONTEMPLATION,
                {
                    "agent": agent.name,
                    "kind": "reflection",
                    "text": record.text,
                    "importance": record.importance,
                },
            )

    def _dispatch_cognition(self, agent: AgentState, kind: ActionKind, now: int) -> None:
        poses = [a.pose for a in self.agents.values()]
        if kind is ActionKind.SELF_REFLECT:
            self._reflect(agent, now, forced=True)
        elif kind is ActionKind.FORMULATE_GOALS:
            context = mind.build_planning_context(
                agent, self.clock.phase, self.grid, poses, now,
                radius=self.config.perception_radius, budget=self.config.token_budget,
            )
            try:
                agent.plan = mind.formulate_goals(agent, context, self.backend)
            except (mind.PlanRejected, BackendError) as err:
                self._log_error("formulate_goals", "plan_rejected", agent.name, str(err))
                return
            self._log_plan(agent)
        elif kind is ActionKind.ADAPT_YOUR_PLAN:
            self._adapt_plan(agent, None, now)

    def _adapt_plan(self, agent: AgentState, trigger: WorldEvent | None, now: int) -> None:
        poses = [a.pose for a in self.agents.values()]
        context = mind.build_planning_context(
            agent, self.clock.phase, self.grid, poses, now, trigger,
            radius=self.config.perception_radius, budget=self.config.token_budget,
        )
        try:
            agent.plan = mind.adapt_plan(agent, trigger, context, self.backend)
        except (mind.PlanRejected, mind.NoActivePlan, BackendError) as err:
            code = "no_active_plan" if isinstance(err, mind.NoActivePlan) else "plan_rejected"
            self._log_error("adapt_plan", code, agent.name, str(err))
            return
        self._log_plan(agent)

    def _log_plan(self, agent: AgentState) -> None:
        plan = agent.plan
        assert plan is not None
        self._log(
            agent.name,
            Category.PLANNING,
            {
                "agent": agent.name,
                "goal": plan.goal,
                "steps": [step.as_payload() for step in plan.steps],
                "cursor": plan.cursor,
            },
        )

    # -- conversations ------------------------------------------------------------

    def _open_conversation(self, initiator: str, target: str) -> Conversation:
        self._conversation_counter += 1
        conversation = Conversation(
            id=f"conv-{self._conversation_counter}",
            participants=(initiator, target),
            max_turns=self.config.max_turns,
        )
        self.conversations[conversation.id] = conversation
        for name in conversation.participants:
            if name in self.agents:
                self.agents[name].conversation = conversation.id
        return conversation

    def _start_conversation_for(self, agent: AgentState, target: str, now: int) -> None:
        if target in self.agents:
            target_free = self.agents[target].conversation is None
        else:  # human peers can hold one conversation at a time too
            target_free = not any(
                c.state == "open" and target in c.participants
                for c in self.conversations.values()
            )
        if not target_free:
            self._log_error("start_conversation", "target_busy", agent.name, target)
            return
        if agent.conversation is not None:
            self._log_error("start_conversation", "initiator_busy", agent.name)
            return
        self._open_conversation(agent.name, target)

    def _record_turn(self, conversation: Conversation, speaker: str, text: str, now: int) -> None:
        conversation.turns.append((speaker, text, now))
        listener = conversation.other(speaker)
        actor = speaker if speaker in self.agents else f"participant:{speaker}"
        self._log(
            actor,
            Category.SPEECH,
            {
                "speaker": speaker,
                "listener": listener,
                "text": text,
                "conversation": conversation.id,
            },
        )
        if speaker in self.agents and listener in self.agents:
            self.agents[listener].memory.remember(
                now, MemoryKind.SPEECH, f'{speaker} said to me: "{text}"'
            )
        if speaker in self.agents:
            self.agents[speaker].memory.remember(now, MemoryKind.SPEECH, f'I said: "{text}"')
        if len(conversation.turns) >= conversation.max_turns:
            self._close_conversation(conversation)

    def _close_conversation(self, conversation: Conversation) -> None:
        conversation.state = "closed"
        for name in conversation.participants:
            if name in self.agents:
                self.agents[name].conversation = None

    def _advance_conversations(self, now: int) -> None:
        for conversation in list(self.conversations.values()):
            if conversation.state != "open":
                continue
            speaker_name = conversation.next_speaker()
            if speaker_name not in self.agents:
                continue  # human's turn arrives via utterance events
            agent = self.agents[speaker_name]
            context = mind.build_utterance_context(
                agent,
                conversation.other(speaker_name),
                conversation.history_pairs(),
                now,
                self.config.token_budget,
            )
            try:
                text = mind.compose_utterance(
                    agent, conversation.other(speaker_name), context, self.backend
                )
            except (mind.UtteranceFailed, BackendError) as err:
                conversation.consecutive_failures += 1
                self._log_error("conversation_turn", "turn_skipped", agent.name, str(err))
                if conversation.consecutive_failures >= MAX_CONSECUTIVE_TURN_FAILURES:
                    self._close_conversation(conversation)
                continue
            conversation.consecutive_failures = 0
            ends = END_MARKER in text
            text = text.replace(END_MARKER, "").strip()
            if text:
                self._record_turn(conversation, speaker_name, text, now)
            if ends and conversation.state == "open":
                self._close_conversation(conversation)

    # -- read side ------------------------------------------------------------------

    def state_digest(self) -> str:
        """Stable hash over terrain and agent state for replay verification."""
        with self._state_lock:
            payload = {
                "tick": self.clock.tick,
                "terrain": [[float(cell) for cell in row] for row in self.grid.cells],
                "agents": [
                    {
                        "name": agent.name,
                        "x": float(agent.pose.x),
                        "y": float(agent.pose.y),
                        "posture": agent.pose.posture.value,
                        "tiredness": float(agent.somatic.tiredness),
                        "busy_until": agent.busy_until,
                        "memories": [
                            [record.tick, record.kind.value, record.text, record.importance]
                            for record in agent.memory.records
                        ],
                    }
                    for agent in self.agents.values()
                ],
            }
        return hashlib.sha256(canonical_json(payload).encode("ascii")).hexdigest()

    def snapshot(self) -> dict:
        """Public state for the service layer; carries no memories or prompts."""
        with self._state_lock:
            buckets = ["rested", "tired", "very_tired", "exhausted"]
            thresholds = (0.33, 0.66, 0.85)
            open_conversations = []
            for conversation in self.conversations.values():
                if conversation.state != "open":
                    continue
                last_turn = None
                if conversation.turns:
                    speaker, text, turn_tick = conversation.turns[-1]
                    last_turn = {"speaker": speaker, "text": text, "tick": turn_tick}
                open_conversations.append(
                    {
                        "id": conversation.id,
                        "participants": list(conversation.participants),
                        "last_turn": last_turn,
                    }
                )
            return {
                "tick": self.clock.tick,
                "phase": self.clock.phase.value,
                "terrain": {
                    "width": self.grid.width,
                    "height": self.grid.height,
                    "cells": [[round(float(c), 4) for c in row] for row in self.grid.cells],
                },
                "agents": [
                    {
                        "name": agent.name,
                        "x": round(float(agent.pose.x), 4),
                        "y": round(float(agent.pose.y), 4),
                        "posture": agent.pose.posture.value,
                        "current_action": agent.current_action.value
                        if agent.current_action is not None
                        else None,
                        "tiredness": buckets[
                            sum(agent.somatic.tiredness >= t for t in thresholds)
                        ],
                    }
                    for agent in self.agents.values()
                ],
                "conversations": open_conversations,
            }

    # -- construction ------------------------------------------------------------------

    @classmethod
    def from_scenario(
        cls,
        scenario,
        seed: int = 0,
        script_path=None,
        backend=None,
        log_path=None,
    ) -> "Simulation":
        from .scenario import build_simulation

        return build_simulation(scenario, seed, script_path, backend, log_path)
