"""Per-agent cognition: partial perception, tiredness dynamics, plans,
action choice, and utterances, all mediated through the model gateway.

Agents never see global truth: prompts are built from the agent's own
state, entities within its perception radius, and a local terrain
impression only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .actions import ActionKind, ActionRequest, ActionValidationError, tiredness_rate
from .gateway import (
    RECORD_INSIGHTS,
    REVISE_PLAN,
    SET_PLAN,
    BackendError,
    ModelReply,
    PromptContext,
    ToolCallParseError,
    action_tool_catalogue,
    assemble_prompt,
    cognition_tool_catalogue,
    complete,
    parse_tool_calls,
)
from .memory import (
    Insight,
    MemoryKind,
    MemoryRecord,
    MemoryStore,
    ReflectionError,
    embed_text,
    retrieve_top_k,
)
from .world import EntityPose, EventKind, Phase, TerrainGrid, WorldEvent, nearby_entities


class MindError(Exception):
    pass


class PlanRejected(MindError):
    """The backend named steps that do not map onto catalogue actions."""


class NoActivePlan(MindError):
    pass


class UtteranceFailed(MindError):
    pass


DEFAULT_PERCEPTION_RADIUS = 10.0
DEFAULT_TOKEN_BUDGET = 2048
MEMORY_CONTEXT_SIZE = 8
CHOOSE_ACTION_ATTEMPTS = 3  # one try plus two retries

# Tiredness phrasing thresholds; fixed so prompts replay identically.
SOMATIC_DESCRIPTORS = (
    (0.85, "you are exhausted"),
    (0.66, "you feel very tired"),
    (0.33, "you feel a little tired"),
    (0.0, "you feel rested"),
)


@dataclass(frozen=True)
class Persona:
    name: str
    disposition: str
    speech_style: str = "plain"

    def __post_init__(self) -> None:
        if not self.disposition:
            raise MindError("persona disposition must be non-empty")


@dataclass
class SomaticState:
    tiredness: float = 0.0

    def __post_init__(self) -> None:
        self.tiredness = min(1.0, max(0.0, float(self.tiredness)))


@dataclass
class PlanStep:
    description: str
    action: ActionKind
    target: str | tuple[float, float] | None = None

    def as_payload(self) -> dict:
        target: object
        if isinstance(self.target, tuple):
            target = [self.target[0], self.target[1]]
        else:
            target = self.target
        return {"description": self.description, "action": self.action.value, "target": target}


@dataclass
class Plan:
    goal: str
    steps: list[PlanStep]
    cursor: int = 0

    def current_step(self) -> PlanStep | None:
        if 0 <= self.cursor < len(self.steps):
            return self.steps[self.cursor]
        return None


@dataclass
class AgentState:
    persona: Persona
    pose: EntityPose
    somatic: SomaticState = field(default_factory=SomaticState)
    memory: MemoryStore = field(default_factory=MemoryStore)
    plan: Plan | None = None
    busy_until: int = 0
    conversation: str | None = None
    # execution bookkeeping for the orchestrator
    current_action: ActionKind | None = None
    move_target: tuple[float, float] | None = None
    # perception trackers for change detection
    last_phase: Phase | None = None
    last_nearby: frozenset[str] = frozenset()

    @property
    def name(self) -> str:
        return self.persona.name

    def is_busy(self, now: int) -> bool:
        return self.busy_until > now


def somatic_descriptor(tiredness: float) -> str:
    for threshold, text in SOMATIC_DESCRIPTORS:
        if tiredness >= threshold:
            return text
    return SOMATIC_DESCRIPTORS[-1][1]


def update_somatic(somatic: SomaticState, kind: ActionKind, duration_ticks: int) -> SomaticState:
    """Tiredness drifts by the action's per-tick rate over its duration, clamped."""
    if duration_ticks < 0:
        raise MindError("duration must be >= 0")
    value = somatic.tiredness + tiredness_rate(kind) * duration_ticks
    return SomaticState(tiredness=min(1.0, max(0.0, value)))


def perceive(
    agent: AgentState,
    phase: Phase,
    poses: list[EntityPose],
    events: list[WorldEvent],
    radius: float = DEFAULT_PERCEPTION_RADIUS,
    now: int = 0,
) -> list[MemoryRecord]:
    """Turn this tick's stimuli into observation memories.

    One observation per: phase change, entity entering or leaving the
    nearby radius, and tremor/shadow/utterance/ambient event within
    perception range (ambient events carry their own audible range).
    """
    texts: list[str] = []

    if agent.last_phase is not None and phase != agent.last_phase:
        texts.append(f"The light changed; it is now {phase.value}.")
    agent.last_phase = phase

    current = nearby_entities(poses, agent.name, radius)
    current_set = frozenset(current)
    for other in current:  # nearest first
        if other not in agent.last_nearby:
            texts.append(f"{other} is nearby now.")
    for other in sorted(agent.last_nearby - current_set):
        texts.append(f"{other} is no longer nearby.")
    agent.last_nearby = current_set

    for event in events:
        if event.source == agent.name:
            continue  # own whistles and words are already first-person memories
        distance = event.region.distance_to(agent.pose.x, agent.pose.y)
        if event.kind is EventKind.AMBIENT:
            if distance <= event.magnitude:
                source = event.source or "somewhere"
                texts.append(f"I heard {event.payload or 'a sound'} from {source}.")
        elif distance <= radius:
            if event.kind is EventKind.TREMOR:
                texts.append(f"I felt a tremor shake the sand (strength {event.magnitude:.2f}).")
            elif event.kind is EventKind.SHADOW:
                texts.append("A shadow passed over the sand here.")
            elif event.kind is EventKind.UTTERANCE:
                speaker = event.source or "someone"
                texts.append(f'{speaker} said: "{event.payload}"')

    return [agent.memory.remember(now, MemoryKind.OBSERVATION, text) for text in texts]


# --- prompt building ---------------------------------------------------------


def _local_terrain_impression(grid: TerrainGrid, pose: EntityPose, radius: float) -> str:
    """Mean elevation in the visible window only; far cells never leak."""
    x0 = max(0, int(pose.x - radius))
    x1 = min(grid.width, int(pose.x + radius) + 1)
    y0 = max(0, int(pose.y - radius))
    y1 = min(grid.height, int(pose.y + radius) + 1)
    mean = float(grid.cells[y0:y1, x0:x1].mean())
    if mean > 0.6:
        return "the sand around you is piled high"
    if mean < 0.4:
        return "the sand around you lies low"
    return "the sand around you is fairly level"


def system_text_for(agent: AgentState) -> str:
    persona = agent.persona
    return (
        f"You are {persona.name}. {persona.disposition} "
        f"You speak in a {persona.speech_style} way. "
        f"Right now {somatic_descriptor(agent.somatic.tiredness)}."
    )


def world_context_for(
    agent: AgentState,
    phase: Phase,
    grid: TerrainGrid,
    poses: list[EntityPose],
    radius: float,
) -> str:
    nearby = nearby_entities(poses, agent.name, radius)
    postures = {p.entity_id: p.posture.value for p in poses}
    if nearby:
        listing = ", ".join(f"{other} ({postures[other]})" for other in nearby)
    else:
        listing = "no one"
    lines = [
        f"It is {phase.value}.",
        f"You are {agent.pose.posture.value} and {_local_terrain_impression(grid, agent.pose, radius)}.",
        f"Nearby: {listing}.",
    ]
    if agent.plan is not None:
        step = agent.plan.current_step()
        done = f"{agent.plan.cursor}/{len(agent.plan.steps)} steps done"
        current = f"next: {step.description}" if step else "all steps done"
        lines.append(f"Your goal: {agent.plan.goal} ({done}; {current}).")
    return " ".join(lines)


def _scored_memory_texts(
    agent: AgentState, query_text: str, now: int
) -> list[tuple[float, str]]:
    query = embed_text(query_text, agent.memory.dimension)
    records = retrieve_top_k(agent.memory, query, MEMORY_CONTEXT_SIZE, now)
    # Descending placeholder scores keep the retrieval order through packing.
    return [
        (float(len(records) - index), f"[tick {record.tick}] {record.text}")
        for index, record in enumerate(records)
    ]


def build_action_context(
    agent: AgentState,
    phase: Phase,
    grid: TerrainGrid,
    poses: list[EntityPose],
    now: int,
    radius: float = DEFAULT_PERCEPTION_RADIUS,
    budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptContext:
    world = world_context_for(agent, phase, grid, poses, radius)
    memories = _scored_memory_texts(agent, world, now)
    return assemble_prompt(
        agent.name,
        system_text_for(agent),
        world + " Choose exactly one action tool call.",
        memories,
        [],
        budget,
        tool_catalogue=action_tool_catalogue(),
    )


# --- action choice ------------------------------------------------------------


@dataclass
class ActionChoice:
    request: ActionRequest
    fallback_reason: str | None = None  # set when every attempt failed


def _reply_to_request(reply: ModelReply, agent: AgentState, now: int) -> ActionRequest:
    if reply.tool_calls is None:
        raise ToolCallParseError("not_a_tool_call", "action choice needs a tool call")
    raw = [{"name": call.name, "arguments": call.arguments} for call in reply.tool_calls]
    calls = parse_tool_calls(raw, action_tool_catalogue())
    call = calls[0]
    kind = ActionKind(call.name)
    target_entity = None
    target_point = None
    if kind is ActionKind.TALK_TO:
        target_entity = call.arguments["target"]
    elif kind is ActionKind.GO_TO:
        target_point = (float(call.arguments["x"]), float(call.arguments["y"]))
    elif kind is ActionKind.PILE_UP_SAND and "x" in call.arguments and "y" in call.arguments:
        target_point = (float(call.arguments["x"]), float(call.arguments["y"]))
    return ActionRequest(agent.name, kind, target_entity, target_point, now)


def choose_action(
    agent: AgentState,
    context: PromptContext,
    backend,
    now: int,
) -> ActionChoice:
    """One catalogue action from the backend; totality via the wait fallback.

    Invalid or unparseable replies are retried up to two times; a third
    failure degrades to wait so the tick never stalls on the model.
    """
    if agent.is_busy(now):
        raise MindError(f"{agent.name} is busy until tick {agent.busy_until}")
    failures: list[str] = []
    for _ in range(CHOOSE_ACTION_ATTEMPTS):
        try:
            reply = complete(context, backend)
        except BackendError as err:
            failures.append(str(err))
            continue
        try:
            return ActionChoice(_reply_to_request(reply, agent, now))
        except (ToolCallParseError, ActionValidationError, KeyError, ValueError, TypeError) as err:
            failures.append(str(err))
    return ActionChoice(
        ActionRequest(agent.name, ActionKind.WAIT, requested_tick=now),
        fallback_reason="; ".join(failures[-CHOOSE_ACTION_ATTEMPTS:]) or "no usable reply",
    )


# --- planning -----------------------------------------------------------------


def _parse_plan_steps(raw_steps: object) -> list[PlanStep]:
    if not isinstance(raw_steps, list) or not raw_steps:
        raise PlanRejected("steps must be a non-empty array")
    steps: list[PlanStep] = []
    for raw in raw_steps:
        if not isinstance(raw, dict):
            raise PlanRejected(f"step {raw!r} is not a map")
        action_name = raw.get("action")
        if not isinstance(action_name, str) or action_name not in {k.value for k in ActionKind}:
            raise PlanRejected(f"step names nonexistent action {action_name!r}")
        target_raw = raw.get("target")
        target: str | tuple[float, float] | None
        if target_raw is None or isinstance(target_raw, str):
            target = target_raw
        elif isinstance(target_raw, list) and len(target_raw) == 2:
            target = (float(target_raw[0]), float(target_raw[1]))
        else:
            raise PlanRejected(f"step target {target_raw!r} is neither entity nor coordinates")
        steps.append(
            PlanStep(str(raw.get("description", action_name)), ActionKind(action_name), target)
        )
    return steps


def formulate_goals(
    agent: AgentState,
    context: PromptContext,
    backend,
) -> Plan:
    """Ask the backend for a goal and 2-5 steps drawn from the action catalogue."""
    reply = complete(context, backend)
    if reply.tool_calls is None:
        raise PlanRejected("planning reply carried no tool call")
    raw = [{"name": call.name, "arguments": call.arguments} for call in reply.tool_calls]
    calls = parse_tool_calls(raw, cognition_tool_catalogue())
    call = calls[0]
    if call.name != SET_PLAN:
        raise PlanRejected(f"expected {SET_PLAN}, got {call.name}")
    steps = _parse_plan_steps(call.arguments["steps"])
    if not 2 <= len(steps) <= 5:
        raise PlanRejected(f"plans need 2-5 steps, got {len(steps)}")
    return Plan(goal=str(call.arguments["goal"]), steps=steps, cursor=0)


def adapt_plan(
    agent: AgentState,
    trigger: WorldEvent | None,
    context: PromptContext,
    backend,
) -> Plan:
    """Revise the remaining steps; steps before the cursor stay verbatim."""
    if agent.plan is None:
        raise NoActivePlan(f"{agent.name} has no active plan to adapt")
    reply = complete(context, backend)
    if reply.tool_calls is None:
        raise PlanRejected("plan revision reply carried no tool call")
    raw = [{"name": call.name, "arguments": call.arguments} for call in reply.tool_calls]
    calls = parse_tool_calls(raw, cognition_tool_catalogue())
    call = calls[0]
    if call.name != REVISE_PLAN:
        raise PlanRejected(f"expected {REVISE_PLAN}, got {call.name}")
    new_tail = _parse_plan_steps(call.arguments["steps"])
    plan = agent.plan
    preserved = plan.steps[: plan.cursor]
    return Plan(goal=plan.goal, steps=preserved + new_tail, cursor=plan.cursor)


def build_planning_context(
    agent: AgentState,
    phase: Phase,
    grid: TerrainGrid,
    poses: list[EntityPose],
    now: int,
    trigger: WorldEvent | None = None,
    radius: float = DEFAULT_PERCEPTION_RADIUS,
    budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptContext:
    world = world_context_for(agent, phase, grid, poses, radius)
    if trigger is not None:
        world += f" Something happened: a {trigger.kind.value} (strength {trigger.magnitude:.2f})."
    world += " Respond with one set_plan or revise_plan tool call."
    memories = _scored_memory_texts(agent, world, now)
    return assemble_prompt(
        agent.name, system_text_for(agent), world, memories, [], budget,
        tool_catalogue=cognition_tool_catalogue(),
    )


# --- conversation -------------------------------------------------------------


def build_utterance_context(
    agent: AgentState,
    interlocutor: str,
    history: list[tuple[str, str]],
    now: int,
    budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptContext:
    world = (
        f"You are talking with {interlocutor}. "
        "Reply with one short line of dialogue; say [END] to finish the conversation."
    )
    memories = _scored_memory_texts(agent, f"about {interlocutor}", now)
    return assemble_prompt(
        agent.name, system_text_for(agent), world, memories, history, budget,
        tool_catalogue=[],
    )


def compose_utterance(
    agent: AgentState,
    interlocutor: str,
    context: PromptContext,
    backend,
) -> str:
    """Non-empty speech text from the backend; anything else raises."""
    reply = complete(context, backend)
    if reply.text is None or not reply.text.strip():
        raise UtteranceFailed(f"{agent.name} got no usable speech text")
    return reply.text.strip()


# --- reflection adapter --------------------------------------------------------


class GatewayReflector:
    """Bridges the memory module's reflection hook onto the model gateway."""

    def __init__(self, agent: AgentState, backend, budget: int = DEFAULT_TOKEN_BUDGET):
        self.agent = agent
        self.backend = backend
        self.budget = budget

    def insights_for(self, memories: list[MemoryRecord], now: int) -> list[Insight]:
        scored = [
            (float(len(memories) - index), f"[tick {record.tick}] {record.text}")
            for index, record in enumerate(memories)
        ]
        context = assemble_prompt(
            self.agent.name,
            system_text_for(self.agent),
            "Distill 1-3 insights from your memories with one record_insights tool call.",
            scored,
            [],
            self.budget,
            tool_catalogue=cognition_tool_catalogue(),
        )
        reply = complete(context, self.backend)
        if reply.tool_calls is None:
            raise ReflectionError("reflection reply carried no tool call")
        raw = [{"name": call.name, "arguments": call.arguments} for call in reply.tool_calls]
        try:
            calls = parse_tool_calls(raw, cognition_tool_catalogue())
        except ToolCallParseError as err:
            raise ReflectionError(str(err)) from None
        call = calls[0]
        if call.name != RECORD_INSIGHTS:
            raise ReflectionError(f"expected {RECORD_INSIGHTS}, got {call.name}")
        insights = []
        for item in call.arguments["insights"]:
            if not isinstance(item, dict) or not isinstance(item.get("text"), str):
                raise ReflectionError(f"bad insight entry {item!r}")
            importance = item.get("importance", 5)
            if not isinstance(importance, int):
                raise ReflectionError(f"insight importance {importance!r} is not an integer")
            insights.append(Insight(item["text"], importance))
        return insights
