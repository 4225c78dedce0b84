"""The closed catalogue of 14 agent actions: validation, durations, effects.

Action names appear verbatim (snake_case) in logs and in the tool-call
schema. Physical effects are computed here; cognition actions
(formulate_goals, adapt_your_plan, self_reflect) and conversation opening
(talk_to) are carried in the effects for the orchestrator to dispatch,
since they need the backend or cross-agent state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .world import EntityPose, EventKind, Posture, Region, TerrainGrid, WorldEvent


class ActionKind(str, Enum):
    TALK_TO = "talk_to"
    PILE_UP_SAND = "pile_up_sand"
    REST = "rest"
    WAIT = "wait"
    WANDER = "wander"
    GO_TO = "go_to"
    SIT_DOWN = "sit_down"
    TAKE_NAP = "take_nap"
    STAND_UP = "stand_up"
    DANCE = "dance"
    FORMULATE_GOALS = "formulate_goals"
    ADAPT_YOUR_PLAN = "adapt_your_plan"
    SELF_REFLECT = "self_reflect"
    WHISTLE = "whistle"


CATALOGUE = tuple(ActionKind)
CATALOGUE_NAMES = frozenset(kind.value for kind in CATALOGUE)

COGNITION_ACTIONS = frozenset(
    {ActionKind.FORMULATE_GOALS, ActionKind.ADAPT_YOUR_PLAN, ActionKind.SELF_REFLECT}
)

# Actions legal only while standing.
_REQUIRES_STANDING = frozenset(
    {ActionKind.SIT_DOWN, ActionKind.TAKE_NAP, ActionKind.DANCE, ActionKind.WANDER, ActionKind.GO_TO}
)

# Tiredness change per tick of action duration.
TIREDNESS_RATES: dict[ActionKind, float] = {
    ActionKind.REST: -0.01,
    ActionKind.TAKE_NAP: -0.03,
    ActionKind.SIT_DOWN: -0.005,
    ActionKind.WAIT: -0.002,
    ActionKind.DANCE: +0.02,
    ActionKind.PILE_UP_SAND: +0.015,
    ActionKind.WANDER: +0.01,
    ActionKind.GO_TO: +0.01,
}
DEFAULT_TIREDNESS_RATE = +0.002

_FIXED_DURATIONS: dict[ActionKind, int] = {
    ActionKind.WAIT: 1,
    ActionKind.WHISTLE: 1,
    ActionKind.STAND_UP: 1,
    ActionKind.SIT_DOWN: 1,
    ActionKind.REST: 10,
    ActionKind.TAKE_NAP: 30,
    ActionKind.DANCE: 5,
    ActionKind.PILE_UP_SAND: 5,
    ActionKind.WANDER: 8,
    ActionKind.FORMULATE_GOALS: 2,
    ActionKind.ADAPT_YOUR_PLAN: 2,
    ActionKind.SELF_REFLECT: 2,
}

PILE_HEIGHT_DELTA = 0.1  # applied over a 3x3 region, edge-clipped
WHISTLE_RANGE_FACTOR = 2.0  # ambient events carry 2x the perception radius


class ActionValidationError(Exception):
    """Validation failure with a stable machine-readable code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


@dataclass(frozen=True)
class ActionRequest:
    actor: str
    kind: ActionKind
    target_entity: str | None = None
    target_point: tuple[float, float] | None = None
    requested_tick: int = 0

    def __post_init__(self) -> None:
        if self.kind is ActionKind.TALK_TO and self.target_entity is None:
            raise ActionValidationError("missing_target", "talk_to requires an entity target")
        if self.kind is ActionKind.GO_TO and self.target_point is None:
            raise ActionValidationError("missing_target", "go_to requires a coordinate target")


@dataclass
class ActionEffects:
    """Declarative consequences of one action, applied by the orchestrator."""

    duration_ticks: int
    posture: Posture | None = None
    move_target: tuple[float, float] | None = None
    terrain_edits: list[tuple[Region, float]] = field(default_factory=list)
    somatic_delta: float = 0.0
    spawned_events: list[WorldEvent] = field(default_factory=list)
    observation: str = ""
    opens_conversation_with: str | None = None
    cognition: ActionKind | None = None


def action_duration(kind: ActionKind, distance: float = 0.0, speed: float = 1.0) -> int:
    """Ticks one action occupies; go_to scales with distance, talk_to is open-ended.

    talk_to reports 1 here: the conversation itself keeps both parties busy
    until closure, which the orchestrator controls.
    """
    if kind is ActionKind.GO_TO:
        return max(1, math.ceil(distance / speed))
    if kind is ActionKind.TALK_TO:
        return 1
    return _FIXED_DURATIONS[kind]


def tiredness_rate(kind: ActionKind) -> float:
    return TIREDNESS_RATES.get(kind, DEFAULT_TIREDNESS_RATE)


def validate_action(
    request: ActionRequest,
    pose: EntityPose,
    grid: TerrainGrid,
    poses: list[EntityPose],
    perception_radius: float,
    in_conversation: frozenset[str] = frozenset(),
) -> None:
    """Raise a named ActionValidationError when a precondition fails.

    `in_conversation` carries the ids of entities currently inside an open
    conversation (used by the talk_to availability rule).
    """
    kind = request.kind

    if kind is ActionKind.STAND_UP and pose.posture is Posture.STANDING:
        raise ActionValidationError("posture_violation", "already standing")
    if kind in (ActionKind.SIT_DOWN, ActionKind.TAKE_NAP) and pose.posture is not Posture.STANDING:
        raise ActionValidationError("posture_violation", f"{kind.value} requires standing")
    if kind in _REQUIRES_STANDING and pose.posture is not Posture.STANDING:
        raise ActionValidationError("posture_violation", f"{kind.value} requires standing")

    if kind is ActionKind.TALK_TO:
        target = request.target_entity
        if target == request.actor:
            raise ActionValidationError("self_target", "cannot talk to yourself")
        others = {p.entity_id: p for p in poses}
        if target not in others:
            raise ActionValidationError("unknown_target", f"no entity {target!r}")
        if pose.distance_to(others[target]) > perception_radius:
            raise ActionValidationError("target_out_of_range", f"{target} beyond perception radius")
        if target in in_conversation:
            raise ActionValidationError("target_busy", f"{target} already in a conversation")

    if kind in (ActionKind.GO_TO, ActionKind.PILE_UP_SAND) and request.target_point is not None:
        x, y = request.target_point
        if not grid.in_bounds(x, y):
            raise ActionValidationError("target_out_of_bounds", f"({x}, {y}) outside grid")


def _clipped_square(cx: int, cy: int, grid: TerrainGrid) -> Region:
    """The 3x3 cell square around (cx, cy), clipped to the grid."""
    x0 = max(0, cx - 1)
    y0 = max(0, cy - 1)
    x1 = min(grid.width, cx + 2)
    y1 = min(grid.height, cy + 2)
    return Region(x0, y0, x1 - x0, y1 - y0)


def execute_action(
    request: ActionRequest,
    pose: EntityPose,
    grid: TerrainGrid,
    tick: int,
    speed: float = 1.0,
    perception_radius: float = 10.0,
    wander_target: tuple[float, float] | None = None,
) -> ActionEffects:
    """Compute the effects of a validated request; total once validation passed.

    wander_target must be supplied (from the session RNG) for wander.
    """
    kind = request.kind
    duration = action_duration(kind)
    effects = ActionEffects(duration_ticks=duration, somatic_delta=tiredness_rate(kind) * duration)

    if kind is ActionKind.PILE_UP_SAND:
        if request.target_point is not None:
            cx, cy = int(request.target_point[0]), int(request.target_point[1])
        else:
            cx, cy = pose.cell()
        effects.terrain_edits.append((_clipped_square(cx, cy, grid), PILE_HEIGHT_DELTA))
        effects.observation = "I piled up sand into a small mound."
    elif kind is ActionKind.GO_TO:
        tx, ty = request.target_point  # type: ignore[misc]
        distance = math.hypot(tx - pose.x, ty - pose.y)
        duration = action_duration(kind, distance, speed)
        effects.duration_ticks = duration
        effects.somatic_delta = tiredness_rate(kind) * duration
        effects.move_target = (float(tx), float(ty))
        effects.observation = f"I set out towards ({tx:.1f}, {ty:.1f})."
    elif kind is ActionKind.WANDER:
        if wander_target is None:
            raise ValueError("wander requires a target drawn from the session rng")
        effects.move_target = (float(wander_target[0]), float(wander_target[1]))
        effects.observation = "I wandered off with no particular destination."
    elif kind is ActionKind.WHISTLE:
        cx, cy = pose.cell()
        effects.spawned_events.append(
            WorldEvent(
                EventKind.AMBIENT,
                magnitude=perception_radius * WHISTLE_RANGE_FACTOR,
                region=Region(cx, cy, 1, 1),
                tick=tick,
                payload="a sharp whistle",
                source=request.actor,
            )
        )
        effects.observation = "I whistled a sharp note."
    elif kind is ActionKind.SIT_DOWN:
        effects.posture = Posture.SITTING
        effects.observation = "I sat down on the sand."
    elif kind is ActionKind.TAKE_NAP:
        effects.posture = Posture.NAPPING
        effects.observation = "I lay down and took a nap."
    elif kind is ActionKind.STAND_UP:
        effects.posture = Posture.STANDING
        effects.observation = "I stood back up."
    elif kind is ActionKind.DANCE:
        effects.observation = "I danced in place, kicking up sand."
    elif kind is ActionKind.REST:
        effects.observation = "I rested for a while."
    elif kind is ActionKind.WAIT:
        effects.observation = "I waited."
    elif kind is ActionKind.TALK_TO:
        effects.opens_conversation_with = request.target_entity
        effects.observation = f"I started talking to {request.target_entity}."
    elif kind in COGNITION_ACTIONS:
        effects.cognition = kind
        effects.observation = {
            ActionKind.FORMULATE_GOALS: "I thought hard about what to do next.",
            ActionKind.ADAPT_YOUR_PLAN: "I reconsidered my plan.",
            ActionKind.SELF_REFLECT: "I paused to reflect on what I have seen.",
        }[kind]

    return effects
