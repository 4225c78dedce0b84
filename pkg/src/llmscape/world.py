"""Sandtable world state: terrain grid, day/night clock, entity poses, derived events.

The terrain is a normalized elevation field edited by participants and by
agents piling up sand. Large edits within a tick become tremor events;
an occlusion mask supplied by the API becomes shadow events.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class WorldError(Exception):
    """Base class for world-state errors."""


class RejectedEditError(WorldError):
    """Terrain edit outside grid bounds."""


class InputError(WorldError):
    """Malformed world input (bad mask, unknown entity, ...)."""


class Phase(str, Enum):
    DAWN = "dawn"
    DAY = "day"
    DUSK = "dusk"
    NIGHT = "night"


# Fixed quarter order over one day.
PHASE_ORDER = (Phase.DAWN, Phase.DAY, Phase.DUSK, Phase.NIGHT)


class Posture(str, Enum):
    STANDING = "standing"
    SITTING = "sitting"
    NAPPING = "napping"


class EventKind(str, Enum):
    TREMOR = "tremor"
    SHADOW = "shadow"
    UTTERANCE = "utterance"
    AMBIENT = "ambient"


@dataclass(frozen=True)
class Region:
    """Rectangular cell range: cells [x, x+width) x [y, y+height)."""

    x: int
    y: int
    width: int
    height: int

    def within(self, grid_width: int, grid_height: int) -> bool:
        return (
            self.width >= 1
            and self.height >= 1
            and 0 <= self.x
            and 0 <= self.y
            and self.x + self.width <= grid_width
            and self.y + self.height <= grid_height
        )

    def contains_point(self, x: float, y: float) -> bool:
        return self.x <= x < self.x + self.width and self.y <= y < self.y + self.height

    def distance_to(self, x: float, y: float) -> float:
        """Euclidean distance from (x, y) to the nearest point of the region."""
        dx = max(self.x - x, 0.0, x - (self.x + self.width))
        dy = max(self.y - y, 0.0, y - (self.y + self.height))
        return math.hypot(dx, dy)

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}


@dataclass
class TerrainGrid:
    """Normalized elevation field; every cell stays in [0, 1]."""

    width: int
    height: int
    cells: np.ndarray  # shape (height, width), float64

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InputError("grid dimensions must be >= 1")
        self.cells = np.asarray(self.cells, dtype=np.float64)
        if self.cells.shape != (self.height, self.width):
            raise InputError(
                f"cells shape {self.cells.shape} != (height={self.height}, width={self.width})"
            )
        if np.any(self.cells < 0.0) or np.any(self.cells > 1.0):
            raise InputError("cell elevations must lie in [0, 1]")

    @classmethod
    def flat(cls, width: int, height: int, level: float = 0.5) -> TerrainGrid:
        return cls(width, height, np.full((height, width), float(level)))

    def copy(self) -> TerrainGrid:
        return TerrainGrid(self.width, self.height, self.cells.copy())

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width and 0.0 <= y < self.height


@dataclass(frozen=True)
class WorldClock:
    """Discrete clock; phase is a pure function of tick mod ticks_per_day."""

    tick: int = 0
    ticks_per_day: int = 400

    def __post_init__(self) -> None:
        if self.tick < 0 or self.ticks_per_day < 1:
            raise InputError("tick must be >= 0 and ticks_per_day >= 1")

    @property
    def phase(self) -> Phase:
        quarter = (self.tick % self.ticks_per_day) * 4 // self.ticks_per_day
        return PHASE_ORDER[quarter]


@dataclass
class EntityPose:
    entity_id: str
    x: float
    y: float
    posture: Posture = Posture.STANDING

    def distance_to(self, other: EntityPose) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def cell(self) -> tuple[int, int]:
        return int(self.x), int(self.y)


@dataclass(frozen=True)
class WorldEvent:
    kind: EventKind
    magnitude: float
    region: Region
    tick: int
    payload: str | None = None
    source: str | None = None  # speaker label for utterances, actor for ambient

    def __post_init__(self) -> None:
        if self.magnitude < 0:
            raise InputError("event magnitude must be nonnegative")
        if self.kind is EventKind.TREMOR and self.magnitude <= 0:
            raise InputError("tremor magnitude must be positive")
        if self.kind is EventKind.UTTERANCE and not self.payload:
            raise InputError("utterance events require a non-empty payload")


def apply_terrain_edit(
    grid: TerrainGrid, region: Region, delta: float
) -> tuple[TerrainGrid, float]:
    """Shift every cell in region by delta, clamped to [0, 1].

    Returns the new grid and the total absolute change actually applied.
    """
    if not region.within(grid.width, grid.height):
        raise RejectedEditError(f"region {region} outside {grid.width}x{grid.height} grid")
    cells = grid.cells.copy()
    window = cells[region.y : region.y + region.height, region.x : region.x + region.width]
    shifted = np.clip(window + delta, 0.0, 1.0)
    total_change = float(np.abs(shifted - window).sum())
    cells[region.y : region.y + region.height, region.x : region.x + region.width] = shifted
    return TerrainGrid(grid.width, grid.height, cells), total_change


def detect_tremor(
    total_change: float, threshold: float, region: Region, tick: int
) -> WorldEvent | None:
    """A tremor fires only when the change strictly exceeds the threshold."""
    if total_change > threshold:
        return WorldEvent(EventKind.TREMOR, magnitude=total_change, region=region, tick=tick)
    return None


def detect_shadow(
    mask: np.ndarray, poses: list[EntityPose], grid: TerrainGrid, tick: int
) -> list[WorldEvent]:
    """One shadow event per entity whose cell is covered by the occlusion mask."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (grid.height, grid.width):
        raise InputError(
            f"mask shape {mask.shape} != grid shape ({grid.height}, {grid.width})"
        )
    events = []
    for pose in poses:
        cx, cy = pose.cell()
        if mask[cy, cx]:
            events.append(
                WorldEvent(
                    EventKind.SHADOW,
                    magnitude=1.0,
                    region=Region(cx, cy, 1, 1),
                    tick=tick,
                )
            )
    return events


def nearby_entities(poses: list[EntityPose], subject: str, radius: float) -> list[str]:
    """Entity ids within radius of the subject, nearest first, ties by id."""
    by_id = {p.entity_id: p for p in poses}
    if subject not in by_id:
        raise InputError(f"unknown subject entity {subject!r}")
    me = by_id[subject]
    candidates = [
        (me.distance_to(p), p.entity_id)
        for p in poses
        if p.entity_id != subject and me.distance_to(p) <= radius
    ]
    candidates.sort()
    return [entity_id for _, entity_id in candidates]


def advance_clock(clock: WorldClock) -> WorldClock:
    return replace(clock, tick=clock.tick + 1)


def step_towards(pose: EntityPose, target: tuple[float, float], speed: float) -> EntityPose:
    """Move along the straight line to target by at most speed; never overshoots."""
    tx, ty = target
    dx, dy = tx - pose.x, ty - pose.y
    dist = math.hypot(dx, dy)
    if dist <= speed:
        return EntityPose(pose.entity_id, float(tx), float(ty), pose.posture)
    scale = speed / dist
    return EntityPose(pose.entity_id, pose.x + dx * scale, pose.y + dy * scale, pose.posture)
