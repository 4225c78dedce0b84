"""Terrain editing and derived world events.

The sandtable is a normalized elevation grid. Participant edits shift
cells (clamped to [0, 1]); a large enough total change within one tick
becomes a tremor, and a hand held over the table becomes shadow events
for the agents underneath.
"""
import numpy as np

from llmscape import (
    EntityPose,
    Region,
    TerrainGrid,
    apply_terrain_edit,
    detect_shadow,
    detect_tremor,
    nearby_entities,
)

# A small flat table, mid-height sand everywhere.
grid = TerrainGrid.flat(16, 16, 0.5)
print("mean elevation before:", grid.cells.mean())

# A visitor scoops a generous pile onto a 3x3 patch.
grid, change = apply_terrain_edit(grid, Region(6, 6, 3, 3), +0.2)
print(f"edit moved {change:.2f} total elevation")

# Large edits shake the ground for everyone nearby.
tremor = detect_tremor(change, threshold=0.5, region=Region(6, 6, 3, 3), tick=1)
print("tremor fired:", tremor is not None, "| magnitude:", tremor.magnitude)

# Clamping: pushing an already-full cell past 1.0 only counts what moved.
grid, change = apply_terrain_edit(grid, Region(6, 6, 1, 1), +0.9)
print(f"clamped edit moved only {change:.2f}")
print("every cell still in [0,1]:", bool((grid.cells >= 0).all() and (grid.cells <= 1).all()))

# Three inhabitants of the table.
poses = [
    EntityPose("woman", 7.0, 7.0),
    EntityPose("boy", 9.0, 7.0),
    EntityPose("flamingo", 14.0, 14.0),
]
print("near the woman (radius 5):", nearby_entities(poses, "woman", 5.0))

# A hand over the left half of the table shades whoever stands there.
mask = np.zeros((16, 16), dtype=bool)
mask[:, :8] = True
shadows = detect_shadow(mask, poses, grid, tick=2)
print("shadowed cells:", [(event.region.x, event.region.y) for event in shadows])
