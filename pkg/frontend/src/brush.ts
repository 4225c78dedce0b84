// The terrain/shadow brush: strokes become participant inputs, batched so
// a fast drag never floods the service.

export type BrushMode = "raise" | "lower" | "shadow";

export interface BrushTool {
  mode: BrushMode;
  radius: number; // cells around each stroke point
  strength: number; // delta per stroke, bounded to the accepted range
}

// The server clamps cells to [0,1]; a single stroke never asks for more
// than a full-range swing.
export const MAX_STRENGTH = 1.0;
export const MIN_REQUEST_INTERVAL_MS = 100; // ceiling of 10 requests/second

export function clampStrength(strength: number): number {
  return Math.min(MAX_STRENGTH, Math.max(0, strength));
}

export function deltaFor(tool: BrushTool): number {
  const strength = clampStrength(tool.strength);
  return tool.mode === "lower" ? -strength : strength;
}

export interface CellPoint {
  x: number;
  y: number;
}

export interface StrokeBatch {
  tool: BrushTool;
  points: CellPoint[];
}

/** Bounding cell region of a batch, padded by the brush radius and clipped. */
export function batchRegion(
  batch: StrokeBatch,
  gridWidth: number,
  gridHeight: number,
): { x: number; y: number; width: number; height: number } {
  const radius = Math.max(0, Math.floor(batch.tool.radius));
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const point of batch.points) {
    minX = Math.min(minX, point.x - radius);
    minY = Math.min(minY, point.y - radius);
    maxX = Math.max(maxX, point.x + radius);
    maxY = Math.max(maxY, point.y + radius);
  }
  const x = Math.max(0, Math.floor(minX));
  const y = Math.max(0, Math.floor(minY));
  const right = Math.min(gridWidth - 1, Math.ceil(maxX));
  const bottom = Math.min(gridHeight - 1, Math.ceil(maxY));
  return { x, y, width: right - x + 1, height: bottom - y + 1 };
}

/** Grid-shaped boolean mask covering a shadow stroke. */
export function batchMask(
  batch: StrokeBatch,
  gridWidth: number,
  gridHeight: number,
): boolean[][] {
  const mask: boolean[][] = Array.from({ length: gridHeight }, () =>
    new Array<boolean>(gridWidth).fill(false),
  );
  const radius = Math.max(0, Math.floor(batch.tool.radius));
  for (const point of batch.points) {
    for (let dy = -radius; dy <= radius; dy += 1) {
      for (let dx = -radius; dx <= radius; dx += 1) {
        const x = point.x + dx;
        const y = point.y + dy;
        if (x >= 0 && x < gridWidth && y >= 0 && y < gridHeight) {
          mask[y]![x] = true;
        }
      }
    }
  }
  return mask;
}

/**
 * Batches stroke points and emits at most one StrokeBatch per
 * MIN_REQUEST_INTERVAL_MS. The caller pumps `flushIfDue` from a timer or
 * animation frame; tests drive it with a manual clock.
 */
export class StrokeCoalescer {
  private pending: CellPoint[] = [];
  private tool: BrushTool | null = null;
  private lastEmit = -Infinity;

  constructor(
    private readonly emit: (batch: StrokeBatch) => void,
    private readonly minIntervalMs: number = MIN_REQUEST_INTERVAL_MS,
  ) {}

  addPoint(tool: BrushTool, x: number, y: number, nowMs: number): void {
    if (this.tool !== null && this.tool.mode !== tool.mode) {
      this.flushNow(nowMs); // mode switches flush the old stroke
    }
    this.tool = tool;
    this.pending.push({ x, y });
    this.flushIfDue(nowMs);
  }

  flushIfDue(nowMs: number): void {
    if (this.pending.length === 0 || this.tool === null) return;
    if (nowMs - this.lastEmit < this.minIntervalMs) return;
    this.flushNow(nowMs);
  }

  private flushNow(nowMs: number): void {
    if (this.pending.length === 0 || this.tool === null) return;
    this.emit({ tool: this.tool, points: this.pending });
    this.pending = [];
    this.lastEmit = nowMs;
  }

  get pendingCount(): number {
    return this.pending.length;
  }
}
