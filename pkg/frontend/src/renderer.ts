import type { AgentView, Snapshot } from "./types.js";

// Subset of CanvasRenderingContext2D the renderer touches; tests record
// calls against a fake, the browser passes a real 2D context. fillStyle is
// `unknown` because the DOM type is a union; the renderer only writes
// rgb()/hex strings.
export interface Paintable {
  fillStyle: unknown;
  font: string;
  textAlign: string;
  fillRect(x: number, y: number, width: number, height: number): void;
  fillText(text: string, x: number, y: number): void;
}

export const POSTURE_GLYPHS: Record<AgentView["posture"], string> = {
  standing: "▲",
  sitting: "■",
  napping: "zZ",
};

/**
 * Sand color for one elevation; every channel rises strictly with
 * elevation, so shading is monotone: higher sand always reads brighter.
 */
export function elevationShade(elevation: number): string {
  const e = Math.min(1, Math.max(0, elevation));
  const r = Math.round(60 + e * 195);
  const g = Math.round(50 + e * 170);
  const b = Math.round(35 + e * 120);
  return `rgb(${r},${g},${b})`;
}

export function agentLabel(agent: AgentView): string {
  return `${agent.name} ${POSTURE_GLYPHS[agent.posture]}`;
}

/**
 * Draw the heightmap and agent markers. Pure function of the snapshot:
 * cell (x, y) lands at canvas rect (x*cellSize, y*cellSize).
 */
export function renderWorld(snapshot: Snapshot, ctx: Paintable, cellSize: number): void {
  const { width, height, cells } = snapshot.terrain;
  for (let y = 0; y < height; y += 1) {
    const row = cells[y]!;
    for (let x = 0; x < width; x += 1) {
      ctx.fillStyle = elevationShade(row[x]!);
      ctx.fillRect(x * cellSize, y * cellSize, cellSize, cellSize);
    }
  }

  ctx.font = `${Math.max(10, cellSize)}px sans-serif`;
  ctx.textAlign = "center";
  for (const agent of snapshot.agents) {
    const px = agent.x * cellSize;
    const py = agent.y * cellSize;
    ctx.fillStyle = "#d43f3f";
    ctx.fillRect(px - cellSize / 4, py - cellSize / 4, cellSize / 2, cellSize / 2);
    ctx.fillStyle = "#1a1a1a";
    ctx.fillText(agentLabel(agent), px, py - cellSize / 2);
  }
}
