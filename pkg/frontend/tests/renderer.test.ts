import { describe, expect, it } from "vitest";

import {
  POSTURE_GLYPHS,
  agentLabel,
  elevationShade,
  renderWorld,
  type Paintable,
} from "../src/renderer.js";
import type { AgentView, Snapshot } from "../src/types.js";

function parseRgb(shade: string): [number, number, number] {
  const match = /^rgb\((\d+),(\d+),(\d+)\)$/.exec(shade);
  if (!match) throw new Error(`not an rgb() string: ${shade}`);
  return [Number(match[1]), Number(match[2]), Number(match[3])];
}

class RecordingContext implements Paintable {
  fillStyle: unknown = "";
  font = "";
  textAlign = "";
  rects: Array<{ x: number; y: number; w: number; h: number; style: string }> = [];
  texts: Array<{ text: string; x: number; y: number }> = [];

  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push({ x, y, w, h, style: String(this.fillStyle) });
  }

  fillText(text: string, x: number, y: number): void {
    this.texts.push({ text, x, y });
  }
}

function makeAgent(overrides: Partial<AgentView> = {}): AgentView {
  return {
    name: "woman",
    x: 1,
    y: 1,
    posture: "standing",
    current_action: null,
    tiredness: "rested",
    ...overrides,
  };
}

function makeSnapshot(cells: number[][], agents: AgentView[] = []): Snapshot {
  return {
    tick: 3,
    phase: "dawn",
    terrain: { width: cells[0]!.length, height: cells.length, cells },
    agents,
    conversations: [],
  };
}

describe("elevationShade", () => {
  it("is strictly monotone in elevation on every channel", () => {
    let previous = parseRgb(elevationShade(0));
    for (let step = 1; step <= 20; step += 1) {
      const current = parseRgb(elevationShade(step / 20));
      expect(current[0]).toBeGreaterThan(previous[0]);
      expect(current[1]).toBeGreaterThan(previous[1]);
      expect(current[2]).toBeGreaterThan(previous[2]);
      previous = current;
    }
  });

  it("clamps out-of-range elevations", () => {
    expect(elevationShade(-1)).toBe(elevationShade(0));
    expect(elevationShade(2)).toBe(elevationShade(1));
  });
});

describe("renderWorld", () => {
  it("paints a flat grid uniformly", () => {
    const ctx = new RecordingContext();
    renderWorld(makeSnapshot([[0.5, 0.5], [0.5, 0.5]]), ctx, 10);
    expect(ctx.rects).toHaveLength(4);
    const styles = new Set(ctx.rects.map((r) => r.style));
    expect(styles.size).toBe(1);
  });

  it("shades higher cells brighter", () => {
    const ctx = new RecordingContext();
    renderWorld(makeSnapshot([[0.2, 0.9]]), ctx, 10);
    const [low, high] = ctx.rects.map((r) => parseRgb(r.style));
    expect(high![0]).toBeGreaterThan(low![0]);
  });

  it("labels agents with name and posture glyph", () => {
    const ctx = new RecordingContext();
    const napping = makeAgent({ name: "flamingo", posture: "napping" });
    renderWorld(makeSnapshot([[0.5]], [napping]), ctx, 10);
    expect(ctx.texts).toHaveLength(1);
    expect(ctx.texts[0]!.text).toContain("flamingo");
    expect(ctx.texts[0]!.text).toContain(POSTURE_GLYPHS.napping);
  });

  it("gives each posture a distinct glyph", () => {
    const glyphs = new Set(Object.values(POSTURE_GLYPHS));
    expect(glyphs.size).toBe(3);
    expect(agentLabel(makeAgent({ posture: "napping" }))).not.toBe(
      agentLabel(makeAgent({ posture: "standing" })),
    );
  });

  it("places agent markers at grid-scaled positions", () => {
    const ctx = new RecordingContext();
    renderWorld(makeSnapshot([[0.5, 0.5], [0.5, 0.5]], [makeAgent({ x: 1.5, y: 0.5 })]), ctx, 10);
    const marker = ctx.rects.at(-1)!;
    expect(marker.x).toBeCloseTo(1.5 * 10 - 2.5);
    expect(marker.y).toBeCloseTo(0.5 * 10 - 2.5);
  });
});
