import { describe, expect, it } from "vitest";

import { Timeline } from "../src/timeline.js";
import type { LogRecord } from "../src/types.js";

function record(seq: number, category: LogRecord["category"] = "action",
                payload: Record<string, unknown> = {}): LogRecord {
  return {
    seq,
    tick: Math.ceil(seq / 2),
    actor: "woman",
    category,
    payload: { kind: "wait", duration: 1, ...payload },
  };
}

function speech(seq: number, speaker: string, listener: string, text: string): LogRecord {
  return {
    seq,
    tick: seq,
    actor: speaker,
    category: "speech",
    payload: { speaker, listener, text, conversation: "conv-1" },
  };
}

describe("Timeline", () => {
  it("keeps records in seq order regardless of arrival order", () => {
    const timeline = new Timeline();
    for (const seq of [3, 1, 5, 2, 4]) {
      timeline.insert(record(seq));
    }
    expect(timeline.seqs()).toEqual([1, 2, 3, 4, 5]);
    expect(timeline.isGapFree()).toBe(true);
  });

  it("drops duplicates from overlapping reconnects", () => {
    const timeline = new Timeline();
    expect(timeline.insert(record(1))).toBe(true);
    expect(timeline.insert(record(2))).toBe(true);
    expect(timeline.insert(record(2))).toBe(false);
    expect(timeline.insert(record(1))).toBe(false);
    expect(timeline.length).toBe(2);
  });

  it("detects gaps", () => {
    const timeline = new Timeline();
    timeline.insert(record(1));
    timeline.insert(record(3));
    expect(timeline.isGapFree()).toBe(false);
  });

  it("extracts the speech transcript in order", () => {
    const timeline = new Timeline();
    timeline.insert(speech(4, "boy", "woman", "second"));
    timeline.insert(record(1));
    timeline.insert(speech(2, "woman", "boy", "first"));
    timeline.insert(record(3));
    expect(timeline.speech().map((line) => line.text)).toEqual(["first", "second"]);
  });

  it("filters a conversation transcript by participant", () => {
    const timeline = new Timeline();
    timeline.insert(speech(1, "visitor", "woman", "hello"));
    timeline.insert(speech(2, "woman", "visitor", "welcome"));
    timeline.insert(speech(3, "boy", "flamingo", "unrelated"));
    const lines = timeline.transcriptWith("woman").map((line) => line.text);
    expect(lines).toEqual(["hello", "welcome"]);
  });
});
