import type { LogRecord } from "./types.js";

export interface SpeechLine {
  seq: number;
  tick: number;
  speaker: string;
  listener: string;
  text: string;
}

/**
 * Seq-ordered view of the corpus for the timeline and chat transcript.
 * Insertion keeps records sorted and drops duplicates, so the rendered
 * order equals seq order no matter how the stream reconnects.
 */
export class Timeline {
  private records: LogRecord[] = [];
  private seen = new Set<number>();

  insert(record: LogRecord): boolean {
    if (this.seen.has(record.seq)) return false;
    this.seen.add(record.seq);
    let index = this.records.length;
    while (index > 0 && this.records[index - 1]!.seq > record.seq) {
      index -= 1;
    }
    this.records.splice(index, 0, record);
    return true;
  }

  all(): readonly LogRecord[] {
    return this.records;
  }

  get length(): number {
    return this.records.length;
  }

  seqs(): number[] {
    return this.records.map((record) => record.seq);
  }

  /** True when seqs run 1..n with no holes (nothing lost across reconnects). */
  isGapFree(): boolean {
    return this.records.every((record, index) => record.seq === index + 1);
  }

  speech(): SpeechLine[] {
    return this.records
      .filter((record) => record.category === "speech")
      .map((record) => ({
        seq: record.seq,
        tick: record.tick,
        speaker: String(record.payload.speaker ?? record.actor),
        listener: String(record.payload.listener ?? ""),
        text: String(record.payload.text ?? ""),
      }));
  }

  /** Transcript of one conversation partner, for the chat panel. */
  transcriptWith(agent: string): SpeechLine[] {
    return this.speech().filter(
      (line) => line.speaker === agent || line.listener === agent,
    );
  }
}
