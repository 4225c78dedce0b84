import { describe, expect, it, vi } from "vitest";

import { EventStream, eventStreamUrl, type SocketLike } from "../src/stream.js";
import type { LogRecord } from "../src/types.js";

class FakeSocket implements SocketLike {
  onopen: ((event: unknown) => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: ((event: unknown) => void) | null = null;
  onerror: ((event: unknown) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {}

  open(): void {
    this.onopen?.({});
  }

  deliver(record: Partial<LogRecord>): void {
    this.onmessage?.({ data: JSON.stringify(record) });
  }

  deliverRaw(data: string): void {
    this.onmessage?.({ data });
  }

  close(): void {
    if (this.closed) return;
    this.closed = true;
    this.onclose?.({});
  }
}

function makeStream(received: number[], sockets: FakeSocket[], delay = 1) {
  return new EventStream("http://host:1", {
    socketFactory: (url) => {
      const socket = new FakeSocket(url);
      sockets.push(socket);
      return socket;
    },
    onRecord: (record) => received.push(record.seq),
    reconnectDelayMs: delay,
  });
}

describe("eventStreamUrl", () => {
  it("maps http to ws and carries the since cursor", () => {
    expect(eventStreamUrl("http://127.0.0.1:8600", 0)).toBe(
      "ws://127.0.0.1:8600/events?since=0",
    );
    expect(eventStreamUrl("https://example.org/", 42)).toBe(
      "wss://example.org/events?since=42",
    );
  });
});

describe("EventStream", () => {
  it("delivers records once, in order, tracking lastSeq", () => {
    const received: number[] = [];
    const sockets: FakeSocket[] = [];
    const stream = makeStream(received, sockets);
    stream.connect();
    const socket = sockets[0]!;
    socket.open();
    socket.deliver({ seq: 1 });
    socket.deliver({ seq: 2 });
    socket.deliver({ seq: 2 }); // duplicate, dropped
    socket.deliver({ seq: 3 });
    expect(received).toEqual([1, 2, 3]);
    expect(stream.lastSeq).toBe(3);
    stream.close();
  });

  it("ignores unparseable frames", () => {
    const received: number[] = [];
    const sockets: FakeSocket[] = [];
    const stream = makeStream(received, sockets);
    stream.connect();
    sockets[0]!.deliverRaw("not json at all {");
    sockets[0]!.deliver({ seq: 1 });
    expect(received).toEqual([1]);
    stream.close();
  });

  it("reconnects after a drop, resuming from the last seen seq", async () => {
    vi.useFakeTimers();
    try {
      const received: number[] = [];
      const sockets: FakeSocket[] = [];
      const stream = makeStream(received, sockets, 5);
      stream.connect();
      sockets[0]!.deliver({ seq: 1 });
      sockets[0]!.deliver({ seq: 2 });

      stream.forceReconnect(); // link drops
      await vi.advanceTimersByTimeAsync(10);

      expect(sockets).toHaveLength(2);
      expect(sockets[1]!.url).toBe("ws://host:1/events?since=2");
      sockets[1]!.deliver({ seq: 3 });
      expect(received).toEqual([1, 2, 3]);
      stream.close();
    } finally {
      vi.useRealTimers();
    }
  });

  it("stops reconnecting once closed", async () => {
    vi.useFakeTimers();
    try {
      const sockets: FakeSocket[] = [];
      const stream = makeStream([], sockets, 5);
      stream.connect();
      stream.close();
      await vi.advanceTimersByTimeAsync(50);
      expect(sockets).toHaveLength(1);
    } finally {
      vi.useRealTimers();
    }
  });
});
