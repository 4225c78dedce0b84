import type { LogRecord } from "./types.js";

// Minimal socket surface shared by the browser WebSocket and the ws package,
// so tests can inject a node-side implementation.
export interface SocketLike {
  onopen: ((event: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type StreamStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface EventStreamOptions {
  socketFactory: SocketFactory;
  onRecord: (record: LogRecord) => void;
  onStatus?: (status: StreamStatus) => void;
  reconnectDelayMs?: number;
}

/** ws:// URL for the event stream of an http(s) API base. */
export function eventStreamUrl(baseUrl: string, since: number): string {
  const ws = baseUrl.replace(/^http/, "ws").replace(/\/$/, "");
  return `${ws}/events?since=${since}`;
}

/**
 * Tails the session corpus over one persistent socket, resuming from the
 * last seen seq after any disconnect. Records are delivered exactly once
 * and in seq order; the server guarantees a gap-free suffix for any
 * `since`, and the client drops anything it has already seen.
 */
export class EventStream {
  private socket: SocketLike | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  lastSeq = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly options: EventStreamOptions,
  ) {}

  connect(): void {
    if (this.stopped) return;
    this.options.onStatus?.("connecting");
    const socket = this.options.socketFactory(eventStreamUrl(this.baseUrl, this.lastSeq));
    this.socket = socket;
    socket.onopen = () => this.options.onStatus?.("open");
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onerror = () => {
      /* the close handler owns reconnection */
    };
    socket.onclose = () => this.handleClose();
  }

  private handleMessage(data: unknown): void {
    let record: LogRecord;
    try {
      record = JSON.parse(String(data)) as LogRecord;
    } catch {
      return; // not a corpus line; ignore
    }
    if (typeof record.seq !== "number" || record.seq <= this.lastSeq) {
      return; // duplicate delivery after a resume
    }
    this.lastSeq = record.seq;
    this.options.onRecord(record);
  }

  private handleClose(): void {
    this.socket = null;
    if (this.stopped) {
      this.options.onStatus?.("closed");
      return;
    }
    this.options.onStatus?.("reconnecting");
    this.timer = setTimeout(() => this.connect(), this.options.reconnectDelayMs ?? 500);
  }

  /** Drop the link (e.g. to simulate a network blip); resume is automatic. */
  forceReconnect(): void {
    this.socket?.close();
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}
