// Single-page wiring: canvas brush + chat panel + live timeline, all fed
// from GET /state polling and the /events stream. No client-side simulation.

import { ApiClient } from "./api.js";
import {
  StrokeCoalescer,
  batchMask,
  batchRegion,
  deltaFor,
  type BrushMode,
  type BrushTool,
  type StrokeBatch,
} from "./brush.js";
import { renderWorld } from "./renderer.js";
import { EventStream, type SocketLike } from "./stream.js";
import { Timeline } from "./timeline.js";
import type { LogRecord, Snapshot } from "./types.js";

const CELL_SIZE = 10;
const STATE_POLL_MS = 250;

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8600";

const api = new ApiClient(apiBase);
const timeline = new Timeline();

const canvas = document.getElementById("world") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const tickLabel = document.getElementById("tick")!;
const statusLabel = document.getElementById("stream-status")!;
const timelineList = document.getElementById("timeline")!;
const chatLog = document.getElementById("chat-log")!;
const chatTarget = document.getElementById("chat-target") as HTMLSelectElement;
const chatInput = document.getElementById("chat-input") as HTMLInputElement;
const chatSend = document.getElementById("chat-send") as HTMLButtonElement;
const modeSelect = document.getElementById("brush-mode") as HTMLSelectElement;
const radiusInput = document.getElementById("brush-radius") as HTMLInputElement;
const strengthInput = document.getElementById("brush-strength") as HTMLInputElement;

let snapshot: Snapshot | null = null;

function currentTool(): BrushTool {
  return {
    mode: modeSelect.value as BrushMode,
    radius: Number(radiusInput.value),
    strength: Number(strengthInput.value),
  };
}

function sendBatch(batch: StrokeBatch): void {
  if (snapshot === null) return;
  const { width, height } = snapshot.terrain;
  if (batch.tool.mode === "shadow") {
    void api.postShadow(batchMask(batch, width, height));
  } else {
    const region = batchRegion(batch, width, height);
    void api.postTerrain(
      region.x, region.y, region.width, region.height, deltaFor(batch.tool),
    );
  }
}

const coalescer = new StrokeCoalescer(sendBatch);
setInterval(() => coalescer.flushIfDue(performance.now()), 25);

let painting = false;
canvas.addEventListener("pointerdown", (event) => {
  painting = true;
  strokePoint(event);
});
canvas.addEventListener("pointermove", (event) => {
  if (painting) strokePoint(event);
});
window.addEventListener("pointerup", () => {
  painting = false;
});

function strokePoint(event: PointerEvent): void {
  const rect = canvas.getBoundingClientRect();
  const x = Math.floor((event.clientX - rect.left) / CELL_SIZE);
  const y = Math.floor((event.clientY - rect.top) / CELL_SIZE);
  coalescer.addPoint(currentTool(), x, y, performance.now());
}

chatSend.addEventListener("click", () => {
  const text = chatInput.value.trim();
  if (!text) return;
  void api.postUtterance(text, chatTarget.value || undefined);
  chatInput.value = "";
});
chatInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") chatSend.click();
});

function describe(record: LogRecord): string {
  const payload = record.payload as Record<string, string>;
  switch (record.category) {
    case "speech":
      return `${payload.speaker} → ${payload.listener}: “${payload.text}”`;
    case "action":
      return `${record.actor} does ${payload.kind}`;
    case "event":
      return `${payload.kind} event`;
    case "planning":
      return `${record.actor} plans: ${payload.goal}`;
    case "error":
      return `⚠ ${payload.where}: ${payload.code}`;
    default:
      return `${record.actor}: ${payload.text ?? ""}`;
  }
}

function redrawTimeline(): void {
  timelineList.innerHTML = "";
  for (const record of timeline.all().slice(-200)) {
    const item = document.createElement("li");
    item.textContent = `t${record.tick} · ${describe(record)}`;
    item.className = `cat-${record.category}`;
    timelineList.appendChild(item);
  }
  timelineList.scrollTop = timelineList.scrollHeight;

  chatLog.innerHTML = "";
  for (const line of timeline.speech().slice(-40)) {
    const item = document.createElement("div");
    item.textContent = `${line.speaker}: ${line.text}`;
    chatLog.appendChild(item);
  }
  chatLog.scrollTop = chatLog.scrollHeight;
}

const stream = new EventStream(apiBase, {
  socketFactory: (url) => new WebSocket(url) as unknown as SocketLike,
  onRecord: (record) => {
    timeline.insert(record);
    redrawTimeline();
  },
  onStatus: (status) => {
    statusLabel.textContent = status;
  },
});
stream.connect();

async function pollState(): Promise<void> {
  try {
    snapshot = await api.getState();
  } catch {
    return; // service not up yet; keep polling
  }
  tickLabel.textContent = `tick ${snapshot.tick} · ${snapshot.phase}`;
  canvas.width = snapshot.terrain.width * CELL_SIZE;
  canvas.height = snapshot.terrain.height * CELL_SIZE;
  renderWorld(snapshot, ctx, CELL_SIZE);

  const agents = snapshot.agents.map((agent) => agent.name);
  if (chatTarget.options.length !== agents.length + 1) {
    chatTarget.innerHTML = "";
    const everyone = document.createElement("option");
    everyone.value = "";
    everyone.textContent = "(everyone)";
    chatTarget.appendChild(everyone);
    for (const name of agents) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      chatTarget.appendChild(option);
    }
  }
}

void pollState();
setInterval(() => void pollState(), STATE_POLL_MS);
