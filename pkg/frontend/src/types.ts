// Shapes served by the llmscape HTTP/WebSocket API. The UI derives all of
// its state from these two surfaces (GET /state and /events); it never
// simulates anything client-side.

export interface TerrainView {
  width: number;
  height: number;
  cells: number[][]; // row-major [y][x], elevations in [0,1]
}

export interface AgentView {
  name: string;
  x: number;
  y: number;
  posture: "standing" | "sitting" | "napping";
  current_action: string | null;
  tiredness: "rested" | "tired" | "very_tired" | "exhausted";
}

export interface ConversationView {
  id: string;
  participants: string[];
  last_turn: { speaker: string; text: string; tick: number } | null;
}

export interface Snapshot {
  tick: number;
  phase: "dawn" | "day" | "dusk" | "night";
  terrain: TerrainView;
  agents: AgentView[];
  conversations: ConversationView[];
}

export type LogCategory =
  | "speech"
  | "contemplation"
  | "planning"
  | "action"
  | "event"
  | "error";

export interface LogRecord {
  seq: number;
  tick: number;
  actor: string;
  category: LogCategory;
  payload: Record<string, unknown>;
}

export interface AcceptedInput {
  accepted: boolean;
  order?: number;
  error?: string;
}
