import type { AcceptedInput, Snapshot } from "./types.js";

/** Thin typed wrapper over the llmscape HTTP endpoints. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = (await response.json()) as T;
    if (!response.ok) {
      const detail = (body as { error?: string }).error ?? response.statusText;
      throw new Error(`${path} failed: ${detail}`);
    }
    return body;
  }

  getState(): Promise<Snapshot> {
    return this.request<Snapshot>("/state");
  }

  postTerrain(
    x: number,
    y: number,
    width: number,
    height: number,
    delta: number,
  ): Promise<AcceptedInput> {
    return this.request<AcceptedInput>("/terrain", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x, y, width, height, delta }),
    });
  }

  postUtterance(
    text: string,
    targetAgent?: string,
    speaker = "participant",
  ): Promise<AcceptedInput> {
    return this.request<AcceptedInput>("/utterance", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ speaker, text, target_agent: targetAgent ?? null }),
    });
  }

  postShadow(mask: boolean[][]): Promise<AcceptedInput> {
    return this.request<AcceptedInput>("/shadow", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ mask }),
    });
  }

  getLogSummary(): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>("/log/summary");
  }
}
