// Thin HTTP client over the orchestrator API. fetch is injectable so the
// contract tests can capture requests without a network.

import type { EventWire, RequestSpec } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ApiResult {
  ok: boolean;
  status: number;
  events: EventWire[];
  response?: string;
  error?: string;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async send(spec: RequestSpec): Promise<ApiResult> {
    const init: RequestInit = {
      method: spec.method,
      headers: { "Content-Type": "application/json" },
    };
    if (spec.body !== null) init.body = JSON.stringify(spec.body);
    const response = await this.fetchImpl(this.baseUrl + spec.path, init);
    let payload: Record<string, unknown> = {};
    try {
      payload = (await response.json()) as Record<string, unknown>;
    } catch {
      payload = {};
    }
    return {
      ok: response.ok,
      status: response.status,
      events: (payload["events"] as EventWire[] | undefined) ?? [],
      response: payload["response"] as string | undefined,
      error: payload["message"] as string | undefined,
    };
  }

  async createSession(): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions`, { method: "POST" });
    if (!response.ok) throw new Error(`could not create session: ${response.status}`);
    const body = (await response.json()) as { id: string };
    return body.id;
  }
}
