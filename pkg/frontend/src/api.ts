/** Thin fetch client for the session service. */

import type { ClientEvent, EventResponse, MetricsView, PromptData, ServiceError } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ServiceError,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body as ServiceError);
    }
    return body as T;
  }

  async createSession(config: unknown): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    return body.session_id;
  }

  postEvent(sessionId: string, event: ClientEvent): Promise<EventResponse> {
    return this.request(`/sessions/${sessionId}/events`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(event),
    });
  }

  async getPrompt(sessionId: string): Promise<PromptData | null> {
    const body = await this.request<{ prompt: PromptData | null }>(
      `/sessions/${sessionId}/prompt`,
    );
    return body.prompt;
  }

  getMetrics(sessionId: string): Promise<MetricsView> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }

  async getLog(sessionId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/log`);
    return response.text();
  }
}
