/** Thin typed client over the annotation service HTTP API. */

import { GateRejection, Selections, SessionInfo, TaskResponse } from "./types";

export class GateError extends Error {
  retryAfterMs: number;

  constructor(message: string, retryAfterMs: number) {
    super(message);
    this.retryAfterMs = retryAfterMs;
  }
}

export class ApiError extends Error {
  status: number;

  constructor(message: string, status: number) {
    super(message);
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  private baseUrl: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json().catch(() => ({}));
    if (response.status === 425) {
      const gate = body as GateRejection;
      throw new GateError(gate.error ?? "too early", gate.retry_after_ms ?? 0);
    }
    if (!response.ok) {
      throw new ApiError(body.error ?? `HTTP ${response.status}`, response.status);
    }
    return body as T;
  }

  startSession(campaign: string, annotator: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ campaign, annotator }),
    });
  }

  nextTask(sessionId: string): Promise<TaskResponse> {
    return this.request<TaskResponse>(`/session/${sessionId}/task`);
  }

  submit(sessionId: string, taskId: string, response: Selections): Promise<{ accepted: boolean }> {
    return this.request(`/session/${sessionId}/submit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_id: taskId, response }),
    });
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/images/${imageId}`;
  }
}
