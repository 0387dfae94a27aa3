// Thin typed client over the documented HTTP JSON API.

import type { ApiErrorBody, FeedbackPayload, MessagePayload } from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = (await response.json()) as ApiErrorBody;
    return new ApiError(body.error.code, body.error.message, response.status);
  } catch {
    return new ApiError("http", `request failed with status ${response.status}`, response.status);
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        headers: { "content-type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ApiError("network", `cannot reach the tutor service: ${String(err)}`, 0);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", { method: "POST" });
    return body.session_id;
  }

  sendMessage(sessionId: string, query: string): Promise<MessagePayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      body: JSON.stringify({ query }),
    });
  }

  evaluateAnswer(question: string, studentAnswer: string): Promise<FeedbackPayload> {
    return this.request("/evaluate-answer", {
      method: "POST",
      body: JSON.stringify({ question, student_answer: studentAnswer }),
    });
  }

  exportSession(sessionId: string): Promise<unknown> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/export`);
  }
}
