// Thin typed client over the service JSON API.

import type {
  AnalyticsPayload,
  ExplanationPayload,
  Instrument,
  Scenario,
  SessionState,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(private baseUrl = "", private adminToken = "") {}

  setAdminToken(token: string): void {
    this.adminToken = token;
  }

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.adminToken) h["x-admin-token"] = this.adminToken;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = await response.json();
        detail = parsed.detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, String(detail));
    }
    if (response.status === 204) return undefined as T;
    const text = await response.text();
    return (text ? JSON.parse(text) : undefined) as T;
  }

  getInstrument(): Promise<Instrument> {
    return this.request("GET", "/api/instruments");
  }

  getScenarios(): Promise<Scenario[]> {
    return this.request("GET", "/api/scenarios");
  }

  getExplanation(instanceId: string): Promise<ExplanationPayload> {
    return this.request("GET", `/api/explanations/${encodeURIComponent(instanceId)}`);
  }

  getMetrics(): Promise<Record<string, unknown>> {
    return this.request("GET", "/api/metrics");
  }

  createSession(demographics: Record<string, string> = {}): Promise<{ session_id: string; stage: string }> {
    return this.request("POST", "/api/sessions", { demographics });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  postResponses(
    sessionId: string,
    body: {
      items?: Record<string, number>;
      demographics?: Record<string, string>;
      scenario_id?: string;
      stage?: string;
    }
  ): Promise<void> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/responses`, body);
  }

  completeSession(sessionId: string): Promise<void> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/complete`);
  }

  getAnalytics(): Promise<AnalyticsPayload> {
    return this.request("GET", "/api/analytics");
  }

  async getExportCsv(): Promise<string> {
    const response = await fetch(this.baseUrl + "/api/export.csv", { headers: this.headers() });
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    return response.text();
  }
}
