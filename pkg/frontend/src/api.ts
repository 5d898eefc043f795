// Thin typed client over the stack's HTTP API.
//
// The bearer token lives in this module's memory only: entered at login,
// gone on logout or reload, never persisted. Every caller receives an
// ApiResult and must render failures; nothing here throws on HTTP errors.

import type {
  AlertData,
  ApiResult,
  DashboardTemplate,
  EventData,
  QueryRangeResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private token: string | null = null;

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  hasToken(): boolean {
    return this.token !== null;
  }

  private async request<T>(path: string, params?: Record<string, string | number>): Promise<ApiResult<T>> {
    const query = params
      ? "?" + new URLSearchParams(Object.fromEntries(
          Object.entries(params).map(([k, v]) => [k, String(v)]),
        )).toString()
      : "";
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}${query}`, {
        headers: this.token ? { Authorization: `Bearer ${this.token}` } : {},
      });
    } catch {
      return { ok: false, error: "network" };
    }
    if (response.status === 401) return { ok: false, error: "unauthorized" };
    if (response.status === 403) return { ok: false, error: "forbidden" };
    if (response.status >= 400) {
      let detail = "";
      try {
        detail = JSON.stringify(await response.json());
      } catch {
        /* body unavailable */
      }
      return { ok: false, error: "server", detail: `${response.status} ${detail}` };
    }
    try {
      return { ok: true, value: (await response.json()) as T };
    } catch {
      return { ok: false, error: "malformed" };
    }
  }

  queryRange(
    selector: string,
    startMs: number,
    endMs: number,
    stepMs: number,
    agg: string,
  ): Promise<ApiResult<QueryRangeResponse>> {
    return this.request("/api/v1/query_range", {
      selector,
      start: startMs,
      end: endMs,
      step: stepMs,
      agg,
    });
  }

  alerts(): Promise<ApiResult<{ alerts: AlertData[] }>> {
    return this.request("/api/v1/alerts");
  }

  dashboards(): Promise<ApiResult<{ dashboards: DashboardTemplate[] }>> {
    return this.request("/api/v1/dashboards");
  }

  events(selector: string, startMs: number, endMs: number): Promise<ApiResult<{ events: EventData[] }>> {
    return this.request("/api/v1/events", { selector, start: startMs, end: endMs });
  }
}
