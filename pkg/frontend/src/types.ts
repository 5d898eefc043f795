// Shapes of the API server's JSON responses and the view models built
// from them.

export interface SeriesData {
  name: string;
  labels: Record<string, string>;
  unit: string;
  points: [number, number][];
}

export interface QueryRangeResponse {
  series: SeriesData[];
}

export interface AlertData {
  fingerprint: string;
  rule_id: string;
  state: "inactive" | "pending" | "firing" | "resolved";
  since_ms: number;
  value: number;
  labels: Record<string, string>;
}

export interface PanelDef {
  title: string;
  selector: string;
  agg: string;
  step_ms: number;
  viz_kind: "line" | "stat" | "table";
}

export interface DashboardTemplate {
  template_id: string;
  title: string;
  audience?: string;
  panels: PanelDef[];
}

export interface EventData {
  event_id: number;
  name: string;
  attributes: Record<string, string>;
  value: number;
  timestamp_ms: number;
}

// One request's outcome, explicit about the failure modes the UI must
// render distinctly (403 gets its own inline state, per the audience
// split; a malformed body must never produce a blank page).
export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; error: "unauthorized" | "forbidden" | "network" | "malformed" | "server"; detail?: string };

export type PanelState = "ok" | "no-data" | "not-authorized" | "error";

export interface SeriesView {
  label: string;
  points: [number, number][];
}

export interface PanelViewModel {
  title: string;
  vizKind: "line" | "stat" | "table";
  unitSymbol: string;
  state: PanelState;
  message: string;
  series: SeriesView[];
  statValue: string | null;
}

export interface AlertRow {
  fingerprint: string;
  ruleId: string;
  state: string;
  value: number;
  labels: string;
  sinceMs: number;
  changed: boolean;
}

export interface FeedView {
  rows: AlertRow[];
  allClear: boolean;
  staleSinceMs: number | null;
}
