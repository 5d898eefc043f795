// Query responses -> renderable panel view models.
//
// A panel never renders blank: empty data yields an explicit "no data"
// state, a 403 yields "not authorized", and anything structurally wrong
// yields an inline error state.

import { labelString, formatValue, unitSymbol } from "./format.js";
import type {
  ApiResult,
  PanelDef,
  PanelViewModel,
  QueryRangeResponse,
  SeriesView,
} from "./types.js";

export function buildPanel(
  panel: PanelDef,
  result: ApiResult<QueryRangeResponse>,
): PanelViewModel {
  const base: PanelViewModel = {
    title: panel.title,
    vizKind: panel.viz_kind,
    unitSymbol: "",
    state: "ok",
    message: "",
    series: [],
    statValue: null,
  };
  if (!result.ok) {
    if (result.error === "forbidden") {
      return { ...base, state: "not-authorized", message: "not authorized" };
    }
    if (result.error === "unauthorized") {
      return { ...base, state: "not-authorized", message: "session expired" };
    }
    return {
      ...base,
      state: "error",
      message: result.error === "network" ? "stack unreachable" : `bad response (${result.error})`,
    };
  }
  const body = result.value;
  if (!body || !Array.isArray(body.series)) {
    return { ...base, state: "error", message: "bad response (malformed)" };
  }
  if (body.series.length === 0) {
    return { ...base, state: "no-data", message: "no data" };
  }

  let unit = "none";
  const series: SeriesView[] = [];
  for (const s of body.series) {
    if (!Array.isArray(s.points)) {
      return { ...base, state: "error", message: "bad response (malformed)" };
    }
    const points = [...s.points].sort((a, b) => a[0] - b[0]);
    unit = s.unit || unit;
    series.push({ label: labelString(s.labels ?? {}), points });
  }
  const nonEmpty = series.filter((s) => s.points.length > 0);
  if (nonEmpty.length === 0) {
    return { ...base, state: "no-data", message: "no data" };
  }

  const view = { ...base, unitSymbol: unitSymbol(unit), series };
  if (panel.viz_kind === "stat") {
    // stat panels carry exactly one value: the latest across all series
    let latest: [number, number] | null = null;
    for (const s of nonEmpty) {
      const last = s.points[s.points.length - 1];
      if (latest === null || last[0] > latest[0]) latest = last;
    }
    view.series = [];
    view.statValue = formatValue(latest![1], unit);
  }
  return view;
}

export function panelTimeRange(stepMs: number, nowMs: number, buckets = 30): [number, number] {
  const span = Math.max(stepMs * buckets, 60_000);
  return [nowMs - span, nowMs];
}
