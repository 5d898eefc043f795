// View models -> DOM. Kept intentionally thin; everything interesting
// happens in panel.ts / alerts.ts where it is unit-testable.

import { formatAge, formatClock, formatValue } from "./format.js";
import type { AlertRow, FeedView, PanelViewModel } from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderPanel(view: PanelViewModel): HTMLElement {
  const card = el("div", `panel panel-${view.vizKind}`);
  card.appendChild(el("h3", "panel-title", view.title));
  if (view.state !== "ok") {
    card.appendChild(el("div", `panel-state panel-state-${view.state}`, view.message));
    return card;
  }
  if (view.vizKind === "stat") {
    card.appendChild(el("div", "stat-value", view.statValue ?? "-"));
  } else if (view.vizKind === "table") {
    card.appendChild(renderTable(view));
  } else {
    card.appendChild(renderLineChart(view));
    const legend = el("div", "legend");
    for (const s of view.series) legend.appendChild(el("span", "legend-item", s.label));
    card.appendChild(legend);
  }
  return card;
}

function renderTable(view: PanelViewModel): HTMLElement {
  const table = el("table", "series-table");
  const head = el("tr");
  for (const h of ["series", "latest", "points"]) head.appendChild(el("th", undefined, h));
  table.appendChild(head);
  for (const s of view.series) {
    const row = el("tr");
    row.appendChild(el("td", undefined, s.label));
    const last = s.points[s.points.length - 1];
    row.appendChild(el("td", undefined, last ? String(last[1]) : "-"));
    row.appendChild(el("td", undefined, String(s.points.length)));
    table.appendChild(row);
  }
  return table;
}

const PALETTE = ["#4dabf7", "#69db7c", "#ffa94d", "#e599f7", "#ff8787", "#3bc9db"];

function renderLineChart(view: PanelViewModel): HTMLElement {
  const width = 560;
  const height = 160;
  const pad = 8;
  let tMin = Infinity, tMax = -Infinity, vMin = Infinity, vMax = -Infinity;
  for (const s of view.series) {
    for (const [t, v] of s.points) {
      tMin = Math.min(tMin, t); tMax = Math.max(tMax, t);
      vMin = Math.min(vMin, v); vMax = Math.max(vMax, v);
    }
  }
  if (tMax === tMin) tMax = tMin + 1;
  if (vMax === vMin) { vMax += 1; vMin -= 1; }
  const sx = (t: number) => pad + ((t - tMin) / (tMax - tMin)) * (width - 2 * pad);
  const sy = (v: number) => height - pad - ((v - vMin) / (vMax - vMin)) * (height - 2 * pad);

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "chart");
  view.series.forEach((s, i) => {
    if (s.points.length === 0) return;
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    const d = s.points
      .map(([t, v], j) => `${j === 0 ? "M" : "L"}${sx(t).toFixed(1)},${sy(v).toFixed(1)}`)
      .join(" ");
    path.setAttribute("d", d);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", PALETTE[i % PALETTE.length]);
    path.setAttribute("stroke-width", "1.5");
    svg.appendChild(path);
  });
  const wrap = el("div", "chart-wrap");
  wrap.appendChild(svg);
  const range = el("div", "chart-range",
    `${formatValue(vMin, "none")} .. ${formatValue(vMax, "none")} ${view.unitSymbol}`);
  wrap.appendChild(range);
  return wrap;
}

export function renderFeed(view: FeedView, nowMs: number): HTMLElement {
  const box = el("div", "alert-feed");
  box.appendChild(el("h3", "panel-title", "Alerts"));
  if (view.staleSinceMs !== null) {
    box.appendChild(
      el("div", "stale-banner", `stale since ${formatClock(view.staleSinceMs)}`),
    );
  }
  if (view.rows.length === 0) {
    if (view.staleSinceMs === null) box.appendChild(el("div", "all-clear", "all clear"));
    return box;
  }
  const table = el("table", "alert-table");
  const head = el("tr");
  for (const h of ["state", "rule", "value", "labels", "age"]) {
    head.appendChild(el("th", undefined, h));
  }
  table.appendChild(head);
  for (const row of view.rows) {
    table.appendChild(renderAlertRow(row, nowMs));
  }
  box.appendChild(table);
  return box;
}

function renderAlertRow(row: AlertRow, nowMs: number): HTMLElement {
  const tr = el("tr", `alert-row alert-${row.state}${row.changed ? " alert-changed" : ""}`);
  tr.appendChild(el("td", `alert-state-${row.state}`, row.state));
  tr.appendChild(el("td", undefined, row.ruleId));
  tr.appendChild(el("td", undefined, String(row.value)));
  tr.appendChild(el("td", undefined, row.labels));
  tr.appendChild(el("td", undefined, formatAge(nowMs, row.sinceMs)));
  return tr;
}
