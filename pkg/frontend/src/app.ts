// Page composition and hash routing.
//
// Three pages for three audiences: a raw-data view for direct
// inspection, the template (KPI) view, and a free-form query explorer.
// The alert feed rides along on every page. The bearer token is held by
// the ApiClient in memory; logging out (or reloading) drops it and every
// cached view with it.

import { ApiClient } from "./api.js";
import { AlertFeed, DEFAULT_POLL_INTERVAL_MS } from "./alerts.js";
import { buildPanel, panelTimeRange } from "./panel.js";
import { el, renderFeed, renderPanel } from "./render.js";
import type { DashboardTemplate, PanelDef } from "./types.js";

const PAGES = ["templates", "raw", "explore"] as const;
type Page = (typeof PAGES)[number];

export class App {
  private client: ApiClient;
  private feed: AlertFeed | null = null;
  private root: HTMLElement;

  constructor(root: HTMLElement, client?: ApiClient) {
    this.root = root;
    this.client = client ?? new ApiClient("");
  }

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  private page(): Page {
    const raw = window.location.hash.replace(/^#\/?/, "");
    return (PAGES as readonly string[]).includes(raw) ? (raw as Page) : "templates";
  }

  private async route(): Promise<void> {
    if (!this.client.hasToken()) {
      this.renderLogin();
      return;
    }
    await this.renderShell();
  }

  private renderLogin(): void {
    this.feed?.stop();
    this.root.replaceChildren();
    const box = el("div", "login-box");
    box.appendChild(el("h2", undefined, "obstack"));
    box.appendChild(el("p", "muted", "Enter an API bearer token to continue."));
    const input = el("input", "token-input");
    input.type = "password";
    input.placeholder = "bearer token";
    const button = el("button", "login-button", "Sign in");
    const error = el("div", "login-error", "");
    button.addEventListener("click", () => void submit());
    input.addEventListener("keydown", (e) => {
      if (e.key === "Enter") void submit();
    });
    const submit = async () => {
      this.client.setToken(input.value.trim() || null);
      const probe = await this.client.dashboards();
      if (!probe.ok) {
        this.client.setToken(null);
        error.textContent =
          probe.error === "network" ? "stack unreachable" : "token rejected";
        return;
      }
      await this.renderShell();
    };
    box.append(input, button, error);
    this.root.replaceChildren(box);
  }

  private async renderShell(): Promise<void> {
    this.root.replaceChildren();
    const nav = el("nav", "topnav");
    for (const page of PAGES) {
      const link = el("a", page === this.page() ? "active" : "", labelFor(page));
      link.href = `#/${page}`;
      nav.appendChild(link);
    }
    const logout = el("a", "logout", "log out");
    logout.href = "#/";
    logout.addEventListener("click", () => {
      this.client.setToken(null);
      this.renderLogin();
    });
    nav.appendChild(logout);
    this.root.appendChild(nav);

    const feedHost = el("div", "feed-host");
    const content = el("main", "content");
    this.root.append(feedHost, content);

    this.feed?.stop();
    this.feed = new AlertFeed(
      () => this.client.alerts(),
      (view) => feedHost.replaceChildren(renderFeed(view, Date.now())),
      DEFAULT_POLL_INTERVAL_MS,
    );
    this.feed.start();

    const page = this.page();
    if (page === "templates") await this.renderTemplates(content);
    else if (page === "raw") await this.renderRaw(content);
    else await this.renderExplore(content);
  }

  private async renderTemplates(content: HTMLElement): Promise<void> {
    const result = await this.client.dashboards();
    if (!result.ok) {
      content.appendChild(el("div", "panel-state panel-state-error", `cannot load templates (${result.error})`));
      return;
    }
    for (const template of result.value.dashboards) {
      content.appendChild(el("h2", "template-title", template.title));
      const grid = el("div", "panel-grid");
      content.appendChild(grid);
      await this.renderTemplatePanels(template, grid);
    }
  }

  private async renderTemplatePanels(template: DashboardTemplate, grid: HTMLElement): Promise<void> {
    const now = Date.now();
    await Promise.all(
      template.panels.map(async (panel) => {
        const host = el("div", "panel-host");
        grid.appendChild(host);
        const [start, end] = panelTimeRange(panel.step_ms, now);
        const result = await this.client.queryRange(panel.selector, start, end, panel.step_ms, panel.agg);
        host.appendChild(renderPanel(buildPanel(panel, result)));
      }),
    );
  }

  private async renderRaw(content: HTMLElement): Promise<void> {
    const now = Date.now();
    const panel: PanelDef = {
      title: "Raw samples (last 15 min)",
      selector: "",
      agg: "raw",
      step_ms: 1000,
      viz_kind: "table",
    };
    const result = await this.client.queryRange("", now - 15 * 60_000, now, 1000, "raw");
    content.appendChild(renderPanel(buildPanel(panel, result)));
    const events = await this.client.events("", now - 24 * 3_600_000, now);
    const box = el("div", "panel");
    box.appendChild(el("h3", "panel-title", "Recent events (24 h)"));
    if (!events.ok) {
      box.appendChild(el("div", "panel-state panel-state-error", `cannot load events (${events.error})`));
    } else if (events.value.events.length === 0) {
      box.appendChild(el("div", "panel-state panel-state-no-data", "no data"));
    } else {
      const list = el("ul", "event-list");
      for (const event of events.value.events.slice(-50).reverse()) {
        list.appendChild(
          el("li", undefined,
            `${new Date(event.timestamp_ms).toISOString()} ${event.name} = ${event.value}`),
        );
      }
      box.appendChild(list);
    }
    content.appendChild(box);
  }

  private async renderExplore(content: HTMLElement): Promise<void> {
    const form = el("div", "explore-form");
    const selector = el("input", "explore-selector");
    selector.placeholder = 'selector, e.g. cpu_utilization{host="n1"}';
    const agg = el("select");
    for (const option of ["raw", "mean", "min", "max", "sum", "count"]) {
      const opt = el("option", undefined, option);
      opt.value = option;
      agg.appendChild(opt);
    }
    const minutes = el("input", "explore-minutes");
    minutes.value = "60";
    minutes.type = "number";
    const run = el("button", "explore-run", "Run query");
    form.append(selector, agg, minutes, run);
    const out = el("div", "explore-out");
    content.append(form, out);

    run.addEventListener("click", async () => {
      const now = Date.now();
      const span = Math.max(1, Number(minutes.value)) * 60_000;
      const stepMs = Math.max(1000, Math.floor(span / 60));
      const panel: PanelDef = {
        title: selector.value || "(all series)",
        selector: selector.value,
        agg: agg.value,
        step_ms: stepMs,
        viz_kind: agg.value === "raw" ? "table" : "line",
      };
      const result = await this.client.queryRange(
        selector.value, now - span, now, agg.value === "raw" ? 1000 : stepMs, agg.value,
      );
      out.replaceChildren(renderPanel(buildPanel(panel, result)));
    });
  }
}

function labelFor(page: Page): string {
  return page === "templates" ? "Dashboards" : page === "raw" ? "Raw data" : "Explore";
}
