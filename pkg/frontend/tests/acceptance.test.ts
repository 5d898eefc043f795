// The dashboard's acceptance path against a seeded stack double: the
// three shipped templates render; user tokens see only their scoped
// series while the admin sees all; an alert episode reaches the feed
// within two polls; an API outage shows the stale banner without crash.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AlertFeed } from "../src/alerts.js";
import { buildPanel } from "../src/panel.js";
import { seededStack, TEMPLATES } from "./fake-stack.js";
import type { FeedView } from "../src/types.js";

function clientFor(stack: ReturnType<typeof seededStack>, token: string): ApiClient {
  const client = new ApiClient("http://stack", stack.fetch);
  client.setToken(token);
  return client;
}

describe("seeded-stack acceptance", () => {
  it("renders all three shipped templates without error states", async () => {
    const stack = seededStack();
    const client = clientFor(stack, "admintok");
    const dashboards = await client.dashboards();
    expect(dashboards.ok).toBe(true);
    if (!dashboards.ok) return;
    const ids = dashboards.value.dashboards.map((d) => d.template_id);
    expect(ids).toEqual(["system-overview", "my-data", "sustainability"]);

    for (const template of dashboards.value.dashboards) {
      for (const panel of template.panels) {
        const result = await client.queryRange(panel.selector, 0, 10 ** 15, panel.step_ms, panel.agg);
        const view = buildPanel(panel, result);
        expect(["ok", "no-data"]).toContain(view.state);
        expect(view.state).not.toBe("error");
      }
    }
  });

  it("templates render the no-data state against an empty store", async () => {
    const stack = seededStack();
    stack.series = [];
    const client = clientFor(stack, "admintok");
    for (const template of TEMPLATES) {
      for (const panel of template.panels) {
        const result = await client.queryRange(panel.selector, 0, 10 ** 15, panel.step_ms, panel.agg);
        const view = buildPanel(panel, result);
        expect(view.state).toBe("no-data");
        expect(view.message).toBe("no data");
      }
    }
  });

  it("scopes user tokens to their own series while admin sees all", async () => {
    const stack = seededStack();
    const admin = clientFor(stack, "admintok");
    const u7 = clientFor(stack, "u7tok");

    const all = await admin.queryRange("app_latency", 0, 10 ** 15, 60_000, "mean");
    expect(all.ok && all.value.series).toHaveLength(2);

    const scoped = await u7.queryRange("app_latency", 0, 10 ** 15, 60_000, "mean");
    expect(scoped.ok).toBe(true);
    if (!scoped.ok) return;
    expect(scoped.value.series).toHaveLength(1);
    expect(scoped.value.series[0].labels.user_id).toBe("u7");

    // a selector that contradicts the scope is a hard 403 -> inline state
    const conflict = await u7.queryRange('app_latency{user_id="u9"}', 0, 10 ** 15, 60_000, "mean");
    expect(conflict.ok).toBe(false);
    if (conflict.ok) return;
    const view = buildPanel(
      { title: "x", selector: "", agg: "mean", step_ms: 1000, viz_kind: "line" },
      conflict,
    );
    expect(view.state).toBe("not-authorized");
  });

  it("rejects an unknown token", async () => {
    const stack = seededStack();
    const client = clientFor(stack, "wrong");
    const result = await client.dashboards();
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.error).toBe("unauthorized");
  });

  it("shows a firing then resolved episode within two poll cycles", async () => {
    const stack = seededStack();
    const client = clientFor(stack, "admintok");
    const updates: FeedView[] = [];
    const feed = new AlertFeed(() => client.alerts(), (v) => updates.push(v), 1000);

    stack.alerts = [{
      fingerprint: "00000000000000ff",
      rule_id: "cpu-high",
      state: "firing",
      since_ms: 5_000,
      value: 0.97,
      labels: { host: "n1" },
    }];
    const firing = await feed.pollOnce();
    expect(firing.rows[0].state).toBe("firing");

    stack.alerts = [{ ...stack.alerts[0], state: "resolved" }];
    const resolved = await feed.pollOnce();
    expect(resolved.rows[0].state).toBe("resolved");
    expect(resolved.rows[0].changed).toBe(true);
  });

  it("survives an API outage with a stale banner and resumes", async () => {
    const stack = seededStack();
    const client = clientFor(stack, "admintok");
    const feed = new AlertFeed(() => client.alerts(), () => undefined, 1000, () => 123_456);

    await feed.pollOnce();
    stack.down = true;
    const stale = await feed.pollOnce();
    expect(stale.staleSinceMs).toBe(123_456);

    stack.down = false;
    const back = await feed.pollOnce();
    expect(back.staleSinceMs).toBeNull();
  });

  it("user alert feed only shows scoped instances", async () => {
    const stack = seededStack();
    stack.alerts = [
      { fingerprint: "01", rule_id: "r", state: "firing", since_ms: 1, value: 1, labels: { user_id: "u7" } },
      { fingerprint: "02", rule_id: "r", state: "firing", since_ms: 1, value: 1, labels: { user_id: "u9" } },
    ];
    const u7 = clientFor(stack, "u7tok");
    const feed = new AlertFeed(() => u7.alerts(), () => undefined);
    const view = await feed.pollOnce();
    expect(view.rows).toHaveLength(1);
    expect(view.rows[0].labels).toContain("user_id=u7");
  });
});
