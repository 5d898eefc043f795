import { describe, expect, it } from "vitest";

import { AlertFeed } from "../src/alerts.js";
import type { AlertData, ApiResult, FeedView } from "../src/types.js";

function alert(state: AlertData["state"], rule = "r1"): AlertData {
  return {
    fingerprint: "00000000000000aa",
    rule_id: rule,
    state,
    since_ms: 1_000,
    value: 9.5,
    labels: { host: "n1" },
  };
}

function feedWith(responses: Array<ApiResult<{ alerts: AlertData[] }>>) {
  const queue = [...responses];
  const updates: FeedView[] = [];
  const feed = new AlertFeed(
    async () => queue.shift() ?? { ok: true, value: { alerts: [] } },
    (view) => updates.push(view),
    15_000,
    () => 99_000,
  );
  return { feed, updates };
}

describe("AlertFeed", () => {
  it("shows all clear when nothing is active", async () => {
    const { feed } = feedWith([{ ok: true, value: { alerts: [] } }]);
    const view = await feed.pollOnce();
    expect(view.allClear).toBe(true);
    expect(view.rows).toHaveLength(0);
    expect(view.staleSinceMs).toBeNull();
  });

  it("hides inactive instances", async () => {
    const { feed } = feedWith([{ ok: true, value: { alerts: [alert("inactive")] } }]);
    const view = await feed.pollOnce();
    expect(view.rows).toHaveLength(0);
  });

  it("highlights a state change for exactly one poll cycle", async () => {
    const { feed } = feedWith([
      { ok: true, value: { alerts: [alert("pending")] } },
      { ok: true, value: { alerts: [alert("firing")] } },
      { ok: true, value: { alerts: [alert("firing")] } },
    ]);
    const first = await feed.pollOnce();
    expect(first.rows[0].changed).toBe(false); // initial load is not a change
    const second = await feed.pollOnce();
    expect(second.rows[0].changed).toBe(true); // pending -> firing
    const third = await feed.pollOnce();
    expect(third.rows[0].changed).toBe(false); // unchanged since last poll
  });

  it("reflects a firing then resolved episode within two polls", async () => {
    const { feed } = feedWith([
      { ok: true, value: { alerts: [alert("firing")] } },
      { ok: true, value: { alerts: [alert("resolved")] } },
    ]);
    const first = await feed.pollOnce();
    expect(first.rows[0].state).toBe("firing");
    const second = await feed.pollOnce();
    expect(second.rows[0].state).toBe("resolved");
    expect(second.rows[0].changed).toBe(true);
  });

  it("shows a stale banner on failure and keeps the last rows", async () => {
    const { feed } = feedWith([
      { ok: true, value: { alerts: [alert("firing")] } },
      { ok: false, error: "network" },
      { ok: false, error: "network" },
    ]);
    await feed.pollOnce();
    const stale = await feed.pollOnce();
    expect(stale.staleSinceMs).toBe(99_000);
    expect(stale.rows).toHaveLength(1); // last good rows retained
    const still = await feed.pollOnce();
    expect(still.staleSinceMs).toBe(99_000); // first failure time sticks
  });

  it("recovers silently", async () => {
    const { feed } = feedWith([
      { ok: false, error: "network" },
      { ok: true, value: { alerts: [] } },
    ]);
    const down = await feed.pollOnce();
    expect(down.staleSinceMs).not.toBeNull();
    const up = await feed.pollOnce();
    expect(up.staleSinceMs).toBeNull();
    expect(up.allClear).toBe(true);
  });

  it("sorts firing ahead of pending and resolved", async () => {
    const rows: AlertData[] = [
      { ...alert("resolved", "b-rule"), fingerprint: "01" },
      { ...alert("firing", "z-rule"), fingerprint: "02" },
      { ...alert("pending", "a-rule"), fingerprint: "03" },
    ];
    const { feed } = feedWith([{ ok: true, value: { alerts: rows } }]);
    const view = await feed.pollOnce();
    expect(view.rows.map((r) => r.state)).toEqual(["firing", "pending", "resolved"]);
  });
});
