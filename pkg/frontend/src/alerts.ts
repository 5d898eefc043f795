// Live alert feed: poll, diff, highlight, and survive outages.
//
// A failed poll flips the view to "stale since <t>" while keeping the
// last good rows; recovery is silent. A row whose state changed since
// the previous poll is highlighted for exactly one poll cycle.

import { labelString } from "./format.js";
import type { AlertData, ApiResult, AlertRow, FeedView } from "./types.js";

export const DEFAULT_POLL_INTERVAL_MS = 15_000;

type AlertsFetcher = () => Promise<ApiResult<{ alerts: AlertData[] }>>;

export class AlertFeed {
  private previousStates = new Map<string, string>();
  private lastRows: AlertRow[] = [];
  private staleSinceMs: number | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private hasPolled = false;

  constructor(
    private fetchAlerts: AlertsFetcher,
    private onUpdate: (view: FeedView) => void,
    private intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
    private now: () => number = Date.now,
  ) {}

  start(): void {
    void this.pollOnce();
    this.timer = setInterval(() => void this.pollOnce(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  view(): FeedView {
    return {
      rows: this.lastRows,
      allClear: this.lastRows.length === 0 && this.staleSinceMs === null,
      staleSinceMs: this.staleSinceMs,
    };
  }

  async pollOnce(): Promise<FeedView> {
    const result = await this.fetchAlerts();
    if (!result.ok) {
      if (this.staleSinceMs === null) this.staleSinceMs = this.now();
      const view = this.view();
      this.onUpdate(view);
      return view;
    }
    this.staleSinceMs = null;
    const next = new Map<string, string>();
    const rows: AlertRow[] = [];
    for (const alert of result.value.alerts) {
      next.set(alert.fingerprint, alert.state);
      if (alert.state === "inactive") continue;
      const previous = this.previousStates.get(alert.fingerprint);
      // a row is highlighted when its state differs from the last poll;
      // rows appearing after the initial load count as changes too
      const changed = previous !== undefined ? previous !== alert.state : this.hasPolled;
      rows.push({
        fingerprint: alert.fingerprint,
        ruleId: alert.rule_id,
        state: alert.state,
        value: alert.value,
        labels: labelString(alert.labels),
        sinceMs: alert.since_ms,
        changed,
      });
    }
    rows.sort((a, b) => (a.state === b.state ? a.ruleId.localeCompare(b.ruleId) : rank(a) - rank(b)));
    this.previousStates = next;
    this.lastRows = rows;
    this.hasPolled = true;
    const view = this.view();
    this.onUpdate(view);
    return view;
  }
}

function rank(row: AlertRow): number {
  return row.state === "firing" ? 0 : row.state === "pending" ? 1 : 2;
}
