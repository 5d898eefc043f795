"""The analytics engine: detection and correlation over the stores, plus
the orchestrated gather / distill / clear cycle.

The cycle distills raw windows that are approaching raw-retention expiry
into 1-minute rollups (and 1-hour rollups from those), writes one
condensed summary per series per cycle into the metastore, then lets the
tsdb clear. The clear step structurally cannot outrun the distill step:
retention only removes raw points below the distill watermark, and the
watermark only advances after rollups are durably stored.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from obstack.analytics.anomaly import (
    AnomalyParams,
    AnomalySpan,
    InsufficientData,
    detect_anomaly_spans,
)
from obstack.analytics.correlate import (
    InsufficientOverlap,
    ZeroVariance,
    correlate_points,
)
from obstack.core.clock import Clock
from obstack.core.errors import ObstackError
from obstack.core.model import SeriesKey
from obstack.metastore import Metastore, SummaryRecord, make_stats
from obstack.tsdb import RES_1H, RES_1M, Tsdb, merge_rollups

logger = logging.getLogger(__name__)

DEFAULT_DISTILL_LEAD_MS = 10 * 60 * 1000


@dataclass(frozen=True)
class CycleReport:
    series_distilled: int = 0
    summaries_written: int = 0
    raw_cleared: int = 0
    rollups_cleared: int = 0


class AnalyticsEngine:
    def __init__(
        self,
        tsdb: Tsdb,
        metastore: Metastore,
        clock: Optional[Clock] = None,
        params: Optional[AnomalyParams] = None,
        distill_lead_ms: int = DEFAULT_DISTILL_LEAD_MS,
        fault_injection: Optional[Callable[[str], None]] = None,
    ) -> None:
        self.tsdb = tsdb
        self.metastore = metastore
        self.clock = clock or Clock()
        self.params = params or AnomalyParams()
        self.distill_lead_ms = distill_lead_ms
        self.fault_injection = fault_injection
        self._cycle_lock = threading.Lock()

    # -- detection ---------------------------------------------------------

    def detect_anomalies(
        self,
        key: SeriesKey,
        window: Tuple[int, int],
        params: Optional[AnomalyParams] = None,
    ) -> List[AnomalySpan]:
        sid = self.tsdb.series_id(key)
        points = [] if sid is None else self.tsdb.raw_points(sid, window[0], window[1])
        return detect_anomaly_spans(key, points, params or self.params)

    def correlate(
        self, key_a: SeriesKey, key_b: SeriesKey, window: Tuple[int, int], step: int
    ) -> float:
        sid_a = self.tsdb.series_id(key_a)
        sid_b = self.tsdb.series_id(key_b)
        points_a = [] if sid_a is None else self.tsdb.raw_points(sid_a, window[0], window[1])
        points_b = [] if sid_b is None else self.tsdb.raw_points(sid_b, window[0], window[1])
        return correlate_points(points_a, points_b, window, step)

    def rank_root_causes(
        self,
        target_span: AnomalySpan,
        candidates: Sequence[SeriesKey],
        window: Tuple[int, int],
        step: int,
        params: Optional[AnomalyParams] = None,
    ) -> List[Tuple[SeriesKey, float]]:
        """Anomalous candidates scored by |correlation| times an onset-lead
        bonus; candidates whose anomaly starts before the target's rank
        higher. Candidates without anomalies are dropped. Ties break by
        earlier onset, then lexicographic key."""
        window_length = window[1] - window[0]
        scored: List[Tuple[SeriesKey, float, int]] = []
        for candidate in candidates:
            if candidate == target_span.key:
                continue
            try:
                spans = self.detect_anomalies(candidate, window, params)
            except InsufficientData:
                continue
            if not spans:
                continue
            onset = min(s.onset for s in spans)
            try:
                r = self.correlate(target_span.key, candidate, window, step)
            except (InsufficientOverlap, ZeroVariance):
                continue
            lead_weight = 1.0 + max(0, target_span.onset - onset) / window_length
            scored.append((candidate, abs(r) * lead_weight, onset))
        scored.sort(key=lambda item: (-item[1], item[2], str(item[0])))
        return [(key, score) for key, score, _ in scored]

    # -- the gather / distill / clear loop ----------------------------------

    def distill_cycle(self, now_ms: Optional[int] = None) -> CycleReport:
        """One pass of the continuous loop; safe to invoke at any time and
        idempotent under immediate repetition. Per-series failures are
        logged and skipped, never fatal."""
        with self._cycle_lock:
            now = self.clock.now_ms() if now_ms is None else now_ms
            raw_cutoff = now - self.tsdb.policy.raw_retention_ms
            distill_until = ((raw_cutoff + self.distill_lead_ms) // RES_1M) * RES_1M
            distill_until = min(distill_until, (now // RES_1M) * RES_1M)

            series_distilled = 0
            summaries_written = 0
            for sid, key in self.tsdb.all_series():  # gather
                try:
                    wrote = self._distill_series(sid, key, distill_until, now)
                except ObstackError as exc:
                    logger.warning("distill failed for %s: %s", key, exc)
                    continue
                if wrote:
                    series_distilled += 1
                    summaries_written += wrote
            if self.fault_injection is not None:
                self.fault_injection("after_distill")
            cleared = self.tsdb.enforce_retention(now)  # clear
            return CycleReport(
                series_distilled=series_distilled,
                summaries_written=summaries_written,
                raw_cleared=cleared["raw_deleted"],
                rollups_cleared=cleared["rollups_deleted"],
            )

    def _distill_series(self, sid: int, key: SeriesKey, distill_until: int, now: int) -> int:
        bounds = self.tsdb.raw_bounds(sid)
        mark = self.tsdb.watermark(RES_1M, sid)
        if bounds is None:
            start = mark
        else:
            start = max(mark, (bounds[0] // RES_1M) * RES_1M)
        if start >= distill_until:
            self._distill_hours(sid, now)
            return 0

        rollups = self.tsdb.downsample(key, RES_1M, (start, distill_until))
        self.tsdb.store_rollups(sid, RES_1M, rollups)
        self.tsdb.set_watermark(RES_1M, sid, distill_until)
        summaries = 0
        if rollups:
            merged = merge_rollups(rollups, start, distill_until - start)
            summary = SummaryRecord(
                summary_id=f"s{sid}:{start}:{distill_until}",
                selector=str(key),
                window=(start, distill_until),
                stats=make_stats(merged.count, merged.sum, merged.min, merged.max, merged.sum_sq),
                produced_at=now,
            )
            self.metastore.store_summary(summary)
            summaries = 1
        self._distill_hours(sid, now)
        return summaries if rollups else 0

    def _distill_hours(self, sid: int, now: int) -> None:
        mark_1m = self.tsdb.watermark(RES_1M, sid)
        until_1h = (mark_1m // RES_1H) * RES_1H
        mark_1h = self.tsdb.watermark(RES_1H, sid)
        if mark_1h >= until_1h:
            return
        start = mark_1h
        hour_rollups = self.tsdb.downsample_from_rollups(sid, RES_1M, RES_1H, (start, until_1h))
        self.tsdb.store_rollups(sid, RES_1H, hour_rollups)
        self.tsdb.set_watermark(RES_1H, sid, until_1h)
