"""The time-series engine: in-memory head plus append-only segments.

Samples land in a per-series head map (first write wins per timestamp)
and are simultaneously appended to binary segment files for crash
recovery. Queries bucket raw points and fall back to rollups for
horizons whose raw data has been cleared. Retention never removes raw
points that the distill step has not yet rolled up.
"""

from __future__ import annotations

import bisect
import math
import threading
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from obstack.core.clock import Clock
from obstack.core.errors import InvalidRange, ObstackError
from obstack.core.metrics import MetricsRegistry
from obstack.core.model import Canonical, MetricSample, SampleKind, SeriesKey
from obstack.core.selector import Selector
from obstack.core.units import canonical_unit
from obstack.tsdb.policy import RetentionPolicy
from obstack.tsdb.rollups import (
    RES_1H,
    RES_1M,
    RollupPoint,
    RollupStore,
    merge_rollups,
    rollup_from_values,
)
from obstack.tsdb.segments import (
    BLOCK_MS,
    SegmentWriter,
    SeriesDictionary,
    block_start,
    replay_segment,
)
import os


class RetentionViolation(ObstackError):
    """Sample timestamp is older than the raw retention window."""


class StorageFull(ObstackError):
    """Series cardinality guard tripped."""


class QuantileNeedsRaw(ObstackError):
    """Quantile requested over a horizon only rollups can answer."""


class UnalignedWindow(ObstackError):
    """Downsample window is not aligned to the resolution."""


class EmptyInput(ObstackError):
    """Quantile of an empty value list."""


AGGREGATIONS = ("raw", "mean", "min", "max", "sum", "count", "quantile")


def quantile(values: Sequence[float], q: float) -> float:
    """Nearest-rank quantile: the ceil(q*n)-th smallest value (1-based).

    A small epsilon absorbs binary-float representation error so that q
    values like 0.2 land on their mathematical rank.
    """
    if not values:
        raise EmptyInput("quantile of empty input")
    if not 0.0 < q <= 1.0:
        raise InvalidRange(f"quantile fraction must be in (0, 1], got {q}")
    n = len(values)
    rank = max(1, math.ceil(q * n - 1e-9))
    return sorted(values)[rank - 1]


class Tsdb:
    """Append, range-query, downsample, and clear one data directory."""

    def __init__(
        self,
        data_dir: str,
        policy: Optional[RetentionPolicy] = None,
        clock: Optional[Clock] = None,
        max_series: int = 1_000_000,
        shards: int = 4,
        registry: Optional[MetricsRegistry] = None,
        event_sink: Optional[Callable[[MetricSample], None]] = None,
    ) -> None:
        self.policy = policy or RetentionPolicy()
        self.clock = clock or Clock()
        self.max_series = max_series
        self.registry = registry or MetricsRegistry()
        self.event_sink = event_sink
        self._lock = threading.RLock()
        os.makedirs(data_dir, exist_ok=True)
        self._dict = SeriesDictionary(os.path.join(data_dir, "series.jsonl"))
        self._writer = SegmentWriter(os.path.join(data_dir, "segments"), shards)
        self._rollups = RollupStore(os.path.join(data_dir, "rollups"))
        self._head: Dict[int, Dict[int, float]] = {}
        self._sorted: Dict[int, List[Tuple[int, float]]] = {}
        self._by_name: Dict[str, Set[int]] = {}
        self._blocks: Dict[int, Set[int]] = {}
        for sid in self._dict.all_ids():
            key = self._dict.key_of(sid)
            self._by_name.setdefault(key.name, set()).add(sid)
        self._replay()

    # -- ingest ---------------------------------------------------------

    def append(self, sample: MetricSample) -> None:
        """Store one gauge/counter sample; duplicate (key, timestamp) pairs
        keep the first-written value so ingest retries cannot rewrite
        history. Out-of-order timestamps inside the retention window are
        accepted."""
        if sample.kind is SampleKind.EVENT:
            raise ValueError("event samples belong to the metastore, not the tsdb")
        cutoff = self.clock.now_ms() - self.policy.raw_retention_ms
        if sample.timestamp < cutoff:
            raise RetentionViolation(
                f"timestamp {sample.timestamp} older than raw retention ({cutoff})"
            )
        labels = tuple(sorted(sample.labels.items()))
        with self._lock:
            sid = self._dict.get(sample.name, labels)
            if sid is None:
                if len(self._dict) >= self.max_series:
                    raise StorageFull(f"series cardinality limit {self.max_series} reached")
                sid, _ = self._dict.get_or_create(
                    sample.name, labels, sample.unit.canonical.value, sample.kind.value
                )
                self._by_name.setdefault(sample.name, set()).add(sid)
            points = self._head.setdefault(sid, {})
            if sample.timestamp in points:
                return
            points[sample.timestamp] = sample.value
            self._sorted.pop(sid, None)
            self._writer.append(sid, sample.timestamp, sample.value)
            self._blocks.setdefault(block_start(sample.timestamp), set()).add(sid)

    def flush(self) -> None:
        self._writer.flush()

    def _replay(self) -> None:
        cutoff = self.clock.now_ms() - self.policy.raw_retention_ms
        marks = {sid: self._rollups.watermark(RES_1M, sid) for sid in self._dict.all_ids()}

        def sink(sid: int, ts: int, value: float) -> None:
            if ts < cutoff and ts < marks.get(sid, 0):
                return
            points = self._head.setdefault(sid, {})
            if ts not in points:
                points[ts] = value
            self._blocks.setdefault(block_start(ts), set()).add(sid)

        for _block, path in self._writer.segment_files():
            replay_segment(path, sink)

    # -- lookup ---------------------------------------------------------

    def series_matching(self, selector: Selector) -> List[Tuple[int, SeriesKey]]:
        with self._lock:
            if selector.name:
                candidates = sorted(self._by_name.get(selector.name, ()))
            else:
                candidates = self._dict.all_ids()
            out = []
            for sid in candidates:
                key = self._dict.key_of(sid)
                if selector.matches(key):
                    out.append((sid, key))
            return out

    def key_of(self, sid: int) -> SeriesKey:
        return self._dict.key_of(sid)

    def series_id(self, key: SeriesKey) -> Optional[int]:
        """Exact-identity lookup (no matcher semantics)."""
        return self._dict.get(key.name, key.labels)

    def series_meta(self, sid: int) -> dict:
        return self._dict.meta_of(sid)

    def all_series(self) -> List[Tuple[int, SeriesKey]]:
        with self._lock:
            return [(sid, self._dict.key_of(sid)) for sid in self._dict.all_ids()]

    def _sorted_points(self, sid: int) -> List[Tuple[int, float]]:
        with self._lock:
            cached = self._sorted.get(sid)
            if cached is None:
                cached = sorted(self._head.get(sid, {}).items())
                self._sorted[sid] = cached
            return cached

    def raw_points(self, sid: int, start: int, end: int) -> List[Tuple[int, float]]:
        """Time-sorted raw (timestamp, value) pairs with start <= t < end."""
        points = self._sorted_points(sid)
        lo = bisect.bisect_left(points, (start, -math.inf))
        hi = bisect.bisect_left(points, (end, -math.inf))
        return points[lo:hi]

    def raw_bounds(self, sid: int) -> Optional[Tuple[int, int]]:
        points = self._sorted_points(sid)
        if not points:
            return None
        return points[0][0], points[-1][0]

    # -- query ----------------------------------------------------------

    def query_range(
        self,
        selector: Selector,
        start: int,
        end: int,
        step: int,
        agg: str = "raw",
        q: Optional[float] = None,
    ) -> List[Tuple[SeriesKey, List[Tuple[int, float]]]]:
        """Bucketed aggregation over [start, end) at the given step.

        Buckets are floor((t - start) / step); aggregates use raw points
        when any exist in the bucket and fall back to rollups otherwise.
        Quantiles are only answerable from raw points. Empty buckets are
        omitted; series with no buckets at all are omitted.
        """
        if start >= end:
            raise InvalidRange(f"start {start} must be < end {end}")
        if agg not in AGGREGATIONS:
            raise InvalidRange(f"unknown aggregation {agg!r}")
        if agg != "raw" and step < 1000:
            raise InvalidRange("step must be >= 1000 ms for aggregated queries")
        if agg == "quantile" and (q is None or not 0.0 < q <= 1.0):
            raise InvalidRange("quantile aggregation needs q in (0, 1]")

        results: List[Tuple[SeriesKey, List[Tuple[int, float]]]] = []
        for sid, key in self.series_matching(selector):
            raw = self.raw_points(sid, start, end)
            if agg == "raw":
                if raw:
                    results.append((key, list(raw)))
                continue
            buckets: Dict[int, List[float]] = {}
            for ts, value in raw:
                buckets.setdefault((ts - start) // step, []).append(value)
            rollup_buckets = self._rollup_buckets(sid, start, end, step, skip=buckets)
            if agg == "quantile" and rollup_buckets:
                raise QuantileNeedsRaw(
                    "quantile requested over a horizon that has only rollups"
                )
            out: List[Tuple[int, float]] = []
            n_buckets = (end - start + step - 1) // step
            for b in range(n_buckets):
                if b in buckets:
                    out.append((start + b * step, _aggregate(buckets[b], agg, q)))
                elif b in rollup_buckets:
                    out.append((start + b * step, _aggregate_rollups(rollup_buckets[b], agg)))
            if out:
                results.append((key, out))
        results.sort(key=lambda pair: str(pair[0]))
        return results

    def _rollup_buckets(
        self, sid: int, start: int, end: int, step: int, skip: Dict[int, List[float]]
    ) -> Dict[int, List[RollupPoint]]:
        """Assign rollup points to query buckets lacking raw data.

        1-minute rollups are preferred; 1-hour fills buckets neither raw
        nor 1-minute data covers. A rollup lands in the bucket holding
        its window start, so steps should be multiples of the rollup
        resolution for exact results.
        """
        out: Dict[int, List[RollupPoint]] = {}
        claimed: Set[int] = set(skip)
        for res in (RES_1M, RES_1H):
            for point in self._rollups.points(res, sid, start, end):
                bucket = (point.window_start - start) // step
                if bucket in claimed:
                    continue
                out.setdefault(bucket, []).append(point)
            claimed |= set(out)
        return out

    # -- distillation ---------------------------------------------------

    def downsample(
        self, key: SeriesKey, resolution: int, window: Tuple[int, int]
    ) -> List[RollupPoint]:
        """Exact rollups over raw points, one per non-empty bucket."""
        start, end = window
        if start % resolution or end % resolution:
            raise UnalignedWindow(
                f"window ({start}, {end}) not aligned to resolution {resolution}"
            )
        sid = self._dict.get(key.name, key.labels)
        if sid is None:
            return []
        buckets: Dict[int, List[float]] = {}
        for ts, value in self.raw_points(sid, start, end):
            buckets.setdefault((ts - start) // resolution, []).append(value)
        return [
            rollup_from_values(start + b * resolution, resolution, values)
            for b, values in sorted(buckets.items())
        ]

    def downsample_from_rollups(
        self, sid: int, from_res: int, to_res: int, window: Tuple[int, int]
    ) -> List[RollupPoint]:
        """Re-aggregate a finer tier into a coarser one (associative merge)."""
        start, end = window
        if start % to_res or end % to_res:
            raise UnalignedWindow(f"window ({start}, {end}) not aligned to {to_res}")
        buckets: Dict[int, List[RollupPoint]] = {}
        for point in self._rollups.points(from_res, sid, start, end):
            buckets.setdefault((point.window_start - start) // to_res, []).append(point)
        return [
            merge_rollups(points, start + b * to_res, to_res)
            for b, points in sorted(buckets.items())
        ]

    def store_rollups(self, sid: int, resolution: int, points: Sequence[RollupPoint]) -> int:
        return self._rollups.put(resolution, sid, points)

    def rollup_points(self, resolution: int, sid: int, start: int, end: int) -> List[RollupPoint]:
        return self._rollups.points(resolution, sid, start, end)

    def watermark(self, resolution: int, sid: int) -> int:
        return self._rollups.watermark(resolution, sid)

    def set_watermark(self, resolution: int, sid: int, until_ms: int) -> None:
        self._rollups.set_watermark(resolution, sid, until_ms)

    # -- retention ------------------------------------------------------

    def enforce_retention(self, now_ms: Optional[int] = None) -> Dict[str, int]:
        """Clear aged raw points and rollups; idempotent.

        Raw points past retention are only removed once the 1-minute
        distill watermark covers them; otherwise a retention-blocked
        event is emitted and the points stay. Segment files vanish when
        their whole block is aged and distilled.
        """
        now = self.clock.now_ms() if now_ms is None else now_ms
        raw_cutoff = now - self.policy.raw_retention_ms
        raw_deleted = 0
        with self._lock:
            for sid, points in self._head.items():
                mark = self._rollups.watermark(RES_1M, sid)
                aged = [ts for ts in points if ts < raw_cutoff]
                removable = [ts for ts in aged if ts < mark]
                for ts in removable:
                    del points[ts]
                if removable:
                    self._sorted.pop(sid, None)
                    raw_deleted += len(removable)
                blocked = len(aged) - len(removable)
                if blocked:
                    self.registry.inc("tsdb_retention_blocked_total", blocked)
                    if self.event_sink is not None:
                        self.event_sink(
                            MetricSample(
                                name="tsdb_retention_blocked",
                                labels={"series": str(self._dict.key_of(sid))},
                                value=float(blocked),
                                timestamp=now,
                                unit=canonical_unit(Canonical.COUNT),
                                kind=SampleKind.EVENT,
                            )
                        )
            for block in sorted({b for b, _ in self._writer.segment_files()}):
                if block + BLOCK_MS > raw_cutoff:
                    continue
                sids = self._blocks.get(block, set())
                if all(self._rollups.watermark(RES_1M, sid) >= block + BLOCK_MS for sid in sids):
                    self._writer.remove_block(block)
                    self._blocks.pop(block, None)

            marks_1h = {
                sid: self._rollups.watermark(RES_1H, sid)
                for sid in self._rollups.series_ids(RES_1M)
            }
            rollups_deleted = self._rollups.delete_older_than(
                RES_1M, now - self.policy.rollup_1m_retention_ms, marks_1h
            )
            rollups_deleted += self._rollups.delete_older_than(
                RES_1H, now - self.policy.rollup_1h_retention_ms, None
            )
        return {"raw_deleted": raw_deleted, "rollups_deleted": rollups_deleted}

    def raw_point_count(self) -> int:
        with self._lock:
            return sum(len(points) for points in self._head.values())

    def close(self) -> None:
        self._writer.close()
        self._rollups.close()
        self._dict.close()


def _aggregate(values: List[float], agg: str, q: Optional[float]) -> float:
    if agg == "mean":
        return sum(values) / len(values)
    if agg == "min":
        return min(values)
    if agg == "max":
        return max(values)
    if agg == "sum":
        return sum(values)
    if agg == "count":
        return float(len(values))
    if agg == "quantile":
        return quantile(values, q)  # type: ignore[arg-type]
    raise InvalidRange(f"unknown aggregation {agg!r}")


def _aggregate_rollups(points: List[RollupPoint], agg: str) -> float:
    total_count = sum(p.count for p in points)
    if agg == "mean":
        return sum(p.sum for p in points) / total_count
    if agg == "min":
        return min(p.min for p in points)
    if agg == "max":
        return max(p.max for p in points)
    if agg == "sum":
        return sum(p.sum for p in points)
    if agg == "count":
        return float(total_count)
    raise InvalidRange(f"aggregation {agg!r} cannot be answered from rollups")
