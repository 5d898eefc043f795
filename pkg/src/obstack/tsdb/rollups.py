"""Rollup points: compact distilled summaries of raw windows.

Count/sum/min/max/sum-of-squares are kept because they re-aggregate
associatively (1-hour rollups built from 1-minute rollups equal 1-hour
rollups built from raw) and keep mean and stddev computable after the
raw points are cleared.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence

RES_1M = 60_000
RES_1H = 3_600_000


@dataclass(frozen=True)
class RollupPoint:
    window_start: int
    window_len: int
    count: int
    sum: float
    min: float
    max: float
    sum_sq: float

    def mean(self) -> float:
        return self.sum / self.count

    def variance(self) -> float:
        return max(0.0, self.sum_sq / self.count - self.mean() ** 2)


def rollup_from_values(window_start: int, window_len: int, values: Sequence[float]) -> RollupPoint:
    if not values:
        raise ValueError("rollup needs at least one value")
    return RollupPoint(
        window_start=window_start,
        window_len=window_len,
        count=len(values),
        sum=sum(values),
        min=min(values),
        max=max(values),
        sum_sq=sum(v * v for v in values),
    )


def merge_rollups(points: Sequence[RollupPoint], window_start: int, window_len: int) -> RollupPoint:
    """Re-aggregate finer rollups into one coarser window."""
    if not points:
        raise ValueError("cannot merge zero rollups")
    return RollupPoint(
        window_start=window_start,
        window_len=window_len,
        count=sum(p.count for p in points),
        sum=sum(p.sum for p in points),
        min=min(p.min for p in points),
        max=max(p.max for p in points),
        sum_sq=sum(p.sum_sq for p in points),
    )


class RollupStore:
    """Durable store for rollup tiers plus per-series distill watermarks.

    Backed by one append-only JSON-lines log per resolution; retention
    deletions trigger a compacting rewrite. The watermark of a series is
    the exclusive end of its last distilled window: retention must never
    clear raw data at or past it.
    """

    def __init__(self, directory: str, resolutions: Iterable[int] = (RES_1M, RES_1H)) -> None:
        self._dir = directory
        self._lock = threading.Lock()
        self._resolutions = tuple(resolutions)
        # resolution -> series_id -> {window_start: RollupPoint}
        self._points: Dict[int, Dict[int, Dict[int, RollupPoint]]] = {
            r: {} for r in self._resolutions
        }
        # resolution -> series_id -> distilled-until (ms, exclusive)
        self._watermarks: Dict[int, Dict[int, int]] = {r: {} for r in self._resolutions}
        os.makedirs(directory, exist_ok=True)
        self._files = {}
        for res in self._resolutions:
            path = self._path(res)
            if os.path.exists(path):
                self._replay(res, path)
            self._files[res] = open(path, "a", encoding="utf-8")

    def _path(self, res: int) -> str:
        return os.path.join(self._dir, f"rollups_{res}.jsonl")

    def _replay(self, res: int, path: str) -> None:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # truncated tail from a crash; ignore the rest
                if rec.get("t") == "w":
                    marks = self._watermarks[res]
                    sid = rec["sid"]
                    marks[sid] = max(marks.get(sid, 0), rec["until"])
                elif rec.get("t") == "r":
                    self._points[res].setdefault(rec["sid"], {})[rec["ws"]] = RollupPoint(
                        rec["ws"], rec["len"], rec["c"], rec["s"], rec["mn"], rec["mx"], rec["ss"]
                    )

    def put(self, res: int, series_id: int, points: Sequence[RollupPoint]) -> int:
        """Store points and persist them; returns how many were new."""
        new = 0
        with self._lock:
            store = self._points[res].setdefault(series_id, {})
            fh = self._files[res]
            for p in points:
                if p.window_start in store:
                    continue
                store[p.window_start] = p
                fh.write(
                    json.dumps(
                        {
                            "t": "r",
                            "sid": series_id,
                            "ws": p.window_start,
                            "len": p.window_len,
                            "c": p.count,
                            "s": p.sum,
                            "mn": p.min,
                            "mx": p.max,
                            "ss": p.sum_sq,
                        }
                    )
                    + "\n"
                )
                new += 1
            fh.flush()
            os.fsync(fh.fileno())
        return new

    def set_watermark(self, res: int, series_id: int, until_ms: int) -> None:
        with self._lock:
            marks = self._watermarks[res]
            if until_ms <= marks.get(series_id, 0):
                return
            marks[series_id] = until_ms
            fh = self._files[res]
            fh.write(json.dumps({"t": "w", "sid": series_id, "until": until_ms}) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def watermark(self, res: int, series_id: int) -> int:
        with self._lock:
            return self._watermarks[res].get(series_id, 0)

    def points(self, res: int, series_id: int, start: int, end: int) -> List[RollupPoint]:
        with self._lock:
            store = self._points[res].get(series_id, {})
            return [p for ws, p in sorted(store.items()) if start <= ws < end]

    def series_ids(self, res: int) -> List[int]:
        with self._lock:
            return sorted(self._points[res])

    def delete_older_than(
        self, res: int, cutoff_ms: int, keep_from: Dict[int, int] | None
    ) -> int:
        """Drop rollups whose window ends before the cutoff.

        ``keep_from[sid]`` holds a floor (ms): windows ending past it are
        kept even if aged, mirroring the raw-side rule that data is never
        cleared before the next tier has distilled it. Pass None for the
        top tier, which has no finer consumer.
        """
        deleted = 0
        with self._lock:
            for sid, store in self._points[res].items():
                floor = None if keep_from is None else keep_from.get(sid, 0)
                dead = [
                    ws
                    for ws, p in store.items()
                    if ws + p.window_len <= cutoff_ms
                    and (floor is None or ws + p.window_len <= floor)
                ]
                for ws in dead:
                    del store[ws]
                deleted += len(dead)
            if deleted:
                self._rewrite(res)
        return deleted

    def _rewrite(self, res: int) -> None:
        path = self._path(res)
        tmp = path + ".tmp"
        self._files[res].close()
        with open(tmp, "w", encoding="utf-8") as fh:
            for sid, until in sorted(self._watermarks[res].items()):
                fh.write(json.dumps({"t": "w", "sid": sid, "until": until}) + "\n")
            for sid, store in sorted(self._points[res].items()):
                for ws, p in sorted(store.items()):
                    fh.write(
                        json.dumps(
                            {
                                "t": "r",
                                "sid": sid,
                                "ws": p.window_start,
                                "len": p.window_len,
                                "c": p.count,
                                "s": p.sum,
                                "mn": p.min,
                                "mx": p.max,
                                "ss": p.sum_sq,
                            }
                        )
                        + "\n"
                    )
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
        self._files[res] = open(path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            for fh in self._files.values():
                fh.close()
