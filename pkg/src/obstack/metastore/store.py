"""Single-file embedded key-value log with periodic compaction.

Every mutation appends one JSON line ``{op, space, key, value}``; state is
rebuilt by replay on open. When the log accumulates enough dead records a
compaction rewrites only the live ones. Writes are serialized; reads
return snapshots taken under the same lock.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Dict, List, Optional, Tuple

from obstack.core.clock import Clock
from obstack.core.errors import InvalidRange, ObstackError
from obstack.core.model import MetricSample
from obstack.core.selector import Selector
from obstack.metastore.records import EntityRecord, EventRecord, SummaryRecord

COMPACT_MIN_OPS = 1024


class MetastoreFull(ObstackError):
    """Record-count guard tripped."""


class Metastore:
    def __init__(
        self,
        data_dir: str,
        clock: Optional[Clock] = None,
        max_records: int = 1_000_000,
    ) -> None:
        self.clock = clock or Clock()
        self.max_records = max_records
        self._lock = threading.Lock()
        os.makedirs(data_dir, exist_ok=True)
        self._path = os.path.join(data_dir, "meta.jsonl")
        # space -> key -> value dict
        self._spaces: Dict[str, Dict[str, dict]] = {}
        self._ops_written = 0
        self._event_seq = 0
        if os.path.exists(self._path):
            self._replay()
        self._fh = open(self._path, "a", encoding="utf-8")

    def _replay(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # truncated tail from a crash
                self._ops_written += 1
                space = self._spaces.setdefault(rec["space"], {})
                if rec["op"] == "put":
                    space[rec["key"]] = rec["value"]
                elif rec["op"] == "del":
                    space.pop(rec["key"], None)
        events = self._spaces.get("event", {})
        if events:
            self._event_seq = max(int(k) for k in events)

    def _live_count(self) -> int:
        return sum(len(space) for space in self._spaces.values())

    def _append(self, op: str, space: str, key: str, value: Optional[dict] = None) -> None:
        rec = {"op": op, "space": space, "key": key}
        if value is not None:
            rec["value"] = value
        self._fh.write(json.dumps(rec) + "\n")
        self._fh.flush()
        self._ops_written += 1
        if self._ops_written > COMPACT_MIN_OPS and self._ops_written > 4 * self._live_count():
            self._compact()

    def _compact(self) -> None:
        tmp = self._path + ".tmp"
        self._fh.close()
        ops = 0
        with open(tmp, "w", encoding="utf-8") as fh:
            for space in sorted(self._spaces):
                for key in sorted(self._spaces[space]):
                    fh.write(
                        json.dumps(
                            {"op": "put", "space": space, "key": key, "value": self._spaces[space][key]}
                        )
                        + "\n"
                    )
                    ops += 1
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._path)
        self._fh = open(self._path, "a", encoding="utf-8")
        self._ops_written = ops

    def _put(self, space: str, key: str, value: dict) -> None:
        if self._live_count() >= self.max_records and key not in self._spaces.get(space, {}):
            raise MetastoreFull(f"record limit {self.max_records} reached")
        self._spaces.setdefault(space, {})[key] = value
        self._append("put", space, key, value)

    # -- generic system metadata (rules, dashboards, ...) ---------------

    def put(self, space: str, key: str, value: dict) -> None:
        with self._lock:
            self._put(space, key, value)

    def get(self, space: str, key: str) -> Optional[dict]:
        with self._lock:
            value = self._spaces.get(space, {}).get(key)
            return None if value is None else dict(value)

    def delete(self, space: str, key: str) -> bool:
        with self._lock:
            space_map = self._spaces.get(space, {})
            if key not in space_map:
                return False
            del space_map[key]
            self._append("del", space, key)
            return True

    def list_space(self, space: str) -> Dict[str, dict]:
        with self._lock:
            return {k: dict(v) for k, v in self._spaces.get(space, {}).items()}

    # -- entities --------------------------------------------------------

    def upsert_entity(self, record: EntityRecord) -> EntityRecord:
        """Insert or overwrite by (kind, entity_id); timestamps are owned
        by the store: created_at survives overwrites, updated_at is now."""
        if not record.entity_id:
            raise ValueError("entity_id must be non-empty")
        if not record.kind:
            raise ValueError("entity kind must be non-empty")
        now = self.clock.now_ms()
        key = f"{record.kind}\x00{record.entity_id}"
        with self._lock:
            existing = self._spaces.get("entity", {}).get(key)
            created = existing["created_at"] if existing else now
            stored = {
                "entity_id": record.entity_id,
                "kind": record.kind,
                "attributes": dict(record.attributes),
                "created_at": created,
                "updated_at": now,
            }
            self._put("entity", key, stored)
        return EntityRecord(**stored)

    def get_entity(self, kind: str, entity_id: str) -> Optional[EntityRecord]:
        value = self.get("entity", f"{kind}\x00{entity_id}")
        return None if value is None else EntityRecord(**value)

    def list_entities(self, kind: Optional[str] = None) -> List[EntityRecord]:
        with self._lock:
            rows = [EntityRecord(**v) for v in self._spaces.get("entity", {}).values()]
        if kind is not None:
            rows = [r for r in rows if r.kind == kind]
        return sorted(rows, key=lambda r: (r.kind, r.entity_id))

    # -- summaries --------------------------------------------------------

    def store_summary(self, summary: SummaryRecord) -> None:
        summary.verify()
        stored = {
            "summary_id": summary.summary_id,
            "selector": summary.selector,
            "window": list(summary.window),
            "stats": dict(summary.stats),
            "produced_at": summary.produced_at,
        }
        self.put("summary", summary.summary_id, stored)

    def query_summaries(
        self,
        selector_text: Optional[str] = None,
        window: Optional[Tuple[int, int]] = None,
    ) -> List[SummaryRecord]:
        """Summaries matching the exact selector text (if given) whose
        windows overlap the given half-open window (if given)."""
        if window is not None and window[0] >= window[1]:
            raise InvalidRange(f"bad summary window {window}")
        out = []
        for value in self.list_space("summary").values():
            if selector_text is not None and value["selector"] != selector_text:
                continue
            w_start, w_end = value["window"]
            if window is not None and not (w_start < window[1] and window[0] < w_end):
                continue
            record = SummaryRecord(
                summary_id=value["summary_id"],
                selector=value["selector"],
                window=(w_start, w_end),
                stats=dict(value["stats"]),
                produced_at=value["produced_at"],
            )
            record.verify()  # corruption check on read
            out.append(record)
        return sorted(out, key=lambda r: (r.window[0], r.selector, r.summary_id))

    # -- events ------------------------------------------------------------

    def append_event(self, sample: MetricSample) -> EventRecord:
        """Store one event-kind sample routed here by the gateway."""
        with self._lock:
            self._event_seq += 1
            record = EventRecord(
                event_id=self._event_seq,
                name=sample.name,
                attributes=dict(sample.labels),
                value=sample.value,
                timestamp=sample.timestamp,
            )
            self._put(
                "event",
                str(record.event_id),
                {
                    "name": record.name,
                    "attributes": record.attributes,
                    "value": record.value,
                    "timestamp": record.timestamp,
                },
            )
        return record

    def query_events(self, selector: Selector, window: Tuple[int, int]) -> List[EventRecord]:
        """Time-sorted events whose name and attributes match the selector
        and whose timestamp lies in the half-open window."""
        start, end = window
        if start >= end:
            raise InvalidRange(f"bad event window {window}")
        out = []
        for key, value in self.list_space("event").items():
            if selector.name and value["name"] != selector.name:
                continue
            if not selector.matches_labels(value["attributes"]):
                continue
            if not start <= value["timestamp"] < end:
                continue
            out.append(
                EventRecord(
                    event_id=int(key),
                    name=value["name"],
                    attributes=dict(value["attributes"]),
                    value=value["value"],
                    timestamp=value["timestamp"],
                )
            )
        return sorted(out, key=lambda r: (r.timestamp, r.event_id))

    # -- alert history -----------------------------------------------------

    def append_alert_history(self, row: dict) -> None:
        with self._lock:
            seq = len(self._spaces.get("alert_history", {})) + 1
            self._put("alert_history", f"{seq:012d}", row)

    def list_alert_history(self) -> List[dict]:
        space = self.list_space("alert_history")
        return [space[k] for k in sorted(space)]

    def close(self) -> None:
        with self._lock:
            self._fh.close()
