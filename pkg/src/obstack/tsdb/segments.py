"""On-disk layout: append-only binary segments plus a series dictionary.

Segment record format (bit-exact, little-endian): series-id as 8-byte
unsigned, timestamp-ms as 8-byte signed, value as 8-byte float. One
segment file per two-hour block per shard; recovery replays segments in
name order and tolerates a truncated tail record from a crash.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from typing import Callable, Dict, Iterator, List, Tuple

from obstack.core.model import SeriesKey

RECORD = struct.Struct("<Qqd")
BLOCK_MS = 2 * 3_600_000


def block_start(ts_ms: int) -> int:
    return (ts_ms // BLOCK_MS) * BLOCK_MS


class SeriesDictionary:
    """Append-only mapping of series identity to a stable integer id."""

    def __init__(self, path: str) -> None:
        self._path = path
        self._lock = threading.Lock()
        self._by_key: Dict[Tuple[str, Tuple[Tuple[str, str], ...]], int] = {}
        self._by_id: Dict[int, SeriesKey] = {}
        self._meta: Dict[int, dict] = {}
        self._next_id = 1
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        break
                    labels = tuple((k, v) for k, v in rec["labels"])
                    key = SeriesKey(rec["name"], labels)
                    sid = rec["id"]
                    self._by_key[(key.name, labels)] = sid
                    self._by_id[sid] = key
                    self._meta[sid] = {"unit": rec.get("unit", "none"), "kind": rec.get("kind", "gauge")}
                    self._next_id = max(self._next_id, sid + 1)
        self._fh = open(path, "a", encoding="utf-8")

    def __len__(self) -> int:
        with self._lock:
            return len(self._by_id)

    def get(self, name: str, labels: Tuple[Tuple[str, str], ...]) -> int | None:
        with self._lock:
            return self._by_key.get((name, labels))

    def get_or_create(
        self, name: str, labels: Tuple[Tuple[str, str], ...], unit: str, kind: str
    ) -> Tuple[int, bool]:
        with self._lock:
            sid = self._by_key.get((name, labels))
            if sid is not None:
                return sid, False
            sid = self._next_id
            self._next_id += 1
            key = SeriesKey(name, labels)
            self._by_key[(name, labels)] = sid
            self._by_id[sid] = key
            self._meta[sid] = {"unit": unit, "kind": kind}
            self._fh.write(
                json.dumps(
                    {"id": sid, "name": name, "labels": [list(p) for p in labels], "unit": unit, "kind": kind}
                )
                + "\n"
            )
            self._fh.flush()
            return sid, True

    def key_of(self, sid: int) -> SeriesKey:
        with self._lock:
            return self._by_id[sid]

    def meta_of(self, sid: int) -> dict:
        with self._lock:
            return dict(self._meta[sid])

    def all_ids(self) -> List[int]:
        with self._lock:
            return sorted(self._by_id)

    def close(self) -> None:
        self._fh.close()


class SegmentWriter:
    """Routes records into per-shard, per-block append-only files."""

    def __init__(self, directory: str, shards: int) -> None:
        self._dir = directory
        self._shards = shards
        self._lock = threading.Lock()
        self._open: Dict[Tuple[int, int], object] = {}
        for shard in range(shards):
            os.makedirs(os.path.join(directory, f"shard-{shard}"), exist_ok=True)

    def shard_of(self, series_id: int) -> int:
        return series_id % self._shards

    def _segment_path(self, shard: int, block: int) -> str:
        return os.path.join(self._dir, f"shard-{shard}", f"{block:016d}.seg")

    def append(self, series_id: int, ts_ms: int, value: float) -> None:
        shard = self.shard_of(series_id)
        block = block_start(ts_ms)
        with self._lock:
            fh = self._open.get((shard, block))
            if fh is None:
                fh = open(self._segment_path(shard, block), "ab")
                self._open[(shard, block)] = fh
            fh.write(RECORD.pack(series_id, ts_ms, value))

    def flush(self) -> None:
        with self._lock:
            for fh in self._open.values():
                fh.flush()

    def segment_files(self) -> List[Tuple[int, str]]:
        """All (block_start, path) pairs on disk, ordered by block then shard."""
        out = []
        for shard in range(self._shards):
            shard_dir = os.path.join(self._dir, f"shard-{shard}")
            for fname in os.listdir(shard_dir):
                if fname.endswith(".seg"):
                    out.append((int(fname[:-4]), os.path.join(shard_dir, fname)))
        return sorted(out)

    def remove_block(self, block: int) -> None:
        with self._lock:
            for shard in range(self._shards):
                fh = self._open.pop((shard, block), None)
                if fh is not None:
                    fh.close()
                path = self._segment_path(shard, block)
                if os.path.exists(path):
                    os.remove(path)

    def close(self) -> None:
        with self._lock:
            for fh in self._open.values():
                fh.close()
            self._open.clear()


def replay_segment(path: str, sink: Callable[[int, int, float], None]) -> int:
    """Feed every intact record of one segment file into ``sink``.

    A trailing partial record (crash mid-write) is ignored. Returns the
    number of records replayed.
    """
    count = 0
    with open(path, "rb") as fh:
        data = fh.read()
    usable = len(data) - (len(data) % RECORD.size)
    for offset in range(0, usable, RECORD.size):
        sid, ts, value = RECORD.unpack_from(data, offset)
        sink(sid, ts, value)
        count += 1
    return count
