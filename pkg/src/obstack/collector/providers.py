"""Snapshot providers abstract the OS away from the sampling loop.

PsutilProvider reads the live machine; ReplayProvider replays a recorded
JSON-lines file so every energy and sampling code path is testable
without hardware counters.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass
from typing import Dict, Iterator, Optional

from obstack.core.clock import Clock
from obstack.core.errors import ObstackError


class SourceUnavailable(ObstackError):
    """Snapshot provider failed; the agent logs and skips the tick."""


@dataclass(frozen=True)
class ResourceSnapshot:
    """One reading of machine and process resource usage.

    cpu_utilization is whole-host, in [0, n_cores] (1.0 = one full core);
    process_cpu_seconds is a cumulative counter for the agent's process
    tree and must be non-decreasing within one process lifetime.
    """

    cpu_utilization: float
    memory_used: float
    memory_total: float
    process_cpu_seconds: float
    timestamp: int
    n_cores: int = 1
    host: str = ""

    def __post_init__(self) -> None:
        if self.memory_used > self.memory_total:
            raise ValueError("memory_used cannot exceed memory_total")
        if self.n_cores < 1:
            raise ValueError("n_cores must be >= 1")


class PsutilProvider:
    """Live machine readings via psutil."""

    def __init__(self, clock: Optional[Clock] = None, host: Optional[str] = None) -> None:
        import psutil

        self._psutil = psutil
        self._process = psutil.Process()
        self.clock = clock or Clock()
        self.host = host or socket.gethostname()
        psutil.cpu_percent(interval=None)  # prime the sampler

    def snapshot(self) -> ResourceSnapshot:
        try:
            psutil = self._psutil
            n_cores = psutil.cpu_count(logical=True) or 1
            cpu = psutil.cpu_percent(interval=None) / 100.0 * n_cores
            mem = psutil.virtual_memory()
            times = self._process.cpu_times()
            return ResourceSnapshot(
                cpu_utilization=cpu,
                memory_used=float(mem.total - mem.available),
                memory_total=float(mem.total),
                process_cpu_seconds=times.user + times.system,
                timestamp=self.clock.now_ms(),
                n_cores=n_cores,
                host=self.host,
            )
        except Exception as exc:
            raise SourceUnavailable(str(exc)) from exc


class ReplayProvider:
    """File-backed provider: replays recorded snapshots in order.

    The file holds one JSON object per line with the ResourceSnapshot
    fields. Replay raises SourceUnavailable once exhausted (or on a
    malformed line), matching how a dead OS source behaves.
    """

    def __init__(self, path: str, host: str = "replay") -> None:
        self.host = host
        self._lines: Iterator[str] = iter(open(path, encoding="utf-8").read().splitlines())

    @staticmethod
    def record(snapshot: ResourceSnapshot) -> str:
        return json.dumps(
            {
                "cpu_utilization": snapshot.cpu_utilization,
                "memory_used": snapshot.memory_used,
                "memory_total": snapshot.memory_total,
                "process_cpu_seconds": snapshot.process_cpu_seconds,
                "timestamp": snapshot.timestamp,
                "n_cores": snapshot.n_cores,
                "host": snapshot.host,
            }
        )

    def snapshot(self) -> ResourceSnapshot:
        try:
            line = next(self._lines)
        except StopIteration:
            raise SourceUnavailable("replay exhausted") from None
        try:
            rec: Dict = json.loads(line)
            return ResourceSnapshot(
                cpu_utilization=rec["cpu_utilization"],
                memory_used=rec["memory_used"],
                memory_total=rec["memory_total"],
                process_cpu_seconds=rec["process_cpu_seconds"],
                timestamp=rec["timestamp"],
                n_cores=rec.get("n_cores", 1),
                host=rec.get("host", self.host),
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise SourceUnavailable(f"bad replay record: {exc}") from exc
