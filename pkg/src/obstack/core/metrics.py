"""Tiny in-process registry for the stack's own counters and gauges.

Components record their operational metrics (sanitized labels, rejected
lines, dropped webhooks, ...) here; the API server renders the registry
at GET /metrics in the exposition format, so the stack can observe itself
with the same pipeline it offers to others.
"""

from __future__ import annotations

import threading
from typing import Dict, Mapping, Tuple

from obstack.core.model import Canonical, MetricSample, SampleKind
from obstack.core.units import canonical_unit


class MetricsRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: Dict[Tuple[str, Tuple[Tuple[str, str], ...]], float] = {}
        self._gauges: Dict[Tuple[str, Tuple[Tuple[str, str], ...]], float] = {}

    def inc(self, name: str, amount: float = 1.0, labels: Mapping[str, str] | None = None) -> None:
        key = (name, tuple(sorted((labels or {}).items())))
        with self._lock:
            self._counters[key] = self._counters.get(key, 0.0) + amount

    def set_gauge(self, name: str, value: float, labels: Mapping[str, str] | None = None) -> None:
        key = (name, tuple(sorted((labels or {}).items())))
        with self._lock:
            self._gauges[key] = value

    def value(self, name: str, labels: Mapping[str, str] | None = None) -> float:
        key = (name, tuple(sorted((labels or {}).items())))
        with self._lock:
            if key in self._counters:
                return self._counters[key]
            return self._gauges.get(key, 0.0)

    def samples(self, now_ms: int) -> list[MetricSample]:
        with self._lock:
            counters = dict(self._counters)
            gauges = dict(self._gauges)
        out = []
        for (name, labels), value in sorted(counters.items()):
            out.append(
                MetricSample(
                    name=name,
                    labels=dict(labels),
                    value=value,
                    timestamp=now_ms,
                    unit=canonical_unit(Canonical.COUNT),
                    kind=SampleKind.COUNTER,
                )
            )
        for (name, labels), value in sorted(gauges.items()):
            out.append(
                MetricSample(
                    name=name,
                    labels=dict(labels),
                    value=value,
                    timestamp=now_ms,
                    unit=canonical_unit(Canonical.NONE),
                    kind=SampleKind.GAUGE,
                )
            )
        return out
