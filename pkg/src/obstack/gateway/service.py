"""The gateway proper: accepts batches, repairs counters, routes records.

Gauges and counters land in the time-series database; events are sparse
contextual records and land in the metastore. Samples with timestamps
more than five minutes in the future or older than raw retention are
rejected so retention cannot be bypassed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from obstack.core.clock import Clock
from obstack.core.errors import ObstackError
from obstack.core.metrics import MetricsRegistry
from obstack.core.model import MetricSample, SampleKind
from obstack.gateway.counters import CounterState
from obstack.gateway.normalize import DEFAULT_DENYLIST, normalize_batch
from obstack.metastore import Metastore
from obstack.tsdb import Tsdb

logger = logging.getLogger(__name__)

FUTURE_SLACK_MS = 5 * 60 * 1000


class FutureTimestamp(ObstackError):
    """Sample timestamp is too far ahead of the gateway clock."""


@dataclass(frozen=True)
class ScrapeTarget:
    url: str
    interval_seconds: int = 15
    extra_labels: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.url:
            raise ValueError("scrape target url must be non-empty")
        if self.interval_seconds < 1:
            raise ValueError("scrape interval must be >= 1 s")


def route_record(sample: MetricSample) -> str:
    """Destination store for an accepted sample: "tsdb" or "metastore"."""
    if sample.kind is SampleKind.EVENT:
        return "metastore"
    return "tsdb"


class Gateway:
    def __init__(
        self,
        tsdb: Tsdb,
        metastore: Metastore,
        clock: Optional[Clock] = None,
        denylist=DEFAULT_DENYLIST,
        registry: Optional[MetricsRegistry] = None,
        scrape_targets: Optional[List[ScrapeTarget]] = None,
    ) -> None:
        self.tsdb = tsdb
        self.metastore = metastore
        self.clock = clock or Clock()
        self.denylist = frozenset(denylist)
        self.registry = registry or MetricsRegistry()
        self.counters = CounterState()
        self.scrape_targets = list(scrape_targets or [])

    def ingest(
        self, raw: str, source_labels: Optional[Mapping[str, str]] = None
    ) -> Tuple[int, List[Tuple[str, str]]]:
        """Normalize one push body and store every acceptable sample.

        Returns (accepted_count, rejects); per-line and per-sample errors
        are collected, never raised, so one bad producer cannot take a
        batch down with it.
        """
        samples, rejects = normalize_batch(raw, source_labels or {}, self.denylist, self.registry)
        accepted = 0
        now = self.clock.now_ms()
        for sample in samples:
            try:
                if sample.timestamp > now + FUTURE_SLACK_MS:
                    raise FutureTimestamp(
                        f"timestamp {sample.timestamp} more than 5 min ahead of {now}"
                    )
                if sample.kind is SampleKind.COUNTER:
                    adjusted = self.counters.adjust(sample.key(), sample.value)
                    if adjusted != sample.value:
                        sample = MetricSample(
                            name=sample.name,
                            labels=dict(sample.labels),
                            value=adjusted,
                            timestamp=sample.timestamp,
                            unit=sample.unit,
                            kind=sample.kind,
                        )
                if route_record(sample) == "metastore":
                    self.metastore.append_event(sample)
                else:
                    self.tsdb.append(sample)
                accepted += 1
            except ObstackError as exc:
                rejects.append((_sample_line(sample), type(exc).__name__))
        self.registry.inc("gateway_accepted_total", accepted)
        if rejects:
            self.registry.inc("gateway_rejected_total", len(rejects))
        return accepted, rejects

    def scrape_once(self, target: ScrapeTarget, body: Optional[str] = None) -> Tuple[int, list]:
        """Pull one target and ingest its body.

        ``body`` may be supplied directly (tests, replays); otherwise the
        target URL is fetched over HTTP. Failures are logged and counted,
        never raised: the scraper must survive flapping targets.
        """
        if body is None:
            import httpx

            try:
                response = httpx.get(target.url, timeout=10.0)
                response.raise_for_status()
                body = response.text
            except Exception as exc:
                logger.warning("scrape of %s failed: %s", target.url, exc)
                self.registry.inc("gateway_scrape_errors_total")
                return 0, []
        return self.ingest(body, target.extra_labels)


def _sample_line(sample: MetricSample) -> str:
    from obstack.core.wire import format_exposition_line

    return format_exposition_line(sample)
