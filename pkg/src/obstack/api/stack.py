"""Wiring: one Stack object owns the embedded stores and engines.

The stores have no network interface of their own, so every component
that touches them runs in the server process: the gateway's ingest path,
the analytics cycle, the alert evaluator, and the query API all share
one Stack.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from obstack.alerting import AlertEngine, WebhookDeliverer
from obstack.analytics import AnalyticsEngine, AnomalyParams
from obstack.api.templates import BUILTIN_TEMPLATES
from obstack.core.clock import Clock, SettableClock
from obstack.core.metrics import MetricsRegistry
from obstack.gateway import DEFAULT_DENYLIST, Gateway, ScrapeTarget
from obstack.metastore import Metastore
from obstack.tsdb import RetentionPolicy, Tsdb

HOUR_MS = 3_600_000
DAY_MS = 24 * HOUR_MS


@dataclass
class StackSettings:
    data_dir: str = "./data"
    listen: str = "127.0.0.1:8080"
    test_mode: bool = False
    raw_retention_hours: float = 24.0
    rollup_1m_retention_days: float = 7.0
    rollup_1h_retention_days: float = 90.0
    max_series: int = 1_000_000
    shards: int = 4
    label_denylist: List[str] = field(default_factory=lambda: sorted(DEFAULT_DENYLIST))
    scrape_targets: List[ScrapeTarget] = field(default_factory=list)
    anomaly_window_points: int = 60
    anomaly_threshold_k: float = 3.5
    cycle_interval_seconds: float = 300.0
    default_eval_interval_seconds: float = 15.0
    ui_dir: Optional[str] = None
    components: Dict[str, bool] = field(
        default_factory=lambda: {
            "gateway": True,
            "tsdb": True,
            "metastore": True,
            "analytics": True,
            "alerting": True,
            "api": True,
            "dashboard": True,
        }
    )


class Stack:
    def __init__(self, settings: Optional[StackSettings] = None) -> None:
        self.settings = settings or StackSettings()
        self.clock: Clock = SettableClock() if self.settings.test_mode else Clock()
        self.registry = MetricsRegistry()
        policy = RetentionPolicy(
            raw_retention_ms=int(self.settings.raw_retention_hours * HOUR_MS),
            rollup_1m_retention_ms=int(self.settings.rollup_1m_retention_days * DAY_MS),
            rollup_1h_retention_ms=int(self.settings.rollup_1h_retention_days * DAY_MS),
        )
        self.metastore = Metastore(f"{self.settings.data_dir}/metastore", clock=self.clock)
        self.tsdb = Tsdb(
            f"{self.settings.data_dir}/tsdb",
            policy=policy,
            clock=self.clock,
            max_series=self.settings.max_series,
            shards=self.settings.shards,
            registry=self.registry,
            event_sink=self.metastore.append_event,
        )
        self.gateway = Gateway(
            self.tsdb,
            self.metastore,
            clock=self.clock,
            denylist=self.settings.label_denylist,
            registry=self.registry,
            scrape_targets=self.settings.scrape_targets,
        )
        self.analytics = AnalyticsEngine(
            self.tsdb,
            self.metastore,
            clock=self.clock,
            params=AnomalyParams(
                window_points=self.settings.anomaly_window_points,
                threshold_k=self.settings.anomaly_threshold_k,
            ),
        )
        self.alerts = AlertEngine(
            self.tsdb,
            self.analytics,
            metastore=self.metastore,
            clock=self.clock,
            registry=self.registry,
            deliverer=WebhookDeliverer(registry=self.registry),
        )
        self._seed_templates()
        self._stop = threading.Event()
        self._threads: List[threading.Thread] = []

    def _seed_templates(self) -> None:
        existing = self.metastore.list_space("dashboard")
        for template_id, doc in BUILTIN_TEMPLATES.items():
            if template_id not in existing:
                self.metastore.put("dashboard", template_id, doc)

    # -- background maintenance (serve mode only) -------------------------

    def start_background(self) -> None:
        def loop(interval: float, task) -> None:
            while not self._stop.is_set():
                self._stop.wait(interval)
                if self._stop.is_set():
                    return
                try:
                    task()
                except Exception:  # survive any background failure
                    import logging

                    logging.getLogger(__name__).exception("background task failed")

        jobs = []
        if self.settings.components.get("analytics", True):
            jobs.append((self.settings.cycle_interval_seconds, lambda: self.analytics.distill_cycle()))
        if self.settings.components.get("alerting", True):
            jobs.append((1.0, lambda: self.alerts.evaluate_due()))
        if self.settings.components.get("gateway", True):
            for target in self.gateway.scrape_targets:
                jobs.append(
                    (float(target.interval_seconds), lambda t=target: self.gateway.scrape_once(t))
                )
        for interval, task in jobs:
            thread = threading.Thread(target=loop, args=(interval, task), daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=2)
        self.tsdb.close()
        self.metastore.close()
