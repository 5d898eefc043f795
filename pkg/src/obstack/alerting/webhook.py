"""Webhook delivery with retry, and at-most-once per episode-state dedup.

The notification body is bit-exact JSON with the keys fingerprint (16
hex chars), rule_id, state, value, labels, timestamp_ms. Retries back
off 1 s / 2 s / 4 s; after three failures the notification is dropped
and counted, keeping accountability without unbounded queues.
"""

from __future__ import annotations

import enum
import json
import logging
import threading
import time
from typing import Callable, Optional, Set, Tuple

from obstack.core.metrics import MetricsRegistry

logger = logging.getLogger(__name__)

RETRY_BACKOFF_SECONDS = (1.0, 2.0, 4.0)


class DeliveryResult(str, enum.Enum):
    DELIVERED = "delivered"
    SUPPRESSED = "suppressed"
    DROPPED = "dropped"


def notification_body(
    fingerprint: int, rule_id: str, state: str, value: float, labels: dict, timestamp_ms: int
) -> str:
    return json.dumps(
        {
            "fingerprint": format(fingerprint, "016x"),
            "rule_id": rule_id,
            "state": state,
            "value": value,
            "labels": labels,
            "timestamp_ms": timestamp_ms,
        }
    )


class WebhookDeliverer:
    def __init__(
        self,
        registry: Optional[MetricsRegistry] = None,
        poster: Optional[Callable[[str, str], bool]] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.registry = registry or MetricsRegistry()
        self._poster = poster or self._http_post
        self._sleep = sleep
        self._ledger: Set[Tuple[int, int, str]] = set()
        self._lock = threading.Lock()

    def deliver(
        self,
        url: str,
        fingerprint: int,
        episode: int,
        rule_id: str,
        state: str,
        value: float,
        labels: dict,
        timestamp_ms: int,
    ) -> DeliveryResult:
        """POST one notification, at most once per (fingerprint, episode,
        state). The ledger slot is claimed before posting and released on
        failure, so concurrent deliveries of the same episode-state
        cannot both go out."""
        ledger_key = (fingerprint, episode, state)
        with self._lock:
            if ledger_key in self._ledger:
                return DeliveryResult.SUPPRESSED
            self._ledger.add(ledger_key)
        body = notification_body(fingerprint, rule_id, state, value, labels, timestamp_ms)
        for backoff in (0.0,) + RETRY_BACKOFF_SECONDS:
            if backoff:
                self._sleep(backoff)
            if self._poster(url, body):
                self.registry.inc("alert_notifications_sent_total")
                return DeliveryResult.DELIVERED
        with self._lock:
            self._ledger.discard(ledger_key)
        self.registry.inc("alert_notifications_dropped_total")
        logger.warning("webhook %s dropped after retries (rule %s)", url, rule_id)
        return DeliveryResult.DROPPED

    @staticmethod
    def _http_post(url: str, body: str) -> bool:
        import httpx

        try:
            response = httpx.post(
                url, content=body, headers={"content-type": "application/json"}, timeout=10.0
            )
            return response.status_code < 400
        except Exception:
            return False
