"""Clock abstraction so test-mode ingestion can compress time.

Every component that needs "now" (retention cutoffs, timestamp sanity
windows, alert evaluation) reads it from a shared Clock. In test mode the
scenario harness advances a SettableClock through the virtual-time header
honored by the ingest endpoint, so a one-minute scenario runs in
milliseconds of wall time.
"""

from __future__ import annotations

import threading
import time


class Clock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)


class SettableClock(Clock):
    """Clock that follows wall time until explicitly set, then holds."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._frozen_ms: int | None = None

    def now_ms(self) -> int:
        with self._lock:
            if self._frozen_ms is not None:
                return self._frozen_ms
        return super().now_ms()

    def set_ms(self, now_ms: int) -> None:
        with self._lock:
            self._frozen_ms = int(now_ms)

    def advance_ms(self, delta_ms: int) -> None:
        with self._lock:
            base = self._frozen_ms if self._frozen_ms is not None else int(time.time() * 1000)
            self._frozen_ms = base + int(delta_ms)
