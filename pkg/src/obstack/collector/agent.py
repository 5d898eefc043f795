"""The collection agent: periodic sampling, pull endpoint, push client.

Every batch carries the agent's own overhead series (CPU seconds and
samples emitted) so the observer effect is accounted for, never silently
disabled. The pull endpoint serves the latest batch; publishing swaps an
immutable rendered string, so concurrent readers never see a partial
batch.
"""

from __future__ import annotations

import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, List, Optional

from obstack.core.clock import Clock
from obstack.core.model import Canonical, MetricSample, SampleKind
from obstack.core.units import canonical_unit
from obstack.core.wire import format_exposition
from obstack.collector.power import EnergyMeter, PowerModel
from obstack.collector.providers import SourceUnavailable

logger = logging.getLogger(__name__)

PUSH_BACKOFF_SECONDS = (1.0, 2.0, 4.0)


def sample_resources(
    provider,
    emitted_before: int = 0,
    meter: Optional[EnergyMeter] = None,
    own_cpu_seconds: Optional[float] = None,
    dropped_batches: int = 0,
) -> List[MetricSample]:
    """One sampling tick: workload gauges/counters plus self-metering.

    Raises SourceUnavailable when the provider fails; the caller skips
    the tick. All samples share the snapshot's timestamp. Counter resets
    are not repaired here; that is the gateway's job.
    """
    snapshot = provider.snapshot()
    ts = snapshot.timestamp
    labels = {"host": snapshot.host or "unknown", "collector": "self"}

    def make(name, value, unit, kind):
        return MetricSample(name, dict(labels), value, ts, canonical_unit(unit), kind)

    samples = [
        make("cpu_utilization", snapshot.cpu_utilization, Canonical.RATIO, SampleKind.GAUGE),
        make("memory_used_bytes", snapshot.memory_used, Canonical.BYTES, SampleKind.GAUGE),
        make("process_cpu_seconds", snapshot.process_cpu_seconds, Canonical.SECONDS, SampleKind.COUNTER),
    ]
    if meter is not None:
        normalized = min(1.0, max(0.0, snapshot.cpu_utilization / snapshot.n_cores))
        joules = meter.observe(ts, normalized)
        samples.append(make("estimated_power_watts", meter.last_power_watts, Canonical.WATTS, SampleKind.GAUGE))
        samples.append(make("estimated_energy_joules", joules, Canonical.JOULES, SampleKind.COUNTER))

    overhead = own_cpu_seconds if own_cpu_seconds is not None else time.process_time()
    samples.append(make("collector_cpu_seconds", overhead, Canonical.SECONDS, SampleKind.COUNTER))
    samples.append(
        make("collector_dropped_total", float(dropped_batches), Canonical.COUNT, SampleKind.COUNTER)
    )
    samples.append(
        make(
            "collector_samples_total",
            float(emitted_before + len(samples) + 1),
            Canonical.COUNT,
            SampleKind.COUNTER,
        )
    )
    return samples


class CollectorAgent:
    def __init__(
        self,
        provider,
        interval_seconds: float = 5.0,
        power_model: Optional[PowerModel] = None,
        push_url: Optional[str] = None,
        clock: Optional[Clock] = None,
        poster: Optional[Callable[[str, str], bool]] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if not 1 <= interval_seconds <= 300:
            raise ValueError("interval_seconds must be within 1..300")
        self.provider = provider
        self.interval_seconds = interval_seconds
        self.meter = EnergyMeter(power_model) if power_model else None
        self.push_url = push_url
        self.clock = clock or Clock()
        self._poster = poster or self._http_post
        self._sleep = sleep
        self._emitted = 0
        self._dropped = 0
        self._latest = ""  # published by replacement, read without locking
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._server: Optional[ThreadingHTTPServer] = None

    # -- one tick ---------------------------------------------------------

    def tick(self) -> List[MetricSample]:
        """Sample, publish, and push one batch; never raises."""
        try:
            samples = sample_resources(
                self.provider, self._emitted, self.meter, dropped_batches=self._dropped
            )
        except SourceUnavailable as exc:
            logger.warning("snapshot source unavailable, skipping tick: %s", exc)
            return []
        self._emitted += len(samples)
        body = format_exposition(samples)
        self._latest = body
        if self.push_url:
            self._push(body)
        return samples

    def latest_exposition(self) -> str:
        return self._latest

    @property
    def dropped_total(self) -> int:
        return self._dropped

    def _push(self, body: str) -> None:
        for attempt, backoff in enumerate((0.0,) + PUSH_BACKOFF_SECONDS):
            if backoff:
                self._sleep(backoff)
            if self._poster(self.push_url, body):
                return
        self._dropped += 1
        logger.warning("push to %s failed after retries; batch dropped", self.push_url)

    @staticmethod
    def _http_post(url: str, body: str) -> bool:
        import httpx

        try:
            response = httpx.post(
                url, content=body, headers={"content-type": "text/plain"}, timeout=10.0
            )
            return response.status_code < 400
        except Exception:
            return False

    # -- background loop and pull endpoint ---------------------------------

    def start(self, listen: Optional[str] = None) -> None:
        if listen:
            host, _, port = listen.rpartition(":")
            self._server = ThreadingHTTPServer((host or "127.0.0.1", int(port)), self._handler())
            threading.Thread(target=self._server.serve_forever, daemon=True).start()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.is_set():
            self.tick()
            self._stop.wait(self.interval_seconds)

    def stop(self) -> None:
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)
        if self._server:
            self._server.shutdown()
            self._server.server_close()

    @property
    def pull_port(self) -> Optional[int]:
        return self._server.server_address[1] if self._server else None

    def _handler(self):
        agent = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                if self.path != "/metrics":
                    self.send_error(404)
                    return
                body = agent.latest_exposition().encode()
                self.send_response(200)
                self.send_header("content-type", "text/plain; charset=utf-8")
                self.send_header("content-length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, fmt, *args):
                logger.debug("pull endpoint: " + fmt, *args)

        return Handler
