"""Process supervision: launch the planned components, restart on crash.

Components map onto OS processes: the embedded stores and the engines
around them live in one server process; each collector is its own
process. A component crashing more than five times within a minute is
abandoned and the run reports a runtime failure.
"""

from __future__ import annotations

import logging
import subprocess
import sys
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional

logger = logging.getLogger(__name__)

RESTART_LIMIT = 5
RESTART_WINDOW_SECONDS = 60.0


@dataclass
class ProcessSpec:
    name: str
    argv: List[str]
    env: Optional[Dict[str, str]] = None


@dataclass
class _Managed:
    spec: ProcessSpec
    process: Optional[subprocess.Popen] = None
    restarts: Deque[float] = field(default_factory=deque)
    abandoned: bool = False


def processes_for(enabled: List[str], config_path: str) -> List[ProcessSpec]:
    """Map enabled components onto supervised processes.

    The stores are embedded libraries, so gateway, tsdb, metastore,
    analytics, alerting, api, and dashboard all ride in one server
    process; the collector is standalone.
    """
    specs: List[ProcessSpec] = []
    backend = {"gateway", "tsdb", "metastore", "analytics", "alerting", "api", "dashboard"}
    if backend & set(enabled):
        specs.append(
            ProcessSpec(
                name="server",
                argv=[sys.executable, "-m", "obstack.cli.main", "serve", "--config", config_path],
            )
        )
    if "collector" in enabled:
        specs.append(
            ProcessSpec(
                name="collector",
                argv=[sys.executable, "-m", "obstack.cli.main", "collect", "--config", config_path],
            )
        )
    return specs


class Supervisor:
    def __init__(
        self,
        specs: List[ProcessSpec],
        restart_limit: int = RESTART_LIMIT,
        restart_window: float = RESTART_WINDOW_SECONDS,
        poll_interval: float = 0.2,
    ) -> None:
        self._managed = [_Managed(spec=s) for s in specs]
        self.restart_limit = restart_limit
        self.restart_window = restart_window
        self.poll_interval = poll_interval
        self._stopping = False

    def start_all(self) -> None:
        for managed in self._managed:
            self._spawn(managed)

    def _spawn(self, managed: _Managed) -> None:
        logger.info("starting %s: %s", managed.spec.name, " ".join(managed.spec.argv))
        managed.process = subprocess.Popen(managed.spec.argv, env=managed.spec.env)

    def poll_once(self, now: Optional[float] = None) -> bool:
        """Reap exited children and restart within the rate limit.

        Returns False once any component has been abandoned.
        """
        now = time.monotonic() if now is None else now
        healthy = True
        for managed in self._managed:
            if managed.abandoned or managed.process is None:
                healthy = healthy and not managed.abandoned
                continue
            code = managed.process.poll()
            if code is None:
                continue
            if self._stopping:
                continue
            logger.warning("%s exited with code %s", managed.spec.name, code)
            while managed.restarts and now - managed.restarts[0] > self.restart_window:
                managed.restarts.popleft()
            if len(managed.restarts) >= self.restart_limit:
                logger.error(
                    "%s crashed %d times within %.0f s; giving up",
                    managed.spec.name, self.restart_limit, self.restart_window,
                )
                managed.abandoned = True
                healthy = False
                continue
            managed.restarts.append(now)
            self._spawn(managed)
        return healthy

    def run(self) -> int:
        """Supervise until interrupted; exit code 0 on clean stop, 2 on
        runtime failure (a component was abandoned)."""
        self.start_all()
        try:
            while True:
                if not self.poll_once():
                    self.stop_all()
                    return 2
                time.sleep(self.poll_interval)
        except KeyboardInterrupt:
            self.stop_all()
            return 0

    def stop_all(self) -> None:
        self._stopping = True
        for managed in self._managed:
            if managed.process and managed.process.poll() is None:
                managed.process.terminate()
        deadline = time.monotonic() + 10
        for managed in self._managed:
            if managed.process is None:
                continue
            try:
                managed.process.wait(timeout=max(0.1, deadline - time.monotonic()))
            except subprocess.TimeoutExpired:
                managed.process.kill()
