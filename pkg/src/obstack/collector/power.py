"""Utilization-proportional power model and trapezoidal energy integration.

The model is deliberately simple and declared up front so estimates stay
auditable: draw rises from idle to max with utilization, optionally
shaped by an exponent. Energy is the time integral of the estimated
power, accumulated as a cumulative counter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from obstack.core.errors import ObstackError


class OutOfRange(ObstackError):
    """Utilization outside [0, 1] after core-count normalization."""


class InsufficientPoints(ObstackError):
    """Energy integration needs at least two power points."""


class NonMonotonicTime(ObstackError):
    """Power points must have strictly increasing timestamps."""


@dataclass(frozen=True)
class PowerModel:
    p_idle_watts: float = 50.0
    p_max_watts: float = 150.0
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.p_idle_watts < 0:
            raise ValueError("p_idle_watts must be >= 0")
        if self.p_max_watts < self.p_idle_watts:
            raise ValueError("p_max_watts must be >= p_idle_watts")
        if self.exponent <= 0:
            raise ValueError("exponent must be > 0")


def estimate_power(utilization: float, model: PowerModel) -> float:
    """Estimated draw in watts for a whole-host utilization in [0, 1].

    Monotone non-decreasing in utilization, pinned to p_idle at 0 and
    p_max at 1. Multi-core utilization must be divided by the core count
    before calling.
    """
    if not 0.0 <= utilization <= 1.0:
        raise OutOfRange(f"utilization {utilization} outside [0, 1]")
    return model.p_idle_watts + (model.p_max_watts - model.p_idle_watts) * (
        utilization**model.exponent
    )


def integrate_energy(power_points: Sequence[Tuple[int, float]]) -> float:
    """Trapezoidal integral of (timestamp-ms, watts) points, in joules."""
    if len(power_points) < 2:
        raise InsufficientPoints("need at least two power points")
    total = 0.0
    for (t0, p0), (t1, p1) in zip(power_points, power_points[1:]):
        if t1 <= t0:
            raise NonMonotonicTime(f"timestamps not strictly increasing: {t0} -> {t1}")
        total += (t1 - t0) / 1000.0 * (p0 + p1) / 2.0
    return total


class EnergyMeter:
    """Accumulates the energy counter one power observation at a time."""

    def __init__(self, model: PowerModel) -> None:
        self.model = model
        self._last: Optional[Tuple[int, float]] = None
        self.total_joules = 0.0

    def observe(self, ts_ms: int, utilization: float) -> float:
        """Fold in one utilization reading; returns cumulative joules."""
        power = estimate_power(utilization, self.model)
        if self._last is not None and ts_ms > self._last[0]:
            self.total_joules += integrate_energy([self._last, (ts_ms, power)])
        self._last = (ts_ms, power)
        return self.total_joules

    @property
    def last_power_watts(self) -> Optional[float]:
        return self._last[1] if self._last else None
