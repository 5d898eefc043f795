"""Record shapes held by the metastore."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

from obstack.core.errors import ObstackError

STATS_TOLERANCE = 1e-9


class InconsistentStats(ObstackError):
    """Summary statistics contradict each other."""


@dataclass(frozen=True)
class EntityRecord:
    """One user- or system-metadata entity, unique per (kind, entity_id)."""

    entity_id: str
    kind: str
    attributes: Dict[str, str] = field(default_factory=dict)
    created_at: int = 0
    updated_at: int = 0


@dataclass(frozen=True)
class EventRecord:
    """Sparse contextual record routed here from event-kind samples."""

    event_id: int
    name: str
    attributes: Dict[str, str]
    value: float
    timestamp: int


@dataclass(frozen=True)
class SummaryRecord:
    """Condensed statistics for one series over one distilled window."""

    summary_id: str
    selector: str
    window: Tuple[int, int]
    stats: Dict[str, float]
    produced_at: int

    def verify(self) -> None:
        """Raise InconsistentStats when internals contradict each other."""
        stats = self.stats
        required = {"count", "sum", "min", "max", "mean", "stddev"}
        if set(stats) < required:
            raise InconsistentStats(f"summary {self.summary_id} missing stats fields")
        count = stats["count"]
        if count < 1:
            raise InconsistentStats(f"summary {self.summary_id} has count {count}")
        scale = max(abs(stats["sum"]), abs(stats["mean"]) * count, 1.0)
        if abs(stats["mean"] * count - stats["sum"]) > STATS_TOLERANCE * scale:
            raise InconsistentStats(f"summary {self.summary_id}: mean != sum/count")
        span = max(abs(stats["min"]), abs(stats["max"]), 1.0)
        if not (
            stats["min"] - STATS_TOLERANCE * span
            <= stats["mean"]
            <= stats["max"] + STATS_TOLERANCE * span
        ):
            raise InconsistentStats(f"summary {self.summary_id}: mean outside [min, max]")
        if not math.isfinite(stats["stddev"]) or stats["stddev"] < 0:
            raise InconsistentStats(f"summary {self.summary_id}: bad stddev")


def make_stats(
    count: int, total: float, minimum: float, maximum: float, sum_sq: float
) -> Dict[str, float]:
    """Derive the summary stats dict, rejecting impossible inputs.

    Variance below -1e-9 (relative) means the accumulators are corrupt;
    tiny negative variance from float rounding is clamped to zero.
    """
    if count < 1:
        raise InconsistentStats("count must be >= 1")
    mean = total / count
    variance = sum_sq / count - mean * mean
    scale = max(abs(sum_sq / count), mean * mean, 1.0)
    if variance < -STATS_TOLERANCE * scale:
        raise InconsistentStats(f"negative variance {variance}")
    return {
        "count": float(count),
        "sum": total,
        "min": minimum,
        "max": maximum,
        "mean": mean,
        "stddev": math.sqrt(max(0.0, variance)),
    }
