"""Retention ladder configuration."""

from __future__ import annotations

from dataclasses import dataclass

HOUR_MS = 3_600_000
DAY_MS = 24 * HOUR_MS


@dataclass(frozen=True)
class RetentionPolicy:
    """Tiered retention: raw is cleared first, coarser rollups live longer."""

    raw_retention_ms: int = 24 * HOUR_MS
    rollup_1m_retention_ms: int = 7 * DAY_MS
    rollup_1h_retention_ms: int = 90 * DAY_MS

    def __post_init__(self) -> None:
        if not (
            self.raw_retention_ms
            < self.rollup_1m_retention_ms
            < self.rollup_1h_retention_ms
        ):
            raise ValueError(
                "retention ladder must satisfy raw < rollup_1m < rollup_1h"
            )
