"""Durable store for non-time-series data: entities, events, summaries."""

from obstack.metastore.records import (
    EntityRecord,
    EventRecord,
    InconsistentStats,
    SummaryRecord,
    make_stats,
)
from obstack.metastore.store import Metastore, MetastoreFull

__all__ = [
    "EntityRecord",
    "EventRecord",
    "InconsistentStats",
    "Metastore",
    "MetastoreFull",
    "SummaryRecord",
    "make_stats",
]
