"""Aggregation-layer entry point: normalize, sanitize, and route samples."""

from obstack.gateway.counters import CounterState, NegativeCounter, adjust_counter
from obstack.gateway.normalize import DEFAULT_DENYLIST, normalize_batch
from obstack.gateway.service import Gateway, ScrapeTarget, route_record

__all__ = [
    "CounterState",
    "DEFAULT_DENYLIST",
    "Gateway",
    "NegativeCounter",
    "ScrapeTarget",
    "adjust_counter",
    "normalize_batch",
    "route_record",
]
