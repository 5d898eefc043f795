"""Counter-reset bookkeeping.

Counters are cumulative, but a restarted process starts counting from
zero again. The adjusted cumulative value repairs that: increases add
their delta, a decrease is treated as a reset and the new raw value is
added on top, so the output is monotone non-decreasing across any input
sequence of non-negative floats.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict

from obstack.core.errors import ObstackError
from obstack.core.model import SeriesKey


class NegativeCounter(ObstackError):
    """Raw counter values below zero are rejected outright."""


@dataclass
class _SeriesCounter:
    last_raw_value: float
    cumulative_adjusted: float


class CounterState:
    """Per-series reset-repair state with striped locking.

    Two concurrent samples for one series serialize on the same stripe;
    updates for different series mostly proceed in parallel.
    """

    STRIPES = 64

    def __init__(self) -> None:
        self._series: Dict[SeriesKey, _SeriesCounter] = {}
        self._locks = [threading.Lock() for _ in range(self.STRIPES)]
        self._guard = threading.Lock()

    def _lock_for(self, key: SeriesKey) -> threading.Lock:
        return self._locks[hash(key) % self.STRIPES]

    def adjust(self, key: SeriesKey, raw_value: float) -> float:
        if raw_value < 0:
            raise NegativeCounter(f"negative counter value {raw_value} for {key}")
        with self._lock_for(key):
            state = self._series.get(key)
            if state is None:
                with self._guard:
                    state = self._series.setdefault(
                        key, _SeriesCounter(last_raw_value=raw_value, cumulative_adjusted=raw_value)
                    )
                return state.cumulative_adjusted
            if raw_value >= state.last_raw_value:
                state.cumulative_adjusted += raw_value - state.last_raw_value
            else:  # reset detected
                state.cumulative_adjusted += raw_value
            state.last_raw_value = raw_value
            return state.cumulative_adjusted


def adjust_counter(key: SeriesKey, raw_value: float, state: CounterState) -> float:
    """Fold one raw counter observation into the adjusted cumulative."""
    return state.adjust(key, raw_value)
