"""Robust anomaly scoring: modified z-score over a trailing baseline.

The detector uses median and MAD so a handful of wild points cannot drag
the baseline along. Points flagged anomalous are excluded from later
baselines; an outage that lasts many samples therefore stays one span
instead of slowly becoming the new normal. A constant baseline (MAD 0)
is floored at an epsilon so any deviation from it flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import median
from typing import List, Sequence, Tuple

from obstack.core.errors import ObstackError
from obstack.core.model import SeriesKey

MAD_SCALE = 0.6745


class WindowTooSmall(ObstackError):
    """Scoring window holds fewer than the minimum points."""


class InsufficientData(ObstackError):
    """Not enough raw points in the detection window."""


@dataclass(frozen=True)
class AnomalyParams:
    window_points: int = 60
    threshold_k: float = 3.5
    min_mad_epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if self.window_points < 8:
            raise ValueError("window_points must be >= 8")
        if self.threshold_k <= 0:
            raise ValueError("threshold_k must be > 0")


@dataclass(frozen=True)
class AnomalySpan:
    key: SeriesKey
    start: int
    end: int
    peak_score: float
    onset: int


def robust_zscore(
    window: Sequence[float], x: float, params: AnomalyParams = AnomalyParams(window_points=8)
) -> float:
    """Modified z-score of x against the window, sign preserved."""
    if len(window) < 8:
        raise WindowTooSmall(f"window has {len(window)} points, need >= 8")
    center = median(window)
    mad = median(abs(v - center) for v in window)
    return MAD_SCALE * (x - center) / max(mad, params.min_mad_epsilon)


def detect_anomaly_spans(
    key: SeriesKey,
    points: Sequence[Tuple[int, float]],
    params: AnomalyParams = AnomalyParams(),
) -> List[AnomalySpan]:
    """Slide over time-sorted (timestamp, value) points and merge runs of
    flagged points into spans.

    The first window_points points seed the baseline unevaluated; flagged
    points never enter it. Onset is the first flagged timestamp of the
    span. Deterministic for a given input.
    """
    if len(points) < params.window_points + 1:
        raise InsufficientData(
            f"need >= {params.window_points + 1} points, have {len(points)}"
        )
    baseline: List[float] = [v for _, v in points[: params.window_points]]
    spans: List[AnomalySpan] = []
    current: dict | None = None
    for ts, value in points[params.window_points :]:
        score = robust_zscore(baseline, value, params)
        if abs(score) > params.threshold_k:
            if current is None:
                current = {"start": ts, "end": ts, "peak": abs(score)}
            else:
                current["end"] = ts
                current["peak"] = max(current["peak"], abs(score))
        else:
            if current is not None:
                spans.append(_close(key, current))
                current = None
            baseline.append(value)
            baseline.pop(0)
    if current is not None:
        spans.append(_close(key, current))
    return spans


def _close(key: SeriesKey, span: dict) -> AnomalySpan:
    return AnomalySpan(
        key=key,
        start=span["start"],
        end=span["end"],
        peak_score=span["peak"],
        onset=span["start"],
    )
