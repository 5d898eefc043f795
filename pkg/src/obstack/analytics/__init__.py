"""Processing layer: anomaly detection, correlation, distillation cycle."""

from obstack.analytics.anomaly import (
    AnomalyParams,
    AnomalySpan,
    InsufficientData,
    WindowTooSmall,
    detect_anomaly_spans,
    robust_zscore,
)
from obstack.analytics.correlate import (
    InsufficientOverlap,
    ZeroVariance,
    pearson,
)
from obstack.analytics.engine import AnalyticsEngine, CycleReport

__all__ = [
    "AnalyticsEngine",
    "AnomalyParams",
    "AnomalySpan",
    "CycleReport",
    "InsufficientData",
    "InsufficientOverlap",
    "WindowTooSmall",
    "ZeroVariance",
    "detect_anomaly_spans",
    "pearson",
    "robust_zscore",
]
