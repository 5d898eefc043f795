"""Collection-layer agent: resource profiling and software energy estimation."""

from obstack.collector.power import (
    EnergyMeter,
    InsufficientPoints,
    NonMonotonicTime,
    OutOfRange,
    PowerModel,
    estimate_power,
    integrate_energy,
)
from obstack.collector.providers import (
    PsutilProvider,
    ReplayProvider,
    ResourceSnapshot,
    SourceUnavailable,
)
from obstack.collector.agent import CollectorAgent, sample_resources

__all__ = [
    "CollectorAgent",
    "EnergyMeter",
    "InsufficientPoints",
    "NonMonotonicTime",
    "OutOfRange",
    "PowerModel",
    "PsutilProvider",
    "ReplayProvider",
    "ResourceSnapshot",
    "SourceUnavailable",
    "estimate_power",
    "integrate_energy",
    "sample_resources",
]
