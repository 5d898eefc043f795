"""Time-series database: append, range queries, downsampling, retention."""

from obstack.tsdb.engine import (
    EmptyInput,
    InvalidRange,
    QuantileNeedsRaw,
    RetentionViolation,
    StorageFull,
    Tsdb,
    UnalignedWindow,
    quantile,
)
from obstack.tsdb.rollups import RES_1H, RES_1M, RollupPoint, merge_rollups
from obstack.tsdb.policy import RetentionPolicy

__all__ = [
    "EmptyInput",
    "InvalidRange",
    "QuantileNeedsRaw",
    "RES_1H",
    "RES_1M",
    "RetentionPolicy",
    "RetentionViolation",
    "RollupPoint",
    "StorageFull",
    "Tsdb",
    "UnalignedWindow",
    "merge_rollups",
    "quantile",
]
