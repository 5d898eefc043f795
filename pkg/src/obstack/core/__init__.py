"""Shared domain types, canonical units, and the exposition wire format.

Everything in this package is an immutable value or a pure function, safe
to use from any number of concurrent contexts.
"""

from obstack.core.errors import (
    InvalidLabelKey,
    InvalidName,
    InvalidValue,
    ObstackError,
    ParseError,
    TooManyLabels,
    UnknownUnit,
)
from obstack.core.model import (
    Canonical,
    MetricSample,
    SampleKind,
    SeriesKey,
    Unit,
    canonicalize_series_key,
)
from obstack.core.units import CONVERSIONS, canonical_unit, convert_unit
from obstack.core.wire import format_exposition_line, parse_exposition_line

__all__ = [
    "CONVERSIONS",
    "Canonical",
    "InvalidLabelKey",
    "InvalidName",
    "InvalidValue",
    "MetricSample",
    "ObstackError",
    "ParseError",
    "SampleKind",
    "SeriesKey",
    "TooManyLabels",
    "Unit",
    "UnknownUnit",
    "canonical_unit",
    "canonicalize_series_key",
    "convert_unit",
    "format_exposition_line",
    "parse_exposition_line",
]
