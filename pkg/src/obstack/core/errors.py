"""Base error hierarchy shared across the stack."""

from __future__ import annotations


class ObstackError(Exception):
    """Root of every error raised by the stack."""


class InvalidName(ObstackError):
    """Metric name fails the name grammar after canonicalization."""


class InvalidLabelKey(ObstackError):
    """Label key fails the key grammar after lowering."""


class TooManyLabels(ObstackError):
    """Label set exceeds the per-sample limit."""


class UnknownUnit(ObstackError):
    """Unit symbol is not in the conversion table; the sample is rejected."""


class ParseError(ObstackError):
    """Exposition line is structurally malformed."""


class InvalidRange(ObstackError):
    """Query window or step is out of contract."""


class InvalidValue(ObstackError):
    """Sample value is not a finite number."""
