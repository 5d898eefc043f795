"""Line-oriented exposition text format.

One sample per line, bit-exact:

    <name>{<k>="<v>",...} <kind> <unit-symbol> <value> <timestamp-ms>\\n

Label values are double-quoted with ``\\"`` and ``\\\\`` escapes; the value
is printed as the shortest round-trippable decimal; lines starting with
``#`` are comments. The empty unit symbol is spelled ``none`` on the wire
because fields are whitespace-delimited.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Optional

from obstack.core.errors import InvalidValue, ParseError
from obstack.core.model import (
    MetricSample,
    SampleKind,
    canonicalize_series_key,
)
from obstack.core.units import convert_unit, wire_symbol

_LINE_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_:]*)"
    r"\{(?P<labels>(?:[^\"{}]*\"(?:[^\"\\]|\\.)*\")*)\}"
    r" (?P<kind>gauge|counter|event)"
    r" (?P<unit>\S+)"
    r" (?P<value>\S+)"
    r" (?P<ts>\d+)\Z"
)

_LABEL_RE = re.compile(r'(?P<key>[A-Za-z_][A-Za-z0-9_]*)="(?P<value>(?:[^"\\]|\\.)*)"')


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(value: str) -> str:
    return re.sub(r"\\(.)", r"\1", value)


def format_exposition_line(sample: MetricSample) -> str:
    """Render one sample as an exposition line (without trailing newline)."""
    key = sample.key()
    inner = ",".join(f'{k}="{_escape(v)}"' for k, v in key.labels)
    return (
        f"{key.name}{{{inner}}} {sample.kind.value} {wire_symbol(sample.unit)} "
        f"{repr(sample.value)} {sample.timestamp}"
    )


def format_exposition(samples: Iterable[MetricSample]) -> str:
    """Render a batch of samples, one line each, trailing newline included."""
    return "".join(format_exposition_line(s) + "\n" for s in samples)


def parse_exposition_line(line: str) -> Optional[MetricSample]:
    """Parse one line into a fully canonical MetricSample.

    Returns None for comment (``#``-prefixed) and blank lines: they signal
    "skip", not an error. The sample's key is canonicalized and its value
    converted into the canonical unit. Raises ParseError for malformed
    structure, InvalidValue for non-finite values, UnknownUnit for symbols
    outside the conversion table.
    """
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    match = _LINE_RE.match(stripped)
    if match is None:
        raise ParseError(f"malformed exposition line: {stripped[:200]!r}")

    labels = {}
    block = match.group("labels")
    pos = 0
    while pos < len(block):
        if labels:
            if block[pos] != ",":
                raise ParseError(f"malformed label block in {stripped[:200]!r}")
            pos += 1
        pair = _LABEL_RE.match(block, pos)
        if pair is None:
            raise ParseError(f"malformed label block in {stripped[:200]!r}")
        key = pair.group("key")
        if key in labels:
            raise ParseError(f"duplicate label key {key!r} in {stripped[:200]!r}")
        labels[key] = _unescape(pair.group("value"))
        pos = pair.end()

    try:
        raw_value = float(match.group("value"))
    except ValueError:
        raise ParseError(f"bad value field in {stripped[:200]!r}") from None
    if not math.isfinite(raw_value):
        raise InvalidValue(f"non-finite value in {stripped[:200]!r}")

    unit_token = match.group("unit")
    value, unit = convert_unit(raw_value, unit_token)
    key = canonicalize_series_key(match.group("name"), labels)
    return MetricSample(
        name=key.name,
        labels=key.label_map(),
        value=value,
        timestamp=int(match.group("ts")),
        unit=unit,
        kind=SampleKind(match.group("kind")),
    )
