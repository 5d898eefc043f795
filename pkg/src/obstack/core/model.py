"""Core domain types: samples, units, and series identity."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Tuple

from obstack.core.errors import (
    InvalidLabelKey,
    InvalidName,
    InvalidValue,
    TooManyLabels,
)

NAME_RE = re.compile(r"[a-z_][a-z0-9_:]*\Z")
LABEL_KEY_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")

MAX_LABELS = 64


class Canonical(str, enum.Enum):
    """Canonical unit families every sample is normalized into."""

    SECONDS = "seconds"
    BYTES = "bytes"
    JOULES = "joules"
    WATTS = "watts"
    CELSIUS = "celsius"
    RATIO = "ratio"
    COUNT = "count"
    NONE = "none"


# One symbol per canonical unit. The "none" unit has the empty symbol; the
# wire format substitutes the literal token "none" because fields there are
# whitespace-delimited (see obstack.core.wire).
CANONICAL_SYMBOL: dict[Canonical, str] = {
    Canonical.SECONDS: "s",
    Canonical.BYTES: "B",
    Canonical.JOULES: "J",
    Canonical.WATTS: "W",
    Canonical.CELSIUS: "degC",
    Canonical.RATIO: "ratio",
    Canonical.COUNT: "count",
    Canonical.NONE: "",
}


class SampleKind(str, enum.Enum):
    GAUGE = "gauge"
    COUNTER = "counter"
    EVENT = "event"


@dataclass(frozen=True)
class Unit:
    """A value's unit: the canonical family plus the symbol it arrived with.

    The source symbol is provenance only; two Units are equal iff their
    canonical families are equal (a joule is a joule whether it arrived
    as "J" or "kWh").
    """

    canonical: Canonical
    source_symbol: str = field(default="", compare=False)

    def symbol(self) -> str:
        return CANONICAL_SYMBOL[self.canonical]


@dataclass(frozen=True)
class SeriesKey:
    """Canonical identity of one time series.

    Label keys are unique, lowercased, and sorted ascending; two keys are
    equal iff the name and the full label list are equal.
    """

    name: str
    labels: Tuple[Tuple[str, str], ...] = ()

    def label_map(self) -> dict[str, str]:
        return dict(self.labels)

    def __str__(self) -> str:
        inner = ",".join(f'{k}="{v}"' for k, v in self.labels)
        return f"{self.name}{{{inner}}}"


@dataclass(frozen=True)
class MetricSample:
    """One timestamped measurement flowing between the layers.

    The value must be finite and the timestamp is integer milliseconds since
    the Unix epoch (UTC), strictly positive.
    """

    name: str
    labels: Mapping[str, str]
    value: float
    timestamp: int
    unit: Unit = field(default_factory=lambda: Unit(Canonical.NONE))
    kind: SampleKind = SampleKind.GAUGE

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise InvalidValue(f"non-finite value {self.value!r} for {self.name}")
        if self.timestamp <= 0:
            raise InvalidValue(f"timestamp must be > 0, got {self.timestamp}")

    def key(self) -> SeriesKey:
        return canonicalize_series_key(self.name, self.labels)


def canonicalize_series_key(name: str, labels: Mapping[str, str]) -> SeriesKey:
    """Build the canonical SeriesKey for a (name, labels) pair.

    Keys are lowercased, validated, and sorted ascending, so identical
    inputs yield identical keys regardless of map iteration order.
    Idempotent: canonicalizing an already-canonical key is the identity.
    """
    if not name:
        raise InvalidName("empty metric name")
    lowered = name.lower()
    if not NAME_RE.match(lowered):
        raise InvalidName(f"invalid metric name {name!r}")
    if len(labels) >= MAX_LABELS:
        raise TooManyLabels(f"{len(labels)} labels on {name!r} (max {MAX_LABELS - 1})")
    pairs = []
    seen = set()
    for key, value in labels.items():
        lkey = key.lower()
        if not LABEL_KEY_RE.match(lkey):
            raise InvalidLabelKey(f"invalid label key {key!r} on {name!r}")
        if lkey in seen:
            raise InvalidLabelKey(f"duplicate label key {lkey!r} on {name!r}")
        seen.add(lkey)
        pairs.append((lkey, str(value)))
    pairs.sort(key=lambda kv: kv[0])
    return SeriesKey(lowered, tuple(pairs))
