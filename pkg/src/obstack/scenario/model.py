"""Scenario files: a scripted workload plus named expectations.

The script is a list of sample blocks; a block with ``count`` and
``every_ms`` expands into a train of samples. Offsets are relative to the
scenario base time; expectations query the stack through the API and
compare against expected values at a stated tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import yaml

COMPARATORS = ("==", "~=", ">", ">=", "<", "<=")


@dataclass(frozen=True)
class ScriptEntry:
    offset_ms: int
    metric: str
    value: float
    unit: str = "none"
    kind: str = "gauge"
    labels: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Expectation:
    name: str
    kind: str  # query_range | anomaly_count | event_count
    selector: str
    start_ms: int
    end_ms: int
    op: str
    value: float
    step_ms: int = 60_000
    agg: str = "mean"
    q: Optional[float] = None
    tolerance: float = 0.0

    def __post_init__(self) -> None:
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")
        if self.kind not in ("query_range", "anomaly_count", "event_count"):
            raise ValueError(f"unknown expectation kind {self.kind!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    script: List[ScriptEntry]
    expectations: List[Expectation]
    base_ms: Optional[int] = None
    labels: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.expectations:
            raise ValueError("a scenario needs at least one expectation")
        offsets = [e.offset_ms for e in self.script]
        if any(b < a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("script offsets must be non-decreasing")

    def duration_ms(self) -> int:
        return max((e.offset_ms for e in self.script), default=0)

    def resolved_base_ms(self) -> int:
        """Pinned base for reproducible runs; otherwise the recent past."""
        if self.base_ms is not None:
            return self.base_ms
        return int(time.time() * 1000) - self.duration_ms() - 60_000


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    script: List[ScriptEntry] = []
    for block in doc.get("script", []):
        count = int(block.get("count", 1))
        every = int(block.get("every_ms", 0))
        base_offset = int(block.get("at_ms", 0))
        for i in range(count):
            script.append(
                ScriptEntry(
                    offset_ms=base_offset + i * every,
                    metric=block["metric"],
                    value=float(block["value"]),
                    unit=str(block.get("unit", "none")),
                    kind=str(block.get("kind", "gauge")),
                    labels=dict(block.get("labels", {})),
                )
            )
    expectations = [
        Expectation(
            name=e["name"],
            kind=e.get("kind", "query_range"),
            selector=e["selector"],
            start_ms=int(e.get("start_ms", 0)),
            end_ms=int(e["end_ms"]),
            step_ms=int(e.get("step_ms", 60_000)),
            agg=e.get("agg", "mean"),
            q=e.get("q"),
            op=e.get("op", "~="),
            value=float(e["value"]),
            tolerance=float(e.get("tolerance", 0.0)),
        )
        for e in doc.get("expectations", [])
    ]
    return Scenario(
        name=doc.get("name", "unnamed"),
        script=script,
        expectations=expectations,
        base_ms=doc.get("base_ms"),
        labels=dict(doc.get("labels", {})),
    )
