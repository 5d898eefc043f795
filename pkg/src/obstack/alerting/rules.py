"""Alert rule declarations and lifecycle states."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional

from obstack.core.selector import parse_selector


class Comparator(str, enum.Enum):
    GT = ">"
    LT = "<"
    GE = ">="
    LE = "<="

    def holds(self, value: float, threshold: float) -> bool:
        if self is Comparator.GT:
            return value > threshold
        if self is Comparator.LT:
            return value < threshold
        if self is Comparator.GE:
            return value >= threshold
        return value <= threshold


class RuleMode(str, enum.Enum):
    THRESHOLD = "threshold"
    ANOMALY = "anomaly"


class AlertState(str, enum.Enum):
    INACTIVE = "inactive"
    PENDING = "pending"
    FIRING = "firing"
    RESOLVED = "resolved"


# The only lawful moves of the lifecycle machine.
LEGAL_TRANSITIONS = {
    (AlertState.INACTIVE, AlertState.PENDING),
    (AlertState.PENDING, AlertState.FIRING),
    (AlertState.PENDING, AlertState.INACTIVE),
    (AlertState.FIRING, AlertState.RESOLVED),
    (AlertState.RESOLVED, AlertState.INACTIVE),
}


@dataclass(frozen=True)
class AlertRule:
    rule_id: str
    selector: str
    comparator: Comparator = Comparator.GT
    threshold: float = 0.0
    agg: str = "mean"
    quantile_q: Optional[float] = None
    for_duration_ms: int = 0
    eval_interval_ms: int = 15_000
    mode: RuleMode = RuleMode.THRESHOLD
    labels: Dict[str, str] = field(default_factory=dict)
    webhook_url: str = ""

    def __post_init__(self) -> None:
        if not self.rule_id:
            raise ValueError("rule_id must be non-empty")
        if self.for_duration_ms < 0:
            raise ValueError("for_duration_ms must be >= 0")
        if self.eval_interval_ms < 1000:
            raise ValueError("eval_interval_ms must be >= 1000")
        parse_selector(self.selector)  # validates syntax

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "selector": self.selector,
            "comparator": self.comparator.value,
            "threshold": self.threshold,
            "agg": self.agg,
            "quantile_q": self.quantile_q,
            "for_duration_ms": self.for_duration_ms,
            "eval_interval_ms": self.eval_interval_ms,
            "mode": self.mode.value,
            "labels": dict(self.labels),
            "webhook_url": self.webhook_url,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlertRule":
        return cls(
            rule_id=data["rule_id"],
            selector=data["selector"],
            comparator=Comparator(data.get("comparator", ">")),
            threshold=float(data.get("threshold", 0.0)),
            agg=data.get("agg", "mean"),
            quantile_q=data.get("quantile_q"),
            for_duration_ms=int(data.get("for_duration_ms", 0)),
            eval_interval_ms=int(data.get("eval_interval_ms", 15_000)),
            mode=RuleMode(data.get("mode", "threshold")),
            labels=dict(data.get("labels", {})),
            webhook_url=data.get("webhook_url", ""),
        )
