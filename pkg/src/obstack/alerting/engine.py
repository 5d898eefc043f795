"""Rule evaluation: drives the per-series lifecycle state machine.

Threshold rules aggregate the last evaluation interval and compare
against the threshold; anomaly rules ask the analytics engine whether a
span covers the evaluation instant. Condition truth advances the pending
clock; notifications go out on entry to firing and resolved.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from obstack.alerting.fingerprint import fingerprint
from obstack.alerting.rules import (
    LEGAL_TRANSITIONS,
    AlertRule,
    AlertState,
    RuleMode,
)
from obstack.alerting.webhook import WebhookDeliverer
from obstack.analytics import AnalyticsEngine, InsufficientData
from obstack.core.clock import Clock
from obstack.core.errors import ObstackError
from obstack.core.metrics import MetricsRegistry
from obstack.core.selector import parse_selector
from obstack.metastore import Metastore
from obstack.tsdb import Tsdb

logger = logging.getLogger(__name__)

ANOMALY_LOOKBACK_MS = 3_600_000


class QueryFailed(ObstackError):
    """Evaluation query failed; rule state is frozen for this round."""


@dataclass(frozen=True)
class AlertInstance:
    fingerprint: int
    rule_id: str
    state: AlertState
    since: int
    last_value: float
    labels: Dict[str, str]
    episode: int


@dataclass(frozen=True)
class Transition:
    fingerprint: int
    rule_id: str
    from_state: AlertState
    to_state: AlertState
    value: float
    labels: Dict[str, str]
    at_ms: int
    episode: int


class AlertEngine:
    def __init__(
        self,
        tsdb: Tsdb,
        analytics: AnalyticsEngine,
        metastore: Optional[Metastore] = None,
        clock: Optional[Clock] = None,
        registry: Optional[MetricsRegistry] = None,
        deliverer: Optional[WebhookDeliverer] = None,
    ) -> None:
        self.tsdb = tsdb
        self.analytics = analytics
        self.metastore = metastore
        self.clock = clock or Clock()
        self.registry = registry or MetricsRegistry()
        self.deliverer = deliverer or WebhookDeliverer(registry=self.registry)
        self._rules: Dict[str, AlertRule] = {}
        self._instances: Dict[int, AlertInstance] = {}
        self._next_due: Dict[str, int] = {}
        self._lock = threading.Lock()
        if metastore is not None:
            for value in metastore.list_space("rule").values():
                rule = AlertRule.from_dict(value)
                self._rules[rule.rule_id] = rule

    # -- rule registry ----------------------------------------------------

    def upsert_rule(self, rule: AlertRule) -> None:
        with self._lock:
            self._rules[rule.rule_id] = rule
            self._next_due.pop(rule.rule_id, None)
        if self.metastore is not None:
            self.metastore.put("rule", rule.rule_id, rule.to_dict())

    def delete_rule(self, rule_id: str) -> bool:
        with self._lock:
            existed = self._rules.pop(rule_id, None) is not None
            self._next_due.pop(rule_id, None)
            stale = [fp for fp, inst in self._instances.items() if inst.rule_id == rule_id]
            for fp in stale:
                del self._instances[fp]
        if self.metastore is not None:
            self.metastore.delete("rule", rule_id)
        return existed

    def rules(self) -> List[AlertRule]:
        with self._lock:
            return sorted(self._rules.values(), key=lambda r: r.rule_id)

    def get_rule(self, rule_id: str) -> Optional[AlertRule]:
        with self._lock:
            return self._rules.get(rule_id)

    def instances(self) -> List[AlertInstance]:
        with self._lock:
            return sorted(self._instances.values(), key=lambda i: (i.rule_id, i.fingerprint))

    # -- evaluation --------------------------------------------------------

    def evaluate_due(self, now_ms: Optional[int] = None) -> List[Transition]:
        """Evaluate every rule whose interval has elapsed."""
        now = self.clock.now_ms() if now_ms is None else now_ms
        out: List[Transition] = []
        for rule in self.rules():
            due = self._next_due.get(rule.rule_id, 0)
            if now < due:
                continue
            self._next_due[rule.rule_id] = now + rule.eval_interval_ms
            out.extend(self.evaluate_rule(rule, now))
        return out

    def evaluate_rule(self, rule: AlertRule, now_ms: Optional[int] = None) -> List[Transition]:
        """One evaluation round for one rule.

        Returns the emitted transitions. Query failures freeze the rule's
        state and count into alert_eval_errors_total instead of raising.
        """
        now = self.clock.now_ms() if now_ms is None else now_ms
        try:
            conditions = self._conditions(rule, now)
        except ObstackError as exc:
            self.registry.inc("alert_eval_errors_total")
            logger.warning("evaluation of rule %s skipped: %s", rule.rule_id, exc)
            return []

        transitions: List[Transition] = []
        with self._lock:
            for labels, (cond, value) in sorted(conditions.items()):
                label_map = dict(labels)
                fp = fingerprint(rule.rule_id, labels)
                inst = self._instances.get(fp) or AlertInstance(
                    fingerprint=fp,
                    rule_id=rule.rule_id,
                    state=AlertState.INACTIVE,
                    since=now,
                    last_value=value,
                    labels=label_map,
                    episode=0,
                )
                transitions.extend(self._step(inst, cond, value, rule, now))
            # series that stopped matching: treat their condition as false
            for fp, inst in list(self._instances.items()):
                if inst.rule_id != rule.rule_id:
                    continue
                if tuple(sorted(inst.labels.items())) in conditions:
                    continue
                transitions.extend(self._step(inst, False, inst.last_value, rule, now))
        for t in transitions:
            self._notify(rule, t)
        return transitions

    def _conditions(
        self, rule: AlertRule, now: int
    ) -> Dict[Tuple[Tuple[str, str], ...], Tuple[bool, float]]:
        """Per matched label set: (condition truth, observed value)."""
        selector = parse_selector(rule.selector)
        out: Dict[Tuple[Tuple[str, str], ...], Tuple[bool, float]] = {}
        if rule.mode is RuleMode.ANOMALY:
            for sid, key in self.tsdb.series_matching(selector):
                try:
                    spans = self.analytics.detect_anomalies(
                        key, (now - ANOMALY_LOOKBACK_MS, now + 1)
                    )
                except InsufficientData:
                    continue
                covering = [
                    s for s in spans if s.start <= now and s.end >= now - rule.eval_interval_ms
                ]
                labels = tuple(sorted({**rule.labels, **key.label_map()}.items()))
                value = max((s.peak_score for s in covering), default=0.0)
                out[labels] = (bool(covering), value)
            return out

        # half-open (now - interval, now]: the sample exactly one interval
        # ago belongs to the previous evaluation round
        result = self.tsdb.query_range(
            selector,
            now - rule.eval_interval_ms + 1,
            now + 1,
            rule.eval_interval_ms,
            rule.agg,
            q=rule.quantile_q,
        )
        for key, points in result:
            if not points:
                continue
            value = points[-1][1]
            labels = tuple(sorted({**rule.labels, **key.label_map()}.items()))
            out[labels] = (rule.comparator.holds(value, rule.threshold), value)
        return out

    def _step(
        self, inst: AlertInstance, cond: bool, value: float, rule: AlertRule, now: int
    ) -> List[Transition]:
        """Advance one instance; at most one hop, except that a zero
        for_duration rule legally passes through pending into firing on
        the same evaluation."""
        transitions: List[Transition] = []

        def move(to_state: AlertState, episode: int, since: int) -> AlertInstance:
            assert (inst.state, to_state) in LEGAL_TRANSITIONS, (inst.state, to_state)
            transitions.append(
                Transition(
                    fingerprint=inst.fingerprint,
                    rule_id=inst.rule_id,
                    from_state=inst.state,
                    to_state=to_state,
                    value=value,
                    labels=dict(inst.labels),
                    at_ms=now,
                    episode=episode,
                )
            )
            return replace(inst, state=to_state, since=since, last_value=value, episode=episode)

        if inst.state is AlertState.INACTIVE:
            if cond:
                inst = move(AlertState.PENDING, inst.episode + 1, now)
                if now - inst.since >= rule.for_duration_ms:
                    inst = move(AlertState.FIRING, inst.episode, now)
        elif inst.state is AlertState.PENDING:
            if not cond:
                inst = move(AlertState.INACTIVE, inst.episode, now)
            elif now - inst.since >= rule.for_duration_ms:
                inst = move(AlertState.FIRING, inst.episode, now)
            else:
                inst = replace(inst, last_value=value)
        elif inst.state is AlertState.FIRING:
            if not cond:
                inst = move(AlertState.RESOLVED, inst.episode, now)
            else:
                inst = replace(inst, last_value=value)
        elif inst.state is AlertState.RESOLVED:
            inst = move(AlertState.INACTIVE, inst.episode, now)

        self._instances[inst.fingerprint] = inst
        return transitions

    def _notify(self, rule: AlertRule, transition: Transition) -> None:
        if transition.to_state not in (AlertState.FIRING, AlertState.RESOLVED):
            return
        if self.metastore is not None:
            self.metastore.append_alert_history(
                {
                    "fingerprint": format(transition.fingerprint, "016x"),
                    "rule_id": transition.rule_id,
                    "state": transition.to_state.value,
                    "value": transition.value,
                    "labels": transition.labels,
                    "timestamp_ms": transition.at_ms,
                }
            )
        if not rule.webhook_url:
            return
        self.deliverer.deliver(
            url=rule.webhook_url,
            fingerprint=transition.fingerprint,
            episode=transition.episode,
            rule_id=transition.rule_id,
            state=transition.to_state.value,
            value=transition.value,
            labels=transition.labels,
            timestamp_ms=transition.at_ms,
        )
