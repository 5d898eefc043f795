"""Alert rules, the firing lifecycle, and webhook delivery."""

from obstack.alerting.fingerprint import fingerprint, fingerprint_hex
from obstack.alerting.rules import AlertRule, AlertState, Comparator, RuleMode
from obstack.alerting.engine import (
    AlertEngine,
    AlertInstance,
    QueryFailed,
    Transition,
)
from obstack.alerting.webhook import DeliveryResult, WebhookDeliverer

__all__ = [
    "AlertEngine",
    "AlertInstance",
    "AlertRule",
    "AlertState",
    "Comparator",
    "DeliveryResult",
    "QueryFailed",
    "RuleMode",
    "Transition",
    "WebhookDeliverer",
    "fingerprint",
    "fingerprint_hex",
]
