"""Batch normalization: heterogeneous push bodies into canonical samples.

Per-line failures never abort the batch; each bad line comes back as a
(line, error) reject so a misconfigured collector can debug itself from
the ingest response.
"""

from __future__ import annotations

from typing import Iterable, List, Mapping, Optional, Tuple

from obstack.core.errors import ObstackError
from obstack.core.metrics import MetricsRegistry
from obstack.core.model import MetricSample, canonicalize_series_key
from obstack.core.wire import parse_exposition_line

DEFAULT_DENYLIST = frozenset({"email", "ip", "user_name"})


def normalize_batch(
    raw: str,
    source_labels: Mapping[str, str],
    denylist: Iterable[str] = DEFAULT_DENYLIST,
    registry: Optional[MetricsRegistry] = None,
) -> Tuple[List[MetricSample], List[Tuple[str, str]]]:
    """Parse every line of an exposition body into canonical samples.

    Source labels are merged into each sample (the sample's own labels
    win on conflict); denylisted label keys are dropped and counted in
    ``gateway_sanitized_total``. Returns (accepted, rejects) where each
    reject is the offending line text plus the error name.
    """
    deny = set(denylist)
    accepted: List[MetricSample] = []
    rejects: List[Tuple[str, str]] = []
    for line in raw.splitlines():
        try:
            sample = parse_exposition_line(line)
        except ObstackError as exc:
            rejects.append((line, type(exc).__name__))
            continue
        if sample is None:
            continue
        try:
            merged = dict(source_labels)
            merged.update(sample.labels)
            key = canonicalize_series_key(sample.name, merged)
            labels = {k: v for k, v in key.labels if k not in deny}
            dropped = len(key.labels) - len(labels)
            if dropped and registry is not None:
                registry.inc("gateway_sanitized_total", dropped)
            if labels != dict(sample.labels):
                sample = MetricSample(
                    name=key.name,
                    labels=labels,
                    value=sample.value,
                    timestamp=sample.timestamp,
                    unit=sample.unit,
                    kind=sample.kind,
                )
        except ObstackError as exc:
            rejects.append((line, type(exc).__name__))
            continue
        accepted.append(sample)
    return accepted, rejects
