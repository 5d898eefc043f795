"""Built-in dashboard templates, one per audience.

system-overview serves administrators the holistic picture; my-data is
the per-user scoped view; sustainability focuses on the energy and power
series the collector estimates.
"""

from __future__ import annotations

BUILTIN_TEMPLATES = {
    "system-overview": {
        "template_id": "system-overview",
        "title": "System Overview",
        "audience": "admin",
        "panels": [
            {"title": "CPU utilization", "selector": "cpu_utilization", "agg": "mean",
             "step_ms": 60_000, "viz_kind": "line"},
            {"title": "Memory used", "selector": "memory_used_bytes", "agg": "max",
             "step_ms": 60_000, "viz_kind": "line"},
            {"title": "Ingest rate", "selector": "gateway_accepted_total", "agg": "max",
             "step_ms": 60_000, "viz_kind": "stat"},
            {"title": "Hosts", "selector": "cpu_utilization", "agg": "count",
             "step_ms": 300_000, "viz_kind": "table"},
        ],
    },
    "my-data": {
        "template_id": "my-data",
        "title": "My Data",
        "audience": "user",
        "panels": [
            {"title": "My series", "selector": "", "agg": "mean",
             "step_ms": 60_000, "viz_kind": "line"},
            {"title": "Latest value", "selector": "", "agg": "mean",
             "step_ms": 60_000, "viz_kind": "stat"},
        ],
    },
    "sustainability": {
        "template_id": "sustainability",
        "title": "Sustainability",
        "audience": "any",
        "panels": [
            {"title": "Estimated power", "selector": "estimated_power_watts", "agg": "mean",
             "step_ms": 60_000, "viz_kind": "line"},
            {"title": "Energy consumed", "selector": "estimated_energy_joules", "agg": "max",
             "step_ms": 300_000, "viz_kind": "stat"},
            {"title": "CPU vs power", "selector": "cpu_utilization", "agg": "mean",
             "step_ms": 60_000, "viz_kind": "line"},
        ],
    },
}


def validate_template(doc: dict) -> None:
    from obstack.core.selector import parse_selector

    if not doc.get("template_id"):
        raise ValueError("template_id must be non-empty")
    panels = doc.get("panels") or []
    if not panels:
        raise ValueError("a dashboard template needs at least one panel")
    for panel in panels:
        parse_selector(panel.get("selector", ""))
        if panel.get("viz_kind") not in ("line", "stat", "table"):
            raise ValueError(f"bad viz_kind in panel {panel.get('title')!r}")
