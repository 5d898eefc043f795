"""Merge per-component definitions into one deployment plan document.

The plan enumerates every enabled component with its resolved config,
the environment variable names it reads (never their values, so secrets
stay in the .env file), and a startup order derived from the dependency
graph: topological, ties broken alphabetically. Identical input yields
byte-identical output.
"""

from __future__ import annotations

from typing import Dict, List, Set

import yaml

from obstack.cli.config import COMPONENTS, StackConfig, validate_config
from obstack.core.errors import ObstackError


class ValidationFailed(ObstackError):
    """merge_components refused a config that does not validate."""


# Startup-order dependency edges: every component starts after the
# components it sends data to or reads from.
STARTUP_DEPS: Dict[str, Set[str]] = {
    "metastore": set(),
    "tsdb": set(),
    "gateway": {"metastore", "tsdb"},
    "collector": {"gateway"},
    "analytics": {"collector", "metastore", "tsdb"},
    "alerting": {"analytics", "tsdb"},
    "api": {"alerting", "analytics", "gateway", "metastore", "tsdb"},
    "dashboard": {"api"},
}

# Environment variable NAMES each component reads at startup.
ENV_REFERENCES: Dict[str, List[str]] = {
    "api": ["API_ADMIN_TOKEN", "API_USER_TOKENS", "API_LISTEN_ADDR"],
}


def startup_order(enabled: List[str]) -> List[str]:
    """Kahn's algorithm over the enabled subgraph, alphabetical ties."""
    enabled_set = set(enabled)
    remaining = {
        name: {d for d in STARTUP_DEPS[name] if d in enabled_set} for name in enabled_set
    }
    order: List[str] = []
    while remaining:
        ready = sorted(name for name, deps in remaining.items() if not deps)
        if not ready:
            raise ValidationFailed(f"dependency cycle among {sorted(remaining)}")
        chosen = ready[0]
        order.append(chosen)
        del remaining[chosen]
        for deps in remaining.values():
            deps.discard(chosen)
    return order


def merge_components(config: StackConfig) -> str:
    """The single deployment plan document (YAML text), dependency-ordered."""
    report = validate_config(config)
    if not report.ok:
        raise ValidationFailed("; ".join(f"{p}: {m}" for p, m in report.errors))

    enabled = config.enabled()
    order = startup_order(enabled)
    components = []
    for name in order:
        section = {k: v for k, v in config.section(name).items() if k != "enabled"}
        components.append(
            {
                "name": name,
                "depends_on": sorted(d for d in STARTUP_DEPS[name] if d in set(enabled)),
                "config": section,
                "env": ENV_REFERENCES.get(name, []),
            }
        )
    plan = {
        "stack": {
            "env_file": config.env_file,
            "data_dir": config.data_dir,
            "components": components,
        }
    }
    return yaml.safe_dump(plan, sort_keys=True, default_flow_style=False)
