"""Stack configuration: one TOML file, one section per component.

Only the collection and visualization layers are mandatory; everything
else is optional, but an enabled component drags its upstream
dependencies in (you cannot run analytics without the time-series store
it reads). Validation reports every violation with its config path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from obstack.core.errors import ObstackError, ParseError

COMPONENTS = (
    "collector",
    "gateway",
    "tsdb",
    "metastore",
    "analytics",
    "alerting",
    "api",
    "dashboard",
)

# component -> hard requirements (any-of groups are tuples)
REQUIRES: Dict[str, List[Tuple[str, ...]]] = {
    "gateway": [("tsdb", "metastore")],
    "analytics": [("tsdb",)],
    "alerting": [("tsdb",)],
    "dashboard": [("api",)],
}


@dataclass
class StackConfig:
    raw: Dict[str, Any]
    path: str = ""

    @property
    def env_file(self) -> str:
        return self.raw.get("env_file", ".env")

    @property
    def data_dir(self) -> str:
        return self.raw.get("data_dir", "./data")

    def enabled(self) -> List[str]:
        out = []
        for name in COMPONENTS:
            section = self.raw.get(name)
            if isinstance(section, dict) and section.get("enabled", False):
                out.append(name)
        return out

    def section(self, name: str) -> Dict[str, Any]:
        section = self.raw.get(name, {})
        return dict(section) if isinstance(section, dict) else {}


@dataclass
class ValidationReport:
    errors: List[Tuple[str, str]] = field(default_factory=list)
    warnings: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self) -> List[str]:
        out = [f"ERROR {path}: {msg}" for path, msg in self.errors]
        out += [f"WARNING {path}: {msg}" for path, msg in self.warnings]
        return out


def load_config(path: str) -> StackConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    return StackConfig(raw=raw, path=path)


def validate_config(config: StackConfig | str) -> ValidationReport:
    """Check mandatory layers, dependency closure, and obvious misconfig."""
    if isinstance(config, str):
        config = load_config(config)
    report = ValidationReport()
    enabled = set(config.enabled())

    if not enabled:
        report.errors.append(("", "no components enabled"))

    if "collector" not in enabled:
        report.errors.append(
            ("collector.enabled", "mandatory collection layer is missing")
        )
    if "dashboard" not in enabled:
        report.errors.append(
            ("dashboard.enabled", "mandatory visualization layer is missing")
        )

    for component in sorted(enabled):
        for group in REQUIRES.get(component, []):
            if not any(dep in enabled for dep in group):
                want = " or ".join(group)
                report.errors.append(
                    (f"{component}.enabled", f"requires {want} to be enabled")
                )

    if "gateway" in enabled:
        targets = config.section("gateway").get("scrape_targets", [])
        collector_pushes = bool(config.section("collector").get("push_url"))
        if not targets and not collector_pushes:
            report.warnings.append(
                ("gateway.scrape_targets", "no scrape targets and no collector push_url; "
                 "the gateway will receive nothing")
            )
        for i, target in enumerate(targets):
            if not target.get("url"):
                report.errors.append((f"gateway.scrape_targets[{i}].url", "must be non-empty"))
            if int(target.get("interval_seconds", 15)) < 1:
                report.errors.append(
                    (f"gateway.scrape_targets[{i}].interval_seconds", "must be >= 1")
                )

    if "alerting" in enabled and not config.section("alerting").get("default_webhook_url"):
        report.warnings.append(
            ("alerting.default_webhook_url", "alerting enabled without a webhook URL; "
             "rules must each carry their own")
        )

    if "collector" in enabled:
        interval = config.section("collector").get("interval_seconds", 5)
        if not 1 <= float(interval) <= 300:
            report.errors.append(("collector.interval_seconds", "must be within 1..300"))
        model = config.section("collector").get("power_model", {})
        if model:
            idle = float(model.get("p_idle_watts", 50.0))
            peak = float(model.get("p_max_watts", 150.0))
            if idle < 0 or peak < idle:
                report.errors.append(
                    ("collector.power_model", "requires 0 <= p_idle_watts <= p_max_watts")
                )
            if float(model.get("exponent", 1.0)) <= 0:
                report.errors.append(("collector.power_model.exponent", "must be > 0"))

    if "tsdb" in enabled:
        section = config.section("tsdb")
        raw_h = float(section.get("raw_retention_hours", 24))
        m_d = float(section.get("rollup_1m_retention_days", 7))
        h_d = float(section.get("rollup_1h_retention_days", 90))
        if not raw_h < m_d * 24 < h_d * 24:
            report.errors.append(
                ("tsdb", "retention ladder must satisfy raw < rollup_1m < rollup_1h")
            )

    return report


def to_stack_settings(config: StackConfig, env: Dict[str, str]):
    """Resolve the server-process settings from config plus environment."""
    from obstack.api.stack import StackSettings
    from obstack.gateway import DEFAULT_DENYLIST, ScrapeTarget

    gateway = config.section("gateway")
    tsdb = config.section("tsdb")
    analytics = config.section("analytics")
    anomaly = analytics.get("anomaly", {})
    alerting = config.section("alerting")
    api = config.section("api")
    enabled = set(config.enabled())

    targets = [
        ScrapeTarget(
            url=t["url"],
            interval_seconds=int(t.get("interval_seconds", 15)),
            extra_labels=dict(t.get("labels", {})),
        )
        for t in gateway.get("scrape_targets", [])
    ]
    return StackSettings(
        data_dir=config.data_dir,
        listen=env.get("API_LISTEN_ADDR") or api.get("listen", "127.0.0.1:8080"),
        test_mode=bool(config.raw.get("test_mode", False)),
        raw_retention_hours=float(tsdb.get("raw_retention_hours", 24)),
        rollup_1m_retention_days=float(tsdb.get("rollup_1m_retention_days", 7)),
        rollup_1h_retention_days=float(tsdb.get("rollup_1h_retention_days", 90)),
        max_series=int(tsdb.get("max_series", 1_000_000)),
        shards=int(tsdb.get("shards", 4)),
        label_denylist=list(gateway.get("label_denylist", sorted(DEFAULT_DENYLIST))),
        scrape_targets=targets,
        anomaly_window_points=int(anomaly.get("window_points", 60)),
        anomaly_threshold_k=float(anomaly.get("threshold_k", 3.5)),
        cycle_interval_seconds=float(analytics.get("cycle_interval_seconds", 300)),
        default_eval_interval_seconds=float(alerting.get("default_eval_interval_seconds", 15)),
        ui_dir=config.section("dashboard").get("assets_dir"),
        components={name: name in enabled for name in COMPONENTS if name != "collector"},
    )
