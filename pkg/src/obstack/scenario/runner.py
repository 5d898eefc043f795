"""Drive a scenario through a running stack and check its expectations.

Samples are pushed with explicit timestamps and the virtual-time header,
so a one-minute scenario completes in milliseconds against a test-mode
stack; with no pinned base time the scenario lands in the recent past
and also works against a real-time stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from obstack.core.errors import ObstackError
from obstack.scenario.model import Expectation, Scenario

CHUNK_LINES = 5000


class StackUnreachable(ObstackError):
    """No component answered at the API endpoint."""


@dataclass
class ScenarioReport:
    scenario: str
    passed: List[str] = field(default_factory=list)
    failed: List[Tuple[str, str]] = field(default_factory=list)
    details: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed

    def lines(self) -> List[str]:
        out = [f"scenario {self.scenario}: "
               f"{len(self.passed)} passed, {len(self.failed)} failed"]
        out += [f"  PASS {name}" for name in self.passed]
        out += [f"  FAIL {name}: {detail}" for name, detail in self.failed]
        return out


def run_scenario(scenario: Scenario, client, token: Optional[str] = None) -> ScenarioReport:
    """Push the script, then evaluate every expectation via the API.

    ``client`` is anything with httpx-style .post/.get (an httpx.Client
    bound to the API base URL, or an in-process test client).
    """
    base = scenario.resolved_base_ms()
    headers = {"X-Virtual-Time-Ms": str(base + scenario.duration_ms() + 1000)}
    auth = {"Authorization": f"Bearer {token}"} if token else {}

    lines = []
    for entry in scenario.script:
        labels = {**scenario.labels, **entry.labels}
        label_block = ",".join(f'{k}="{v}"' for k, v in sorted(labels.items()))
        lines.append(
            f"{entry.metric}{{{label_block}}} {entry.kind} {entry.unit} "
            f"{entry.value!r} {base + entry.offset_ms}"
        )
    report = ScenarioReport(scenario=scenario.name)
    try:
        for i in range(0, len(lines), CHUNK_LINES):
            chunk = "".join(line + "\n" for line in lines[i : i + CHUNK_LINES])
            response = client.post("/api/v1/ingest", content=chunk, headers=headers)
            if response.status_code >= 500:
                raise StackUnreachable(f"ingest returned {response.status_code}")
            body = response.json()
            if body.get("rejected"):
                report.details.append(f"ingest rejected {len(body['rejected'])} lines")
    except StackUnreachable:
        raise
    except Exception as exc:
        raise StackUnreachable(f"cannot reach ingest endpoint: {exc}") from exc

    for expectation in scenario.expectations:
        ok, detail = _evaluate(expectation, base, client, auth)
        if ok:
            report.passed.append(expectation.name)
        else:
            report.failed.append((expectation.name, detail))
        report.details.append(f"{expectation.name}: {detail}")
    return report


def _evaluate(exp: Expectation, base: int, client, auth) -> Tuple[bool, str]:
    start = base + exp.start_ms
    end = base + exp.end_ms
    try:
        if exp.kind == "query_range":
            params = dict(
                selector=exp.selector, start=start, end=end, step=exp.step_ms, agg=exp.agg
            )
            if exp.q is not None:
                params["q"] = exp.q
            response = client.get("/api/v1/query_range", params=params, headers=auth)
            if response.status_code != 200:
                return False, f"query failed: {response.status_code} {response.text[:120]}"
            series = response.json()["series"]
            if not series or not series[0]["points"]:
                return False, "no data"
            actual = series[0]["points"][0][1]
        elif exp.kind == "anomaly_count":
            response = client.get(
                "/api/v1/anomalies",
                params=dict(selector=exp.selector, start=start, end=end),
                headers=auth,
            )
            if response.status_code != 200:
                return False, f"query failed: {response.status_code} {response.text[:120]}"
            actual = float(len(response.json()["spans"]))
        else:  # event_count
            response = client.get(
                "/api/v1/events",
                params=dict(selector=exp.selector, start=start, end=end),
                headers=auth,
            )
            if response.status_code != 200:
                return False, f"query failed: {response.status_code} {response.text[:120]}"
            actual = float(len(response.json()["events"]))
    except Exception as exc:
        return False, f"evaluation error: {exc}"

    ok = _compare(actual, exp.op, exp.value, exp.tolerance)
    return ok, f"actual={actual!r} expected {exp.op} {exp.value!r} (tol {exp.tolerance!r})"


def _compare(actual: float, op: str, expected: float, tolerance: float) -> bool:
    if op == "==":
        return actual == expected
    if op == "~=":
        return abs(actual - expected) <= tolerance
    if op == ">":
        return actual > expected
    if op == ">=":
        return actual >= expected
    if op == "<":
        return actual < expected
    return actual <= expected
