import subprocess
import sys
import textwrap

import pytest
from click.testing import CliRunner

from obstack.cli import (
    StackConfig,
    ValidationFailed,
    load_config,
    merge_components,
    startup_order,
    validate_config,
)
from obstack.cli.main import main
from obstack.cli.plan import STARTUP_DEPS
from obstack.cli.supervise import ProcessSpec, Supervisor, processes_for

FULL = """
data_dir = "./data"
env_file = ".env"

[collector]
enabled = true
push_url = "http://127.0.0.1:8080/api/v1/ingest"

[gateway]
enabled = true

[tsdb]
enabled = true

[metastore]
enabled = true

[analytics]
enabled = true

[alerting]
enabled = true

[api]
enabled = true

[dashboard]
enabled = true
"""

MINIMAL = """
[collector]
enabled = true
push_url = "http://127.0.0.1:8080/api/v1/ingest"

[gateway]
enabled = true

[tsdb]
enabled = true

[api]
enabled = true

[dashboard]
enabled = true
"""


def write_config(tmp_path, text, name="stack.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def toposort_oracle(enabled):
    """Reference Kahn implementation, written independently."""
    pending = {n: {d for d in STARTUP_DEPS[n] if d in set(enabled)} for n in enabled}
    done = []
    while pending:
        candidates = [n for n in sorted(pending) if not pending[n]]
        assert candidates, "cycle"
        head = candidates[0]
        done.append(head)
        pending.pop(head)
        for deps in pending.values():
            deps.discard(head)
    return done


class TestValidate:
    def test_full_config_valid(self, tmp_path):
        report = validate_config(load_config(write_config(tmp_path, FULL)))
        assert report.ok

    def test_minimal_closed_set_valid(self, tmp_path):
        report = validate_config(load_config(write_config(tmp_path, MINIMAL)))
        assert report.ok

    def test_analytics_alone_cites_all_three_rules(self, tmp_path):
        report = validate_config(
            load_config(write_config(tmp_path, "[analytics]\nenabled = true\n"))
        )
        assert not report.ok
        text = " | ".join(f"{p}: {m}" for p, m in report.errors)
        assert "collection layer" in text
        assert "visualization layer" in text
        assert "requires tsdb" in text

    def test_alerting_without_webhook_is_warning_only(self, tmp_path):
        config = FULL  # no alerting.default_webhook_url present
        report = validate_config(load_config(write_config(tmp_path, config)))
        assert report.ok
        assert any("webhook" in msg for _, msg in report.warnings)

    def test_bad_scrape_target_is_error(self, tmp_path):
        config = FULL + '\n[[gateway.scrape_targets]]\nurl = ""\n'
        report = validate_config(load_config(write_config(tmp_path, config)))
        assert any("scrape_targets[0].url" in path for path, _ in report.errors)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_config("/nonexistent/stack.toml")

    def test_parse_error(self, tmp_path):
        from obstack.core.errors import ParseError

        path = write_config(tmp_path, "not [valid toml")
        with pytest.raises(ParseError):
            load_config(path)


class TestPlan:
    def test_full_stack_topological_order(self, tmp_path):
        config = load_config(write_config(tmp_path, FULL))
        order = startup_order(config.enabled())
        assert order == [
            "metastore",
            "tsdb",
            "gateway",
            "collector",
            "analytics",
            "alerting",
            "api",
            "dashboard",
        ]
        assert order == toposort_oracle(config.enabled())

    def test_minimal_plan_has_five_entries(self, tmp_path):
        import yaml

        config = load_config(write_config(tmp_path, MINIMAL))
        doc = yaml.safe_load(merge_components(config))
        assert len(doc["stack"]["components"]) == 5

    def test_every_component_after_dependencies(self, tmp_path):
        import itertools

        optional = ["gateway", "tsdb", "metastore", "analytics", "alerting"]
        for r in range(len(optional) + 1):
            for extra in itertools.combinations(optional, r):
                enabled = sorted({"collector", "api", "dashboard", *extra})
                order = startup_order(enabled)
                assert sorted(order) == enabled
                position = {name: i for i, name in enumerate(order)}
                for name in enabled:
                    for dep in STARTUP_DEPS[name]:
                        if dep in position:
                            assert position[dep] < position[name]
                assert order == toposort_oracle(enabled)

    def test_deterministic_bytes(self, tmp_path):
        config = load_config(write_config(tmp_path, FULL))
        assert merge_components(config) == merge_components(config)

    def test_refuses_invalid_config(self, tmp_path):
        config = load_config(write_config(tmp_path, "[analytics]\nenabled = true\n"))
        with pytest.raises(ValidationFailed):
            merge_components(config)

    def test_no_secret_values_leak(self, tmp_path):
        secrets = {"API_ADMIN_TOKEN": "sup3r-s3cret-t0ken", "API_USER_TOKENS": "u:user_id=x"}
        (tmp_path / ".env").write_text(
            "".join(f"{k}={v}\n" for k, v in secrets.items())
        )
        config = load_config(write_config(tmp_path, FULL))
        document = merge_components(config)
        for value in secrets.values():
            assert value not in document
        # env var NAMES are referenced for the api component
        assert "API_ADMIN_TOKEN" in document


class TestRepoExamples:
    def test_shipped_example_config_validates(self):
        report = validate_config(load_config("examples.stack.toml"))
        assert report.ok, report.lines()


class TestCliCommands:
    def test_validate_exit_codes(self, tmp_path):
        runner = CliRunner()
        good = write_config(tmp_path, FULL, "good.toml")
        bad = write_config(tmp_path, "[analytics]\nenabled = true\n", "bad.toml")
        assert runner.invoke(main, ["stack", "validate", "--config", good]).exit_code == 0
        result = runner.invoke(main, ["stack", "validate", "--config", bad])
        assert result.exit_code == 1
        assert "collection layer" in result.output

    def test_plan_to_file(self, tmp_path):
        runner = CliRunner()
        config = write_config(tmp_path, FULL)
        out = tmp_path / "deployment.yml"
        result = runner.invoke(main, ["stack", "plan", "--config", config, "-o", str(out)])
        assert result.exit_code == 0
        assert out.exists()
        assert "components" in out.read_text()

    def test_components_list(self):
        runner = CliRunner()
        result = runner.invoke(main, ["stack", "components", "list"])
        assert result.exit_code == 0
        for name in ("collector", "gateway", "tsdb", "dashboard"):
            assert name in result.output

    def test_missing_config_file(self):
        runner = CliRunner()
        result = runner.invoke(main, ["stack", "validate", "--config", "/no/such.toml"])
        assert result.exit_code == 1


class TestSupervisor:
    def spec(self, code=0, name="w"):
        return ProcessSpec(name=name, argv=[sys.executable, "-c", f"import sys; sys.exit({code})"])

    def test_processes_for_mapping(self):
        specs = processes_for(["collector", "gateway", "tsdb", "api", "dashboard"], "x.toml")
        assert [s.name for s in specs] == ["server", "collector"]
        specs = processes_for(["collector"], "x.toml")
        assert [s.name for s in specs] == ["collector"]

    def test_restart_until_abandoned(self):
        supervisor = Supervisor([self.spec(code=1)], restart_limit=3, restart_window=60)
        supervisor.start_all()
        healthy = True
        for i in range(10):
            supervisor._managed[0].process.wait()
            healthy = supervisor.poll_once(now=float(i))
            if not healthy:
                break
        assert not healthy
        assert supervisor._managed[0].abandoned

    def test_clean_exit_not_restarted_beyond_limit_window(self):
        supervisor = Supervisor([self.spec(code=0)], restart_limit=2, restart_window=0.001)
        supervisor.start_all()
        supervisor._managed[0].process.wait()
        # restarts spaced wider than the window never exhaust the limit
        assert supervisor.poll_once(now=0.0)
        supervisor._managed[0].process.wait()
        assert supervisor.poll_once(now=10.0)
        supervisor.stop_all()
