"""Command-line interface: validate, plan, run, serve, collect, scenario."""

from __future__ import annotations

import logging
import os
import sys

import click

from obstack.cli.config import load_config, to_stack_settings, validate_config
from obstack.cli.plan import ValidationFailed, merge_components
from obstack.cli.supervise import Supervisor, processes_for
from obstack.core.errors import ObstackError

logging.basicConfig(
    level=os.environ.get("OBSTACK_LOG_LEVEL", "INFO"),
    format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
)


@click.group()
def main() -> None:
    """obstack: a self-contained observability stack."""


@main.group()
def stack() -> None:
    """Validate, plan, and run a configured stack."""


@stack.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def validate(config_path: str) -> None:
    """Check the configuration against the stack composition rules."""
    try:
        report = validate_config(load_config(config_path))
    except FileNotFoundError:
        click.echo(f"ERROR: config file not found: {config_path}", err=True)
        sys.exit(1)
    except ObstackError as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    for line in report.lines():
        click.echo(line)
    if report.ok:
        click.echo("configuration valid")
        sys.exit(0)
    sys.exit(1)


@stack.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("-o", "--output", type=click.Path(), default=None)
def plan(config_path: str, output: str | None) -> None:
    """Merge component definitions into one deployment plan."""
    try:
        document = merge_components(load_config(config_path))
    except FileNotFoundError:
        click.echo(f"ERROR: config file not found: {config_path}", err=True)
        sys.exit(1)
    except (ValidationFailed, ObstackError) as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(document)
        click.echo(f"plan written to {output}")
    else:
        click.echo(document, nl=False)


@stack.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--env-file", "env_file", type=click.Path(), default=None)
def run(config_path: str, env_file: str | None) -> None:
    """Launch the enabled components as supervised processes."""
    from obstack.api.auth import load_env_file

    try:
        config = load_config(config_path)
    except (FileNotFoundError, ObstackError) as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    report = validate_config(config)
    for line in report.lines():
        click.echo(line)
    if not report.ok:
        sys.exit(1)

    env_path = env_file or config.env_file
    if env_path and os.path.exists(env_path):
        for key, value in load_env_file(env_path).items():
            os.environ.setdefault(key, value)

    specs = processes_for(config.enabled(), config_path)
    click.echo(f"starting {len(specs)} process(es): {', '.join(s.name for s in specs)}")
    sys.exit(Supervisor(specs).run())


@stack.group()
def components() -> None:
    """Inspect the component catalog."""


@components.command("list")
def components_list() -> None:
    from obstack.cli.config import COMPONENTS, REQUIRES

    for name in COMPONENTS:
        needs = REQUIRES.get(name, [])
        suffix = ""
        if needs:
            suffix = " (requires " + ", ".join(" or ".join(g) for g in needs) + ")"
        click.echo(f"{name}{suffix}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
def serve(config_path: str | None) -> None:
    """Run the server process hosting the enabled backend components."""
    import uvicorn

    from obstack.api.app import create_app
    from obstack.api.auth import CredentialStore, load_env_file
    from obstack.api.stack import Stack, StackSettings

    if config_path:
        config = load_config(config_path)
        env_path = config.env_file
        if env_path and os.path.exists(env_path):
            for key, value in load_env_file(env_path).items():
                os.environ.setdefault(key, value)
        settings = to_stack_settings(config, dict(os.environ))
    else:
        settings = StackSettings()

    stack_obj = Stack(settings)
    app = create_app(stack_obj, CredentialStore.from_env())
    stack_obj.start_background()
    host, _, port = settings.listen.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    finally:
        stack_obj.stop()


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--replay", "replay_path", type=click.Path(), default=None,
              help="Replay snapshots from a JSON-lines file instead of psutil.")
def collect(config_path: str | None, replay_path: str | None) -> None:
    """Run the collection agent."""
    import time as time_module

    from obstack.collector import CollectorAgent, PowerModel, PsutilProvider, ReplayProvider

    section = {}
    if config_path:
        section = load_config(config_path).section("collector")
    model_cfg = section.get("power_model", {})
    model = PowerModel(
        p_idle_watts=float(model_cfg.get("p_idle_watts", 50.0)),
        p_max_watts=float(model_cfg.get("p_max_watts", 150.0)),
        exponent=float(model_cfg.get("exponent", 1.0)),
    )
    provider = ReplayProvider(replay_path) if replay_path else PsutilProvider()
    agent = CollectorAgent(
        provider,
        interval_seconds=float(section.get("interval_seconds", 5)),
        power_model=model,
        push_url=section.get("push_url"),
    )
    agent.start(listen=section.get("listen", "127.0.0.1:9100"))
    click.echo(f"collector running (pull port {agent.pull_port}); Ctrl-C to stop")
    try:
        while True:
            time_module.sleep(1)
    except KeyboardInterrupt:
        agent.stop()


@main.group()
def scenario() -> None:
    """Scripted end-to-end scenarios."""


@scenario.command("run")
@click.option("--file", "file_path", required=True, type=click.Path())
@click.option("--api", "api_url", required=True)
@click.option("--token", default=None, help="Bearer token for expectation queries.")
def scenario_run(file_path: str, api_url: str, token: str | None) -> None:
    import httpx

    from obstack.scenario import StackUnreachable, load_scenario, run_scenario

    try:
        spec = load_scenario(file_path)
    except (FileNotFoundError, ValueError) as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    client = httpx.Client(base_url=api_url, timeout=30.0)
    try:
        report = run_scenario(spec, client, token=token or os.environ.get("API_ADMIN_TOKEN"))
    except StackUnreachable as exc:
        click.echo(f"ERROR: stack unreachable: {exc}", err=True)
        sys.exit(2)
    for line in report.lines():
        click.echo(line)
    sys.exit(0 if report.ok else 1)


if __name__ == "__main__":
    main()
