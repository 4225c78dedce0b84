"""Command line entry point.

Headless corpus generation:

    llmscape run --scenario default --seed 42 --backend scripted \
        --ticks 500 --headless --log session.jsonl

Live service for the browser companion:

    llmscape run --scenario default --seed 42 --backend scripted \
        --listen 127.0.0.1:8600
"""
from __future__ import annotations

import sys
import time

import click

from .gateway import LiveBackend
from .scenario import build_simulation, load_scenario
from .service import DEFAULT_TICK_RATE, SimulationService, serve


@click.group()
def main() -> None:
    """A sandbox world of LLM-driven agents on a mutable terrain."""


@main.command()
@click.option("--scenario", "scenario_source", default="default", show_default=True,
              help="Scenario file path or built-in name.")
@click.option("--seed", default=0, show_default=True, type=int,
              help="Seed for the session's random stream.")
@click.option("--backend", "backend_kind", default="scripted", show_default=True,
              type=click.Choice(["scripted", "live"]))
@click.option("--script", "script_path", default=None, type=click.Path(),
              help="Reply script for the scripted backend (overrides the scenario's).")
@click.option("--ticks", default=None, type=int,
              help="Number of ticks to run (default: 400, unlimited with --listen).")
@click.option("--headless", is_flag=True,
              help="Run as fast as possible instead of pacing the wall clock.")
@click.option("--log", "log_path", default=None, type=click.Path(),
              help="Write the session corpus (JSONL) to this file.")
@click.option("--listen", default=None, metavar="ADDR:PORT",
              help="Serve the HTTP/WebSocket API while the session runs.")
def run(scenario_source, seed, backend_kind, script_path, ticks, headless, log_path, listen):
    """Run one simulation session."""
    scenario = load_scenario(scenario_source)

    backend = None
    if backend_kind == "live":
        backend = LiveBackend()

    simulation = build_simulation(
        scenario, seed=seed, script_path=script_path, backend=backend, log_path=log_path
    )

    if listen is not None:
        host, _, port_text = listen.rpartition(":")
        if not host or not port_text.isdigit():
            raise click.BadParameter("expected ADDR:PORT", param_hint="--listen")
        service = SimulationService(simulation, max_ticks=ticks, headless=headless)
        click.echo(f"serving on http://{host}:{port_text} (scenario={scenario.name}, seed={seed})")
        serve(service, host=host, port=int(port_text))
        return

    total = ticks if ticks is not None else 400
    interval = 0.0 if headless else 1.0 / DEFAULT_TICK_RATE
    for _ in range(total):
        started = time.monotonic()
        simulation.tick()
        if interval > 0:
            remaining = interval - (time.monotonic() - started)
            if remaining > 0:
                time.sleep(remaining)
    simulation.log.close()
    click.echo(f"ran {total} ticks, {simulation.log.last_seq} log entries")
    click.echo(f"state digest: {simulation.state_digest()}")


@main.command()
@click.argument("log_file", type=click.Path(exists=True))
def summary(log_file):
    """Per-category, per-actor, and per-action counts for a session log."""
    from .sessionlog import summarize

    result = summarize(log_file)
    for section, counts in result.as_dict().items():
        if section == "total":
            click.echo(f"total entries: {counts}")
            continue
        click.echo(f"{section}:")
        for key, count in counts.items():
            click.echo(f"  {key}: {count}")


@main.command()
@click.argument("log_file", type=click.Path(exists=True))
@click.option("--scenario", "scenario_source", default="default", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--script", "script_path", default=None, type=click.Path())
@click.option("--ticks", default=None, type=int,
              help="Tick count of the original session (default: last logged tick).")
def replay(log_file, scenario_source, seed, script_path, ticks):
    """Verify a scripted session log replays byte-identically."""
    from .sessionlog import ReplayDivergence
    from .sessionlog import replay as replay_log

    scenario = load_scenario(scenario_source)
    try:
        digest = replay_log(log_file, scenario, script_path, seed=seed, ticks=ticks)
    except ReplayDivergence as err:
        click.echo(str(err), err=True)
        sys.exit(1)
    click.echo(f"replay ok, state digest: {digest}")


if __name__ == "__main__":
    main()
