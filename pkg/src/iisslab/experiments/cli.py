"""Command-line runner.

Subcommands: simulate, certify, sweep, falsify, report, run-all.  All accept
--config/--seed/--out/--dt/--n/--strict; --scenario filters to one scenario.
Exit status is 0 only when every executed scenario passes (and, under
--strict, warns about nothing).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import ConfigError, load_config, scenario_rng
from .figures import render_all_figures
from .reporting import ScenarioResult, write_summary
from .scenarios import SCENARIOS, ScenarioIO, run_scenarios, simulate_scenario

_common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="YAML config file (defaults are built in)."),
    click.option("--scenario", "scenario", default=None,
                 help="Restrict to one scenario by name."),
    click.option("--seed", type=int, default=None, help="Master seed override."),
    click.option("--out", type=click.Path(), default=None,
                 help="Output directory (default: out)."),
    click.option("--dt", type=float, default=None,
                 help="Override the time step of every scenario."),
    click.option("--n", type=int, default=None,
                 help="Override the grid size of every scenario that has one."),
    click.option("--strict", is_flag=True, help="Fail on any warning."),
]


def common_options(fn):
    for opt in reversed(_common_options):
        fn = opt(fn)
    return fn


def _setup(config_path, scenario, seed, out, dt, n, kinds=None):
    try:
        cfg = load_config(config_path).override(seed=seed, out=out, dt=dt, n=n)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    names = [name for name, spec in SCENARIOS.items()
             if kinds is None or spec.kind in kinds]
    if scenario is not None:
        if scenario not in SCENARIOS:
            click.echo(f"unknown scenario {scenario!r}; known: "
                       f"{sorted(SCENARIOS)}", err=True)
            sys.exit(2)
        names = [scenario]
    ios = {name: ScenarioIO(cfg.params(name), scenario_rng(cfg.seed, name),
                            cfg.out, cfg.record_every) for name in names}
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg, names, ios


def _finish(cfg, results: list[ScenarioResult], strict: bool,
            with_report: bool = True) -> None:
    if with_report:
        figures = render_all_figures(cfg.out)
        path = write_summary(results, cfg.out, cfg.seed, figures)
        click.echo(f"summary: {path}")
    failed = [r for r in results if not r.passed or r.error]
    warned = [r for r in results if r.warnings]
    for r in results:
        status = r.verdict
        if strict and r.warnings and r.passed:
            status = "FAIL (strict: warnings)"
        click.echo(f"  {r.name:24s} {status:8s} {r.summary}")
        if r.error:
            click.echo(f"    error: {r.error}")
    if failed or (strict and warned):
        sys.exit(1)


@click.group()
def main():
    """Stability-certificate laboratory for discretized evolution systems."""


@main.command()
@common_options
@click.option("--dump-states", is_flag=True, help="Write state snapshots.")
def simulate(config_path, scenario, seed, out, dt, n, strict, dump_states):
    """Integrate scenario trajectories and dump norm traces."""
    cfg, names, ios = _setup(config_path, scenario, seed, out, dt, n)
    results = [simulate_scenario(name, ios[name], dump_states=dump_states)
               for name in names]
    _finish(cfg, results, strict, with_report=False)


def _kind_command(kinds, doc):
    def command(config_path, scenario, seed, out, dt, n, strict):
        cfg, names, ios = _setup(config_path, scenario, seed, out, dt, n, kinds)
        if not names:
            click.echo("no matching scenarios")
            return
        results = run_scenarios(ios, names)
        _finish(cfg, results, strict)

    command.__doc__ = doc
    return command


main.command(name="certify")(common_options(
    _kind_command({"certify"}, "Run the dissipation/bound certification scenarios.")))
main.command(name="sweep")(common_options(
    _kind_command({"sweep"}, "Run the parameter-sweep scenarios (growth rates).")))
main.command(name="falsify")(common_options(
    _kind_command({"falsify"}, "Run the counterexample/falsification scenarios.")))


@main.command()
@common_options
def report(config_path, scenario, seed, out, dt, n, strict):
    """Re-render figures and the markdown summary from existing CSV output."""
    cfg, names, _ = _setup(config_path, scenario, seed, out, dt, n)
    figures = render_all_figures(cfg.out)
    results = [ScenarioResult(name, SCENARIOS[name].kind, True,
                              "rendered from existing output") for name in names]
    path = write_summary(results, cfg.out, cfg.seed, figures)
    click.echo(f"summary: {path}")
    click.echo(f"figures: {len(figures)}")


@main.command(name="run-all")
@common_options
def run_all(config_path, scenario, seed, out, dt, n, strict):
    """Run every scenario, then render figures and the summary."""
    cfg, names, ios = _setup(config_path, scenario, seed, out, dt, n)
    results = run_scenarios(ios, names)
    _finish(cfg, results, strict)


if __name__ == "__main__":
    main()
