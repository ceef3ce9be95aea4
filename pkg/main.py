#!/usr/bin/env python3
"""Minimum-rate capacity regions of energy harvesting MACs - Main CLI Interface."""

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

from src import __version__
from src.channel.region import ReceiverModel
from src.exceptions import InvalidParameterError, SwiptError
from src.reports.artifacts import (
    RunArtifacts,
    bounds_rows,
    write_boundary,
    write_simulation,
    write_sweep,
)
from src.reports.plots import plot_regions, plot_sweep
from src.reports.validation import run_suite
from src.scenarios.config import ScenarioConfig, dump_config, load_config, load_reference
from src.scenarios.settings import configure_logging, get_settings
from src.simulation.simulator import Banking, SwitchingRule, XiMode, run
from src.solver.optimizer import (
    BoundaryPoint,
    RewardVector,
    Scenario,
    SolverOptions,
    dual_solve,
    no_transfer_point,
    reward_grid,
    sum_rate,
    trace_boundary,
)

logger = logging.getLogger(__name__)

# Initialize CLI
app = typer.Typer(
    name="swipt-regions",
    help="Trace minimum-rate capacity regions of fading SWIPT multiple-access channels",
)
console = Console()

ALL_MODELS = [ReceiverModel.IDEAL, ReceiverModel.POWER_SPLITTING, ReceiverModel.TIME_SWITCHING]
DEFAULT_RANGES = {"deficit": "0uW:40uW:5", "harvest": "1W:10W:5"}


@app.callback()
def main_callback() -> None:
    """Configure logging from SWIPT_* environment settings."""
    configure_logging()


def _load(config_path: Path | None) -> ScenarioConfig:
    return load_config(config_path) if config_path is not None else load_reference()


def _models(model: str, config: ScenarioConfig) -> list[ReceiverModel]:
    if model == "all":
        return list(ALL_MODELS)
    if model == "":
        return [config.model]
    try:
        return [ReceiverModel(model)]
    except ValueError as e:
        raise InvalidParameterError(f"unknown model '{model}' (ideal, ts, ps or all)") from e


def _out_dir(out: Path | None, command: str) -> Path:
    return out if out is not None else get_settings().output_dir / command


def _solver_options(config: ScenarioConfig, workers: int | None) -> SolverOptions:
    options = config.solver_options()
    if workers is not None:
        options = replace(options, workers=workers)
    return options


def parse_range(text: str, config: ScenarioConfig) -> list[float]:
    """Parse ``a:b:steps`` into J/slot values; bounds may carry units."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"range must look like a:b:steps, got '{text}'")
    start, stop = (config.joules(p.strip()) for p in parts[:2])
    try:
        steps = int(parts[2])
    except ValueError as e:
        raise InvalidParameterError(f"range steps must be an integer, got '{parts[2]}'") from e
    if steps < 1:
        raise InvalidParameterError("range needs at least one step", steps=steps)
    if steps == 1 or start == stop:
        return [start]
    return np.linspace(start, stop, steps).tolist()


def _rate_pairs(points: list[BoundaryPoint]) -> list[tuple[float, float]]:
    return [(float(p.avg_rates.rates[0]), float(p.avg_rates.rates[1])) for p in points]


def _trace_no_transfer(scenario: Scenario, mu_grid: int, options: SolverOptions) -> list[BoundaryPoint]:
    points = []
    for mu in reward_grid(scenario.num_users, mu_grid):
        try:
            points.append(no_transfer_point(scenario, mu, options))
        except SwiptError as e:
            logger.warning("No-transfer baseline infeasible at mu=%s: %s", mu.mu.tolist(), e.detail)
    return points


@app.command()
def region(
    config_path: Path | None = typer.Option(None, "--config", help="Scenario YAML (default: bundled reference)"),
    out: Path | None = typer.Option(None, "--out", help="Output directory"),
    model: str = typer.Option("all", "--model", help="ideal, ts, ps or all"),
    seed: int | None = typer.Option(None, "--seed", help="Seed recorded in the manifest"),
    mu_grid: int | None = typer.Option(None, "--mu-grid", help="Reward grid points per axis"),
    baselines: bool = typer.Option(True, help="Also trace the rho=0 and no-transfer baselines"),
    deficits: str | None = typer.Option(
        None, "--deficits", help="Comma-separated deficits, e.g. '0,5uW,10uW', traced for the first model"
    ),
    workers: int | None = typer.Option(None, "--workers", help="Parallel processes over rewards"),
):
    """Trace region boundaries for each receiver model."""
    try:
        config = _load(config_path)
        scenario = config.to_scenario()
        options = _solver_options(config, workers)
        grid = mu_grid or config.solver.mu_grid
        models = _models(model, config)
        artifacts = RunArtifacts(_out_dir(out, "region"))

        console.print(f"[bold blue]Tracing regions:[/bold blue] {config.name} ({scenario.fading.num_states} joint states)")
        curves: dict[str, list[tuple[float, float]]] = {}
        failures = 0
        for receiver in models:
            points = trace_boundary(scenario.with_model(receiver), grid, options)
            if not points:
                console.print(f"[red]✗ {receiver.label}: no feasible boundary point[/red]")
                failures += 1
                continue
            write_boundary(artifacts, receiver.value, points)
            header, rows = bounds_rows(points, scenario.fading, scenario.sigma2)
            artifacts.write_csv(f"bounds_{receiver.value}.csv", header, rows)
            console.print(f"[green]✓ {receiver.label}:[/green] {len(points)} points")
            if scenario.num_users == 2:
                curves[receiver.label] = _rate_pairs(points)

        if baselines:
            unconstrained = trace_boundary(
                scenario.with_model(ReceiverModel.IDEAL).with_rho(np.zeros(scenario.num_users)), grid, options
            )
            no_transfer = _trace_no_transfer(scenario, grid, options)
            for label, points in (("ideal_rho0", unconstrained), ("no_transfer", no_transfer)):
                if points:
                    write_boundary(artifacts, label, points)
                    if scenario.num_users == 2:
                        curves[label.replace("_", " ")] = _rate_pairs(points)

        if curves:
            artifacts.add(plot_regions(curves, artifacts.path("regions.svg"), f"Capacity regions: {config.name}"))

        if deficits:
            family: dict[str, list[tuple[float, float]]] = {}
            receiver = models[0]
            for k, text in enumerate(deficits.split(",")):
                value = config.joules(text.strip())
                points = trace_boundary(scenario.with_model(receiver).with_deficit(value), grid, options)
                if points:
                    write_boundary(artifacts, f"{receiver.value}_deficit{k}", points)
                    if scenario.num_users == 2:
                        family[f"Δ = {value:.3g} J/slot"] = _rate_pairs(points)
            if family:
                artifacts.add(plot_regions(family, artifacts.path(f"regions_{receiver.value}_deficits.svg"),
                                           f"{receiver.label} region against deficit"))

        manifest = artifacts.write_manifest(config, "region", seed if seed is not None else config.simulation.seed)
        console.print(f"[bold green]✓ Artifacts in {artifacts.out_dir}[/bold green] ({manifest.name})")
        if failures == len(models):
            raise typer.Exit(1)
    except SwiptError as e:
        console.print(f"[red]Error: {e.detail}[/red]")
        raise typer.Exit(1) from e


@app.command()
def sweep(
    config_path: Path | None = typer.Option(None, "--config", help="Scenario YAML (default: bundled reference)"),
    out: Path | None = typer.Option(None, "--out", help="Output directory"),
    model: str = typer.Option("all", "--model", help="ideal, ts, ps or all"),
    seed: int | None = typer.Option(None, "--seed", help="Seed recorded in the manifest"),
    axis: str = typer.Option("deficit", "--axis", help="deficit or harvest"),
    value_range: str | None = typer.Option(
        None, "--range", help="a:b:steps; bounds may carry units (default 0uW:40uW:5 or 1W:10W:5)"
    ),
    rho: str | None = typer.Option(None, "--rho", help="Comma-separated minimum rates overriding the config"),
):
    """Sum rate against the receiver deficit or the transmitter harvest mean."""
    try:
        if axis not in ("deficit", "harvest"):
            raise InvalidParameterError(f"unknown axis '{axis}' (deficit or harvest)")
        config = _load(config_path)
        scenario = config.to_scenario()
        if rho is not None:
            try:
                scenario = scenario.with_rho([float(r) for r in rho.split(",")])
            except ValueError as e:
                raise InvalidParameterError(f"minimum rates must be numbers, got '{rho}'") from e
        options = config.solver_options()
        params = parse_range(value_range or DEFAULT_RANGES[axis], config)
        models = _models(model, config)
        artifacts = RunArtifacts(_out_dir(out, "sweep"))

        console.print(f"[bold blue]Sweeping {axis}:[/bold blue] {len(params)} values, {len(models)} model(s)")
        sums: dict[ReceiverModel, list[float | None]] = {}
        for receiver in models:
            values: list[float | None] = []
            for value in params:
                if axis == "deficit":
                    case = scenario.with_deficit(value)
                else:
                    case = scenario.with_harvest([value] * scenario.num_users)
                try:
                    values.append(sum_rate(case.with_model(receiver), options))
                except SwiptError as e:
                    logger.warning("%s infeasible at %s=%.6g: %s", receiver.value, axis, value, e.detail)
                    values.append(None)
            sums[receiver] = values

        write_sweep(artifacts, params, sums, f"sweep_{axis}.csv")
        xlabel = "Receiver deficit (J/slot)" if axis == "deficit" else "Mean transmitter harvest (J/slot)"
        artifacts.add(
            plot_sweep(params, {m.label: sums[m] for m in models}, artifacts.path(f"sweep_{axis}.svg"), xlabel)
        )
        artifacts.write_manifest(config, f"sweep --axis {axis}", seed if seed is not None else config.simulation.seed)

        table = Table(title=f"Sum rate (bits/channel use) against {axis}")
        table.add_column("param (J/slot)", justify="right")
        for receiver in models:
            table.add_column(receiver.label, justify="right")
        for k, value in enumerate(params):
            cells = [f"{sums[m][k]:.6f}" if sums[m][k] is not None else "-" for m in models]
            table.add_row(f"{value:.4g}", *cells)
        console.print(table)
    except SwiptError as e:
        console.print(f"[red]Error: {e.detail}[/red]")
        raise typer.Exit(1) from e


@app.command()
def simulate(
    config_path: Path | None = typer.Option(None, "--config", help="Scenario YAML (default: bundled reference)"),
    out: Path | None = typer.Option(None, "--out", help="Output directory"),
    model: str = typer.Option("", "--model", help="ideal, ts, ps or all (default: the config's model)"),
    seed: int | None = typer.Option(None, "--seed", help="Random seed (default: the config's)"),
    horizon: int | None = typer.Option(None, "--horizon", help="Slots to simulate"),
    burn_in: int | None = typer.Option(None, "--burn-in", help="Leading slots left out of averages"),
    switching: SwitchingRule | None = typer.Option(None, "--switching", help="Time-switching rule"),
    xi_mode: XiMode | None = typer.Option(None, "--xi-mode", help="RF energy per slot"),
    ps_banking: Banking | None = typer.Option(None, "--ps-banking", help="Power-splitting erasure banking"),
    trace_slots: int | None = typer.Option(None, "--trace-slots", help="Leading slots dumped to a trace CSV"),
):
    """Simulate buffers under the equal-reward boundary policy."""
    try:
        config = _load(config_path)
        scenario = config.to_scenario()
        sim = config.simulation
        run_seed = seed if seed is not None else sim.seed
        run_horizon = horizon if horizon is not None else sim.horizon
        run_burn_in = burn_in if burn_in is not None else sim.burn_in
        overrides = {
            "switching": switching,
            "xi_mode": xi_mode,
            "ps_banking": ps_banking,
            "trace_slots": trace_slots,
        }
        sim_options = replace(
            config.simulation_options(), **{k: v for k, v in overrides.items() if v is not None}
        )
        options = config.solver_options()
        artifacts = RunArtifacts(_out_dir(out, "simulate"))

        for receiver in _models(model, config):
            case = scenario.with_model(receiver)
            point = dual_solve(case, RewardVector.uniform(case.num_users), options, backoff=True)
            console.print(f"[bold blue]Simulating {receiver.label}:[/bold blue] {run_horizon} slots, seed {run_seed}")
            stats = run(case, point.policy, point.pi_e, run_horizon, run_burn_in, run_seed, sim_options)
            write_simulation(artifacts, receiver.value, point, stats, case.deficit)

            table = Table(title=f"{receiver.label}: analytic against empirical")
            table.add_column("quantity")
            table.add_column("analytic", justify="right")
            table.add_column("empirical", justify="right")
            table.add_row("erasure fraction", f"{point.pi_e:.6f}", f"{stats.erasure_fraction:.6f}")
            table.add_row("RF energy (J/slot)", f"{point.delivered:.6g}", f"{stats.avg_rf_incident:.6g}")
            table.add_row("banked RF (J/slot)", f"{case.deficit:.6g}", f"{stats.avg_delivered:.6g}")
            for i in range(case.num_users):
                table.add_row(f"power {i + 1} (J/slot)", f"{point.avg_powers[i]:.6g}", f"{stats.avg_tx_power[i]:.6g}")
                table.add_row(f"rate {i + 1}", f"{point.avg_rates.rates[i]:.6f}",
                              f"{stats.achieved_rate_estimate[i]:.6f}")
            table.add_row("receiver outages", "-", f"{stats.rx_outage_fraction:.6f}")
            console.print(table)

        artifacts.write_manifest(config, "simulate", run_seed)
        console.print(f"[bold green]✓ Artifacts in {artifacts.out_dir}[/bold green]")
    except SwiptError as e:
        console.print(f"[red]Error: {e.detail}[/red]")
        raise typer.Exit(1) from e


@app.command()
def validate(
    config_path: Path | None = typer.Option(None, "--config", help="Scenario YAML (default: bundled reference)"),
    instances: int = typer.Option(1000, "--instances", help="Randomized per-state instances"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    mu_grid: int = typer.Option(5, "--mu-grid", help="Reward grid points for region checks"),
):
    """Run the oracle and property suite."""
    try:
        config = _load(config_path)
        scenario = config.to_scenario()
    except SwiptError as e:
        console.print(f"[red]Error: {e.detail}[/red]")
        raise typer.Exit(1) from e

    console.print(f"[bold blue]Validating:[/bold blue] {config.name}, {instances} instances, seed {seed}")
    report = run_suite(scenario, config.solver_options(), instances, seed, mu_grid)

    table = Table(title="Validation")
    table.add_column("check")
    table.add_column("result")
    table.add_column("worst residual", justify="right")
    table.add_column("detail")
    for check in report.checks:
        status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, status, f"{check.residual:.3g}", check.detail)
    console.print(table)

    if not report.passed:
        console.print("[bold red]✗ Validation failed[/bold red]")
        raise typer.Exit(1)
    console.print("[bold green]✓ All checks passed[/bold green]")


@app.command("show-config")
def show_config(
    config_path: Path | None = typer.Option(None, "--config", help="Scenario YAML (default: bundled reference)"),
):
    """Print the scenario with every energy in J/slot."""
    try:
        config = _load(config_path)
    except SwiptError as e:
        console.print(f"[red]Error: {e.detail}[/red]")
        raise typer.Exit(1) from e
    console.print(dump_config(config), markup=False, highlight=False)
    console.print(f"[dim]config hash {config.config_hash()}[/dim]")


@app.command()
def version():
    """Print the tool version."""
    console.print(f"swipt-regions {__version__}")


def main() -> None:
    """Console script entry point."""
    app()


if __name__ == "__main__":
    main()
