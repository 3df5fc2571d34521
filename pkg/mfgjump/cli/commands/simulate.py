import click
from rich.table import Table

from mfgjump import export
from mfgjump.cli.core import load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.engines.factory import get_engine_suite


@click.command(name="simulate")
@scenario_options
@click.pass_context
@numerical_guard
def simulate_cmd(ctx, config_path, out, seed, quiet):
    """Monte Carlo simulation of the controlled process."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    suite = get_engine_suite()

    sol = suite.riccati_numeric(sc)
    sol.require_complete("simulate")
    stats = suite.simulate(sc, sol)
    quadrature = suite.expectation_quadrature(sc, sol)
    path = export.write_simulation(stats, sc.output_dir / "simulate.csv")

    spec = sc.simulation_spec()
    console.print(f"\n[bold underline]MONTE CARLO: {sc.name}[/bold underline]")
    console.print(f"  [dim]{spec.paths} paths, {spec.steps} steps, seed {spec.seed}[/dim]")
    table = Table()
    table.add_column("t", justify="right")
    table.add_column("mean", justify="right")
    table.add_column("stderr", justify="right")
    table.add_column("E(t)", justify="right")
    table.add_column("z", justify="right")
    for i, t in enumerate(stats.times):
        gap = stats.mean[i] - quadrature.at(t)
        z = f"{gap / stats.stderr[i]:+.2f}" if stats.stderr[i] > 0 else "-"
        table.add_row(f"{t:g}", f"{stats.mean[i]:.6g}", f"{stats.stderr[i]:.2e}", f"{quadrature.at(t):.6g}", z)
    console.print(table)
    if stats.n_escaped.max() > 0:
        console.print(f"  [yellow]! {int(stats.n_escaped.max())} paths escaped the cap[/yellow]")
    console.print(f"  [green]✓ Wrote:[/green] [dim]{path}[/dim]")
