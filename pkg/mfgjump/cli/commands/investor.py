import click
from rich.table import Table

from mfgjump import export
from mfgjump.investor import consensus_point, growth_rate, opinion_dynamics, optimal_fraction, solvability
from mfgjump.errors import DegenerateCouplingError
from mfgjump.cli.core import EXIT_CONFIG, load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.core import console as error_console


@click.command(name="investor")
@scenario_options
@click.pass_context
@numerical_guard
def investor_cmd(ctx, config_path, out, seed, quiet):
    """Opinion dynamics of investors about an asset's drift."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    s = sc.investor
    if s is None:
        error_console.print("[red]Error: Scenario has no 'problem.investor' block.[/red]")
        ctx.exit(EXIT_CONFIG)

    report = solvability(s)
    dynamics = opinion_dynamics(s)
    path = export.write_opinion_path(dynamics.path, sc.output_dir / "investor.csv")

    console.print(f"\n[bold underline]INVESTOR OPINION: {sc.name}[/bold underline]")
    table = Table(show_header=False, box=None)
    table.add_row("[bold]Risk coefficient R:[/bold]", f"{s.R:.12g}")
    table.add_row("[bold]Merton fraction at μ₀:[/bold]", f"{optimal_fraction(s.mu0, s.r, s.sigma, s.q):.12g}")
    table.add_row("[bold]Growth rate at μ₀:[/bold]", f"{growth_rate(s.mu0, s.r, s.sigma, s.q):.12g}")
    table.add_row("[bold]a = βR - γ:[/bold]", f"{s.a:.12g}")
    try:
        table.add_row("[bold]Consensus point Q*:[/bold]", f"{consensus_point(s):.12g}")
    except DegenerateCouplingError:
        table.add_row("[bold]Consensus point Q*:[/bold]", "[dim]none (βR = γ)[/dim]")
    table.add_row("[bold]Regime:[/bold]", dynamics.regime.value)
    table.add_row("[bold]Target:[/bold]", "-" if dynamics.target is None else f"{dynamics.target:.12g}")
    table.add_row("[bold]Route:[/bold]", dynamics.route)
    table.add_row("[bold]E(T):[/bold]", f"{dynamics.path.terminal:.12g}")
    console.print(table)

    console.print("\n[bold]SOLVABILITY:[/bold]")
    if report.full_horizon:
        console.print("  [green]✓ Solution exists for every horizon[/green]")
    else:
        limit = "none" if report.max_T is None else f"{report.max_T:.12g}"
        console.print(f"  [yellow]! Not solvable for every horizon[/yellow] [dim](max T: {limit})[/dim]")
    mark = "[green]✓" if report.numeric_exists_for_T else "[yellow]!"
    console.print(f"  {mark} Riccati solution at T={s.horizon:g}: "
                  f"{'complete' if report.numeric_exists_for_T else 'blows up'}[/]")
    if not report.consistent:
        console.print("  [yellow]! Analytic and numeric verdicts disagree[/yellow]")
    console.print(f"  [green]✓ Wrote:[/green] [dim]{path}[/dim]")
