import click
from rich.table import Table

from mfgjump import export
from mfgjump.expectation import classify_regime, jump_sensitivity
from mfgjump.cli.core import load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.engines.factory import get_engine_suite


@click.command(name="expect")
@scenario_options
@click.pass_context
@numerical_guard
def expect_cmd(ctx, config_path, out, seed, quiet):
    """Population mean E(t) by every applicable method."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    suite = get_engine_suite()

    sol = suite.riccati_numeric(sc)
    sol.require_complete("expect")
    quadrature = suite.expectation_quadrature(sc, sol)
    ode = suite.expectation_ivp(sc, sol)
    closed = suite.expectation_closed(sc)
    path = export.write_expectation(sol.times, sc.output_dir / "expect.csv", quadrature, ode, closed)

    console.print(f"\n[bold underline]EXPECTATION: {sc.name}[/bold underline]")
    table = Table()
    table.add_column("Method", style="cyan")
    table.add_column("E(T)", justify="right")
    table.add_column("max |Δ| vs quadrature", justify="right")
    table.add_row("quadrature", f"{quadrature.terminal:.12g}", "-")
    for name, p in (("second-order ODE", ode), ("closed form", closed)):
        if p is None:
            table.add_row(name, "[dim]n/a[/dim]", "[dim]n/a[/dim]")
            continue
        gap = max(abs(p.at(t) - quadrature.at(t)) for t in sc.times)
        table.add_row(name, f"{p.terminal:.12g}", f"{gap:.3e}")
    console.print(table)

    sched = sc.schedule
    if sched.is_constant:
        a, b = sched.a.value, sched.b.value
        regime = classify_regime(a, b)
        line = f"  [bold]Regime:[/bold] {regime.kind.value}"
        if regime.equilibrium is not None:
            line += f", equilibrium {regime.equilibrium:.12g}"
        if regime.frequency is not None:
            line += f", frequency {regime.frequency:.12g}"
        console.print(line)
        console.print(f"  [bold]∂E(T)/∂(λM):[/bold] {jump_sensitivity(a, sc.terminal.A_T, sc.horizon):.12g}")
    console.print(f"  [green]✓ Wrote:[/green] [dim]{path}[/dim]")
