import math

import click
import numpy as np
from rich.table import Table

from mfgjump import export
from mfgjump.riccati import blowup_distance
from mfgjump.cli.core import EXIT_NUMERICAL, load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.core import console as error_console
from mfgjump.cli.engines.factory import get_engine_suite


@click.command(name="riccati")
@scenario_options
@click.pass_context
@numerical_guard
def riccati_cmd(ctx, config_path, out, seed, quiet):
    """Solve the backward Riccati system and write t, A, B, C."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    suite = get_engine_suite()

    sol = suite.riccati_numeric(sc)
    path = export.write_riccati(sol, sc.output_dir / "riccati.csv")

    console.print(f"\n[bold underline]RICCATI: {sc.name}[/bold underline]")
    table = Table(show_header=False, box=None)
    table.add_row("[bold]Horizon:[/bold]", f"{sc.horizon:g}")
    table.add_row("[bold]Steps:[/bold]", str(sol.steps))
    table.add_row("[bold]Status:[/bold]", sol.status.value)
    if sc.schedule.has_constant_a:
        distance = blowup_distance(sc.schedule.a.value, sc.terminal.A_T)
        table.add_row("[bold]Blow-up distance:[/bold]", "none" if math.isinf(distance) else f"{distance:.12g}")
    if sol.is_complete:
        table.add_row("[bold]A(0), B(0), C(0):[/bold]", f"{sol.A[0]:.12g}, {sol.B[0]:.12g}, {sol.C[0]:.12g}")
        closed = suite.riccati_closed(sc)
        if closed is not None and closed.is_complete:
            diff = max(float(np.max(np.abs(sol.A - closed.A))), float(np.max(np.abs(sol.B - closed.B))),
                       float(np.max(np.abs(sol.C - closed.C))))
            table.add_row("[bold]Closed-form gap:[/bold]", f"{diff:.3e}")
    console.print(table)
    console.print(f"  [green]✓ Wrote:[/green] [dim]{path}[/dim]")

    if not sol.is_complete:
        error_console.print(f"[red]✘ A blows up at t = {sol.blowup_time:.12g}[/red]")
        ctx.exit(EXIT_NUMERICAL)
