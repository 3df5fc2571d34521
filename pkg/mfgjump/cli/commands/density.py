import click
from rich.table import Table

from mfgjump import export
from mfgjump.density import char_fn_grid, first_moment, l1_distance, mass
from mfgjump.cli.core import load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.engines.factory import get_engine_suite


def density_times(sc):
    """Slice times; t = 0 is dropped for a point-mass start, which has no density."""
    if sc.initial.is_delta:
        return [t for t in sc.times if t > 0]
    return list(sc.times)


@click.command(name="density")
@scenario_options
@click.pass_context
@numerical_guard
def density_cmd(ctx, config_path, out, seed, quiet):
    """Density slices by transform inversion and by finite differences."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    suite = get_engine_suite()

    sol = suite.riccati_numeric(sc)
    sol.require_complete("density")
    times = density_times(sc)
    quadrature = suite.expectation_quadrature(sc, sol)
    transform = suite.density_transform(sc, sol, times)
    fd = suite.density_fd(sc, sol, times)

    console.print(f"\n[bold underline]DENSITY: {sc.name}[/bold underline]")
    if transform is None and fd is None:
        console.print("  [yellow]! No density: the process starts at a point and has no diffusion.[/yellow]")
        return

    written = []
    if transform is not None:
        written += export.write_density(transform, sc.output_dir, "density_transform")
    if fd is not None:
        written += export.write_density(fd, sc.output_dir, "density_fd")
    if sc.write_charfn:
        num = sc.numerics.density
        cf = char_fn_grid(sol, sc.jump, sc.delta, sc.lam, sc.initial.char_fn, times, num.n, num.omega_max)
        written += export.write_charfn(cf, sc.output_dir)

    table = Table()
    table.add_column("t", justify="right")
    table.add_column("E(t)", justify="right")
    for label in ("transform", "fd"):
        table.add_column(f"mass ({label})", justify="right")
        table.add_column(f"mean ({label})", justify="right")
    table.add_column("L¹ gap", justify="right")
    for i, t in enumerate(times):
        row = [f"{t:g}", f"{quadrature.at(t):.6g}"]
        for grid in (transform, fd):
            if grid is None:
                row += ["-", "-"]
            else:
                row += [f"{mass(grid, i):.6g}", f"{first_moment(grid, i):.6g}"]
        row.append(f"{l1_distance(transform, i, fd, i):.3e}" if transform is not None and fd is not None else "-")
        table.add_row(*row)
    console.print(table)
    console.print(f"  [green]✓ Wrote:[/green] [dim]{len(written)} files to {sc.output_dir}[/dim]")
