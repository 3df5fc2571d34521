import logging
from dataclasses import dataclass
from typing import List, Optional

import click
import numpy as np
from rich.table import Table

from mfgjump import export
from mfgjump.density import first_moment, l1_distance, mass
from mfgjump.errors import ResonanceError
from mfgjump.riccati import hjb_residual, residuals
from mfgjump.cli.commands.density import density_times
from mfgjump.cli.core import EXIT_CROSS_CHECK, load_or_exit, make_console, numerical_guard, scenario_options
from mfgjump.cli.core import console as error_console
from mfgjump.cli.engines.factory import get_engine_suite

logger = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    error: Optional[float]
    tolerance: float
    note: str = ""

    @property
    def status(self) -> str:
        if self.error is None:
            return "skip"
        return "pass" if self.error <= self.tolerance else "fail"

    def as_row(self) -> dict:
        return {"check": self.name, "error": self.error, "tolerance": self.tolerance, "status": self.status}


def _sup_gap(x: np.ndarray, ref: np.ndarray) -> float:
    """max|x - ref| relative to max(1, max|ref|)."""
    return float(np.max(np.abs(x - ref)) / max(1.0, float(np.max(np.abs(ref)))))


def run_checks(sc, suite) -> List[Check]:
    tol = sc.numerics.tolerances
    checks: List[Check] = []

    # 1. Riccati: closed form against the integrator, then ODE and HJB residuals
    sol = suite.riccati_numeric(sc)
    sol.require_complete("validate")
    closed = suite.riccati_closed(sc)
    if closed is not None and closed.is_complete:
        gap = max(_sup_gap(sol.A, closed.A), _sup_gap(sol.B, closed.B), _sup_gap(sol.C, closed.C))
        checks.append(Check("riccati: closed form vs numeric", gap, tol.riccati))
    else:
        checks.append(Check("riccati: closed form vs numeric", None, tol.riccati, "sampled coefficients"))

    if sc.schedule.is_constant:
        scale = 1.0 + float(np.max(sol.A ** 2 + np.abs(sol.A * sol.B) + sol.B ** 2))
        worst = max(residuals(sol, sc.schedule, sc.delta, sc.lam, sc.jump).values()) / scale
        checks.append(Check("riccati: ODE residuals", worst, tol.riccati))
        xs = sc.x0 + np.array([-1.0, 0.0, 1.0])
        hjb = max(float(np.max(np.abs(hjb_residual(sol, sc.schedule, sc.delta, sc.lam, sc.jump, t, xs))))
                  for t in sc.times)
        checks.append(Check("riccati: HJB residual", hjb / (scale * (1.0 + float(np.max(xs ** 2)))), tol.riccati))
    else:
        checks.append(Check("riccati: ODE residuals", None, tol.riccati, "sampled coefficients"))

    # 2. Expectation routes against the quadrature
    quadrature = suite.expectation_quadrature(sc, sol)
    for name, other in (("expectation: ODE vs quadrature", suite.expectation_ivp(sc, sol)),
                        ("expectation: closed form vs quadrature", suite.expectation_closed(sc))):
        if other is None:
            checks.append(Check(name, None, tol.expectation, "not applicable"))
        else:
            checks.append(Check(name, _sup_gap(np.interp(sol.times, other.times, other.E), quadrature.E),
                                tol.expectation))
    try:
        corollary = suite.corollary(sc, quadrature.terminal)
    except ResonanceError as e:
        logger.debug(f"Two-point route skipped: {e}")
        corollary = None
    if corollary is None:
        checks.append(Check("expectation: two-point vs quadrature", None, tol.expectation, "not applicable"))
    else:
        gap = _sup_gap(np.interp(sol.times, corollary.times, corollary.E), quadrature.E)
        checks.append(Check("expectation: two-point vs quadrature", gap, tol.expectation))

    # 3. Characteristic function mean
    gap = max(abs(suite.charfn_mean(sc, sol, t) - quadrature.at(t)) for t in sc.times)
    checks.append(Check("charfn: mean vs quadrature", gap / max(1.0, float(np.max(np.abs(quadrature.E)))),
                        tol.charfn_mean))

    # 4. Densities: mass, first moment, and the two solvers against each other
    times = density_times(sc)
    grids = {
        "transform": suite.density_transform(sc, sol, times),
        "fd": suite.density_fd(sc, sol, times),
    }
    for label, grid in grids.items():
        if grid is None:
            checks.append(Check(f"density ({label}): mass", None, tol.density_mass, "no density"))
            checks.append(Check(f"density ({label}): mean vs quadrature", None, tol.density_moment, "no density"))
            continue
        n = len(grid.times)
        checks.append(Check(f"density ({label}): mass",
                            max(abs(mass(grid, i) - 1.0) for i in range(n)), tol.density_mass))
        checks.append(Check(f"density ({label}): mean vs quadrature",
                            max(abs(first_moment(grid, i) - quadrature.at(grid.times[i])) for i in range(n)),
                            tol.density_moment))
    if grids["transform"] is not None and grids["fd"] is not None:
        n = min(len(grids["transform"].times), len(grids["fd"].times))
        gap = max(l1_distance(grids["transform"], i, grids["fd"], i) for i in range(n))
        checks.append(Check("density: transform vs fd (L1)", gap, tol.density_l1))
    else:
        checks.append(Check("density: transform vs fd (L1)", None, tol.density_l1, "no density"))

    # 5. Monte Carlo, measured in units of its allowance
    stats = suite.simulate(sc, sol)
    allowance = tol.mc_sigmas * stats.stderr + tol.mc_bias
    ratio = float(np.max(np.abs(stats.mean - np.array([quadrature.at(t) for t in stats.times])) / allowance))
    checks.append(Check("monte carlo: mean vs quadrature", ratio, 1.0))
    return checks


@click.command(name="validate")
@scenario_options
@click.pass_context
@numerical_guard
def validate_cmd(ctx, config_path, out, seed, quiet):
    """Run every engine on one scenario and cross-check the results."""
    console = make_console(quiet)
    sc = load_or_exit(ctx, config_path, out, seed)
    checks = run_checks(sc, get_engine_suite())
    path = export.write_checks([c.as_row() for c in checks], sc.output_dir / "validate.csv")

    console.print(f"\n[bold underline]CROSS-CHECKS: {sc.name}[/bold underline]")
    table = Table()
    table.add_column("Check", style="cyan")
    table.add_column("Error", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Status")
    styles = {"pass": "[green]✓ pass[/green]", "fail": "[red]✘ fail[/red]", "skip": "[dim]- skip[/dim]"}
    for c in checks:
        error = "-" if c.error is None else f"{c.error:.3e}"
        status = styles[c.status] + (f" [dim]({c.note})[/dim]" if c.note else "")
        table.add_row(c.name, error, f"{c.tolerance:g}", status)
    console.print(table)
    console.print(f"  [green]✓ Wrote:[/green] [dim]{path}[/dim]")

    failed = [c.name for c in checks if c.status == "fail"]
    if failed:
        error_console.print(f"[red]✘ {len(failed)} cross-check(s) failed: {', '.join(failed)}[/red]",
                            soft_wrap=True)
        ctx.exit(EXIT_CROSS_CHECK)
    console.print("[green]✓ All cross-checks passed[/green]")
