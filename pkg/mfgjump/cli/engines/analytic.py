import logging
import math
from typing import Optional, Sequence

import numpy as np

from mfgjump import density, expectation, riccati
from mfgjump.density import DensityGrid
from mfgjump.expectation import ExpectationPath
from mfgjump.montecarlo import PathEnsembleStats, constant_sampler, gaussian_sampler, simulate_controlled
from mfgjump.riccati import RiccatiSolution
from .base import EngineSuite
from ..config import Scenario

logger = logging.getLogger(__name__)

# Half-width of the default finite-difference domain, in spread units.
FD_HALF_WIDTH = 8.0


class AnalyticEngineSuite(EngineSuite):
    """
    Runs the package engines as configured by the scenario's numerics block.
    """

    def riccati_numeric(self, sc: Scenario) -> RiccatiSolution:
        return riccati.solve_numeric(sc.schedule, sc.terminal, sc.delta, sc.lam, sc.jump,
                                     sc.numerics.riccati_steps)

    def riccati_closed(self, sc: Scenario) -> Optional[RiccatiSolution]:
        sched = sc.schedule
        if not sched.is_constant:
            return None
        return riccati.solve_closed_form_const(
            sched.a.value, sched.b.value, sc.terminal, sc.lam, sc.M, sc.delta, sched.c.value,
            sc.horizon, sc.numerics.riccati_steps, m2=sc.jump.second_moment(),
        )

    def expectation_quadrature(self, sc: Scenario, sol: RiccatiSolution) -> ExpectationPath:
        return expectation.expectation_quadrature(sol, sc.lam, sc.M, sc.x0)

    def expectation_ivp(self, sc: Scenario, sol: RiccatiSolution) -> Optional[ExpectationPath]:
        if not sc.schedule.has_constant_a:
            return None
        return expectation.expectation_ivp(sc.schedule.a, sc.schedule.b, sol, sc.lam, sc.M, sc.x0)

    def expectation_closed(self, sc: Scenario) -> Optional[ExpectationPath]:
        sched = sc.schedule
        if not sched.is_constant:
            return None
        return expectation.closed_form_path(
            sched.a.value, sched.b.value, sc.terminal.A_T, sc.terminal.B_T, sc.lam, sc.M, sc.x0,
            sc.horizon, sc.numerics.riccati_steps,
        )

    def corollary(self, sc: Scenario, E_T: float) -> Optional[ExpectationPath]:
        sched = sc.schedule
        if not sched.is_constant:
            return None
        return expectation.corollary_closed_form(
            sched.a.value, sched.b.value, 0.0, 0.0, sc.x0, E_T, sc.horizon, sc.numerics.riccati_steps,
        )

    def charfn_mean(self, sc: Scenario, sol: RiccatiSolution, t: float) -> float:
        return density.mean_from_charfn(sol, sc.jump, sc.delta, sc.lam, sc.initial.char_fn, t, scale=abs(sc.x0))

    def density_transform(self, sc: Scenario, sol: RiccatiSolution,
                          times: Sequence[float]) -> Optional[DensityGrid]:
        if sc.delta == 0.0 and sc.initial.is_delta:
            logger.debug("Characteristic function does not decay (no diffusion, point-mass start)")
            return None
        num = sc.numerics.density
        cf = density.char_fn_grid(sol, sc.jump, sc.delta, sc.lam, sc.initial.char_fn, times,
                                  num.n, num.omega_max)
        return density.density_invert(cf)

    def fd_grid(self, sc: Scenario, sol: RiccatiSolution) -> np.ndarray:
        """Uniform x-grid from numerics.density, or one wide enough for the spread of X."""
        num = sc.numerics.density
        if num.x_min is not None:
            return np.linspace(num.x_min, num.x_max, num.fd_points)
        path = expectation.expectation_quadrature(sol, sc.lam, sc.M, sc.x0)
        # largest e^{2R(t,η)} over η <= t
        stretch = math.exp(2.0 * float(np.max(sol.I - np.minimum.accumulate(sol.I))))
        noise = sc.initial.std + sc.delta * math.sqrt(sc.horizon)
        noise += math.sqrt(sc.lam * sc.horizon * sc.jump.second_moment())
        spread = stretch * noise
        lo = float(path.E.min()) - FD_HALF_WIDTH * spread
        hi = float(path.E.max()) + FD_HALF_WIDTH * spread
        return np.linspace(lo, hi, num.fd_points)

    def density_fd(self, sc: Scenario, sol: RiccatiSolution, times: Sequence[float]) -> Optional[DensityGrid]:
        if sc.initial.is_delta:
            logger.debug("Finite-difference density needs a Gaussian initial law")
            return None
        num = sc.numerics.density
        x = self.fd_grid(sc, sol)
        m0 = sc.initial.density(x)
        return density.kffp_fd_solve(sol, x, m0, sc.delta, sc.lam, sc.jump, num.fd_steps,
                                     record_times=times, order=num.order)

    def simulate(self, sc: Scenario, sol: RiccatiSolution) -> PathEnsembleStats:
        if sc.initial.is_delta:
            sampler = constant_sampler(sc.x0)
        else:
            sampler = gaussian_sampler(sc.initial.mean, sc.initial.std)
        return simulate_controlled(sol, sampler, sc.delta, sc.lam, sc.jump, sc.simulation_spec())
