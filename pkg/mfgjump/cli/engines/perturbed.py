from dataclasses import replace
from typing import Iterable, Optional, Sequence

from mfgjump.density import DensityGrid
from mfgjump.expectation import ExpectationPath
from mfgjump.montecarlo import PathEnsembleStats
from mfgjump.riccati import RiccatiSolution
from .base import ENGINES, EngineSuite
from ..config import Scenario

EPSILON = 1e-3


class PerturbedEngineSuite(EngineSuite):
    """
    Wraps another suite and shifts the output of selected engines by EPSILON
    (densities are scaled by 1 + EPSILON instead). Used by the tests to check
    that `validate` notices a broken engine.
    """

    def __init__(self, inner: EngineSuite, targets: Optional[Iterable[str]] = None, epsilon: float = EPSILON):
        self.inner = inner
        self.targets = set(ENGINES if targets is None else targets)
        unknown = self.targets - set(ENGINES)
        if unknown:
            raise ValueError(f"Unknown engines {sorted(unknown)}. Allowed: {list(ENGINES)}")
        self.epsilon = epsilon

    def _hit(self, name: str) -> bool:
        return name in self.targets

    def _shift_solution(self, sol: Optional[RiccatiSolution]) -> Optional[RiccatiSolution]:
        if sol is None:
            return None
        e = self.epsilon
        return replace(sol, A=sol.A + e, B=sol.B + e, C=sol.C + e)

    def _shift_path(self, path: Optional[ExpectationPath]) -> Optional[ExpectationPath]:
        if path is None:
            return None
        return replace(path, E=path.E + self.epsilon)

    def _scale_grid(self, grid: Optional[DensityGrid]) -> Optional[DensityGrid]:
        if grid is None:
            return None
        return replace(grid, m=grid.m * (1.0 + self.epsilon))

    def riccati_numeric(self, sc: Scenario) -> RiccatiSolution:
        sol = self.inner.riccati_numeric(sc)
        return self._shift_solution(sol) if self._hit("riccati_numeric") else sol

    def riccati_closed(self, sc: Scenario) -> Optional[RiccatiSolution]:
        sol = self.inner.riccati_closed(sc)
        return self._shift_solution(sol) if self._hit("riccati_closed") else sol

    def expectation_quadrature(self, sc: Scenario, sol: RiccatiSolution) -> ExpectationPath:
        path = self.inner.expectation_quadrature(sc, sol)
        return self._shift_path(path) if self._hit("expectation_quadrature") else path

    def expectation_ivp(self, sc: Scenario, sol: RiccatiSolution) -> Optional[ExpectationPath]:
        path = self.inner.expectation_ivp(sc, sol)
        return self._shift_path(path) if self._hit("expectation_ivp") else path

    def expectation_closed(self, sc: Scenario) -> Optional[ExpectationPath]:
        path = self.inner.expectation_closed(sc)
        return self._shift_path(path) if self._hit("expectation_closed") else path

    def corollary(self, sc: Scenario, E_T: float) -> Optional[ExpectationPath]:
        path = self.inner.corollary(sc, E_T)
        return self._shift_path(path) if self._hit("corollary") else path

    def charfn_mean(self, sc: Scenario, sol: RiccatiSolution, t: float) -> float:
        value = self.inner.charfn_mean(sc, sol, t)
        return value + self.epsilon if self._hit("charfn_mean") else value

    def density_transform(self, sc: Scenario, sol: RiccatiSolution,
                          times: Sequence[float]) -> Optional[DensityGrid]:
        grid = self.inner.density_transform(sc, sol, times)
        return self._scale_grid(grid) if self._hit("density_transform") else grid

    def density_fd(self, sc: Scenario, sol: RiccatiSolution, times: Sequence[float]) -> Optional[DensityGrid]:
        grid = self.inner.density_fd(sc, sol, times)
        return self._scale_grid(grid) if self._hit("density_fd") else grid

    def simulate(self, sc: Scenario, sol: RiccatiSolution) -> PathEnsembleStats:
        stats = self.inner.simulate(sc, sol)
        if self._hit("simulate"):
            return replace(stats, mean=stats.mean + self.epsilon)
        return stats
