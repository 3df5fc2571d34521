from abc import ABC, abstractmethod
from typing import Optional, Sequence

from mfgjump.density import DensityGrid
from mfgjump.expectation import ExpectationPath
from mfgjump.montecarlo import PathEnsembleStats
from mfgjump.riccati import RiccatiSolution
from ..config import Scenario

ENGINES = (
    "riccati_numeric",
    "riccati_closed",
    "expectation_quadrature",
    "expectation_ivp",
    "expectation_closed",
    "corollary",
    "charfn_mean",
    "density_transform",
    "density_fd",
    "simulate",
)


class EngineSuite(ABC):
    """
    Abstract interface for the numerical engines a command runs on a scenario.

    Optional results are None when the engine does not apply to the
    scenario (e.g. closed forms with sampled coefficients).
    """

    @abstractmethod
    def riccati_numeric(self, sc: Scenario) -> RiccatiSolution:
        pass

    @abstractmethod
    def riccati_closed(self, sc: Scenario) -> Optional[RiccatiSolution]:
        """Closed-form A, B (quadrature C); constant coefficients only."""
        pass

    @abstractmethod
    def expectation_quadrature(self, sc: Scenario, sol: RiccatiSolution) -> ExpectationPath:
        pass

    @abstractmethod
    def expectation_ivp(self, sc: Scenario, sol: RiccatiSolution) -> Optional[ExpectationPath]:
        """Second-order ODE route; constant a only."""
        pass

    @abstractmethod
    def expectation_closed(self, sc: Scenario) -> Optional[ExpectationPath]:
        pass

    @abstractmethod
    def corollary(self, sc: Scenario, E_T: float) -> Optional[ExpectationPath]:
        """Two-point path through (0, x₀) and (T, E_T); constant coefficients only."""
        pass

    @abstractmethod
    def charfn_mean(self, sc: Scenario, sol: RiccatiSolution, t: float) -> float:
        pass

    @abstractmethod
    def density_transform(self, sc: Scenario, sol: RiccatiSolution,
                          times: Sequence[float]) -> Optional[DensityGrid]:
        """Inverted characteristic function; None when φ does not decay."""
        pass

    @abstractmethod
    def density_fd(self, sc: Scenario, sol: RiccatiSolution, times: Sequence[float]) -> Optional[DensityGrid]:
        """Finite-difference forward solve; None for a point-mass initial law."""
        pass

    @abstractmethod
    def simulate(self, sc: Scenario, sol: RiccatiSolution) -> PathEnsembleStats:
        pass
