"""
Investors forming an opinion μ about a risky asset's drift.

Each investor holds the Merton fraction for a HARA utility, whose expected
log-growth r + R(μ - r)² is the terminal reward; a running penalty pulls the
opinion toward a reference drift μ̄ (or, with anchor="mean", toward the
population mean). The resulting control problem is the constant-coefficient
MFG problem with a = βR - γ.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

from mfgjump.errors import DegenerateCouplingError, DomainError
from mfgjump.expectation import (
    ExpectationPath, Method, closed_form_path, coupled_expectation, expectation_quadrature,
)
from mfgjump.jump_models import Degenerate, JumpDistribution
from mfgjump.riccati import (
    DEFAULT_STEPS, CoefficientSchedule, TerminalData, blowup_distance, solve_numeric,
)

logger = logging.getLogger(__name__)

ANCHORS = ("reference", "mean")


@dataclass(frozen=True)
class InvestorScenario:
    r: float
    sigma: float
    q: float
    beta: float
    gamma: float
    mu_bar: float
    horizon: float
    mu0: float = 0.0
    m0_std: float = 0.0
    delta: float = 0.0
    lam: float = 0.0
    jump: JumpDistribution = field(default_factory=Degenerate)
    anchor: str = "reference"
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not self.q < 1:
            raise DomainError(f"q must be < 1, got {self.q}")
        if self.beta < 0 or self.gamma < 0:
            raise DomainError("beta and gamma must be >= 0")
        if self.delta < 0 or self.lam < 0:
            raise DomainError("delta and lambda must be >= 0")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.anchor not in ANCHORS:
            raise DomainError(f"anchor must be one of {ANCHORS}, got '{self.anchor}'")

    @property
    def R(self) -> float:
        return hara_risk_coefficient(self.q, self.sigma)

    @property
    def a(self) -> float:
        return self.beta * self.R - self.gamma


def _check_q(q: float):
    if not q < 1:
        raise DomainError(f"HARA exponent q must be < 1, got {q}")


def hara_risk_coefficient(q: float, sigma: float) -> float:
    """R = (1 - 2q)/(2σ²(q - 1)²)."""
    _check_q(q)
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    return (1.0 - 2.0 * q) / (2.0 * sigma ** 2 * (q - 1.0) ** 2)


def optimal_fraction(mu: float, r: float, sigma: float, q: float) -> float:
    """Merton fraction h* = (μ - r)/(σ²(1 - q))."""
    _check_q(q)
    return (mu - r) / (sigma ** 2 * (1.0 - q))


def growth_rate(mu: float, r: float, sigma: float, q: float) -> float:
    return r + hara_risk_coefficient(q, sigma) * (mu - r) ** 2


def to_mfg_problem(s: InvestorScenario) -> Tuple[CoefficientSchedule, TerminalData]:
    """
    a = βR - γ, b = 2(γμ̄ - βRr), c = βr + βRr² - γμ̄²,
    A_T = R, B_T = -2Rr, C_T = r + Rr²  (so Φ(μ, T) = r + R(μ - r)²).
    """
    R, r, beta, gamma, mu_bar = s.R, s.r, s.beta, s.gamma, s.mu_bar
    sched = CoefficientSchedule.constant(
        s.horizon,
        a=beta * R - gamma,
        b=2.0 * (gamma * mu_bar - beta * R * r),
        c=beta * r + beta * R * r ** 2 - gamma * mu_bar ** 2,
    )
    return sched, TerminalData(A_T=R, B_T=-2.0 * R * r, C_T=r + R * r ** 2)


def consensus_point(s: InvestorScenario) -> float:
    """Q* = (rβR - γμ̄)/(βR - γ), the equilibrium -b/(2a) of the mapped problem."""
    beta_R = s.beta * s.R
    if abs(beta_R - s.gamma) <= 1e-14 * max(1.0, abs(s.gamma)):
        raise DegenerateCouplingError(f"βR = γ = {s.gamma:g}: no consensus point")
    return (s.r * beta_R - s.gamma * s.mu_bar) / (beta_R - s.gamma)


@dataclass(frozen=True)
class SolvabilityReport:
    """
    full_horizon is the closed-form condition (βR - γ < 0 and R < √((γ - βR)/2));
    max_T the backward blow-up distance when it fails (inf if A never blows up).
    exists_for_T and numeric_exists_for_T are the analytic and integrator verdicts
    for the requested horizon.
    """
    full_horizon: bool
    max_T: Optional[float]
    exists_for_T: bool
    numeric_exists_for_T: bool
    blowup_time: Optional[float] = None

    @property
    def consistent(self) -> bool:
        return self.exists_for_T == self.numeric_exists_for_T and (
            self.full_horizon == (self.max_T is None)
        )


def solvability(s: InvestorScenario, T: Optional[float] = None) -> SolvabilityReport:
    T = s.horizon if T is None else float(T)
    a, R = s.a, s.R
    full = a < 0 and R < math.sqrt((s.gamma - s.beta * s.R) / 2.0)
    distance = blowup_distance(a, R)
    max_T = None if math.isinf(distance) else distance
    if full and max_T is not None:
        logger.warning(f"Closed-form condition claims a full horizon but A blows up after {distance:.6g}")
    if not full and max_T is None:
        logger.warning("Closed-form condition fails but A stays finite for every horizon")

    sched, term = to_mfg_problem(s)
    if T != s.horizon:
        sched = CoefficientSchedule(T, sched.a, sched.b, sched.c)
    sol = solve_numeric(sched, term, s.delta, s.lam, s.jump, s.steps)
    exists = T < distance
    report = SolvabilityReport(full, max_T, exists, sol.is_complete, sol.blowup_time)
    if exists != sol.is_complete:
        logger.warning(
            f"Solvability verdicts disagree at T={T:g}: analytic={'exists' if exists else 'blows up'}, "
            f"numeric={'complete' if sol.is_complete else f'blow-up at {sol.blowup_time:.6g}'}"
        )
    return report


class OpinionRegime(str, Enum):
    CONSENSUS = "Consensus"
    DISAGREEMENT = "Disagreement"


@dataclass(frozen=True)
class OpinionDynamics:
    path: ExpectationPath
    regime: OpinionRegime
    target: Optional[float]
    route: str


def opinion_dynamics(s: InvestorScenario) -> OpinionDynamics:
    """
    Expected opinion path and its regime.

    The quadrature route needs a complete Riccati solution; when A blows up
    inside the horizon the closed-form path, which stays finite across the
    poles, is used instead.
    """
    M = s.jump.mean()
    sched, term = to_mfg_problem(s)
    a = s.a

    if s.anchor == "mean":
        beta_R = s.beta * s.R
        b0, b1 = -2.0 * beta_R * s.r, 2.0 * s.gamma
        path = coupled_expectation(
            a, b0, b1, 0.0, term, s.delta, s.lam, s.jump, s.mu0, s.horizon, s.steps,
            c_coeffs=(s.beta * s.r + beta_R * s.r ** 2, 0.0, -s.gamma),
        )
        k = 2.0 * a + b1
        route = "coupled" if path.method == Method.QUADRATURE else "coupled_closed_form"
        if k < 0:
            return OpinionDynamics(path, OpinionRegime.CONSENSUS, -b0 / k, route)
        return OpinionDynamics(path, OpinionRegime.DISAGREEMENT, -b0 / k if k else None, route)

    sol = solve_numeric(sched, term, s.delta, s.lam, s.jump, s.steps)
    if sol.is_complete:
        path = expectation_quadrature(sol, s.lam, M, s.mu0)
        route = "quadrature"
    else:
        logger.warning(
            f"Riccati solution blows up at t={sol.blowup_time:.6g}; using the closed-form expectation path"
        )
        path = closed_form_path(a, sched.b.value, term.A_T, term.B_T, s.lam, M, s.mu0, s.horizon, s.steps)
        route = "closed_form"

    if a == 0:
        return OpinionDynamics(path, OpinionRegime.DISAGREEMENT, None, route)
    target = consensus_point(s)
    regime = OpinionRegime.CONSENSUS if a < 0 else OpinionRegime.DISAGREEMENT
    return OpinionDynamics(path, regime, target, route)
