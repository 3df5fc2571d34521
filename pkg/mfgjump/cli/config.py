import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from mfgjump.density import InitialLaw
from mfgjump.errors import DomainError
from mfgjump.investor import InvestorScenario, to_mfg_problem
from mfgjump.jump_models import Degenerate, JumpDistribution, from_config
from mfgjump.montecarlo import SimulationSpec
from mfgjump.riccati import CoefficientSchedule, Constant, Sampled, TerminalData
from mfgjump.cli.paths import resolve_output_dir, resolve_scenario_path
from mfgjump.cli.schemas import NumericsConfig, ScenarioConfig, SchemaValidationError, TerminalConfig

logger = logging.getLogger(__name__)

DEFAULT_REPORT_TIMES = 11


@dataclass(frozen=True)
class Scenario:
    """A loaded scenario with engine objects built from its config."""
    name: str
    schedule: CoefficientSchedule
    terminal: TerminalData
    delta: float
    lam: float
    jump: JumpDistribution
    initial: InitialLaw
    numerics: NumericsConfig
    times: Tuple[float, ...]
    output_dir: Path
    write_charfn: bool = False
    investor: Optional[InvestorScenario] = None

    @property
    def horizon(self) -> float:
        return float(self.schedule.horizon)

    @property
    def x0(self) -> float:
        return self.initial.mean

    @property
    def M(self) -> float:
        return self.jump.mean()

    def simulation_spec(self) -> SimulationSpec:
        mc = self.numerics.montecarlo
        return SimulationSpec(
            paths=mc.paths, steps=mc.steps, seed=mc.seed, cap=mc.cap,
            checkpoints=self.times, batch_size=mc.batch_size, workers=mc.workers,
        )


def _coefficient(value):
    if isinstance(value, dict):
        return Sampled(np.asarray(value["times"], dtype=float), np.asarray(value["values"], dtype=float))
    return Constant(float(value))


def build_scenario(config: ScenarioConfig, name: str = "scenario", out: Optional[str] = None,
                   seed: Optional[int] = None) -> Scenario:
    problem = config.problem
    jump = from_config(problem.jump) if problem.jump is not None else Degenerate(0.0)
    initial = InitialLaw(float(problem.initial.mean), float(problem.initial.std))
    horizon = float(problem.horizon)

    numerics = config.numerics
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise SchemaValidationError(f"--seed: must be an unsigned 64-bit integer, got {seed}")
        numerics = replace(numerics, montecarlo=replace(numerics.montecarlo, seed=seed))

    investor = None
    try:
        if problem.investor is not None:
            inv = problem.investor
            investor = InvestorScenario(
                r=inv.r, sigma=inv.sigma, q=inv.q, beta=inv.beta, gamma=inv.gamma, mu_bar=inv.mu_bar,
                horizon=horizon, mu0=initial.mean, m0_std=initial.std, delta=problem.delta,
                lam=problem.lam, jump=jump, anchor=inv.anchor, steps=numerics.riccati_steps,
            )
            schedule, terminal = to_mfg_problem(investor)
        else:
            coef = problem.coefficients
            schedule = CoefficientSchedule(
                horizon, _coefficient(coef.a), _coefficient(coef.b), _coefficient(coef.c)
            )
            term = problem.terminal or TerminalConfig()
            terminal = TerminalData(float(term.A), float(term.B), float(term.C))
    except DomainError as e:
        raise SchemaValidationError(f"problem: {e}")

    times = tuple(float(t) for t in config.output.times)
    if not times:
        # equally spaced, snapped onto the Monte Carlo step grid
        steps = numerics.montecarlo.steps
        ticks = np.round(np.linspace(0, steps, DEFAULT_REPORT_TIMES)).astype(int)
        times = tuple(float(k) * horizon / steps for k in np.unique(ticks))

    logger.debug(f"Scenario '{name}': T={horizon}, delta={problem.delta}, lambda={problem.lam}, jump={jump}")
    return Scenario(
        name=name,
        schedule=schedule,
        terminal=terminal,
        delta=float(problem.delta),
        lam=float(problem.lam),
        jump=jump,
        initial=initial,
        numerics=numerics,
        times=times,
        output_dir=resolve_output_dir(out, config.output.directory),
        write_charfn=config.output.charfn,
        investor=investor,
    )


def load_scenario(path_str: str, out: Optional[str] = None, seed: Optional[int] = None) -> Scenario:
    """Resolve, parse, validate and build a scenario file."""
    path = resolve_scenario_path(path_str)
    logger.debug(f"Loading scenario from: {path}")
    config = ScenarioConfig.from_json_file(str(path))
    return build_scenario(config, name=path.stem, out=out, seed=seed)
