"""
Population expectation E(t) = 𝔼[X_t] under the optimal feedback drift 2A(t)x + B(t).

Taking expectations of the controlled dynamics gives the linear ODE
E' = 2A(t)E + B(t) + λM, whose solution with E(0) = x₀ is

    E(t) = e^{2R(t,0)} x₀ + ∫₀ᵗ e^{2R(t,η)} (B(η) + λM) dη,   R(t,η) = ∫_η^t A.

Differentiating once more and using the Riccati equations removes A and B:
E'' + 2aE = -b(t). Neither form involves δ, and λ enters only through λM.
Three independent routes are provided (quadrature, second-order ODE and
closed forms) so they can be checked against each other.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from mfgjump.errors import BlowUpError, DomainError, ResonanceError, UnsupportedHypothesisError
from mfgjump.jump_models import JumpDistribution
from mfgjump.riccati import (
    DEFAULT_STEPS, CoefficientSchedule, Constant, RiccatiBranch, RiccatiSolution, Sampled,
    TerminalData, as_coefficient, closed_form_B, log_abs_sinh, solve_numeric,
)

logger = logging.getLogger(__name__)

SINGULAR_HORIZON_TOL = 1e-10
IVP_TOL = 1e-12
COUPLING_CHECK_TOL = 1e-6


class Method(str, Enum):
    QUADRATURE = "Quadrature"
    SECOND_ORDER_ODE = "SecondOrderODE"
    CLOSED_FORM = "ClosedForm"


@dataclass(frozen=True, eq=False)
class ExpectationPath:
    times: np.ndarray
    E: np.ndarray
    method: Method
    dE: Optional[np.ndarray] = None

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.E))

    @property
    def terminal(self) -> float:
        return float(self.E[-1])


class RegimeKind(str, Enum):
    OSCILLATORY = "Oscillatory"
    RELAXING = "Relaxing"
    POLYNOMIAL = "Polynomial"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    equilibrium: Optional[float] = None
    frequency: Optional[float] = None


def expectation_quadrature(sol: RiccatiSolution, lam: float, M: float, x0: float,
                           propagate_initial: bool = True) -> ExpectationPath:
    """
    E(t) by composite Simpson quadrature on the Riccati grid.

    The kernel e^{2R(t,η)} factors as e^{2I(t)}·e^{-2I(η)}, so one cumulative
    integral gives the whole path. With propagate_initial=False the initial
    mean is added unpropagated (E = x₀ + ∫…); that variant is only exact for
    x₀ = 0 and is kept for comparison.
    """
    sol.require_complete("expectation_quadrature")
    growth = np.exp(2.0 * sol.I)
    integrand = (sol.B + lam * M) / growth
    integral = cumulative_simpson(integrand, x=sol.times, initial=0.0)
    if propagate_initial:
        E = growth * (x0 + integral)
    else:
        E = x0 + growth * integral
    E[0] = x0
    dE = 2.0 * sol.A * E + sol.B + lam * M
    return ExpectationPath(sol.times, E, Method.QUADRATURE, dE)


def expectation_ivp(a, b, sol: RiccatiSolution, lam: float, M: float, x0: float) -> ExpectationPath:
    """
    Integrate E'' + 2aE = -b(t) forward from E(0) = x₀, E'(0) = B(0) + λM + 2A(0)x₀.

    Only constant a is supported; b may be sampled.
    """
    a = as_coefficient(a)
    if isinstance(a, Sampled):
        if np.ptp(a.values) != 0.0:
            raise UnsupportedHypothesisError("the second-order ODE route needs a constant coefficient a")
        a = Constant(float(a.values[0]))
    b = as_coefficient(b)
    sol.require_complete("expectation_ivp")
    a_val = float(a.value)
    v0 = float(sol.B[0] + lam * M + 2.0 * sol.A[0] * x0)

    def rhs(t, y):
        return [y[1], -2.0 * a_val * y[0] - float(b(t))]

    result = solve_ivp(rhs, (0.0, sol.horizon), [x0, v0], method="DOP853",
                       t_eval=sol.times, rtol=IVP_TOL, atol=IVP_TOL)
    if not result.success:
        raise DomainError(f"second-order expectation ODE failed: {result.message}")
    E, dE = result.y[0].copy(), result.y[1].copy()
    E[0] = x0
    logger.debug(f"expectation_ivp: {result.nfev} evaluations, E'(0)={v0:.12g}")
    return ExpectationPath(sol.times, E, Method.SECOND_ORDER_ODE, dE)


def _scaled_basis(roots_kind: str, r1: float, r2: float, T: float, t: np.ndarray):
    """Homogeneous basis (y1, y2) and derivatives, scaled to stay O(1) on [0, T]."""
    if roots_kind == "complex":
        alpha, beta = r1, r2
        shift = T if alpha > 0 else 0.0
        env = np.exp(alpha * (t - shift))
        cos, sin = np.cos(beta * t), np.sin(beta * t)
        y1, y2 = env * cos, env * sin
        d1 = env * (alpha * cos - beta * sin)
        d2 = env * (alpha * sin + beta * cos)
        return y1, y2, d1, d2
    if roots_kind == "repeated":
        shift = T if r1 > 0 else 0.0
        env = np.exp(r1 * (t - shift))
        y1, y2 = env, env * t / T
        return y1, y2, r1 * env, env * (1.0 / T + r1 * t / T)
    e1 = np.exp(r1 * (t - (T if r1 > 0 else 0.0)))
    e2 = np.exp(r2 * (t - (T if r2 > 0 else 0.0)))
    return e1, e2, r1 * e1, r2 * e2


def corollary_closed_form(a: float, b0: float, b1: float, b2: float, x0: float, E_T: float, T: float,
                          steps: int = DEFAULT_STEPS) -> ExpectationPath:
    """
    Two-point solution of E'' + b₂E' + (2a + b₁)E = -b₀ with E(0) = x₀, E(T) = E_T.

    This is the expectation equation when the running cost couples to the
    mean through b(t) = b₀ + b₁E(t) + b₂E'(t).
    """
    t = np.linspace(0.0, T, steps + 1)
    k = 2.0 * a + b1

    if k != 0.0:
        Ep, dEp = np.full_like(t, -b0 / k), np.zeros_like(t)
    elif b2 != 0.0:
        Ep, dEp = -(b0 / b2) * t, np.full_like(t, -b0 / b2)
    else:
        Ep, dEp = -0.5 * b0 * t * t, -b0 * t

    disc = b2 * b2 - 4.0 * k
    if abs(disc) <= 1e-14 * max(1.0, b2 * b2, abs(4.0 * k)):
        basis = _scaled_basis("repeated", -b2 / 2.0, -b2 / 2.0, T, t)
    elif disc > 0:
        root = math.sqrt(disc)
        basis = _scaled_basis("real", (-b2 + root) / 2.0, (-b2 - root) / 2.0, T, t)
    else:
        basis = _scaled_basis("complex", -b2 / 2.0, math.sqrt(-disc) / 2.0, T, t)
    y1, y2, d1, d2 = basis

    system = np.array([[y1[0], y2[0]], [y1[-1], y2[-1]]])
    det = np.linalg.det(system)
    scale = np.abs(system).max(axis=1).prod()
    if abs(det) <= 1e-12 * scale:
        raise ResonanceError(
            f"two-point problem is singular at T={T}: homogeneous solutions vanish at both ends (det={det:.3e})"
        )
    c1, c2 = np.linalg.solve(system, [x0 - Ep[0], E_T - Ep[-1]])
    E = Ep + c1 * y1 + c2 * y2
    dE = dEp + c1 * d1 + c2 * d2
    E[0], E[-1] = x0, E_T
    return ExpectationPath(t, E, Method.CLOSED_FORM, dE)


def _check_singular_horizon(branch: RiccatiBranch):
    kind = branch.kind
    p0 = branch.phase(0.0)
    if kind == "tan" and abs(math.cos(p0)) < SINGULAR_HORIZON_TOL:
        raise ResonanceError(f"singular horizon: cos θ(0,T) = {math.cos(p0):.3e}")
    if kind == "coth" and abs(math.sinh(p0)) < SINGULAR_HORIZON_TOL:
        raise ResonanceError(f"singular horizon: sinh φ(0,T) = {math.sinh(p0):.3e}")
    if kind == "rational" and abs(p0) < SINGULAR_HORIZON_TOL:
        raise ResonanceError(f"singular horizon: 1 - 2A_T·T = {p0:.3e}")


def closed_form_path(a: float, b: float, A_T: float, B_T: float, lam: float, M: float, x0: float, T: float,
                     steps: int = DEFAULT_STEPS) -> ExpectationPath:
    """
    Constant-coefficient E(t), finite through interior poles of A and B.

    For a ≠ 0, with e* = -b/(2a), ν = √(2|a|), K = B_T - (b/a)A_T + λM and h
    the Riccati integrating factor:

        E(t) = e* + (x₀ - e*)·h(t)/h(0) + (K/ν)·h(T)/h(0)·S(νt)

    with S = sin for a > 0 and sinh for a < 0. For a = 0 the path is the
    quadratic x₀ + E'(0)t - bt²/2. Only a pole exactly at t = 0 is singular.
    """
    t = np.linspace(0.0, T, steps + 1)
    branch = RiccatiBranch(float(a), float(A_T), float(T))
    _check_singular_horizon(branch)
    lm = lam * M

    if a == 0:
        A0 = float(branch.A(0.0))
        B0 = float(closed_form_B(branch, b, B_T, lm, 0.0))
        v0 = B0 + lm + 2.0 * A0 * x0
        E = x0 + v0 * t - 0.5 * b * t * t
        return ExpectationPath(t, E, Method.CLOSED_FORM)

    nu = branch.rate
    e_star = -b / (2.0 * a)
    K = B_T - (b / a) * A_T + lm
    log_h0, sign_h0 = branch.log_h(0.0), branch.sign_h(0.0)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        rho = branch.sign_h(t) * sign_h0 * np.exp(branch.log_h(t) - log_h0)
        psi0 = branch.sign_h(T) * sign_h0
        if a > 0:
            forcing = psi0 * np.exp(branch.log_h(T) - log_h0) * np.sin(nu * t)
        else:
            forcing = psi0 * np.sign(t) * np.exp(branch.log_h(T) - log_h0 + log_abs_sinh(nu * t))
    E = e_star + (x0 - e_star) * rho + (K / nu) * forcing
    E[0] = x0
    if not np.all(np.isfinite(E)):
        raise DomainError("closed-form expectation overflowed; horizon too long for this data")
    return ExpectationPath(t, E, Method.CLOSED_FORM)


def terminal_expectation_const(a: float, b: float, A_T: float, B_T: float, lam: float, M: float, T: float,
                               x0: float) -> float:
    """E(T) for constant a ≠ 0, b, including the propagated initial mean."""
    if a == 0:
        raise DomainError("terminal_expectation_const needs a != 0; use closed_form_path for a = 0")
    return closed_form_path(a, b, A_T, B_T, lam, M, x0, T, steps=16).terminal


def jump_sensitivity(a: float, A_T: float, T: float) -> float:
    """
    ∂E(T)/∂(λM) for constant coefficients.

    Equals h(T)/h(0)·S(νT)/ν; for a > 0 this is
    (√(a/2)·tan θ(0,T) - A_T)/(a + 2A_T²).
    """
    branch = RiccatiBranch(float(a), float(A_T), float(T))
    _check_singular_horizon(branch)
    if a == 0:
        return T / float(branch.phase(0.0))
    nu = branch.rate
    ratio = float(branch.sign_h(T) * branch.sign_h(0.0) * np.exp(branch.log_h(T) - branch.log_h(0.0)))
    S = math.sin(nu * T) if a > 0 else math.sinh(nu * T)
    return ratio * S / nu


def classify_regime(a: float, b: float) -> Regime:
    if a > 0:
        return Regime(RegimeKind.OSCILLATORY, equilibrium=-b / (2.0 * a), frequency=math.sqrt(2.0 * a))
    if a < 0:
        return Regime(RegimeKind.RELAXING, equilibrium=-b / (2.0 * a))
    return Regime(RegimeKind.POLYNOMIAL)


def coupled_expectation(a: float, b0: float, b1: float, b2: float, term: TerminalData, delta: float, lam: float,
                        jump: JumpDistribution, x0: float, T: float, steps: int = DEFAULT_STEPS,
                        c_coeffs: Tuple[float, float, float] = (0.0, 0.0, 0.0)) -> ExpectationPath:
    """
    Expectation when the running cost depends on the mean: b(t) = b₀ + b₁E + b₂E'.

    The two-point path is parametrized by E(T). Feeding it through the
    Riccati solve and the quadrature gives a new E(T) that is affine in the
    guess, so two evaluations fix the consistent value. c(t) = c₀ + c₁E + c₂E²
    only affects C.

    When A blows up inside the horizon the consistent E(T) is instead the one
    whose two-point path meets E'(T) = 2A_T·E(T) + B_T + λM; that path stays
    finite across the poles and is returned with method ClosedForm.
    """
    M = jump.mean()
    c0, c1, c2 = c_coeffs

    def evaluate(E_T: float):
        guess = corollary_closed_form(a, b0, b1, b2, x0, E_T, T, steps)
        times = guess.times
        b_vals = b0 + b1 * guess.E + b2 * guess.dE
        c_vals = c0 + c1 * guess.E + c2 * guess.E ** 2
        sched = CoefficientSchedule(T, Constant(a), Sampled(times, b_vals), Sampled(times, c_vals))
        sol = solve_numeric(sched, term, delta, lam, jump, steps)
        if not sol.is_complete:
            raise BlowUpError(f"coupled problem blows up at t={sol.blowup_time:.12g}", sol.blowup_time)
        return expectation_quadrature(sol, lam, M, x0), guess

    try:
        low, _ = evaluate(0.0)
    except BlowUpError as e:
        logger.warning(f"{e}; matching the terminal slope of the two-point path instead")
        return _coupled_by_terminal_slope(a, b0, b1, b2, term, lam * M, x0, T, steps)
    high, _ = evaluate(1.0)
    slope = high.terminal - low.terminal
    if abs(1.0 - slope) < SINGULAR_HORIZON_TOL:
        raise ResonanceError("coupled expectation has no unique terminal value")
    E_T = low.terminal / (1.0 - slope)
    path, guess = evaluate(E_T)

    mismatch = float(np.max(np.abs(path.E - guess.E)))
    if mismatch > COUPLING_CHECK_TOL:
        logger.warning(f"Coupled expectation: quadrature and two-point paths differ by {mismatch:.3e}")
    logger.debug(f"Coupled expectation: consistent E(T)={E_T:.12g}, mismatch {mismatch:.3e}")
    return path


def _coupled_by_terminal_slope(a: float, b0: float, b1: float, b2: float, term: TerminalData, lm: float,
                               x0: float, T: float, steps: int) -> ExpectationPath:
    def gap(E_T: float):
        path = corollary_closed_form(a, b0, b1, b2, x0, E_T, T, steps)
        return path.dE[-1] - (2.0 * term.A_T * E_T + term.B_T + lm), path

    low, _ = gap(0.0)
    high, _ = gap(1.0)
    slope = high - low
    if abs(slope) < SINGULAR_HORIZON_TOL:
        raise ResonanceError("coupled expectation has no unique terminal value")
    E_T = -low / slope
    residual, path = gap(E_T)
    logger.debug(f"Coupled expectation by terminal slope: E(T)={E_T:.12g}, residual {residual:.3e}")
    return path
