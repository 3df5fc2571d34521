"""
Backward Riccati system for the quadratic value function Φ = A x² + B x + C.

With running cost a(t)x² + b(t)x + c(t), diffusion δ and compound-Poisson
jumps of intensity λ, substituting the ansatz into the HJB (jump integral
taken over Φ(x+z) - Φ(x)) gives

    A' = -a - 2A²
    B' = -b - 2AB - 2λM·A
    C' = -c - B²/2 - δ²A - λ(A·M₂ + B·M)

with A(T), B(T), C(T) fixed by the terminal data. A is a Riccati equation and
can blow up in finite (backward) time; solutions record that as a BlowUp
status instead of raising.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from mfgjump.errors import DomainError
from mfgjump.jump_models import JumpDistribution

logger = logging.getLogger(__name__)

BLOWUP_CAP = 1e8
DEFAULT_STEPS = 4096
MIN_STEPS = 16
# Largest RK4 substep relative to the local Riccati time scale 1/|A|.
POLE_STEP_FRACTION = 0.05
# |A_T| within this relative distance of √(-a/2) is treated as the constant branch.
FIXED_POINT_TOL = 1e-14


class Status(str, Enum):
    COMPLETE = "Complete"
    BLOW_UP = "BlowUp"


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t):
        if np.ndim(t) == 0:
            return float(self.value)
        return np.full(np.shape(t), float(self.value))


@dataclass(frozen=True, eq=False)
class Sampled:
    """Piecewise-linear coefficient sampled on a strictly increasing grid."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise DomainError("sampled coefficient needs matching 1-D time and value grids")
        if np.any(np.diff(times) <= 0):
            raise DomainError("sampled coefficient grid must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


Coefficient = Union[Constant, Sampled]


def as_coefficient(value) -> Coefficient:
    if isinstance(value, (Constant, Sampled)):
        return value
    return Constant(float(value))


@dataclass(frozen=True)
class CoefficientSchedule:
    horizon: float
    a: Coefficient
    b: Coefficient
    c: Coefficient

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        for name in ("a", "b", "c"):
            coef = as_coefficient(getattr(self, name))
            object.__setattr__(self, name, coef)
            if isinstance(coef, Sampled):
                span_ok = coef.times[0] <= 1e-12 and coef.times[-1] >= self.horizon * (1 - 1e-12)
                if not span_ok:
                    raise DomainError(f"sampled coefficient '{name}' must span [0, {self.horizon}]")

    @classmethod
    def constant(cls, horizon: float, a: float, b: float = 0.0, c: float = 0.0) -> "CoefficientSchedule":
        return cls(horizon, Constant(a), Constant(b), Constant(c))

    @property
    def is_constant(self) -> bool:
        return all(isinstance(x, Constant) for x in (self.a, self.b, self.c))

    @property
    def has_constant_a(self) -> bool:
        return isinstance(self.a, Constant)


@dataclass(frozen=True)
class TerminalData:
    A_T: float = 0.0
    B_T: float = 0.0
    C_T: float = 0.0


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """
    A, B, C on a uniform grid over [0, T].

    For BlowUp solutions every node at or before the blow-up time is NaN.
    I holds ∫₀ᵗ A and is NaN unless the solution is complete.
    """
    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    I: np.ndarray
    status: Status
    blowup_time: Optional[float] = None
    method: str = "numeric"

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def is_complete(self) -> bool:
        return self.status == Status.COMPLETE

    def require_complete(self, what: str = "this operation"):
        if not self.is_complete:
            raise DomainError(
                f"{what} needs a complete Riccati solution; A blows up at t={self.blowup_time:.12g}"
            )

    def coefficients_at(self, t: float):
        """Linearly interpolated (A, B, C) at time t."""
        if not (-1e-12 <= t <= self.horizon * (1 + 1e-12)):
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        values = tuple(float(np.interp(t, self.times, arr)) for arr in (self.A, self.B, self.C))
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"t={t} lies in the blown-up region (blow-up at {self.blowup_time})")
        return values


def _cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    if len(times) < 3:
        out = np.zeros_like(values)
        if len(times) == 2:
            out[1] = 0.5 * (values[0] + values[1]) * (times[1] - times[0])
        return out
    return cumulative_simpson(values, x=times, initial=0.0)


def _scalar_fn(coef: Coefficient) -> Callable[[float], float]:
    if isinstance(coef, Constant):
        value = float(coef.value)
        return lambda t: value
    return lambda t: float(np.interp(t, coef.times, coef.values))


def solve_numeric(sched: CoefficientSchedule, term: TerminalData, delta: float, lam: float,
                  jump: JumpDistribution, steps: int = DEFAULT_STEPS) -> RiccatiSolution:
    """
    Classical RK4 backward from T on a uniform grid.

    Inside a grid step the integrator substeps once |A| makes the step large
    compared with the Riccati time scale, so a pole is approached
    geometrically and the blow-up time is located well inside one grid step.
    """
    if steps < MIN_STEPS:
        raise DomainError(f"steps must be >= {MIN_STEPS}, got {steps}")
    T = float(sched.horizon)
    times = np.linspace(0.0, T, steps + 1)
    fa, fb, fc = _scalar_fn(sched.a), _scalar_fn(sched.b), _scalar_fn(sched.c)
    M, M2 = jump.mean(), jump.second_moment()
    lm = lam * M
    d2 = delta * delta

    def rhs(t, A, B, C):
        dA = -fa(t) - 2.0 * A * A
        dB = -fb(t) - 2.0 * A * B - 2.0 * lm * A
        dC = -fc(t) - 0.5 * B * B - d2 * A - lam * (A * M2 + B * M)
        return dA, dB, dC

    def rk4(t, A, B, C, h):
        k1 = rhs(t, A, B, C)
        k2 = rhs(t + h / 2, A + h / 2 * k1[0], B + h / 2 * k1[1], C + h / 2 * k1[2])
        k3 = rhs(t + h / 2, A + h / 2 * k2[0], B + h / 2 * k2[1], C + h / 2 * k2[2])
        k4 = rhs(t + h, A + h * k3[0], B + h * k3[1], C + h * k3[2])
        return (A + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                B + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
                C + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))

    A_arr = np.full(steps + 1, np.nan)
    B_arr = np.full(steps + 1, np.nan)
    C_arr = np.full(steps + 1, np.nan)
    A, B, C = float(term.A_T), float(term.B_T), float(term.C_T)
    A_arr[-1], B_arr[-1], C_arr[-1] = A, B, C
    blowup_time = None
    substeps = 0

    for i in range(steps, 0, -1):
        t, t_lo = times[i], times[i - 1]
        while t > t_lo:
            remaining = t - t_lo
            limit = POLE_STEP_FRACTION / abs(A) if A != 0.0 else remaining
            if remaining <= limit:
                h, t_next = remaining, t_lo
            else:
                h, t_next = limit, t - limit
                substeps += 1
            A, B, C = rk4(t, A, B, C, -h)
            t = t_next
            if not (math.isfinite(A) and math.isfinite(B) and math.isfinite(C)) or abs(A) > BLOWUP_CAP:
                blowup_time = float(t)
                break
        if blowup_time is not None:
            break
        A_arr[i - 1], B_arr[i - 1], C_arr[i - 1] = A, B, C

    if blowup_time is not None:
        logger.debug(f"Riccati blow-up at t={blowup_time:.12g} (T={T}, steps={steps}, substeps={substeps})")
        return RiccatiSolution(times, A_arr, B_arr, C_arr, np.full(steps + 1, np.nan),
                               Status.BLOW_UP, blowup_time, "numeric")

    logger.debug(f"Riccati solved on {steps} steps ({substeps} pole substeps)")
    I = _cumulative(A_arr, times)
    return RiccatiSolution(times, A_arr, B_arr, C_arr, I, Status.COMPLETE, None, "numeric")


# --- constant-coefficient closed forms -------------------------------------

def log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def log_abs_sinh(x):
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        return ax + np.log1p(-np.exp(-2.0 * ax)) - math.log(2.0)


@dataclass(frozen=True)
class RiccatiBranch:
    """
    Closed-form description of A for constant a.

    h(t) is the integrating factor with 2A = (log|h|)', so that
    exp(2∫_η^t A) = h(t)/h(η). `log_h` and `sign_h` give it in log form,
    `blowup_distance` is the backward distance from T to the first pole.
    """
    a: float
    A_T: float
    T: float

    @property
    def kind(self) -> str:
        a, A_T = self.a, self.A_T
        if a > 0:
            return "tan"
        if a == 0:
            return "rational"
        kappa = math.sqrt(-a / 2)
        r = A_T / kappa
        if abs(abs(r) - 1.0) <= FIXED_POINT_TOL:
            return "fixed"
        return "tanh" if abs(r) < 1 else "coth"

    @property
    def rate(self) -> float:
        """ν = √(2|a|)."""
        return math.sqrt(2.0 * abs(self.a))

    def phase(self, t):
        """Angle θ (tan), φ (tanh/coth) or denominator D (rational) at time t."""
        tau = self.T - np.asarray(t, dtype=float)
        a, A_T, nu = self.a, self.A_T, self.rate
        kind = self.kind
        if kind == "tan":
            return math.atan(A_T / math.sqrt(a / 2)) + nu * tau
        if kind == "tanh":
            return math.atanh(A_T / math.sqrt(-a / 2)) - nu * tau
        if kind == "coth":
            return math.atanh(math.sqrt(-a / 2) / A_T) - nu * tau
        if kind == "rational":
            return 1.0 - 2.0 * A_T * tau
        return 2.0 * A_T * np.asarray(t, dtype=float)

    def A(self, t):
        p = self.phase(t)
        kind = self.kind
        if kind == "tan":
            return math.sqrt(self.a / 2) * np.tan(p)
        if kind == "tanh":
            return math.sqrt(-self.a / 2) * np.tanh(p)
        if kind == "coth":
            with np.errstate(divide="ignore", invalid="ignore"):
                return math.sqrt(-self.a / 2) / np.tanh(p)
        if kind == "rational":
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.A_T / p
        return np.full(np.shape(p), self.A_T)

    def log_h(self, t):
        p = self.phase(t)
        kind = self.kind
        with np.errstate(divide="ignore"):
            if kind == "tan":
                return np.log(np.abs(np.cos(p)))
            if kind == "tanh":
                return log_cosh(p)
            if kind == "coth":
                return log_abs_sinh(p)
            if kind == "rational":
                return np.log(np.abs(p))
        return p

    def sign_h(self, t):
        p = self.phase(t)
        kind = self.kind
        if kind == "tan":
            return np.sign(np.cos(p))
        if kind in ("coth", "rational"):
            return np.sign(p)
        return np.ones(np.shape(p))

    def blowup_distance(self) -> float:
        a, A_T = self.a, self.A_T
        kind = self.kind
        if kind == "tan":
            return (math.pi / 2 - math.atan(A_T / math.sqrt(a / 2))) / self.rate
        if kind == "coth" and A_T > 0:
            return math.atanh(math.sqrt(-a / 2) / A_T) / self.rate
        if kind == "rational" and A_T > 0:
            return 1.0 / (2.0 * A_T)
        return math.inf


def blowup_distance(a: float, A_T: float) -> float:
    """Backward distance from T to the first pole of A; inf when A stays finite."""
    return RiccatiBranch(float(a), float(A_T), 0.0).blowup_distance()


def max_horizon(a: float, A_T: float) -> float:
    """Supremum horizon before backward blow-up of A, for a > 0."""
    if not a > 0:
        raise DomainError(f"max_horizon is defined for a > 0 only, got a={a}")
    return (math.pi / 2 - math.atan(math.sqrt(2.0 / a) * A_T)) / math.sqrt(2.0 * a)


def closed_form_B(branch: RiccatiBranch, b: float, B_T: float, lm: float, t):
    """
    B for constant a, b. For a ≠ 0:

        B = (b/a)A - λM + (B_T - (b/a)A_T + λM)·h(T)/h(t)
    """
    t = np.asarray(t, dtype=float)
    a, A_T, T = branch.a, branch.A_T, branch.T
    if a == 0:
        tau = T - t
        D = branch.phase(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (B_T + b * tau - b * A_T * tau ** 2 + 2.0 * lm * A_T * tau) / D
    K = B_T - (b / a) * A_T + lm
    with np.errstate(over="ignore", invalid="ignore"):
        psi = branch.sign_h(T) * branch.sign_h(t) * np.exp(branch.log_h(T) - branch.log_h(t))
        return (b / a) * branch.A(t) - lm + K * psi


def solve_closed_form_const(a: float, b: float, term: TerminalData, lam: float, M: float, delta: float,
                            c: float, T: float, steps: int = DEFAULT_STEPS, m2: float = 0.0) -> RiccatiSolution:
    """
    Closed-form A and B for constant a, b; C by Simpson quadrature of its equation.

    m2 is the second moment of the jump law, which enters only C.
    """
    if steps < MIN_STEPS:
        raise DomainError(f"steps must be >= {MIN_STEPS}, got {steps}")
    T = float(T)
    times = np.linspace(0.0, T, steps + 1)
    branch = RiccatiBranch(float(a), float(term.A_T), T)
    lm = lam * M
    s_star = branch.blowup_distance()
    valid = (T - times) < s_star

    A = np.full(steps + 1, np.nan)
    B = np.full(steps + 1, np.nan)
    C = np.full(steps + 1, np.nan)
    A[valid] = branch.A(times[valid])
    B[valid] = closed_form_B(branch, b, term.B_T, lm, times[valid])
    A[-1], B[-1] = term.A_T, term.B_T

    first = int(np.argmax(valid))
    tv = times[first:]
    f = c + 0.5 * B[first:] ** 2 + delta ** 2 * A[first:] + lam * (A[first:] * m2 + B[first:] * M)
    # ∫_t^T f as the tail of the forward integral
    forward = _cumulative(f, tv)
    C[first:] = term.C_T - (forward[-1] - forward)
    C[-1] = term.C_T

    if s_star <= T:
        blowup_time = T - s_star
        logger.debug(f"Closed-form {branch.kind} branch blows up at t={blowup_time:.12g}")
        return RiccatiSolution(times, A, B, C, np.full(steps + 1, np.nan),
                               Status.BLOW_UP, blowup_time, "closed_form")

    log_h = branch.log_h(times)
    I = 0.5 * (log_h - log_h[0])
    return RiccatiSolution(times, A, B, C, I, Status.COMPLETE, None, "closed_form")


# --- evaluation ------------------------------------------------------------

def value_function(sol: RiccatiSolution, t: float, x):
    """Φ(t, x) = A(t)x² + B(t)x + C(t)."""
    A, B, C = sol.coefficients_at(t)
    x = np.asarray(x, dtype=float)
    return A * x * x + B * x + C


def optimal_control(sol: RiccatiSolution, t: float, x):
    """Optimal feedback drift α*(t, x) = ∂ₓΦ = 2A(t)x + B(t)."""
    A, B, _ = sol.coefficients_at(t)
    return 2.0 * A * np.asarray(x, dtype=float) + B


def _d_dt(values: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order central difference at nodes 2..n-2."""
    return (-values[4:] + 8.0 * values[3:-1] - 8.0 * values[1:-3] + values[:-4]) / (12.0 * dt)


def residuals(sol: RiccatiSolution, sched: CoefficientSchedule, delta: float, lam: float,
              jump: JumpDistribution) -> Dict[str, float]:
    """Max interior residual of each ODE, derivatives by central differences."""
    sol.require_complete("residuals")
    t = sol.times[2:-2]
    A, B, C = sol.A[2:-2], sol.B[2:-2], sol.C[2:-2]
    M, M2 = jump.mean(), jump.second_moment()
    rA = _d_dt(sol.A, sol.dt) + sched.a(t) + 2.0 * A * A
    rB = _d_dt(sol.B, sol.dt) + sched.b(t) + 2.0 * A * B + 2.0 * lam * M * A
    rC = _d_dt(sol.C, sol.dt) + sched.c(t) + 0.5 * B * B + delta ** 2 * A + lam * (A * M2 + B * M)
    return {"A": float(np.max(np.abs(rA))), "B": float(np.max(np.abs(rB))), "C": float(np.max(np.abs(rC)))}


def hjb_residual(sol: RiccatiSolution, sched: CoefficientSchedule, delta: float, lam: float,
                 jump: JumpDistribution, t: float, x):
    """
    Residual of the full HJB at (t, x) for the quadratic Φ held by `sol`:

        Φ_t + δ²/2 Φ_xx + ½(Φ_x)² + λ∫(Φ(x+z) - Φ(x))p(z)dz + a x² + b x + c

    Φ_t is a central difference over the grid nodes around t; t snaps to the
    nearest node with two neighbours on each side.
    """
    sol.require_complete("hjb_residual")
    i = int(round(t / sol.dt))
    i = min(max(i, 2), sol.steps - 2)
    ti = sol.times[i]
    x = np.asarray(x, dtype=float)
    window = slice(i - 2, i + 3)
    dA, dB, dC = (_d_dt(arr[window], sol.dt)[0] for arr in (sol.A, sol.B, sol.C))
    A, B = sol.A[i], sol.B[i]
    M, M2 = jump.mean(), jump.second_moment()

    phi_t = dA * x * x + dB * x + dC
    phi_x = 2.0 * A * x + B
    phi_xx = 2.0 * A
    jump_term = lam * (A * (2.0 * x * M + M2) + B * M)
    running = sched.a(ti) * x * x + sched.b(ti) * x + sched.c(ti)
    return phi_t + 0.5 * delta ** 2 * phi_xx + 0.5 * phi_x ** 2 + jump_term + running
