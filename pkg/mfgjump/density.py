"""
Density of the controlled process: explicit characteristic function, its
FFT inversion, and an independent finite-difference solve of the forward
integro-PDE

    m_t + ∂ₓ(m·(2A(t)x + B(t))) = δ²/2·m_xx + λ(∫m(x - z)p(z)dz - m).

Transform convention: φ(t, ω) = E[exp(iωX_t)], p̂(ω) = E[exp(iωZ)].
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.linalg import solve_banded
from scipy.signal import fftconvolve
from scipy.stats import norm

from mfgjump.errors import AliasingError, DomainError, MassLeakError, StepSizeError
from mfgjump.jump_models import JumpDistribution
from mfgjump.riccati import RiccatiSolution

logger = logging.getLogger(__name__)

EDGE_TOL = 1e-10
MASS_LEAK_WARN = 1e-4
MASS_LEAK_ABORT = 1e-3
DEFAULT_N = 1024
DEFAULT_OMEGA_MAX = 32.0
DEFAULT_FD_STEPS = 2000
# Complex entries evaluated per block when integrating the exponent.
_BLOCK = 1 << 20


@dataclass(frozen=True)
class InitialLaw:
    """Initial law m₀: a point mass when std == 0, Gaussian otherwise."""
    mean: float = 0.0
    std: float = 0.0

    def __post_init__(self):
        if not self.std >= 0:
            raise DomainError(f"initial std must be >= 0, got {self.std}")

    @property
    def is_delta(self) -> bool:
        return self.std == 0.0

    def char_fn(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.exp(1j * w * self.mean - 0.5 * (self.std * w) ** 2)

    __call__ = char_fn

    def density(self, x):
        if self.is_delta:
            raise DomainError("a point-mass initial law has no grid density")
        return norm.pdf(x, loc=self.mean, scale=self.std)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.is_delta:
            return np.full(size, float(self.mean))
        return rng.normal(self.mean, self.std, size)


def point_mass(x0: float) -> InitialLaw:
    return InitialLaw(float(x0), 0.0)


def gaussian(mu: float, s: float) -> InitialLaw:
    return InitialLaw(float(mu), float(s))


@dataclass(frozen=True, eq=False)
class CharFnGrid:
    """
    φ on ω_k = (k - N/2)·Δω, Δω = 2·ω_max/N, one row per time slice.

    `centers` fixes where each slice's x-grid is centred after inversion.
    """
    omega: np.ndarray
    times: np.ndarray
    values: np.ndarray
    centers: np.ndarray

    @property
    def n(self) -> int:
        return self.omega.size

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @classmethod
    def from_function(cls, fn: Callable, N: int = DEFAULT_N, omega_max: float = DEFAULT_OMEGA_MAX,
                      center: float = 0.0, t: float = 0.0) -> "CharFnGrid":
        omega = omega_grid(N, omega_max)
        values = np.asarray(fn(omega), dtype=complex).reshape(1, N)
        return cls(omega, np.array([t]), values, np.array([center]))


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density values m[s, j] on x[s, j] for each time slice s."""
    times: np.ndarray
    x: np.ndarray
    m: np.ndarray

    def slice(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.x[i], self.m[i]

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"no density slice at t={t}")
        return i


def omega_grid(N: int, omega_max: float) -> np.ndarray:
    if N < 4 or N & (N - 1):
        raise DomainError(f"N must be a power of two >= 4, got {N}")
    d_omega = 2.0 * omega_max / N
    return (np.arange(N) - N // 2) * d_omega


def _sub_grid(sol: RiccatiSolution, t: float):
    """Nodes η ∈ [0, t] with I(η) and B(η); t itself is appended when off-grid."""
    if not (-1e-12 <= t <= sol.horizon * (1 + 1e-12)):
        raise DomainError(f"t={t} outside [0, {sol.horizon}]")
    i = int(round(t / sol.dt))
    if abs(sol.times[min(i, sol.steps)] - t) <= 1e-9 * max(1.0, sol.horizon):
        k = min(i, sol.steps) + 1
        return sol.times[:k], sol.I[:k], sol.B[:k]
    k = int(np.searchsorted(sol.times, t, side="right"))
    eta = np.append(sol.times[:k], t)
    I = np.append(sol.I[:k], np.interp(t, sol.times, sol.I))
    B = np.append(sol.B[:k], np.interp(t, sol.times, sol.B))
    return eta, I, B


def char_fn(sol: RiccatiSolution, jump: JumpDistribution, delta: float, lam: float,
            initial_char_fn: Callable, t: float, omega):
    """
    φ(t, ω) = φ₀(ω·e^{2R(t,0)})·exp[-∫₀ᵗ (δ²ℛ²/2 - iB(η)ℛ - λ(p̂(ℛ) - 1)) dη]

    with ℛ = ω·e^{2R(t,η)}. The η-integral is composite Simpson on the
    Riccati grid; ω may be an array.
    """
    sol.require_complete("char_fn")
    w = np.asarray(omega, dtype=float)
    flat = w.reshape(-1)
    eta, I_eta, B_eta = _sub_grid(sol, t)
    I_t = I_eta[-1]
    stretch = np.exp(2.0 * (I_t - I_eta))

    exponent = np.zeros(flat.size, dtype=complex)
    if eta.size >= 2:
        rows = max(1, _BLOCK // eta.size)
        for start in range(0, flat.size, rows):
            chunk = flat[start:start + rows]
            R = chunk[:, None] * stretch[None, :]
            integrand = 0.5 * delta ** 2 * R * R - 1j * B_eta[None, :] * R
            if lam != 0.0:
                integrand = integrand - lam * (jump.char_fn(R) - 1.0)
            exponent[start:start + rows] = -simpson(integrand, x=eta, axis=1)
    values = np.asarray(initial_char_fn(flat * math.exp(2.0 * I_t)), dtype=complex) * np.exp(exponent)
    values = values.reshape(w.shape)
    return values[()] if values.ndim == 0 else values


def mean_from_charfn(sol: RiccatiSolution, jump: JumpDistribution, delta: float, lam: float,
                     initial_char_fn: Callable, t: float, scale: float = 0.0) -> float:
    """-i·∂φ/∂ω at ω = 0 by a fourth-order central difference."""
    h = 1e-5 * (1.0 + abs(scale))
    phi = char_fn(sol, jump, delta, lam, initial_char_fn, t, np.array([-2 * h, -h, h, 2 * h]))
    derivative = (phi[0] - 8.0 * phi[1] + 8.0 * phi[2] - phi[3]) / (12.0 * h)
    return float((-1j * derivative).real)


def char_fn_grid(sol: RiccatiSolution, jump: JumpDistribution, delta: float, lam: float, initial_char_fn: Callable,
                 times: Sequence[float], N: int = DEFAULT_N, omega_max: float = DEFAULT_OMEGA_MAX,
                 centers: Optional[Sequence[float]] = None) -> CharFnGrid:
    omega = omega_grid(N, omega_max)
    times = np.asarray(times, dtype=float)
    values = np.vstack([char_fn(sol, jump, delta, lam, initial_char_fn, t, omega) for t in times])
    if centers is None:
        centers = [mean_from_charfn(sol, jump, delta, lam, initial_char_fn, t) for t in times]
    logger.debug(f"Characteristic function on {N} frequencies, |ω| <= {omega_max}, {times.size} slices")
    return CharFnGrid(omega, times, values, np.asarray(centers, dtype=float))


def density_invert(cf: CharFnGrid) -> DensityGrid:
    """
    Discrete inverse transform m(x) = (1/2π)∫φ(ω)e^{-iωx}dω.

    With x_j = x_c + (j - N/2)Δx and Δx·Δω = 2π/N the sum becomes one FFT:
    m_j = (Δω/2π)(-1)^j·FFT[φ_k(-1)^k e^{-iω_k x_c}]_j.
    """
    N = cf.n
    if N & (N - 1):
        raise DomainError(f"N must be a power of two, got {N}")
    edge = float(np.max(np.abs(cf.values[:, [0, -1]])))
    if edge > EDGE_TOL:
        raise AliasingError(
            f"characteristic function has not decayed at |ω| = {abs(cf.omega[0]):g} "
            f"(edge magnitude {edge:.3e} > {EDGE_TOL:g}); raise omega_max or add diffusion",
            edge,
        )
    d_omega = cf.d_omega
    dx = 2.0 * math.pi / (N * d_omega)
    j = np.arange(N)
    alternating = np.where(j % 2 == 0, 1.0, -1.0)
    xs, ms = [], []
    for values, center in zip(cf.values, cf.centers):
        shifted = values * alternating * np.exp(-1j * cf.omega * center)
        m = (d_omega / (2.0 * math.pi)) * alternating * np.fft.fft(shifted)
        xs.append(center + (j - N // 2) * dx)
        ms.append(m.real)
    return DensityGrid(cf.times.copy(), np.vstack(xs), np.vstack(ms))


def mass(grid: DensityGrid, i: int) -> float:
    x, m = grid.slice(i)
    return float(trapezoid(m, x))


def first_moment(grid: DensityGrid, i: int) -> float:
    x, m = grid.slice(i)
    return float(trapezoid(x * m, x) / trapezoid(m, x))


def l1_distance(g1: DensityGrid, i: int, g2: DensityGrid, j: int) -> float:
    """∫|m₁ - m₂| on g1's x-grid, g2 interpolated and zero outside its domain."""
    x1, m1 = g1.slice(i)
    x2, m2 = g2.slice(j)
    other = np.interp(x1, x2, m2, left=0.0, right=0.0)
    return float(trapezoid(np.abs(m1 - other), x1))


# --- finite-difference forward solver --------------------------------------

def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _jump_gain(m: np.ndarray, weights: np.ndarray, first_offset: int) -> np.ndarray:
    """gain_i = Σ_j w_j m_{i-j} with j running from first_offset upward."""
    n = m.size
    conv = fftconvolve(m, weights) if weights.size > 128 else np.convolve(m, weights)
    idx = np.arange(n) - first_offset
    valid = (idx >= 0) & (idx < conv.size)
    out = np.zeros(n)
    out[valid] = conv[idx[valid]]
    return out


def kffp_fd_solve(sol: RiccatiSolution, x: np.ndarray, m0: np.ndarray, delta: float, lam: float,
                  jump: JumpDistribution, steps: int = DEFAULT_FD_STEPS,
                  record_times: Optional[Sequence[float]] = None, order: int = 2) -> DensityGrid:
    """
    Operator-split finite-difference solve on a uniform, truncated x-grid.

    Advection ∂ₓ(m·(2Ax + B)) uses the conservative upwind flux, with
    minmod-limited linear reconstruction when order == 2; together with the
    jump term it advances by a two-stage SSP Runge-Kutta step. Diffusion is
    implicit centred. The domain edges are homogeneous Dirichlet and the run
    aborts when more than 1e-3 of the mass leaves through them.

    Args:
        x: uniform grid, wide enough for the density to stay negligible at the ends.
        m0: initial density on x.
        record_times: slices to keep; every step when None.
    """
    sol.require_complete("kffp_fd_solve")
    x = np.asarray(x, dtype=float)
    m = np.asarray(m0, dtype=float).copy()
    n = x.size
    if m.shape != x.shape or n < 8:
        raise DomainError("initial density must match a grid of at least 8 points")
    dx = float(x[1] - x[0])
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0.0):
        raise DomainError("finite-difference grid must be uniform")
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")

    T = sol.horizon
    dt = T / steps
    speed = float(np.max(np.abs(2.0 * np.outer(sol.A, [x[0] - dx, x[-1] + dx]) + sol.B[:, None])))
    cfl = 0.5 if order == 2 else 1.0
    admissible = cfl / (speed / dx + lam) if speed > 0 or lam > 0 else math.inf
    if dt > admissible:
        raise StepSizeError(
            f"time step {dt:.3e} violates the CFL bound; admissible dt <= {admissible:.3e} "
            f"(steps >= {math.ceil(T / admissible)})",
            admissible,
        )

    offsets, weights = (np.array([0]), np.array([1.0]))
    if lam != 0.0:
        offsets, weights = jump.lattice_weights(dx)
        keep = np.nonzero(weights > 1e-16)[0]
        offsets, weights = offsets[keep[0]:keep[-1] + 1], weights[keep[0]:keep[-1] + 1]
    first_offset = int(offsets[0])

    faces = x[0] - 0.5 * dx + dx * np.arange(n + 1)

    def explicit(m_now: np.ndarray, t: float) -> np.ndarray:
        A_t = np.interp(t, sol.times, sol.A)
        B_t = np.interp(t, sol.times, sol.B)
        v = 2.0 * A_t * faces + B_t
        padded = np.pad(m_now, 2)
        if order == 2:
            slopes = _minmod(np.diff(padded)[:-1], np.diff(padded)[1:])
            left = padded[1:n + 2] + 0.5 * slopes[0:n + 1]
            right = padded[2:n + 3] - 0.5 * slopes[1:n + 2]
        else:
            left, right = padded[1:n + 2], padded[2:n + 3]
        flux = np.where(v > 0, v * left, v * right)
        rate = -(flux[1:] - flux[:-1]) / dx
        if lam != 0.0:
            rate = rate + lam * (_jump_gain(m_now, weights, first_offset) - m_now)
        return rate

    r = 0.5 * delta ** 2 * dt / dx ** 2
    banded = np.zeros((3, n))
    banded[0, 1:] = -r
    banded[1, :] = 1.0 + 2.0 * r
    banded[2, :-1] = -r

    if record_times is None:
        record_idx = list(range(steps + 1))
    else:
        record_idx = sorted({min(steps, max(0, int(round(t / dt)))) for t in record_times})
    wanted = set(record_idx)
    slices = {0: m.copy()} if 0 in wanted else {}

    mass0 = m.sum() * dx
    warned = False
    for k in range(steps):
        t = k * dt
        stage = m + dt * explicit(m, t)
        m = 0.5 * (m + stage + dt * explicit(stage, t + dt))
        if r > 0:
            m = solve_banded((1, 1), banded, m)
        leak = abs(m.sum() * dx - mass0)
        if leak > MASS_LEAK_ABORT:
            raise MassLeakError(
                f"mass leak {leak:.3e} at t={(k + 1) * dt:.6g} exceeds {MASS_LEAK_ABORT:g}; widen the x-domain"
            )
        if leak > MASS_LEAK_WARN and not warned:
            logger.warning(f"Finite-difference mass leak {leak:.3e} at t={(k + 1) * dt:.6g}")
            warned = True
        if k + 1 in wanted:
            slices[k + 1] = m.copy()

    logger.debug(f"Finite-difference solve: {n} points, {steps} steps, order {order}, final leak {leak:.3e}")
    idx = sorted(slices)
    return DensityGrid(np.array([i * dt for i in idx]), np.tile(x, (len(idx), 1)),
                       np.vstack([slices[i] for i in idx]))
