"""
Jump-size laws p(z) for the compound-Poisson part of the controlled process.

Every law exposes its first two moments, the characteristic function
p̂(ω) = E[exp(iωZ)], a CDF, an inverse-CDF sampler driven by an external
numpy Generator, and the lattice weights used by the finite-difference
jump operator. Instances are immutable and safe to share across threads.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from mfgjump.errors import JumpLawError

logger = logging.getLogger(__name__)

# Tail mass ignored when truncating a lattice or a support bound.
TAIL_EPS = 1e-13


def _as_complex(values: np.ndarray):
    return values[()] if values.ndim == 0 else values


class JumpDistribution(ABC):
    """
    Abstract jump-size law.
    """

    @abstractmethod
    def mean(self) -> float:
        """M = ∫ z p(z) dz."""
        pass

    @abstractmethod
    def second_moment(self) -> float:
        """M₂ = ∫ z² p(z) dz."""
        pass

    @abstractmethod
    def char_fn(self, omega):
        """p̂(ω) = E[exp(iωZ)], vectorized over ω."""
        pass

    @abstractmethod
    def cdf(self, z):
        pass

    @abstractmethod
    def stop_loss(self, k):
        """E[(Z - k)⁺], vectorized over k."""
        pass

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        pass

    @abstractmethod
    def support(self) -> Tuple[float, float]:
        """Closed hull of the support, infinite ends allowed."""
        pass

    def support_bound(self, eps: float = TAIL_EPS) -> float:
        """Radius R with P(|Z| > R) below eps."""
        lo, hi = self.support()
        return max(abs(lo), abs(hi))

    def lattice_weights(self, dx: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Probability of each lattice offset j·dx under linear (hat) splitting.

        w_j = E[max(0, 1 - |Z/dx - j|)], obtained as the second difference
        of the stop-loss transform, so the lattice law keeps the mass and
        the mean of p exactly.

        Returns:
            (offsets, weights) with offsets symmetric about 0.
        """
        if dx <= 0:
            raise JumpLawError(f"lattice spacing must be > 0, got {dx}")
        span = int(math.ceil(self.support_bound() / dx)) + 1
        offsets = np.arange(-span, span + 1)
        knots = np.arange(-span - 1, span + 2) * dx
        loss = np.asarray(self.stop_loss(knots), dtype=float)
        weights = (loss[:-2] - 2.0 * loss[1:-1] + loss[2:]) / dx
        weights = np.clip(weights, 0.0, None)
        total = weights.sum()
        if not total > 0:
            raise JumpLawError("lattice weights vanish; spacing too coarse for this law")
        return offsets, weights / total


@dataclass(frozen=True)
class Degenerate(JumpDistribution):
    """Point mass at `size`."""
    size: float = 0.0

    def mean(self) -> float:
        return float(self.size)

    def second_moment(self) -> float:
        return float(self.size) ** 2

    def char_fn(self, omega):
        w = np.asarray(omega, dtype=float)
        return _as_complex(np.exp(1j * w * self.size))

    def cdf(self, z):
        return np.where(np.asarray(z, dtype=float) >= self.size, 1.0, 0.0)

    def stop_loss(self, k):
        return np.maximum(self.size - np.asarray(k, dtype=float), 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.size))

    def support(self) -> Tuple[float, float]:
        return (float(self.size), float(self.size))


@dataclass(frozen=True)
class OneSidedExponential(JumpDistribution):
    """Density k·exp(-k z) on z ≥ 0."""
    rate: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise JumpLawError(f"rate must be > 0, got {self.rate}")

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / self.rate ** 2

    def char_fn(self, omega):
        w = np.asarray(omega, dtype=float)
        return _as_complex(self.rate / (self.rate - 1j * w))

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= 0, -np.expm1(-self.rate * np.maximum(z, 0.0)), 0.0)

    def stop_loss(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(
            k <= 0,
            1.0 / self.rate - k,
            np.exp(-self.rate * np.maximum(k, 0.0)) / self.rate,
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return -np.log1p(-u) / self.rate

    def support(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def support_bound(self, eps: float = TAIL_EPS) -> float:
        return -math.log(eps) / self.rate


@dataclass(frozen=True)
class SymmetrizedOneSided(JumpDistribution):
    """Z = S·Y with Y from a one-sided base law and S = ±1 with probability ½ each."""
    base: JumpDistribution = field(default_factory=OneSidedExponential)

    def __post_init__(self):
        lo, _ = self.base.support()
        if lo < 0:
            raise JumpLawError("symmetrized law needs a base supported on z >= 0")

    def mean(self) -> float:
        return 0.0

    def second_moment(self) -> float:
        return self.base.second_moment()

    def char_fn(self, omega):
        values = np.real(np.asarray(self.base.char_fn(omega))).astype(complex)
        return _as_complex(values)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * (1.0 - self.base.cdf(-z)) + 0.5 * self.base.cdf(z)

    def stop_loss(self, k):
        k = np.asarray(k, dtype=float)
        # E[(-Y - k)⁺] = E[(c - Y)⁺] with c = -k, by put-call parity
        negative_side = -k - self.base.mean() + self.base.stop_loss(-k)
        return 0.5 * self.base.stop_loss(k) + 0.5 * negative_side

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        magnitude = self.base.sample(rng, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * magnitude

    def support(self) -> Tuple[float, float]:
        _, hi = self.base.support()
        return (-hi, hi)

    def support_bound(self, eps: float = TAIL_EPS) -> float:
        return self.base.support_bound(eps)


@dataclass(frozen=True, eq=False)
class Tabulated(JumpDistribution):
    """
    Density tabulated on a strictly increasing grid, linear between nodes.

    The table is renormalized by trapezoid quadrature at construction.
    Tables whose end values are not negligible relative to the peak are
    rejected, since their moments would depend on the truncation.
    """
    z: np.ndarray
    density: np.ndarray
    tail_tolerance: float = 1e-6

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        p = np.asarray(self.density, dtype=float)
        if z.ndim != 1 or z.shape != p.shape or z.size < 3:
            raise JumpLawError("tabulated law needs matching 1-D grids with at least 3 nodes")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(p))):
            raise JumpLawError("tabulated law has non-finite entries")
        if np.any(np.diff(z) <= 0):
            raise JumpLawError("tabulated z-grid must be strictly increasing")
        if np.any(p < 0):
            raise JumpLawError("tabulated density must be nonnegative")
        mass = trapezoid(p, z)
        if not mass > 0:
            raise JumpLawError("tabulated density has zero mass")
        peak = p.max()
        if max(p[0], p[-1]) > self.tail_tolerance * peak:
            raise JumpLawError(
                "tabulated density does not decay at the grid ends; moments would diverge with the table"
            )
        p = p / mass
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "density", p)
        object.__setattr__(self, "_cdf", cumulative_trapezoid(p, z, initial=0.0))
        object.__setattr__(self, "_first", cumulative_trapezoid(z * p, z, initial=0.0))
        logger.debug(f"Tabulated law on {z.size} nodes, renormalized from mass {mass:.12g}")

    def mean(self) -> float:
        return float(trapezoid(self.z * self.density, self.z))

    def second_moment(self) -> float:
        return float(trapezoid(self.z ** 2 * self.density, self.z))

    def char_fn(self, omega):
        w = np.asarray(omega, dtype=float)
        flat = w.reshape(-1)
        values = np.empty(flat.size, dtype=complex)
        rows = max(1, (1 << 20) // self.z.size)
        for start in range(0, flat.size, rows):
            chunk = flat[start:start + rows]
            values[start:start + rows] = trapezoid(
                np.exp(1j * np.outer(chunk, self.z)) * self.density, self.z, axis=1
            )
        return _as_complex(values.reshape(w.shape))

    def cdf(self, z):
        return np.interp(z, self.z, self._cdf, left=0.0, right=1.0)

    def stop_loss(self, k):
        k = np.asarray(k, dtype=float)
        m = self.mean()
        below = np.interp(k, self.z, self._first, left=0.0, right=m)
        tail = 1.0 - self.cdf(k)
        return np.where(k <= self.z[0], m - k, np.maximum(m - below - k * tail, 0.0))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return np.interp(u, self._cdf, self.z)

    def support(self) -> Tuple[float, float]:
        return (float(self.z[0]), float(self.z[-1]))


def mean(d: JumpDistribution) -> float:
    return d.mean()


def second_moment(d: JumpDistribution) -> float:
    return d.second_moment()


def char_fn(d: JumpDistribution, omega):
    return d.char_fn(omega)


def sample(d: JumpDistribution, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return d.sample(rng, size)


JUMP_KINDS = {
    "degenerate": ("size",),
    "exp_positive": ("rate",),
    "symmetrized_exp": ("rate",),
    "tabulated": ("z", "density"),
}


def from_config(record: Dict[str, Any]) -> JumpDistribution:
    """Build a jump law from a config record such as {"kind": "exp_positive", "rate": 2.0}."""
    params = dict(record)
    kind = params.pop("kind", None)
    if kind not in JUMP_KINDS:
        raise JumpLawError(f"unknown jump kind '{kind}'. Allowed: {', '.join(JUMP_KINDS)}")
    expected = set(JUMP_KINDS[kind])
    missing = expected - set(params)
    if missing:
        raise JumpLawError(f"jump law '{kind}' is missing {sorted(missing)}")
    extra = set(params) - expected
    if extra:
        raise JumpLawError(f"jump law '{kind}' does not accept {sorted(extra)}")

    try:
        if kind == "degenerate":
            return Degenerate(size=float(params["size"]))
        if kind == "exp_positive":
            return OneSidedExponential(rate=float(params["rate"]))
        if kind == "symmetrized_exp":
            return SymmetrizedOneSided(base=OneSidedExponential(rate=float(params["rate"])))
        return Tabulated(z=np.asarray(params["z"], dtype=float),
                         density=np.asarray(params["density"], dtype=float))
    except (TypeError, ValueError) as e:
        raise JumpLawError(f"jump law '{kind}' has an invalid parameter: {e}")
