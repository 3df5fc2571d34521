"""
Monte Carlo oracle: Euler simulation of dX = (2A(t)X + B(t))dt + δdW + dJ,
J compound Poisson with intensity λ and jump law p, jumps added as X + Z.

Paths are split into fixed-size batches. Batch k draws from a Philox
(counter-based) generator keyed by SeedSequence(master_seed, spawn_key=(k,)),
so a batch's stream depends only on the seed and its index, and results are
identical whether batches run serially or on a thread pool. Batch statistics
are merged in batch order.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from mfgjump.errors import CheckpointError, DomainError, SimulationError
from mfgjump.jump_models import JumpDistribution
from mfgjump.riccati import RiccatiSolution

logger = logging.getLogger(__name__)

InitialSampler = Callable[[np.random.Generator, int], np.ndarray]

MAX_ESCAPE_FRACTION = 1e-3


@dataclass(frozen=True)
class SimulationSpec:
    paths: int = 20000
    steps: int = 2000
    seed: int = 0
    cap: float = 1e6
    checkpoints: Tuple[float, ...] = ()
    batch_size: int = 4096
    workers: int = 1

    def validate(self, horizon: float):
        if self.paths < 100:
            raise DomainError(f"paths must be >= 100, got {self.paths}")
        if self.steps < 100:
            raise DomainError(f"time step must be <= T/100 (steps >= 100), got {self.steps} steps")
        if self.batch_size < 1 or self.workers < 1:
            raise DomainError("batch_size and workers must be >= 1")
        if not self.cap > 0:
            raise DomainError(f"cap must be > 0, got {self.cap}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.checkpoints:
            raise DomainError("at least one checkpoint time is required")
        for t in self.checkpoints:
            if not -1e-12 <= t <= horizon * (1 + 1e-12):
                raise DomainError(f"checkpoint t={t} outside [0, {horizon}]")


@dataclass(frozen=True, eq=False)
class PathEnsembleStats:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    m2: np.ndarray
    n_escaped: np.ndarray
    n_paths: int


def constant_sampler(x0: float) -> InitialSampler:
    return lambda rng, size: np.full(size, float(x0))


def gaussian_sampler(mu: float, s: float) -> InitialSampler:
    return lambda rng, size: rng.normal(mu, s, size)


def batch_generator(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def _checkpoint_steps(checkpoints: Sequence[float], dt: float) -> List[int]:
    steps = []
    for t in checkpoints:
        k = int(round(t / dt))
        if abs(k * dt - t) > 1e-6 * dt:
            raise DomainError(f"checkpoint t={t} is not on the simulation step grid (dt={dt:g})")
        steps.append(k)
    return steps


def simulate_controlled(sol: RiccatiSolution, initial_sampler: InitialSampler, delta: float, lam: float,
                        jump: JumpDistribution, spec: SimulationSpec) -> PathEnsembleStats:
    """
    Simulate spec.paths paths under the optimal feedback and collect the
    mean, its standard error and the raw second moment at each checkpoint.

    Paths whose state leaves [-cap, cap] are frozen, counted and excluded;
    the run fails if more than 0.1% escape.
    """
    sol.require_complete("simulate_controlled")
    spec.validate(sol.horizon)
    T = sol.horizon
    dt = T / spec.steps
    sqrt_dt = math.sqrt(dt)
    left = np.arange(spec.steps) * dt
    A_n = np.interp(left, sol.times, sol.A)
    B_n = np.interp(left, sol.times, sol.B)
    check_steps = _checkpoint_steps(spec.checkpoints, dt)
    by_step = {}
    for i, k in enumerate(check_steps):
        by_step.setdefault(k, []).append(i)
    n_checks = len(check_steps)

    def run_batch(batch: int) -> np.ndarray:
        size = min(spec.batch_size, spec.paths - batch * spec.batch_size)
        rng = batch_generator(spec.seed, batch)
        X = np.asarray(initial_sampler(rng, size), dtype=float)
        escaped = np.zeros(size, dtype=bool)
        # rows: count, mean, sum of squared deviations, sum of squares, escaped
        out = np.zeros((n_checks, 5))
        index = np.arange(size)

        def record(k: int):
            live = X[~escaped]
            for i in by_step.get(k, ()):
                if live.size:
                    # deviations about the first live path; a constant batch has zero spread exactly
                    d = live - live[0]
                    d_mean = d.mean()
                    out[i] = (live.size, live[0] + d_mean, np.sum((d - d_mean) ** 2), np.sum(live * live),
                              escaped.sum())
                else:
                    out[i] = (0, 0.0, 0.0, 0.0, escaped.sum())

        record(0)
        for n in range(spec.steps):
            step = (2.0 * A_n[n] * X + B_n[n]) * dt
            if delta != 0.0:
                step = step + delta * sqrt_dt * rng.standard_normal(size)
            if lam != 0.0:
                counts = rng.poisson(lam * dt, size)
                total = int(counts.sum())
                if total:
                    sizes = jump.sample(rng, total)
                    step = step + np.bincount(np.repeat(index, counts), weights=sizes, minlength=size)
            X = X + step
            bad = ~np.isfinite(X) | (np.abs(X) > spec.cap)
            if bad.any():
                escaped |= bad
                X[escaped] = 0.0
            if n + 1 in by_step:
                record(n + 1)
        return out

    n_batches = math.ceil(spec.paths / spec.batch_size)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run_batch, range(n_batches)))
    else:
        results = [run_batch(b) for b in range(n_batches)]

    count = np.zeros(n_checks)
    mean = np.zeros(n_checks)
    sq_dev = np.zeros(n_checks)
    sum_sq = np.zeros(n_checks)
    n_escaped = np.zeros(n_checks, dtype=int)
    for part in results:
        n_b, mean_b, sq_b = part[:, 0], part[:, 1], part[:, 2]
        total = count + n_b
        with np.errstate(invalid="ignore", divide="ignore"):
            shift = mean_b - mean
            mean = np.where(total > 0, mean + shift * (n_b / total), 0.0)
            sq_dev = np.where(total > 0, sq_dev + sq_b + shift ** 2 * count * n_b / total, 0.0)
        count = total
        sum_sq += part[:, 3]
        n_escaped += part[:, 4].astype(int)

    worst = int(n_escaped.max()) if n_checks else 0
    if worst > MAX_ESCAPE_FRACTION * spec.paths:
        raise SimulationError(
            f"{worst} of {spec.paths} paths escaped |x| <= {spec.cap:g} (limit {MAX_ESCAPE_FRACTION:.1%})"
        )
    if worst:
        logger.warning(f"{worst} paths escaped the truncation cap and were excluded")

    with np.errstate(invalid="ignore", divide="ignore"):
        variance = np.where(count > 1, sq_dev / np.maximum(count - 1, 1), 0.0)
        stderr = np.sqrt(variance / np.maximum(count, 1))
        m2 = np.where(count > 0, sum_sq / np.maximum(count, 1), 0.0)
    logger.debug(f"Monte Carlo: {spec.paths} paths in {n_batches} batches, {spec.steps} steps")
    return PathEnsembleStats(np.asarray(spec.checkpoints, dtype=float), mean, stderr, m2, n_escaped, spec.paths)


def estimate_expectation(stats: PathEnsembleStats, t: float) -> Tuple[float, float]:
    """(mean, stderr) stored for checkpoint t."""
    hits = np.nonzero(np.abs(stats.times - t) <= 1e-9 * max(1.0, abs(t)))[0]
    if hits.size == 0:
        raise CheckpointError(f"t={t} is not a checkpoint; available: {stats.times.tolist()}")
    i = int(hits[0])
    return float(stats.mean[i]), float(stats.stderr[i])
