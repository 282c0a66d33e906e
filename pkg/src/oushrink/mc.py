"""Deterministic Monte Carlo plumbing.

Trials are cut into fixed-size blocks.  Block ``b`` draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(b,))``, so the numbers a
given trial sees depend only on ``(seed, trial index)`` and never on how many
workers run the blocks.  Per-block moments are merged strictly in block
order, which makes the final floating-point result independent of the
schedule as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, TypeVar

import numpy as np

BLOCK_SIZE = 1024
SIGMA_MULTIPLIER = 3.0

T = TypeVar("T")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def iter_blocks(trials: int, block_size: int = BLOCK_SIZE) -> Iterator[tuple[int, int, int]]:
    """Yield ``(block index, first trial, trial count)``."""
    for b, start in enumerate(range(0, trials, block_size)):
        yield b, start, min(block_size, trials - start)


def run_blocks(
    fn: Callable[[np.random.Generator, int], T],
    trials: int,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Evaluate ``fn(rng, count)`` for every block; results come back in block order."""
    jobs = list(iter_blocks(trials, block_size))

    def call(job):
        b, _, count = job
        return fn(block_rng(seed, b), count)

    if workers <= 1 or len(jobs) <= 1:
        return [call(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(call, jobs))


@dataclass
class Moments:
    """Running count / mean / sum of squared deviations, column-wise."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples: np.ndarray) -> "Moments":
        x = np.asarray(samples, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, ((x - mean) ** 2).sum(axis=0))

    def merge(self, other: "Moments") -> "Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return Moments(n, mean, m2)

    @classmethod
    def combine(cls, parts: list["Moments"]) -> "Moments":
        it = iter(parts)
        acc = next(it)
        for part in it:
            acc = acc.merge(part)
        return acc

    @property
    def variance(self) -> np.ndarray:
        return self.m2 / max(self.count - 1, 1)

    @property
    def std_error(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)

    def half_width(self, k: float = SIGMA_MULTIPLIER) -> np.ndarray:
        return k * self.std_error


def mc_moments(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    trials: int,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> Moments:
    """Moments of the per-trial rows returned by ``fn(rng, count)`` (shape ``(count, k)``)."""
    parts = run_blocks(lambda rng, n: Moments.of(fn(rng, n)), trials, seed, workers, block_size)
    return Moments.combine(parts)
