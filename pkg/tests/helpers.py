"""Shared builders for random test instances."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from spiralrecon import (
    Hyperparameters,
    KernelCache,
    KSpaceSamples,
    ObjectiveContext,
    Trajectory,
    make_context,
    precompute,
)


@dataclass
class Problem:
    """A small random reconstruction instance."""

    n_grid: int
    traj: Trajectory
    samples: KSpaceSamples
    ctx: ObjectiveContext


def random_trajectory(rng: np.random.Generator, size: int) -> Trajectory:
    """Uniform random points in the k-space square."""
    return Trajectory(rng.uniform(-0.5, 0.5, size=(size, 2)))


def random_image(rng: np.random.Generator, n_grid: int, scale: float = 1.0) -> np.ndarray:
    """Complex Gaussian N×N image."""
    return scale * (
        rng.standard_normal((n_grid, n_grid)) + 1j * rng.standard_normal((n_grid, n_grid))
    )


def random_samples(rng: np.random.Generator, size: int, scale: float = 1.0) -> KSpaceSamples:
    return KSpaceSamples(
        scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    )


def make_problem(
    rng: np.random.Generator,
    n_grid: int,
    size: int,
    hyper: Optional[Hyperparameters] = None,
    scale: float = 1.0,
) -> Problem:
    """Random trajectory and data with their objective context."""
    traj = random_trajectory(rng, size)
    samples = random_samples(rng, size, scale)
    kernels = precompute(samples, traj, n_grid, cache=KernelCache())
    return Problem(n_grid, traj, samples, make_context(kernels, samples, hyper))


def central_difference(func, x: np.ndarray, index: tuple, imaginary: bool, step: float = 1e-5) -> float:
    """Central finite difference of ``func`` along one real coordinate of ``x``."""
    delta = np.zeros_like(x)
    delta[index] = 1j * step if imaginary else step
    return (func(x + delta) - func(x - delta)) / (2.0 * step)
