"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from spiralrecon.kernels import clear_kernel_cache, set_kernel_cache_directory

from tests.helpers import Problem, make_problem


@pytest.fixture
def rng() -> np.random.Generator:
    """
    Provide a seeded random generator.

    Returns:
        A new Philox-backed generator with a fixed seed.
    """
    return np.random.Generator(np.random.Philox(1234))


@pytest.fixture
def small_problem(rng: np.random.Generator) -> Problem:
    """
    Provide an N=8 instance with 40 random samples and default hyperparameters.

    Returns:
        A Problem with its objective context.
    """
    return make_problem(rng, 8, 40)


@pytest.fixture(autouse=True)
def clean_kernel_cache():
    """Reset the process-wide kernel cache around each test."""
    set_kernel_cache_directory(None)
    clear_kernel_cache()
    yield
    set_kernel_cache_directory(None)
    clear_kernel_cache()
