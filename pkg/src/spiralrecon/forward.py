"""
Exact non-uniform DFT operators of the discrete acquisition model.

    s_l = (1/N) * sum_{n,m} f[n, m] * exp(i*2*pi*(kx_l*m + ky_l*n)) + b_l

Row index ``n`` pairs with ``ky`` and column index ``m`` with ``kx``.
The sums are evaluated directly (separably over the two axes) in fixed-size
blocks of samples, so results do not depend on any scheduling.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from spiralrecon.errors import InvalidArgumentError
from spiralrecon.trajectory import Trajectory, require_valid

logger = logging.getLogger(__name__)

# samples per block for the direct sums
BLOCK = 4096


@dataclass(frozen=True)
class ComplexImage:
    """Square N×N complex image; entries must be finite."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = as_image_array(self.values).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_grid(self) -> int:
        return int(self.values.shape[0])

    def __repr__(self) -> str:
        return f"ComplexImage(N={self.n_grid})"


@dataclass(frozen=True)
class KSpaceSamples:
    """L complex samples aligned with a trajectory."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        if not np.isfinite(arr).all():
            raise InvalidArgumentError("k-space samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"KSpaceSamples(L={self.size})"


@dataclass(frozen=True)
class NoiseSpec:
    """
    Additive white complex Gaussian noise.

    Attributes:
        snr_db: Signal-to-noise ratio in dB, or None for noise-free data
        seed: Seed of the counter-based generator
    """

    snr_db: Optional[float] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise InvalidArgumentError("snr_db must be finite when given")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")


ImageLike = Union[ComplexImage, np.ndarray]
SamplesLike = Union[KSpaceSamples, np.ndarray]


def as_image_array(image: ImageLike) -> np.ndarray:
    """Return the complex N×N array behind an image, checking its invariants."""
    if isinstance(image, ComplexImage):
        return image.values
    arr = np.asarray(image, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InvalidArgumentError(f"image must be square N×N, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidArgumentError("image contains non-finite entries")
    return arr


def as_samples_array(samples: SamplesLike) -> np.ndarray:
    if isinstance(samples, KSpaceSamples):
        return samples.values
    arr = np.asarray(samples, dtype=np.complex128).reshape(-1)
    if not np.isfinite(arr).all():
        raise InvalidArgumentError("k-space samples must be finite")
    return arr


def _phases(k: np.ndarray, index: np.ndarray) -> np.ndarray:
    """exp(i*2*pi*k_l*index_j) as an (L, len(index)) array."""
    return np.exp(2j * np.pi * np.outer(k, index))


def nudft_forward(image: ImageLike, traj: Trajectory) -> KSpaceSamples:
    """
    Evaluate the discrete model ``s = H f`` by direct summation.

    Args:
        image: N×N complex image
        traj: Valid trajectory of L points

    Returns:
        L noise-free k-space samples
    """
    f = as_image_array(image)
    require_valid(traj)
    n = f.shape[0]
    grid = np.arange(n, dtype=np.float64)
    out = np.empty(traj.size, dtype=np.complex128)
    for start in range(0, traj.size, BLOCK):
        stop = min(start + BLOCK, traj.size)
        ex = _phases(traj.kx[start:stop], grid)
        ey = _phases(traj.ky[start:stop], grid)
        # rows[l, n] = sum_m f[n, m] * ex[l, m]
        rows = ex @ f.T
        out[start:stop] = np.einsum("ln,ln->l", ey, rows) / n
    return KSpaceSamples(out)


def nudft_adjoint(
    samples: SamplesLike, traj: Trajectory, n_grid: int
) -> ComplexImage:
    """
    Apply the adjoint ``H^H s``:
    ``out[n, m] = (1/N) * sum_l s_l * exp(-i*2*pi*(kx_l*m + ky_l*n))``.
    """
    s = as_samples_array(samples)
    if s.size != traj.size:
        raise InvalidArgumentError(
            f"{s.size} samples do not match a trajectory of {traj.size} points"
        )
    if n_grid < 1:
        raise InvalidArgumentError("n_grid must be positive")
    require_valid(traj)
    grid = np.arange(n_grid, dtype=np.float64)
    acc = np.zeros((n_grid, n_grid), dtype=np.complex128)
    for start in range(0, traj.size, BLOCK):
        stop = min(start + BLOCK, traj.size)
        ex = np.conj(_phases(traj.kx[start:stop], grid))
        ey = np.conj(_phases(traj.ky[start:stop], grid))
        acc += (ey * s[start:stop, None]).T @ ex
    return ComplexImage(acc / n_grid)


def explicit_matrix(traj: Trajectory, n_grid: int) -> np.ndarray:
    """
    Dense model matrix H (L × N²), columns ordered row-major over (n, m).

    Only meant for small problems and oracle checks.
    """
    require_valid(traj)
    grid = np.arange(n_grid, dtype=np.float64)
    nn, mm = np.meshgrid(grid, grid, indexing="ij")
    phase = np.outer(traj.kx, mm.ravel()) + np.outer(traj.ky, nn.ravel())
    return np.exp(2j * np.pi * phase) / n_grid


def add_noise(samples: SamplesLike, spec: NoiseSpec) -> KSpaceSamples:
    """
    Add circular complex Gaussian noise at the requested SNR.

    The per-sample noise variance is ``mean(|s|^2) * 10**(-snr_db/10)``,
    split equally between the real and imaginary parts.

    Raises:
        InvalidArgumentError: Empty input, or all-zero samples with a finite SNR
    """
    s = as_samples_array(samples)
    if s.size == 0:
        raise InvalidArgumentError("cannot add noise to an empty sample set")
    if spec.snr_db is None:
        return samples if isinstance(samples, KSpaceSamples) else KSpaceSamples(s)

    power = float(np.mean(np.abs(s) ** 2))
    if power == 0.0:
        raise InvalidArgumentError(
            "signal power is zero; SNR-based noise level is undefined"
        )
    variance = power * 10.0 ** (-spec.snr_db / 10.0)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    scale = math.sqrt(variance / 2.0)
    noise = scale * (
        rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)
    )
    logger.debug("added noise: snr=%.1f dB, sigma^2=%.4g", spec.snr_db, variance)
    return KSpaceSamples(s + noise)
