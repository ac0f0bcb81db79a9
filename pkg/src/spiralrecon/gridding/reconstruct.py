"""
Gridding reconstruction.

Steps: density weighting, Kaiser-Bessel spreading onto an oversampled grid,
inverse FFT, deapodization and central crop. The object is shifted by N/2
before spreading so that the kernel roll-off is centred on the image.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.fft

from spiralrecon.choices import DensityMethod
from spiralrecon.errors import GriddingError, InvalidArgumentError
from spiralrecon.forward import ComplexImage, SamplesLike, as_samples_array
from spiralrecon.gridding.density import DensityWeights, create_density_estimator
from spiralrecon.gridding.kaiser_bessel import auto_beta, kaiser_bessel, kaiser_bessel_2d
from spiralrecon.trajectory import Trajectory, require_valid

logger = logging.getLogger(__name__)

APODIZATION_GUARD = 1e-8


@dataclass(frozen=True)
class GriddingConfig:
    """
    Gridding parameters.

    Attributes:
        kernel_width: Odd kernel width W in oversampled grid cells
        oversampling: Grid oversampling factor (>= 1)
        beta: Kaiser-Bessel shape; None selects the automatic value
        density: Density compensation method
        arms: Number of interleaves, used by the radial-spiral estimator
        weights: Explicit weights for the user-weights method
    """

    kernel_width: int = 7
    oversampling: float = 2.0
    beta: Optional[float] = None
    density: DensityMethod = DensityMethod.VORONOI
    arms: int = 1
    weights: Optional[Sequence[float]] = None

    def __post_init__(self) -> None:
        if self.kernel_width < 1 or self.kernel_width % 2 == 0:
            raise InvalidArgumentError("kernel_width must be an odd positive integer")
        if not self.oversampling >= 1.0:
            raise InvalidArgumentError("oversampling must be >= 1")
        if self.beta is not None and not (math.isfinite(self.beta) and self.beta > 0):
            raise InvalidArgumentError("beta must be a positive finite number")
        object.__setattr__(self, "density", DensityMethod.from_string(str(self.density)))

    @property
    def resolved_beta(self) -> float:
        if self.beta is not None:
            return float(self.beta)
        return auto_beta(self.kernel_width, self.oversampling)

    def grid_size(self, n_grid: int) -> int:
        return int(math.ceil(self.oversampling * n_grid))

    def density_weights(self, traj: Trajectory) -> DensityWeights:
        """Weights from the configured estimator."""
        kwargs: dict = {}
        if self.density == DensityMethod.RADIAL_SPIRAL:
            kwargs["arms"] = self.arms
        elif self.density == DensityMethod.USER_WEIGHTS:
            if self.weights is None:
                raise GriddingError("user-weights density needs explicit weights")
            kwargs["weights"] = self.weights
        return create_density_estimator(self.density, **kwargs).estimate(traj)


def _crop_positions(n_grid: int) -> np.ndarray:
    """Centred image coordinates of the cropped N×N block."""
    shift = n_grid // 2
    return np.arange(-shift, n_grid - shift, dtype=np.int64)


def apodization(n_grid: int, config: GriddingConfig) -> np.ndarray:
    """
    Image-domain response of the sampled kernel over the cropped axis.

    Returns the 1-D axis response; the 2-D response is its outer product.

    Raises:
        GriddingError: If the response drops below the guard threshold
    """
    width = config.kernel_width
    size = config.grid_size(n_grid)
    beta = config.resolved_beta
    reach = width // 2 + 1
    taps = np.arange(-reach, reach + 1, dtype=np.float64)
    values = kaiser_bessel(taps, width, beta)
    x = _crop_positions(n_grid).astype(np.float64)
    response = np.cos(2.0 * np.pi * np.outer(x, taps) / size) @ values
    peak = float(np.sum(values))
    if np.min(np.abs(response)) < APODIZATION_GUARD * peak:
        raise GriddingError(
            f"kernel apodization vanishes inside the field of view "
            f"(W={width}, oversampling={config.oversampling}, beta={beta:.3f})"
        )
    return response


def grid_reconstruct(
    samples: SamplesLike,
    traj: Trajectory,
    n_grid: int,
    config: Optional[GriddingConfig] = None,
    weights: Optional[DensityWeights] = None,
) -> ComplexImage:
    """
    Reconstruct an N×N image by gridding.

    Args:
        samples: k-space data aligned with ``traj``
        traj: Sampling trajectory
        n_grid: Output size N
        config: Gridding parameters (defaults when omitted)
        weights: Precomputed density weights; estimated from ``config``
            when omitted

    Returns:
        Reconstructed image
    """
    config = config if config is not None else GriddingConfig()
    s = as_samples_array(samples)
    require_valid(traj)
    if s.size != traj.size:
        raise InvalidArgumentError(
            f"{s.size} samples do not match a trajectory of {traj.size} points"
        )
    if weights is None:
        weights = config.density_weights(traj)
    if len(weights) != traj.size:
        raise InvalidArgumentError("density weights and trajectory lengths differ")

    size = config.grid_size(n_grid)
    half = size // 2
    shift = n_grid // 2
    width = config.kernel_width
    beta = config.resolved_beta
    deapod = apodization(n_grid, config)

    # move the object centre to the origin of the image domain
    weighted = s * weights.weights * np.exp(-2j * np.pi * (traj.kx + traj.ky) * shift)

    px = traj.kx * size + half
    py = traj.ky * size + half
    reach = width // 2 + 1
    taps = np.arange(-reach, reach + 1)
    ix = np.floor(px).astype(np.int64)[:, None] + taps[None, :]
    iy = np.floor(py).astype(np.int64)[:, None] + taps[None, :]
    dx = ix - px[:, None]
    dy = iy - py[:, None]

    grid = np.zeros((size, size), dtype=np.complex128)
    for a in range(taps.size):
        for b in range(taps.size):
            np.add.at(
                grid,
                (iy[:, a] % size, ix[:, b] % size),
                weighted * kaiser_bessel_2d(dx[:, b], dy[:, a], width, beta),
            )

    spectrum = scipy.fft.fft2(grid)
    x = _crop_positions(n_grid)
    idx = x % size
    phase = np.exp(2j * np.pi * half * x / size)
    block = spectrum[np.ix_(idx, idx)] * phase[:, None] * phase[None, :]
    image = n_grid * block / (deapod[:, None] * deapod[None, :])
    logger.debug("gridded %d samples onto %d×%d", traj.size, size, size)
    return ComplexImage(image)
