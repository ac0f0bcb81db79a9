"""
Gridding baseline: density compensation, Kaiser-Bessel spreading, FFT and
deapodization.
"""

from spiralrecon.gridding.density import (
    DensityEstimator,
    DensityWeights,
    RadialSpiralDensity,
    UniformDensity,
    UserDensity,
    VoronoiDensity,
    create_density_estimator,
    load_weights,
    radial_spiral_weights,
    save_weights,
    uniform_weights,
    user_weights,
    voronoi_weights,
)
from spiralrecon.gridding.kaiser_bessel import auto_beta, kaiser_bessel, kaiser_bessel_2d
from spiralrecon.gridding.reconstruct import GriddingConfig, apodization, grid_reconstruct

__all__ = [
    "DensityWeights",
    "DensityEstimator",
    "VoronoiDensity",
    "RadialSpiralDensity",
    "UniformDensity",
    "UserDensity",
    "create_density_estimator",
    "voronoi_weights",
    "radial_spiral_weights",
    "uniform_weights",
    "user_weights",
    "save_weights",
    "load_weights",
    "kaiser_bessel",
    "kaiser_bessel_2d",
    "auto_beta",
    "GriddingConfig",
    "apodization",
    "grid_reconstruct",
]
