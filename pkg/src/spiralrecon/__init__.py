"""Spiralrecon - regularized reconstruction of spiral MRI k-space data."""

__version__ = "0.1.0"
__author__ = "Ashley Cottrell"
__email__ = "your.email@example.com"

# Files
from spiralrecon.arrayio import load_array, save_array
from spiralrecon.choices import DensityMethod, FlowProfile, InitMode, Method, StopReason

# Configuration
from spiralrecon.config import ExperimentConfig, load_config, load_env_settings
from spiralrecon.errors import (
    ArrayFormatError,
    CacheMismatchError,
    ConfigError,
    ConsistencyError,
    GriddingError,
    InvalidArgumentError,
    PhantomError,
    ReconError,
    TrajectoryFormatError,
)

# Forward model
from spiralrecon.forward import (
    ComplexImage,
    KSpaceSamples,
    NoiseSpec,
    add_noise,
    explicit_matrix,
    nudft_adjoint,
    nudft_forward,
)

# Gridding
from spiralrecon.gridding import (
    DensityWeights,
    GriddingConfig,
    create_density_estimator,
    grid_reconstruct,
    radial_spiral_weights,
    voronoi_weights,
)

# Kernels
from spiralrecon.kernels import (
    KernelCache,
    PrecomputedKernels,
    alias_ring_radius,
    compute_d,
    compute_g,
    export_psf,
    precompute,
)

# Metrics / phantom
from spiralrecon.metrics import kspace_distance, kspace_of_image, quad_error, roi_variance

# Objective
from spiralrecon.objective import (
    CriterionValue,
    Hyperparameters,
    ObjectiveContext,
    eval_jls_direct,
    eval_jls_fast,
    eval_jreg,
    grad_jreg,
    make_context,
)

# Optimizer
from spiralrecon.optimizer import OptimConfig, OptimReport, minimize
from spiralrecon.phantom import ROI, PhantomSpec, default_phantom_spec, make_phantom

# Trajectory
from spiralrecon.trajectory import (
    Trajectory,
    generate_spiral,
    load_trajectory,
    save_trajectory,
    validate,
)

__all__ = [
    # Trajectory
    "Trajectory",
    "generate_spiral",
    "validate",
    "save_trajectory",
    "load_trajectory",
    # Forward model
    "ComplexImage",
    "KSpaceSamples",
    "NoiseSpec",
    "nudft_forward",
    "nudft_adjoint",
    "add_noise",
    "explicit_matrix",
    # Kernels
    "PrecomputedKernels",
    "KernelCache",
    "compute_g",
    "compute_d",
    "precompute",
    "alias_ring_radius",
    "export_psf",
    # Objective
    "Hyperparameters",
    "ObjectiveContext",
    "CriterionValue",
    "make_context",
    "eval_jls_fast",
    "eval_jls_direct",
    "eval_jreg",
    "grad_jreg",
    # Optimizer
    "OptimConfig",
    "OptimReport",
    "minimize",
    # Gridding
    "GriddingConfig",
    "DensityWeights",
    "create_density_estimator",
    "voronoi_weights",
    "radial_spiral_weights",
    "grid_reconstruct",
    # Phantom / metrics
    "PhantomSpec",
    "ROI",
    "default_phantom_spec",
    "make_phantom",
    "quad_error",
    "roi_variance",
    "kspace_of_image",
    "kspace_distance",
    # Choices
    "DensityMethod",
    "InitMode",
    "FlowProfile",
    "StopReason",
    "Method",
    # Configuration / files
    "ExperimentConfig",
    "load_config",
    "load_env_settings",
    "save_array",
    "load_array",
    # Errors
    "ReconError",
    "InvalidArgumentError",
    "TrajectoryFormatError",
    "ArrayFormatError",
    "ConsistencyError",
    "GriddingError",
    "PhantomError",
    "CacheMismatchError",
    "ConfigError",
    # Meta
    "__version__",
]
