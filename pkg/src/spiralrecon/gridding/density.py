"""
Density compensation weights for gridding.

Estimators share the :class:`DensityEstimator` interface and are created by
name with :func:`create_density_estimator`.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.spatial import QhullError, Voronoi
from shapely.geometry import Polygon, box

from spiralrecon.choices import DensityMethod
from spiralrecon.errors import GriddingError, InvalidArgumentError
from spiralrecon.trajectory import K_MAX, Trajectory, arm_slices, require_valid

logger = logging.getLogger(__name__)

DOMAIN = box(-K_MAX, -K_MAX, K_MAX, K_MAX)


@dataclass(frozen=True)
class DensityWeights:
    """Nonnegative per-sample weights aligned with a trajectory."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if not np.isfinite(w).all() or (w < 0).any():
            raise InvalidArgumentError("density weights must be finite and >= 0")
        if not (w > 0).any():
            raise InvalidArgumentError("density weights must not all be zero")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return int(self.weights.size)


class DensityEstimator:
    """
    Base class for density estimators.

    Subclasses implement :meth:`estimate`.
    """

    def estimate(self, traj: Trajectory) -> DensityWeights:
        raise NotImplementedError("Subclasses must implement estimate()")

    def __call__(self, traj: Trajectory) -> DensityWeights:
        return self.estimate(traj)


def _half_plane_cell(point: np.ndarray, others: np.ndarray) -> Polygon:
    """Cell of ``point`` as the domain cut by every perpendicular bisector."""
    cell = DOMAIN
    far = 10.0
    for other in others:
        normal = point - other
        length = np.hypot(*normal)
        if length == 0.0:
            continue
        normal = normal / length
        mid = 0.5 * (point + other)
        tangent = np.array([-normal[1], normal[0]])
        p1 = mid + far * tangent
        p2 = mid - far * tangent
        half = Polygon([p1, p2, p2 + far * normal, p1 + far * normal])
        cell = cell.intersection(half)
        if cell.is_empty:
            break
    return cell


def _clipped_areas(unique: np.ndarray) -> np.ndarray:
    """Areas of the Voronoi cells of distinct points, clipped to the k-space square."""
    # mirror across the four sides so every interior cell is bounded
    mirrors = [unique]
    for axis in (0, 1):
        for edge in (-K_MAX, K_MAX):
            reflected = unique.copy()
            reflected[:, axis] = 2.0 * edge - reflected[:, axis]
            mirrors.append(reflected)
    combined = np.concatenate(mirrors)
    combined = np.unique(combined, axis=0)
    # np.unique sorts; locate originals in the combined set
    lookup = {tuple(p): i for i, p in enumerate(combined)}
    vor = Voronoi(combined)

    areas = np.empty(unique.shape[0], dtype=np.float64)
    for i, point in enumerate(unique):
        region = vor.regions[vor.point_region[lookup[tuple(point)]]]
        if -1 in region or len(region) < 3:
            cell = _half_plane_cell(point, np.delete(unique, i, axis=0))
        else:
            cell = Polygon(vor.vertices[region]).intersection(DOMAIN)
        areas[i] = cell.area
    return areas


def voronoi_weights(traj: Trajectory) -> DensityWeights:
    """
    Area of each sample's Voronoi cell, clipped to [-0.5, 0.5]².

    Exact duplicates share their cell's area equally.

    Raises:
        GriddingError: Fewer than three distinct points, or all collinear
    """
    require_valid(traj)
    unique, inverse, counts = np.unique(
        traj.points, axis=0, return_inverse=True, return_counts=True
    )
    inverse = np.asarray(inverse).reshape(-1)
    if unique.shape[0] < traj.size:
        logger.warning(
            "%d duplicate trajectory points share Voronoi cells",
            traj.size - unique.shape[0],
        )
    centered = unique - unique.mean(axis=0)
    if unique.shape[0] < 3 or np.linalg.matrix_rank(centered, tol=1e-12) < 2:
        raise GriddingError(
            "Voronoi weights need at least three non-collinear points; "
            "use the radial-spiral or uniform density instead"
        )
    try:
        areas = _clipped_areas(unique)
    except QhullError as e:
        raise GriddingError(f"Voronoi construction failed: {e}") from e
    return DensityWeights(areas[inverse] / counts[inverse])


def radial_spiral_weights(traj: Trajectory, arms: int) -> DensityWeights:
    """
    Analytic weights for interleaved spirals, normalized to sum 1.

    Each sample gets ``|k| * dr`` where ``dr`` is the radial distance covered
    along its arm (mean of the neighbouring increments); the first sample of
    an arm gets the area of a disk whose radius is half the first increment.

    Raises:
        InvalidArgumentError: When the trajectory does not split into equal arms
    """
    require_valid(traj)
    radius = np.hypot(traj.kx, traj.ky)
    weights = np.empty(traj.size, dtype=np.float64)
    for part in arm_slices(traj, arms):
        r = radius[part]
        if r.size < 2:
            raise InvalidArgumentError("each arm needs at least two samples")
        step = np.abs(np.diff(r))
        increment = np.empty_like(r)
        increment[0] = step[0]
        increment[-1] = step[-1]
        increment[1:-1] = 0.5 * (step[:-1] + step[1:])
        w = r * increment
        w[0] = np.pi * (0.5 * step[0]) ** 2
        weights[part] = w
    total = weights.sum()
    if total <= 0:
        raise GriddingError("radial-spiral weights vanish for this trajectory")
    return DensityWeights(weights / total)


def uniform_weights(traj: Trajectory) -> DensityWeights:
    """Equal weights summing to 1."""
    return DensityWeights(np.full(traj.size, 1.0 / traj.size))


def user_weights(values: Sequence[float], traj: Optional[Trajectory] = None) -> DensityWeights:
    """Validate externally supplied weights."""
    weights = DensityWeights(np.asarray(values, dtype=np.float64))
    if traj is not None and len(weights) != traj.size:
        raise InvalidArgumentError(
            f"{len(weights)} weights for a trajectory of {traj.size} points"
        )
    return weights


class VoronoiDensity(DensityEstimator):
    """Voronoi cell areas."""

    def estimate(self, traj: Trajectory) -> DensityWeights:
        return voronoi_weights(traj)


class RadialSpiralDensity(DensityEstimator):
    """Analytic spiral weights; needs the number of arms."""

    def __init__(self, arms: int = 1) -> None:
        self.arms = arms

    def estimate(self, traj: Trajectory) -> DensityWeights:
        return radial_spiral_weights(traj, self.arms)


class UniformDensity(DensityEstimator):
    """No compensation."""

    def estimate(self, traj: Trajectory) -> DensityWeights:
        return uniform_weights(traj)


class UserDensity(DensityEstimator):
    """Weights supplied by the caller."""

    def __init__(self, weights: Sequence[float] = ()) -> None:
        self.weights = np.asarray(weights, dtype=np.float64)

    def estimate(self, traj: Trajectory) -> DensityWeights:
        return user_weights(self.weights, traj)


def create_density_estimator(
    method: Union[str, DensityMethod], **kwargs: Any
) -> DensityEstimator:
    """
    Create a density estimator by name.

    Args:
        method: 'voronoi', 'radial-spiral', 'uniform' or 'user-weights'
        **kwargs: Passed to the estimator (``arms`` or ``weights``)

    Examples:
        >>> estimator = create_density_estimator("radial-spiral", arms=6)
    """
    estimators: dict[DensityMethod, type[DensityEstimator]] = {
        DensityMethod.VORONOI: VoronoiDensity,
        DensityMethod.RADIAL_SPIRAL: RadialSpiralDensity,
        DensityMethod.UNIFORM: UniformDensity,
        DensityMethod.USER_WEIGHTS: UserDensity,
    }
    choice = DensityMethod.from_string(str(method))
    return estimators[choice](**kwargs)


def save_weights(weights: DensityWeights, path: Union[str, Path]) -> Path:
    """Write ``index,weight`` CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("index", "weight"))
        for i, w in enumerate(weights.weights):
            writer.writerow((i, f"{w:.17g}"))
    return path


def load_weights(path: Union[str, Path]) -> DensityWeights:
    """Read weights written by :func:`save_weights`."""
    values: list[float] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_number, row in enumerate(reader, start=1):
            if line_number == 1 and row and row[0].strip() == "index":
                continue
            if not row:
                continue
            try:
                values.append(float(row[-1]))
            except ValueError as e:
                raise InvalidArgumentError(
                    f"{path}: line {line_number}: bad weight {row!r}"
                ) from e
    return DensityWeights(np.asarray(values))
