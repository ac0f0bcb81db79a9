"""
k-space sampling trajectories.

Coordinates are normalized spatial frequencies in cycles per pixel, so every
valid component lies in [-0.5, +0.5].
"""

import csv
import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from spiralrecon.errors import InvalidArgumentError, TrajectoryFormatError

logger = logging.getLogger(__name__)

K_MAX = 0.5
CSV_HEADER = ("kx", "ky")


@dataclass(frozen=True)
class Trajectory:
    """
    Ordered list of L sample locations ``(kx, ky)``.

    The coordinate array is copied and made read-only on construction.
    Range checks are left to :func:`validate` so that out-of-range input can
    still be diagnosed.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgumentError(
                f"trajectory points must have shape (L, 2), got {pts.shape}"
            )
        if pts.shape[0] < 1:
            raise InvalidArgumentError("trajectory must contain at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def kx(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def ky(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def size(self) -> int:
        """Number of samples L."""
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.size

    def fingerprint(self) -> str:
        """SHA-256 of the little-endian float64 coordinates."""
        return hashlib.sha256(self.points.astype("<f8").tobytes()).hexdigest()

    def __repr__(self) -> str:
        return f"Trajectory(L={self.size}, sha256={self.fingerprint()[:12]})"


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of :func:`validate`; ``index`` is the first offending point."""

    ok: bool
    index: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(traj: Trajectory) -> ValidationResult:
    """
    Check that every component is finite and inside [-0.5, +0.5].

    Returns:
        ValidationResult that is truthy on success
    """
    pts = traj.points
    finite = np.isfinite(pts).all(axis=1)
    in_range = (np.abs(np.where(np.isfinite(pts), pts, 0.0)) <= K_MAX).all(axis=1)
    bad = np.flatnonzero(~(finite & in_range))
    if bad.size == 0:
        return ValidationResult(ok=True)
    index = int(bad[0])
    reason = "non-finite coordinate" if not finite[index] else "outside [-0.5, 0.5]"
    return ValidationResult(ok=False, index=index, reason=reason)


def require_valid(traj: Trajectory) -> Trajectory:
    """Raise InvalidArgumentError unless the trajectory validates."""
    result = validate(traj)
    if not result:
        kx, ky = traj.points[result.index]
        raise InvalidArgumentError(
            f"trajectory point {result.index} ({kx}, {ky}): {result.reason}"
        )
    return traj


def default_turns(arms: int, n_grid: int) -> float:
    """Turns per arm giving Nyquist-spaced revolutions for an N×N grid."""
    if arms < 1 or n_grid < 1:
        raise InvalidArgumentError("arms and n_grid must be positive")
    return n_grid / (2.0 * arms)


def generate_spiral(
    arms: int,
    samples_per_arm: int,
    turns: Optional[float] = None,
    n_grid: Optional[int] = None,
) -> Trajectory:
    """
    Interleaved Archimedean spiral with constant angular rate.

    Arm ``a`` sample ``j`` sits at radius ``0.5 * tau`` and angle
    ``2*pi*turns*tau + 2*pi*a/arms`` with ``tau = j / (samples_per_arm - 1)``.
    Arms are concatenated in order.

    Args:
        arms: Number of interleaves A (>= 1)
        samples_per_arm: Samples per interleave S (>= 2)
        turns: Revolutions per arm; derived from ``n_grid`` when omitted
        n_grid: Target grid size used for the default number of turns

    Returns:
        Trajectory of A*S points

    Examples:
        >>> generate_spiral(1, 2, turns=1.0).points.tolist()
        [[0.0, 0.0], [0.5, -1.2246467991473532e-16]]
    """
    if arms < 1:
        raise InvalidArgumentError(f"arms must be >= 1, got {arms}")
    if samples_per_arm < 2:
        raise InvalidArgumentError(
            f"samples_per_arm must be >= 2, got {samples_per_arm}"
        )
    if turns is None:
        if n_grid is None:
            raise InvalidArgumentError("either turns or n_grid must be given")
        turns = default_turns(arms, n_grid)
    if not math.isfinite(turns) or turns <= 0:
        raise InvalidArgumentError(f"turns must be a positive number, got {turns}")

    tau = np.arange(samples_per_arm, dtype=np.float64) / (samples_per_arm - 1)
    radius = K_MAX * tau
    offsets = 2.0 * np.pi * np.arange(arms, dtype=np.float64) / arms
    theta = 2.0 * np.pi * turns * tau[None, :] + offsets[:, None]
    points = np.stack(
        [radius[None, :] * np.cos(theta), radius[None, :] * np.sin(theta)], axis=-1
    )
    # cos/sin can overshoot the unit circle by one ulp
    points = np.clip(points.reshape(-1, 2), -K_MAX, K_MAX)
    return Trajectory(points)


def cartesian_trajectory(n_grid: int, cell_centered: bool = False) -> Trajectory:
    """
    Complete Cartesian N×N trajectory, row-major over (n, m).

    By default the points are ``((m - N/2)/N, (n - N/2)/N)``, the grid on
    which H^H H is the identity. With ``cell_centered`` they sit at the
    centres of an N×N tiling of the k-space square.
    """
    if n_grid < 1:
        raise InvalidArgumentError("n_grid must be positive")
    idx = np.arange(n_grid, dtype=np.float64)
    if cell_centered:
        axis = (idx + 0.5) / n_grid - K_MAX
    else:
        axis = (idx - n_grid / 2.0) / n_grid
    ky, kx = np.meshgrid(axis, axis, indexing="ij")
    return Trajectory(np.stack([kx.ravel(), ky.ravel()], axis=1))


def arm_slices(traj: Trajectory, arms: int) -> list[slice]:
    """Split a trajectory into ``arms`` equal consecutive index ranges."""
    if arms < 1 or traj.size % arms != 0:
        raise InvalidArgumentError(
            f"trajectory of {traj.size} points cannot be split into {arms} equal arms"
        )
    per_arm = traj.size // arms
    return [slice(a * per_arm, (a + 1) * per_arm) for a in range(arms)]


def save_trajectory(traj: Trajectory, path: Union[str, Path]) -> Path:
    """Write ``kx,ky`` CSV with 17 significant digits, LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for kx, ky in traj.points:
            writer.writerow((f"{kx:.17g}", f"{ky:.17g}"))
    logger.debug("saved trajectory with %d points to %s", traj.size, path)
    return path


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    """
    Read a trajectory CSV written by :func:`save_trajectory`.

    Raises:
        TrajectoryFormatError: On a malformed row (with its line number) or an
            empty file
    """
    rows: list[tuple[float, float]] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for line_number, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if line_number == 1 and tuple(c.strip() for c in row) == CSV_HEADER:
                continue
            if len(row) != 2:
                raise TrajectoryFormatError(
                    f"expected 2 columns, found {len(row)}", line_number
                )
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as e:
                raise TrajectoryFormatError(
                    f"non-numeric value in {row!r}", line_number
                ) from e
    if not rows:
        raise TrajectoryFormatError(f"{path}: trajectory file holds no points")
    return Trajectory(np.array(rows, dtype=np.float64))
