"""
Simulated complex vessel phantom.

The magnitude is piecewise constant (a background square plus vessel disks,
vessels overriding the background) and the phase is zero except inside the
vessels, where it follows a parabolic or blunt flow profile.
"""

import configparser
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.ndimage import binary_erosion

from spiralrecon.choices import FlowProfile
from spiralrecon.errors import ConfigError, PhantomError
from spiralrecon.forward import ComplexImage

logger = logging.getLogger(__name__)

ROI2_EROSION = 2

PathLike = Union[str, Path]


@dataclass(frozen=True)
class BackgroundSquare:
    """Axis-aligned square; ``center`` is (x, y) = (column, row) in pixels."""

    center: tuple[float, float]
    side: float
    magnitude: float


@dataclass(frozen=True)
class Vessel:
    """Disk with a flow phase profile; ``center`` is (x, y) in pixels."""

    center: tuple[float, float]
    radius: float
    magnitude: float
    profile: FlowProfile
    peak_phase: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "profile", FlowProfile.from_string(str(self.profile)))


@dataclass(frozen=True)
class PhantomSpec:
    """Grid size, background square and vessel list."""

    n_grid: int
    background: BackgroundSquare
    vessels: tuple[Vessel, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class ROI:
    """Named boolean mask over the N×N grid."""

    name: str
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 2 or not mask.any():
            raise PhantomError(f"ROI '{self.name}' must be a non-empty 2-D mask")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def default_phantom_spec(n_grid: int = 128) -> PhantomSpec:
    """
    Default geometry: centred background square of side N/2 and magnitude 100,
    a parabolic vessel (radius N/10, magnitude 200, peak phase 2 rad) at
    (0.3N, 0.3N) and a blunt vessel (radius N/10, magnitude 200, phase 1 rad)
    at (0.72N, 0.72N).
    """
    center = (n_grid - 1) / 2.0
    radius = n_grid / 10.0
    return PhantomSpec(
        n_grid=n_grid,
        background=BackgroundSquare((center, center), n_grid / 2.0, 100.0),
        vessels=(
            Vessel((0.3 * n_grid, 0.3 * n_grid), radius, 200.0, FlowProfile.PARABOLIC, 2.0),
            Vessel((0.72 * n_grid, 0.72 * n_grid), radius, 200.0, FlowProfile.BLUNT, 1.0),
        ),
    )


def _validate(spec: PhantomSpec) -> None:
    n = spec.n_grid
    if n < 4:
        raise PhantomError("phantom grid must be at least 4×4")
    lo, hi = -0.5, n - 0.5
    bg = spec.background
    if bg.side <= 0 or bg.magnitude < 0:
        raise PhantomError("background side must be > 0 and magnitude >= 0")
    for c in bg.center:
        if c - bg.side / 2 < lo or c + bg.side / 2 > hi:
            raise PhantomError("background square does not fit in the grid")
    for i, vessel in enumerate(spec.vessels):
        if vessel.radius <= 0 or vessel.magnitude < 0:
            raise PhantomError(f"vessel {i}: radius must be > 0 and magnitude >= 0")
        for c in vessel.center:
            if c - vessel.radius < lo or c + vessel.radius > hi:
                raise PhantomError(f"vessel {i} does not fit in the grid")
    for i, a in enumerate(spec.vessels):
        for j in range(i + 1, len(spec.vessels)):
            b = spec.vessels[j]
            distance = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
            if distance < a.radius + b.radius:
                raise PhantomError(f"vessels {i} and {j} overlap")


def make_phantom(spec: Optional[PhantomSpec] = None) -> tuple[ComplexImage, ROI, ROI]:
    """
    Build the phantom image and its two regions of interest.

    ROI1 is the background square; ROI2 is the (last) blunt vessel disk eroded
    by two pixels.

    Raises:
        PhantomError: Invalid or overlapping geometry, or no blunt vessel
    """
    spec = spec if spec is not None else default_phantom_spec()
    _validate(spec)
    n = spec.n_grid
    rows, cols = np.mgrid[0:n, 0:n].astype(np.float64)

    bg = spec.background
    square = (np.abs(cols - bg.center[0]) < bg.side / 2) & (
        np.abs(rows - bg.center[1]) < bg.side / 2
    )
    magnitude = np.where(square, bg.magnitude, 0.0)
    phase = np.zeros((n, n), dtype=np.float64)

    blunt_mask: Optional[np.ndarray] = None
    for vessel in spec.vessels:
        r2 = (cols - vessel.center[0]) ** 2 + (rows - vessel.center[1]) ** 2
        disk = r2 <= vessel.radius**2
        magnitude[disk] = vessel.magnitude
        if vessel.profile == FlowProfile.PARABOLIC:
            phase[disk] = vessel.peak_phase * (1.0 - r2[disk] / vessel.radius**2)
        else:
            phase[disk] = vessel.peak_phase
            blunt_mask = disk

    if blunt_mask is None:
        raise PhantomError("phantom needs a blunt vessel to define ROI2")
    interior = binary_erosion(blunt_mask, iterations=ROI2_EROSION)
    image = ComplexImage(magnitude * np.exp(1j * phase))
    logger.debug("phantom N=%d with %d vessels", n, len(spec.vessels))
    return image, ROI("roi1", square), ROI("roi2", interior)


def _pair(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected 'x, y', got '{text}'")
    return float(parts[0]), float(parts[1])


def load_phantom_spec(path: PathLike) -> PhantomSpec:
    """
    Read a phantom spec from a key-value file.

    Schema::

        [phantom]
        n_grid = 128
        background_center = 63.5, 63.5
        background_side = 64
        background_magnitude = 100

        [vessel.<name>]
        center = 38.4, 38.4
        radius = 12.8
        magnitude = 200
        profile = parabolic
        peak_phase = 2.0

    Missing ``[phantom]`` keys fall back to :func:`default_phantom_spec`;
    when no vessel sections are present the default vessels are kept.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read phantom spec {path}")
    section = parser["phantom"] if parser.has_section("phantom") else {}
    n_grid = int(section.get("n_grid", 128))
    defaults = default_phantom_spec(n_grid)
    bg = defaults.background
    try:
        background = BackgroundSquare(
            center=_pair(section["background_center"])
            if "background_center" in section
            else bg.center,
            side=float(section.get("background_side", bg.side)),
            magnitude=float(section.get("background_magnitude", bg.magnitude)),
        )
        vessels = tuple(
            Vessel(
                center=_pair(parser[name]["center"]),
                radius=float(parser[name]["radius"]),
                magnitude=float(parser[name]["magnitude"]),
                profile=FlowProfile.from_string(parser[name]["profile"]),
                peak_phase=float(parser[name].get("peak_phase", "0")),
            )
            for name in parser.sections()
            if name.startswith("vessel.")
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path}: invalid phantom spec: {e}") from e
    return PhantomSpec(n_grid, background, vessels or defaults.vessels)


def save_phantom_spec(spec: PhantomSpec, path: PathLike) -> Path:
    """Write a spec in the schema read by :func:`load_phantom_spec`."""
    parser = configparser.ConfigParser()
    bg = spec.background
    parser["phantom"] = {
        "n_grid": str(spec.n_grid),
        "background_center": f"{bg.center[0]!r}, {bg.center[1]!r}",
        "background_side": repr(bg.side),
        "background_magnitude": repr(bg.magnitude),
    }
    for i, vessel in enumerate(spec.vessels):
        parser[f"vessel.{i}"] = {
            "center": f"{vessel.center[0]!r}, {vessel.center[1]!r}",
            "radius": repr(vessel.radius),
            "magnitude": repr(vessel.magnitude),
            "profile": str(vessel.profile),
            "peak_phase": repr(vessel.peak_phase),
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)
    return path
