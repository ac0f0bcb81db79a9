"""16-bit binary PGM (P5) and CSV profile exports."""

import csv
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from spiralrecon.errors import ArrayFormatError, InvalidArgumentError

PathLike = Union[str, Path]
MAXVAL = 65535


def save_pgm(
    path: PathLike,
    values: np.ndarray,
    vmin: Optional[float] = None,
    vmax: Optional[float] = None,
) -> Path:
    """
    Write a real 2-D array as a 16-bit grayscale PGM.

    Values are mapped linearly from [vmin, vmax] onto [0, 65535] and clipped.
    A flat image (vmax == vmin) is written at full brightness.

    Args:
        path: Destination file
        values: Real 2-D array; row 0 is written first
        vmin: Value mapped to black (defaults to the array minimum)
        vmax: Value mapped to white (defaults to the array maximum)
    """
    data = np.asarray(values, dtype=np.float64)
    if data.ndim != 2:
        raise InvalidArgumentError(
            f"PGM export needs a 2-D array, got shape {data.shape}"
        )
    lo = float(np.min(data)) if vmin is None else float(vmin)
    hi = float(np.max(data)) if vmax is None else float(vmax)
    if hi > lo:
        scaled = np.clip((data - lo) / (hi - lo), 0.0, 1.0)
    else:
        scaled = np.ones_like(data)
    pixels = np.rint(scaled * MAXVAL).astype(np.int32)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # mode "I" with values under 2**16 is written as P5 with maxval 65535
    Image.fromarray(pixels).save(path, format="PPM")
    return path


def load_pgm(path: PathLike) -> np.ndarray:
    """Read a 16-bit PGM written by :func:`save_pgm` as integer pixels."""
    try:
        with Image.open(path) as img:
            if img.format != "PPM" or not img.mode.startswith("I"):
                raise ArrayFormatError(f"{path}: not a 16-bit PGM (mode {img.mode})")
            return np.asarray(img).astype(np.int64)
    except UnidentifiedImageError as e:
        raise ArrayFormatError(f"{path}: not an image file") from e


def save_magnitude(path: PathLike, image: np.ndarray) -> Path:
    """Magnitude image on [0, max]."""
    mag = np.abs(image)
    return save_pgm(path, mag, vmin=0.0, vmax=float(mag.max()))


def save_phase(path: PathLike, image: np.ndarray) -> Path:
    """Phase image with [-pi, pi] mapped onto the full range."""
    return save_pgm(path, np.angle(image), vmin=-np.pi, vmax=np.pi)


def save_difference(
    path: PathLike, image: np.ndarray, reference: np.ndarray
) -> Path:
    """Magnitude of the difference with a reference image."""
    return save_magnitude(path, np.asarray(image) - np.asarray(reference))


def save_profile(
    path: PathLike, offsets: Sequence[int], values: Sequence[float]
) -> Path:
    """Write a 1-D ``offset,value`` profile."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("offset", "value"))
        for offset, value in zip(offsets, values):
            writer.writerow((int(offset), f"{float(value):.17g}"))
    return path
