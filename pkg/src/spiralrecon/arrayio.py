"""
Binary complex-array format shared by every module.

Layout (little-endian):
    8 bytes   magic ``MRRECON1``
    u32       ndim
    u32[ndim] dims
    u32       dtype code (0 = complex pairs of float64)
    payload   row-major interleaved (re, im) float64 pairs
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from spiralrecon.errors import ArrayFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MRRECON1"
DTYPE_COMPLEX128 = 0

PathLike = Union[str, Path]


def save_array(path: PathLike, values: np.ndarray) -> Path:
    """
    Write a complex array in the shared binary format.

    Args:
        path: Destination file
        values: Array of any shape; real input is promoted to complex

    Returns:
        The path written
    """
    path = Path(path)
    data = np.ascontiguousarray(np.asarray(values, dtype=np.complex128))
    header = (
        MAGIC
        + np.array([data.ndim], dtype="<u4").tobytes()
        + np.array(data.shape, dtype="<u4").tobytes()
        + np.array([DTYPE_COMPLEX128], dtype="<u4").tobytes()
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(data.astype("<c16").tobytes())
    logger.debug("wrote %s array to %s", data.shape, path)
    return path


def load_array(path: PathLike) -> np.ndarray:
    """
    Read a complex array written by :func:`save_array`.

    Raises:
        ArrayFormatError: On bad magic, unknown dtype code or truncated payload
    """
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ArrayFormatError(f"{path}: not a MRRECON1 array file")
    offset = 8
    if len(raw) < offset + 4:
        raise ArrayFormatError(f"{path}: truncated header")
    ndim = int(np.frombuffer(raw, dtype="<u4", count=1, offset=offset)[0])
    offset += 4
    if len(raw) < offset + 4 * (ndim + 1):
        raise ArrayFormatError(f"{path}: truncated header")
    dims = tuple(
        int(d) for d in np.frombuffer(raw, dtype="<u4", count=ndim, offset=offset)
    )
    offset += 4 * ndim
    code = int(np.frombuffer(raw, dtype="<u4", count=1, offset=offset)[0])
    offset += 4
    if code != DTYPE_COMPLEX128:
        raise ArrayFormatError(f"{path}: unsupported dtype code {code}")

    count = int(np.prod(dims)) if dims else 1
    expected = offset + 16 * count
    if len(raw) != expected:
        raise ArrayFormatError(
            f"{path}: payload has {len(raw) - offset} bytes, expected {16 * count}"
        )
    values = np.frombuffer(raw, dtype="<c16", count=count, offset=offset)
    return values.astype(np.complex128).reshape(dims)
