"""Kaiser-Bessel convolution kernel."""

import math
from typing import Union

import numpy as np
from scipy.special import i0

from spiralrecon.errors import InvalidArgumentError

ArrayOrFloat = Union[float, np.ndarray]


def auto_beta(width: int, oversampling: float) -> float:
    """Shape parameter minimizing aliasing for a given width and oversampling."""
    inner = (width / oversampling) ** 2 * (oversampling - 0.5) ** 2 - 0.8
    if inner <= 0:
        raise InvalidArgumentError(
            f"no automatic beta for width={width}, oversampling={oversampling}"
        )
    return math.pi * math.sqrt(inner)


def kaiser_bessel(u: ArrayOrFloat, width: int, beta: float) -> ArrayOrFloat:
    """
    ``I0(beta * sqrt(1 - (2u/W)^2)) / W`` for ``|u| <= W/2``, zero outside.

    Args:
        u: Offset(s) in oversampled grid cells
        width: Kernel width W in grid cells
        beta: Shape parameter

    Returns:
        Kernel value(s), same shape as ``u``
    """
    arr = np.asarray(u, dtype=np.float64)
    ratio = 2.0 * arr / width
    inside = np.abs(ratio) <= 1.0
    arg = np.sqrt(np.clip(1.0 - ratio * ratio, 0.0, None))
    out = np.where(inside, i0(beta * arg) / width, 0.0)
    if np.ndim(u) == 0:
        return float(out)
    return out


def kaiser_bessel_2d(
    ux: ArrayOrFloat, uy: ArrayOrFloat, width: int, beta: float
) -> ArrayOrFloat:
    """Separable 2-D kernel: product of the two axis responses."""
    return kaiser_bessel(ux, width, beta) * kaiser_bessel(uy, width, beta)
