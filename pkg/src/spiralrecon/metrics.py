"""Reconstruction quality metrics over regions of interest."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft

from spiralrecon.errors import InvalidArgumentError
from spiralrecon.forward import ComplexImage, ImageLike, as_image_array
from spiralrecon.phantom import ROI

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadError:
    """Squared error over an ROI; ``normalized`` is None when undefined."""

    absolute: float
    normalized: Optional[float]


def _check_roi(image: np.ndarray, roi: ROI) -> None:
    if roi.mask.shape != image.shape:
        raise InvalidArgumentError(
            f"ROI '{roi.name}' has shape {roi.mask.shape}, image is {image.shape}"
        )


def quad_error(recon: ImageLike, reference: ImageLike, roi: ROI) -> QuadError:
    """
    ``sum_roi |recon - reference|^2`` and its ratio to ``sum_roi |reference|^2``.
    """
    f = as_image_array(recon)
    ref = as_image_array(reference)
    if f.shape != ref.shape:
        raise InvalidArgumentError(f"image shapes differ: {f.shape} vs {ref.shape}")
    _check_roi(f, roi)
    absolute = float(np.sum(np.abs(f[roi.mask] - ref[roi.mask]) ** 2))
    energy = float(np.sum(np.abs(ref[roi.mask]) ** 2))
    if energy == 0.0:
        logger.warning("reference is zero on ROI '%s'; normalized error undefined", roi.name)
        return QuadError(absolute, None)
    return QuadError(absolute, absolute / energy)


def roi_variance(recon: ImageLike, roi: ROI) -> float:
    """Population variance of |recon| over the ROI."""
    f = as_image_array(recon)
    _check_roi(f, roi)
    return float(np.var(np.abs(f[roi.mask])))


def kspace_of_image(image: ImageLike) -> ComplexImage:
    """Magnitude of the centred 2-D FFT (stored with zero imaginary part)."""
    f = as_image_array(image)
    return ComplexImage(np.abs(scipy.fft.fftshift(scipy.fft.fft2(f))).astype(np.complex128))


def kspace_distance(image: ImageLike, reference: ImageLike) -> float:
    """Normalized L2 distance between the k-space magnitudes of two images."""
    a = np.real(kspace_of_image(image).values)
    b = np.real(kspace_of_image(reference).values)
    norm = float(np.linalg.norm(b))
    if norm == 0.0:
        raise InvalidArgumentError("reference k-space is identically zero")
    return float(np.linalg.norm(a - b)) / norm
