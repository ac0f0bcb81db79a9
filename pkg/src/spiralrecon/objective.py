"""
Regularized criterion ``J_Reg = J_LS + lambda1*Omega1 + lambda0*Omega0``.

J_LS is evaluated through the Toeplitz rewriting

    J_LS(f) = sum|s_l|^2 - 2*Re<f, D> + sum_{v,u} C[v, u] * G[v, u]

with C the autocorrelation of f, so that each evaluation costs a handful of
2N×2N FFTs. Gradients are packed as complex arrays: the real part holds the
derivative with respect to Re f, the imaginary part with respect to Im f.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft

from spiralrecon.errors import ConsistencyError, InvalidArgumentError
from spiralrecon.forward import (
    ImageLike,
    SamplesLike,
    as_image_array,
    as_samples_array,
    nudft_forward,
)
from spiralrecon.kernels import PrecomputedKernels
from spiralrecon.trajectory import Trajectory

logger = logging.getLogger(__name__)

IMAG_RTOL = 1e-9
IMAG_ATOL = 1e-12


@dataclass(frozen=True)
class Hyperparameters:
    """Weights (lambda) and Huber knees (alpha) of the two penalties."""

    lambda1: float = 0.1
    alpha1: float = 20.0
    lambda0: float = 0.5
    alpha0: float = 10.0

    def __post_init__(self) -> None:
        for name in ("lambda1", "alpha1", "lambda0", "alpha0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value}")
        if self.lambda1 < 0 or self.lambda0 < 0:
            raise InvalidArgumentError("regularization weights must be nonnegative")
        if self.alpha1 <= 0 or self.alpha0 <= 0:
            raise InvalidArgumentError("Huber knees must be positive")


@dataclass(frozen=True)
class ObjectiveContext:
    """
    Everything the criterion needs besides the image.

    The spectrum of the convolution kernel used by the gradient is derived
    once from G at construction.
    """

    kernels: PrecomputedKernels
    data_norm: float
    hyper: Hyperparameters
    n_grid: int
    _kernel_spectrum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kernels.n_grid != self.n_grid:
            raise InvalidArgumentError(
                f"kernels built for N={self.kernels.n_grid}, context has N={self.n_grid}"
            )
        object.__setattr__(
            self, "_kernel_spectrum", _convolution_spectrum(self.kernels.g)
        )


@dataclass(frozen=True)
class CriterionValue:
    """Criterion value with its terms (Omega terms are unweighted)."""

    total: float
    jls: float
    omega1: float
    omega0: float


def make_context(
    kernels: PrecomputedKernels,
    samples: SamplesLike,
    hyper: Optional[Hyperparameters] = None,
) -> ObjectiveContext:
    """Bundle kernels, data energy and hyperparameters."""
    s = as_samples_array(samples)
    return ObjectiveContext(
        kernels=kernels,
        data_norm=float(np.sum(np.abs(s) ** 2)),
        hyper=hyper if hyper is not None else Hyperparameters(),
        n_grid=kernels.n_grid,
    )


def _centered(circular: np.ndarray) -> np.ndarray:
    """Re-index a 2N×2N circular lag array onto lags ``1-N .. N-1``."""
    return scipy.fft.fftshift(circular)[1:, 1:]


def _convolution_spectrum(g: np.ndarray) -> np.ndarray:
    """FFT of conj(G) laid out circularly on the 2N×2N grid."""
    n = (g.shape[0] + 1) // 2
    centered = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    # centred index j holds lag j - N; lag -N stays zero
    centered[1:, 1:] = np.conj(g)
    return scipy.fft.fft2(scipy.fft.ifftshift(centered))


def autocorrelation(image: ImageLike) -> np.ndarray:
    """
    ``C[v, u] = sum_{n,m} f[n, m] * conj(f[n-v, m-u])`` for lags in
    ``[1-N, N-1]``, computed on a zero-padded 2N×2N FFT grid.
    """
    f = as_image_array(image)
    n = f.shape[0]
    spectrum = scipy.fft.fft2(f, s=(2 * n, 2 * n))
    circular = scipy.fft.ifft2(spectrum * np.conj(spectrum))
    return _centered(circular)


def eval_jls_fast(image: ImageLike, ctx: ObjectiveContext) -> float:
    """
    Least-squares term from the rewritten criterion.

    Raises:
        ConsistencyError: When the imaginary residue of sum(C*G) exceeds
            ``1e-9 * |real part| + 1e-12``
    """
    f = as_image_array(image)
    if f.shape[0] != ctx.n_grid:
        raise InvalidArgumentError(
            f"image is {f.shape[0]}×{f.shape[0]}, context expects N={ctx.n_grid}"
        )
    linear = float(np.real(np.vdot(f, ctx.kernels.d)))
    quadratic = complex(np.sum(autocorrelation(f) * ctx.kernels.g))
    if abs(quadratic.imag) > IMAG_RTOL * abs(quadratic.real) + IMAG_ATOL:
        raise ConsistencyError(
            f"sum(C*G) has imaginary residue {quadratic.imag:.3e} "
            f"for real part {quadratic.real:.3e}"
        )
    return ctx.data_norm - 2.0 * linear + quadratic.real


def eval_jls_direct(image: ImageLike, traj: Trajectory, samples: SamplesLike) -> float:
    """``sum_l |s_l - (H f)_l|^2`` through the direct NUDFT."""
    s = as_samples_array(samples)
    if s.size != traj.size:
        raise InvalidArgumentError("samples and trajectory lengths differ")
    model = nudft_forward(image, traj).values
    return float(np.sum(np.abs(s - model) ** 2))


def eval_jls_cartesian(image: ImageLike, data_image: ImageLike) -> float:
    """
    Complete-Cartesian special case ``sum |D - f|^2``.

    Only valid when the data were acquired on the full Cartesian grid, where
    H^H H is the identity and the residual norm reduces to an image norm.
    """
    f = as_image_array(image)
    d = as_image_array(data_image)
    return float(np.sum(np.abs(d - f) ** 2))


def grad_jls(image: ImageLike, ctx: ObjectiveContext) -> np.ndarray:
    """
    Packed gradient ``2 * (f conv conj(G)) - 2 * D``.

    The convolution runs on a 2N×2N zero-padded grid, which is wide enough
    for lags ``1-N .. N-1`` not to wrap onto the N×N block.
    """
    f = as_image_array(image)
    n = ctx.n_grid
    padded = scipy.fft.fft2(f, s=(2 * n, 2 * n))
    conv = scipy.fft.ifft2(padded * ctx._kernel_spectrum)[:n, :n]
    return 2.0 * conv - 2.0 * ctx.kernels.d


def huber(x: float, alpha: float) -> float:
    """``x^2`` for ``|x| <= alpha``, else ``2*alpha*|x| - alpha^2``."""
    if alpha <= 0:
        raise InvalidArgumentError("alpha must be positive")
    ax = abs(x)
    return ax * ax if ax <= alpha else 2.0 * alpha * ax - alpha * alpha


def huber_prime(x: float, alpha: float) -> float:
    """Derivative of :func:`huber`: ``2x`` below the knee, ``2*alpha*sign(x)`` above."""
    if alpha <= 0:
        raise InvalidArgumentError("alpha must be positive")
    if abs(x) <= alpha:
        return 2.0 * x
    return math.copysign(2.0 * alpha, x)


def _huber_sum(modulus: np.ndarray, alpha: float) -> float:
    quad = modulus <= alpha
    values = np.where(quad, modulus * modulus, 2.0 * alpha * modulus - alpha * alpha)
    return float(np.sum(values))


def _huber_psi(z: np.ndarray, alpha: float) -> np.ndarray:
    """Packed gradient of ``huber(|z|)``: ``2z`` inside the knee, ``2*alpha*z/|z|`` outside."""
    modulus = np.abs(z)
    out = 2.0 * z
    outside = modulus > alpha
    out[outside] = 2.0 * alpha * z[outside] / modulus[outside]
    return out


def _differences(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertical ``f[n+1, m] - f[n, m]`` and horizontal ``f[n, m+1] - f[n, m]``."""
    return f[1:, :] - f[:-1, :], f[:, 1:] - f[:, :-1]


def regularizer_terms(image: ImageLike, hyper: Hyperparameters) -> tuple[float, float]:
    """Unweighted (Omega1, Omega0) with non-periodic boundaries."""
    f = as_image_array(image)
    vertical, horizontal = _differences(f)
    omega1 = _huber_sum(np.abs(vertical), hyper.alpha1) + _huber_sum(
        np.abs(horizontal), hyper.alpha1
    )
    omega0 = _huber_sum(np.abs(f), hyper.alpha0)
    return omega1, omega0


def eval_regularizer(image: ImageLike, hyper: Hyperparameters) -> float:
    """``lambda1 * Omega1 + lambda0 * Omega0``."""
    omega1, omega0 = regularizer_terms(image, hyper)
    return hyper.lambda1 * omega1 + hyper.lambda0 * omega0


def grad_regularizer(image: ImageLike, hyper: Hyperparameters) -> np.ndarray:
    """Packed gradient of :func:`eval_regularizer`."""
    f = as_image_array(image)
    vertical, horizontal = _differences(f)
    grad = np.zeros_like(f)

    psi_v = _huber_psi(vertical, hyper.alpha1)
    grad[1:, :] += psi_v
    grad[:-1, :] -= psi_v
    psi_h = _huber_psi(horizontal, hyper.alpha1)
    grad[:, 1:] += psi_h
    grad[:, :-1] -= psi_h

    grad *= hyper.lambda1
    grad += hyper.lambda0 * _huber_psi(f, hyper.alpha0)
    return grad


def evaluate(image: ImageLike, ctx: ObjectiveContext) -> CriterionValue:
    """Criterion with its breakdown."""
    jls = eval_jls_fast(image, ctx)
    omega1, omega0 = regularizer_terms(image, ctx.hyper)
    total = jls + ctx.hyper.lambda1 * omega1 + ctx.hyper.lambda0 * omega0
    return CriterionValue(total=total, jls=jls, omega1=omega1, omega0=omega0)


def eval_jreg(image: ImageLike, ctx: ObjectiveContext) -> float:
    """Regularized criterion value."""
    return evaluate(image, ctx).total


def grad_jreg(image: ImageLike, ctx: ObjectiveContext) -> np.ndarray:
    """Packed gradient of the regularized criterion."""
    return grad_jls(image, ctx) + grad_regularizer(image, ctx.hyper)
