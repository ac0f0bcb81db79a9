"""
Nonlinear conjugate gradient (Polak-Ribiere, PR+) for the regularized criterion.

Every iteration costs one gradient and at most ``ls_max_evals`` criterion
evaluations. Inner products are real, taken over the 2N² real coordinates of
the packed complex arrays.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from spiralrecon.choices import InitMode, StopReason
from spiralrecon.errors import ConsistencyError, InvalidArgumentError
from spiralrecon.forward import ComplexImage, as_image_array
from spiralrecon.objective import CriterionValue, ObjectiveContext, evaluate, grad_jreg

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "j_reg", "j_ls", "omega1", "omega0", "step", "grad_norm")
NOISE_FLOOR = 1e-14


@dataclass(frozen=True)
class OptimConfig:
    """
    Stopping rules and line-search budget.

    Attributes:
        max_iters: Iteration cap
        rel_tol: Stop when the relative criterion decrease falls below this
        grad_tol: Stop when the gradient norm is at or below this
        ls_max_evals: Criterion evaluations allowed per line search
        init: Starting point (zero, adjoint or user)
        init_image: Starting image when ``init`` is ``user``
    """

    max_iters: int = 50
    rel_tol: float = 1e-6
    grad_tol: float = 0.0
    ls_max_evals: int = 3
    init: InitMode = InitMode.ZERO
    init_image: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.ls_max_evals < 1:
            raise InvalidArgumentError("ls_max_evals must be >= 1")
        if self.rel_tol < 0 or self.grad_tol < 0:
            raise InvalidArgumentError("tolerances must be nonnegative")
        init = InitMode.from_string(str(self.init))
        object.__setattr__(self, "init", init)
        if init == InitMode.USER and self.init_image is None:
            raise InvalidArgumentError("init 'user' requires init_image")


@dataclass(frozen=True)
class TraceRow:
    """One accepted iterate (iteration 0 is the starting point)."""

    iteration: int
    value: CriterionValue
    step: float
    grad_norm: float


@dataclass
class OptimReport:
    """Outcome of :func:`minimize`."""

    iterations: int = 0
    trace: list[TraceRow] = field(default_factory=list)
    final_grad_norm: float = math.nan
    stop_reason: StopReason = StopReason.MAX_ITERS
    criterion_evals: list[int] = field(default_factory=list)
    gradient_evals: list[int] = field(default_factory=list)

    @property
    def criterion_trace(self) -> list[float]:
        """J_Reg per accepted iterate, starting point first."""
        return [row.value.total for row in self.trace]


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product over the 2N² real coordinates."""
    return float(np.real(np.vdot(a, b)))


def _initial_image(ctx: ObjectiveContext, config: OptimConfig) -> np.ndarray:
    if config.init == InitMode.ADJOINT:
        return np.array(ctx.kernels.d, dtype=np.complex128)
    if config.init == InitMode.USER:
        f = np.array(as_image_array(config.init_image), dtype=np.complex128)
        if f.shape[0] != ctx.n_grid:
            raise InvalidArgumentError(
                f"init_image is {f.shape[0]}×{f.shape[0]}, expected N={ctx.n_grid}"
            )
        return f
    return np.zeros((ctx.n_grid, ctx.n_grid), dtype=np.complex128)


def _initial_step(ctx: ObjectiveContext) -> float:
    """Inverse of the largest diagonal curvature of the quadratic regime."""
    hyper = ctx.hyper
    g00 = float(np.real(ctx.kernels.g[ctx.n_grid - 1, ctx.n_grid - 1]))
    curvature = 2.0 * g00 + 8.0 * hyper.lambda1 + 2.0 * hyper.lambda0
    return 1.0 / curvature if curvature > 0 else 1.0


@dataclass
class _LineSearchResult:
    step: float
    value: Optional[CriterionValue]
    evals: int


def _line_search(
    phi: Callable[[float], CriterionValue],
    phi0: float,
    slope: float,
    seed: float,
    budget: int,
    min_step: float,
) -> _LineSearchResult:
    """
    Budgeted quadratic-interpolation search along a descent direction.

    Each trial fits ``q(t) = phi0 + slope*t + c*t^2`` through the latest
    evaluation and jumps to its minimizer; the best strictly decreasing trial
    is accepted. A trial that fails to decrease shrinks the next step to at
    most half. Every trial counts against ``budget``; no decrease within it,
    or a step under ``min_step``, returns no value.
    """
    best_step, best_value = 0.0, None
    t = seed
    evals = 0
    while evals < budget:
        value = phi(t)
        evals += 1
        logger.debug("  line search t=%.6g J=%.12g", t, value.total)
        if value.total < phi0 and (best_value is None or value.total < best_value.total):
            best_step, best_value = t, value

        curvature = (value.total - phi0 - slope * t) / (t * t)
        if math.isfinite(curvature) and curvature > 0:
            t_next = -slope / (2.0 * curvature)
        elif value.total < phi0:
            t_next = 2.0 * t
        else:
            t_next = 0.5 * t
        if abs(t_next - t) <= 1e-3 * t or t_next < min_step:
            break
        t = t_next

    if best_value is None:
        return _LineSearchResult(0.0, None, evals)
    return _LineSearchResult(best_step, best_value, evals)


def minimize(
    ctx: ObjectiveContext, config: Optional[OptimConfig] = None
) -> tuple[ComplexImage, OptimReport]:
    """
    Minimize J_Reg by PR+ conjugate gradient.

    Directions follow ``d_{k+1} = -g_{k+1} + beta*d_k`` with
    ``beta = max(0, <g_{k+1}, g_{k+1} - g_k> / <g_k, g_k>)``, restarting on
    steepest descent whenever ``d`` is not a descent direction.

    Args:
        ctx: Objective context
        config: Optimizer configuration (defaults apply when omitted)

    Returns:
        Final image and the run report
    """
    config = config if config is not None else OptimConfig()
    f = _initial_image(ctx, config)
    current = evaluate(f, ctx)
    grad = grad_jreg(f, ctx)
    grad_sq = _inner(grad, grad)
    report = OptimReport()
    report.trace.append(TraceRow(0, current, 0.0, math.sqrt(grad_sq)))
    logger.info(
        "minimize: N=%d start J=%.6g |g|=%.3g", ctx.n_grid, current.total, math.sqrt(grad_sq)
    )

    direction = -grad
    seed = _initial_step(ctx)
    initial_total = current.total
    # decreases this small are rounding noise of the data term
    noise_floor = NOISE_FLOOR * max(ctx.data_norm, abs(initial_total))

    if math.sqrt(grad_sq) <= config.grad_tol:
        report.stop_reason = StopReason.GRADIENT
        report.final_grad_norm = math.sqrt(grad_sq)
        return ComplexImage(f), report

    for iteration in range(1, config.max_iters + 1):
        if grad_sq == 0.0:
            report.stop_reason = StopReason.GRADIENT
            break
        slope = _inner(grad, direction)
        if not slope < 0:
            direction = -grad
            slope = -grad_sq

        dir_norm = math.sqrt(_inner(direction, direction))
        min_step = np.finfo(np.float64).eps * (1.0 + float(np.linalg.norm(f))) / dir_norm

        def phi(t: float, f: np.ndarray = f, direction: np.ndarray = direction) -> CriterionValue:
            return evaluate(f + t * direction, ctx)

        search = _line_search(
            phi, current.total, slope, seed, config.ls_max_evals, min_step
        )
        report.criterion_evals.append(search.evals)
        if search.value is None:
            report.gradient_evals.append(0)
            report.stop_reason = StopReason.STALLED
            logger.warning("line search stalled at iteration %d", iteration)
            break

        previous = current
        f = f + search.step * direction
        current = search.value
        seed = search.step

        new_grad = grad_jreg(f, ctx)
        report.gradient_evals.append(1)
        new_grad_sq = _inner(new_grad, new_grad)
        beta = max(0.0, _inner(new_grad, new_grad - grad) / grad_sq) if grad_sq > 0 else 0.0
        direction = -new_grad + beta * direction
        grad, grad_sq = new_grad, new_grad_sq

        report.iterations = iteration
        report.trace.append(
            TraceRow(iteration, current, search.step, math.sqrt(grad_sq))
        )
        logger.debug(
            "iter %d: J=%.12g step=%.4g |g|=%.4g beta=%.3g",
            iteration,
            current.total,
            search.step,
            math.sqrt(grad_sq),
            beta,
        )

        decrease = previous.total - current.total
        if math.sqrt(grad_sq) <= config.grad_tol:
            report.stop_reason = StopReason.GRADIENT
            break
        if decrease < config.rel_tol * abs(previous.total) or decrease <= noise_floor:
            report.stop_reason = StopReason.CONVERGED
            break
    else:
        report.stop_reason = StopReason.MAX_ITERS

    report.final_grad_norm = math.sqrt(grad_sq)
    if current.total > initial_total:
        raise ConsistencyError(
            f"final criterion {current.total} exceeds initial {initial_total}"
        )
    logger.info(
        "minimize: stopped (%s) after %d iterations, J=%.6g",
        report.stop_reason,
        report.iterations,
        current.total,
    )
    return ComplexImage(f), report


def save_trace(report: OptimReport, path: Union[str, Path]) -> Path:
    """Write the criterion trace as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in report.trace:
            writer.writerow(
                (
                    row.iteration,
                    f"{row.value.total:.17g}",
                    f"{row.value.jls:.17g}",
                    f"{row.value.omega1:.17g}",
                    f"{row.value.omega0:.17g}",
                    f"{row.step:.17g}",
                    f"{row.grad_norm:.17g}",
                )
            )
    return path
