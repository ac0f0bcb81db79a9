"""Tests for the PR+ conjugate-gradient optimizer."""

import csv

import numpy as np
import pytest

from spiralrecon import (
    Hyperparameters,
    InitMode,
    InvalidArgumentError,
    KernelCache,
    OptimConfig,
    StopReason,
    explicit_matrix,
    make_context,
    minimize,
    nudft_forward,
    precompute,
)
from spiralrecon import optimizer as optimizer_module
from spiralrecon.objective import eval_jls_fast, evaluate
from spiralrecon.optimizer import TRACE_COLUMNS, _line_search, save_trace
from spiralrecon.trajectory import cartesian_trajectory

from tests.helpers import make_problem, random_image


def difference_matrix(n, vertical):
    """Row-major first-difference operator with non-periodic boundaries."""
    rows = []
    for row in range(n):
        for col in range(n):
            if vertical and row + 1 < n:
                r = np.zeros(n * n)
                r[(row + 1) * n + col] = 1.0
                r[row * n + col] = -1.0
                rows.append(r)
            if not vertical and col + 1 < n:
                r = np.zeros(n * n)
                r[row * n + col + 1] = 1.0
                r[row * n + col] = -1.0
                rows.append(r)
    return np.array(rows)


class TestCartesianConvergence:
    """Test the perfectly conditioned Cartesian case."""

    def test_reaches_adjoint_image(self, rng):
        """Test that zero penalties on complete Cartesian data converge to D."""
        n = 8
        traj = cartesian_trajectory(n)
        samples = nudft_forward(random_image(rng, n), traj)
        kernels = precompute(samples, traj, n, cache=KernelCache())
        ctx = make_context(kernels, samples, Hyperparameters(lambda1=0.0, lambda0=0.0))
        image, report = minimize(ctx, OptimConfig(max_iters=50))
        data_norm = float(np.sum(np.abs(samples.values) ** 2))
        assert report.iterations <= 5
        assert np.max(np.abs(image.values - kernels.d)) <= 1e-8
        assert eval_jls_fast(image, ctx) < 1e-12 * data_norm


class TestQuadraticOracle:
    """Test the minimizer of a purely quadratic criterion."""

    def test_matches_normal_equations(self, rng, monkeypatch):
        """Test CG against a dense solve of the normal equations."""
        # run to the rounding limit instead of the default noise floor
        monkeypatch.setattr(optimizer_module, "NOISE_FLOOR", 0.0)
        n = 8
        hyper = Hyperparameters(lambda1=0.1, alpha1=1e6, lambda0=1.0, alpha0=1e6)
        problem = make_problem(rng, n, 5 * n, hyper=hyper)

        h = explicit_matrix(problem.traj, n)
        dv = difference_matrix(n, vertical=True)
        dh = difference_matrix(n, vertical=False)
        system = (
            h.conj().T @ h
            + hyper.lambda1 * (dv.T @ dv + dh.T @ dh)
            + hyper.lambda0 * np.eye(n * n)
        )
        expected = np.linalg.solve(system, h.conj().T @ problem.samples.values)

        image, _ = minimize(problem.ctx, OptimConfig(max_iters=500, rel_tol=0.0))
        got = image.values.ravel()
        assert np.linalg.norm(got - expected) <= 1e-6 * np.linalg.norm(expected)


class TestMonotonicity:
    """Test the accepted-step contract."""

    @pytest.mark.parametrize("seed", range(5))
    def test_trace_non_increasing(self, seed):
        """Test that every accepted iterate lowers the criterion."""
        rng = np.random.Generator(np.random.Philox(seed))
        problem = make_problem(rng, 8, 60, hyper=Hyperparameters(), scale=20.0)
        _, report = minimize(problem.ctx, OptimConfig(max_iters=30))
        trace = report.criterion_trace
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert len(trace) == report.iterations + 1
        assert report.stop_reason in set(StopReason)

    def test_evaluation_counts(self, small_problem):
        """Test the per-iteration bookkeeping."""
        config = OptimConfig(max_iters=10, ls_max_evals=2)
        _, report = minimize(small_problem.ctx, config)
        assert len(report.criterion_evals) >= report.iterations
        assert all(count >= 1 for count in report.criterion_evals)
        assert max(report.criterion_evals) <= config.ls_max_evals
        assert sum(report.gradient_evals) == report.iterations

    def test_single_evaluation_budget(self, small_problem):
        """Test that a budget of one is never exceeded."""
        config = OptimConfig(max_iters=20, ls_max_evals=1)
        _, report = minimize(small_problem.ctx, config)
        assert report.criterion_evals
        assert all(count == 1 for count in report.criterion_evals)
        trace = report.criterion_trace
        assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_directions_descend(self, monkeypatch):
        """Test that every line search starts along a descent direction."""
        slopes = []
        search = optimizer_module._line_search

        def recording(phi, phi0, slope, seed, budget, min_step):
            slopes.append(slope)
            return search(phi, phi0, slope, seed, budget, min_step)

        monkeypatch.setattr(optimizer_module, "_line_search", recording)
        rng = np.random.Generator(np.random.Philox(7))
        problem = make_problem(rng, 8, 60, hyper=Hyperparameters(), scale=20.0)
        _, report = minimize(problem.ctx, OptimConfig(max_iters=30, rel_tol=0.0))
        assert len(slopes) >= report.iterations >= 2
        assert all(slope < 0 for slope in slopes)

    def test_identical_inputs_identical_iterates(self):
        """Test that two runs on the same instance agree bit for bit."""
        runs = []
        for _ in range(2):
            rng = np.random.Generator(np.random.Philox(11))
            problem = make_problem(rng, 8, 50, hyper=Hyperparameters(), scale=10.0)
            runs.append(minimize(problem.ctx, OptimConfig(max_iters=15)))
        (first, first_report), (second, second_report) = runs
        assert np.array_equal(first.values, second.values)
        assert first_report.criterion_trace == second_report.criterion_trace
        assert [row.step for row in first_report.trace] == [
            row.step for row in second_report.trace
        ]

    def test_default_run_reports_reason(self, small_problem):
        """Test that a default run converges or says why it stopped."""
        _, report = minimize(small_problem.ctx)
        if report.stop_reason == StopReason.MAX_ITERS:
            assert report.iterations == 50
        else:
            assert report.stop_reason in (
                StopReason.CONVERGED,
                StopReason.GRADIENT,
                StopReason.STALLED,
            )
        assert report.final_grad_norm == pytest.approx(report.trace[-1].grad_norm)


class TestStoppingRules:
    """Test stop conditions and starting points."""

    def test_gradient_tolerance_at_start(self, small_problem):
        """Test that a loose gradient tolerance stops before iterating."""
        image, report = minimize(small_problem.ctx, OptimConfig(grad_tol=1e12))
        assert report.stop_reason == StopReason.GRADIENT
        assert report.iterations == 0
        assert not np.any(image.values)

    def test_max_iters(self, small_problem):
        """Test the iteration cap."""
        _, report = minimize(small_problem.ctx, OptimConfig(max_iters=1, rel_tol=0.0))
        assert report.iterations == 1
        assert report.stop_reason == StopReason.MAX_ITERS

    def test_adjoint_start(self, small_problem):
        """Test that the adjoint start evaluates D first."""
        _, report = minimize(small_problem.ctx, OptimConfig(max_iters=1, init="adjoint"))
        expected = evaluate(small_problem.ctx.kernels.d, small_problem.ctx).total
        assert report.trace[0].value.total == pytest.approx(expected)

    def test_user_start(self, rng, small_problem):
        """Test a user-supplied starting image."""
        start = random_image(rng, 8)
        config = OptimConfig(max_iters=1, init=InitMode.USER, init_image=start)
        _, report = minimize(small_problem.ctx, config)
        assert report.trace[0].value.total == pytest.approx(
            evaluate(start, small_problem.ctx).total
        )

    def test_user_start_wrong_size(self, small_problem):
        """Test that the starting image must match the grid."""
        config = OptimConfig(init="user", init_image=np.zeros((4, 4)))
        with pytest.raises(InvalidArgumentError):
            minimize(small_problem.ctx, config)

    def test_config_validation(self):
        """Test invalid optimizer settings."""
        with pytest.raises(InvalidArgumentError):
            OptimConfig(max_iters=0)
        with pytest.raises(InvalidArgumentError):
            OptimConfig(ls_max_evals=0)
        with pytest.raises(InvalidArgumentError):
            OptimConfig(rel_tol=-1.0)
        with pytest.raises(InvalidArgumentError):
            OptimConfig(init="user")
        with pytest.raises(InvalidArgumentError):
            OptimConfig(init="random")


class TestLineSearch:
    """Test the budgeted line search."""

    def test_exact_on_quadratic(self):
        """Test that a parabola is minimized after the fitted jump."""

        class Value:
            def __init__(self, total):
                self.total = total

        result = _line_search(lambda t: Value((t - 1.0) ** 2), 1.0, -2.0, 0.25, 3, 1e-12)
        assert result.step == pytest.approx(1.0)
        assert result.evals == 2

    def test_no_decrease(self):
        """Test that an ascent direction yields no step."""

        class Value:
            def __init__(self, total):
                self.total = total

        result = _line_search(lambda t: Value(1.0 + t), 1.0, -1.0, 1.0, 3, 1e-3)
        assert result.value is None
        assert result.step == 0.0
        assert result.evals == 3

    def test_budget_covers_every_trial(self):
        """Test that the evaluation count never exceeds the budget."""
        calls = []

        class Value:
            def __init__(self, total):
                self.total = total

        def phi(t):
            calls.append(t)
            return Value(1.0 + t)

        for budget in (1, 2, 5):
            calls.clear()
            result = _line_search(phi, 1.0, -1.0, 1.0, budget, 1e-12)
            assert result.value is None
            assert len(calls) == result.evals == budget
            assert all(b < a for a, b in zip(calls, calls[1:]))

    def test_min_step_ends_search(self):
        """Test that trials stop once the step falls under min_step."""

        class Value:
            def __init__(self, total):
                self.total = total

        result = _line_search(lambda t: Value(1.0 + t), 1.0, -1.0, 1.0, 50, 0.1)
        assert result.value is None
        assert result.evals == 2


class TestTraceExport:
    """Test the trace CSV."""

    def test_columns_and_rows(self, tmp_path, small_problem):
        """Test the header and one row per accepted iterate."""
        _, report = minimize(small_problem.ctx, OptimConfig(max_iters=5))
        path = save_trace(report, tmp_path / "trace.csv")
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == TRACE_COLUMNS
        assert len(rows) == len(report.trace) + 1
        assert float(rows[1][1]) == report.trace[0].value.total
