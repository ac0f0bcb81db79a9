"""
End-to-end quality checks on the 128×128 phantom.

These runs take minutes and are marked slow.
"""

from dataclasses import dataclass, replace

import numpy as np
import pytest

from spiralrecon import (
    ExperimentConfig,
    GriddingConfig,
    Method,
    NoiseSpec,
    StopReason,
    generate_spiral,
    grid_reconstruct,
    kspace_distance,
    make_phantom,
    quad_error,
    roi_variance,
)
from spiralrecon.config import SweepSettings
from spiralrecon.experiment import reconstruct_regularized, run_sweep, simulate
from spiralrecon.kernels import KernelCache
from spiralrecon.objective import Hyperparameters
from spiralrecon.optimizer import OptimConfig

pytestmark = pytest.mark.slow

N = 128


@dataclass
class Outcome:
    regularized: np.ndarray
    gridding: np.ndarray
    stop_reason: StopReason
    trace: list


@pytest.fixture(scope="module")
def headline():
    """Both reconstructions of the 6×512 acquisition, noise-free and at 30 dB."""
    reference, roi1, roi2 = make_phantom()
    traj = generate_spiral(6, 512, n_grid=N)
    cache = KernelCache()
    outcomes = {}
    for snr in (None, 30.0):
        samples = simulate(reference, traj, NoiseSpec(snr_db=snr, seed=2024))
        image, report = reconstruct_regularized(
            samples, traj, N, Hyperparameters(), OptimConfig(), cache
        )
        gridded = grid_reconstruct(samples, traj, N, GriddingConfig())
        outcomes[snr] = Outcome(
            image.values, gridded.values, report.stop_reason, report.criterion_trace
        )
    return reference.values, roi1, roi2, traj, outcomes


class TestHeadline:
    """Test the regularized method against gridding on the default phantom."""

    @pytest.mark.parametrize("snr", [None, 30.0])
    def test_background_error_five_fold_lower(self, headline, snr):
        """Test the ROI1 quadratic error ratio."""
        reference, roi1, _, _, outcomes = headline
        outcome = outcomes[snr]
        regularized = quad_error(outcome.regularized, reference, roi1).absolute
        gridding = quad_error(outcome.gridding, reference, roi1).absolute
        assert regularized <= gridding / 5.0

    def test_vessel_variance_three_fold_lower(self, headline):
        """Test the ROI2 variance ratio at 30 dB."""
        _, _, roi2, _, outcomes = headline
        outcome = outcomes[30.0]
        assert roi_variance(outcome.gridding, roi2) >= 3.0 * roi_variance(
            outcome.regularized, roi2
        )

    @pytest.mark.parametrize("snr", [None, 30.0])
    def test_kspace_closer_to_reference(self, headline, snr):
        """Test that the regularized image restores a closer k-space."""
        reference, _, _, _, outcomes = headline
        outcome = outcomes[snr]
        assert kspace_distance(outcome.regularized, reference) < kspace_distance(
            outcome.gridding, reference
        )

    @pytest.mark.parametrize("snr", [None, 30.0])
    def test_optimizer_contract(self, headline, snr):
        """Test a monotone trace within the iteration budget."""
        outcome = headline[4][snr]
        trace = np.asarray(outcome.trace)
        assert np.all(np.diff(trace) <= 0)
        assert outcome.stop_reason in (
            StopReason.CONVERGED,
            StopReason.MAX_ITERS,
            StopReason.STALLED,
        )
        assert len(trace) <= OptimConfig().max_iters + 1


class TestDensityComparison:
    """Test analytic spiral weights against Voronoi weights."""

    def test_radial_spiral_close_to_voronoi(self, headline):
        """Test that the two densities give ROI1 errors within 20%."""
        reference, roi1, _, traj, _ = headline
        samples = simulate(reference, traj, NoiseSpec())
        voronoi = grid_reconstruct(samples, traj, N, GriddingConfig())
        radial = grid_reconstruct(
            samples, traj, N, GriddingConfig(density="radial-spiral", arms=6)
        )
        e_voronoi = quad_error(voronoi, reference, roi1).absolute
        e_radial = quad_error(radial, reference, roi1).absolute
        assert abs(e_radial - e_voronoi) < 0.2 * e_voronoi


class TestSweepDominance:
    """Test that the regularized method wins in every sweep cell."""

    @pytest.mark.parametrize(
        "sweep",
        [
            SweepSettings(arms=(4, 6, 8, 10), samples=(512,), snr_db=(None,)),
            SweepSettings(arms=(10,), samples=(512,), snr_db=(20.0, 30.0, 40.0, 50.0)),
        ],
        ids=["arms", "snr"],
    )
    def test_regularized_below_gridding(self, sweep):
        """Test the ROI1 error of both methods cell by cell."""
        config = replace(ExperimentConfig(n_grid=N), sweep=sweep)
        rows = run_sweep(config, workers=2, cache=KernelCache())
        roi1 = [row for row in rows if row.roi == "roi1"]
        assert len(roi1) == 2 * 4
        by_cell: dict[str, dict[Method, float]] = {}
        for row in roi1:
            by_cell.setdefault(row.run_id, {})[row.method] = row.absolute
        for run_id, errors in by_cell.items():
            assert errors[Method.REGULARIZED] < errors[Method.GRIDDING], run_id
