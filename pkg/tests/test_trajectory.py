"""Tests for trajectory generation, validation and CSV I/O."""

import math

import numpy as np
import pytest

from spiralrecon import InvalidArgumentError, Trajectory, TrajectoryFormatError
from spiralrecon.trajectory import (
    arm_slices,
    cartesian_trajectory,
    default_turns,
    generate_spiral,
    load_trajectory,
    require_valid,
    save_trajectory,
    validate,
)


class TestGenerateSpiral:
    """Test interleaved spiral generation."""

    def test_single_arm_two_samples(self):
        """Test the smallest spiral: centre then the edge on the kx axis."""
        traj = generate_spiral(1, 2, turns=1.0)
        assert traj.size == 2
        assert np.allclose(traj.points[0], [0.0, 0.0])
        assert np.allclose(traj.points[1], [0.5, 0.0], atol=1e-15)

    def test_length_is_arms_times_samples(self):
        """Test that L = A * S and every point validates."""
        traj = generate_spiral(6, 512, n_grid=128)
        assert traj.size == 3072
        assert validate(traj)

    def test_arms_start_at_centre_and_end_on_edge(self):
        """Test radial extent of each arm."""
        traj = generate_spiral(4, 100, turns=3.0)
        radius = np.hypot(traj.kx, traj.ky)
        for part in arm_slices(traj, 4):
            assert radius[part][0] == 0.0
            assert radius[part][-1] == pytest.approx(0.5, abs=1e-12)

    def test_radius_grows_linearly(self):
        """Test the constant radial increment of the Archimedean spiral."""
        traj = generate_spiral(1, 11, turns=2.0)
        radius = np.hypot(traj.kx, traj.ky)
        assert np.allclose(np.diff(radius), 0.05)

    def test_arms_are_rotated_copies(self):
        """Test that arm a is arm 0 rotated by 2*pi*a/A."""
        arms = 3
        traj = generate_spiral(arms, 50, turns=2.5)
        parts = arm_slices(traj, arms)
        first = traj.points[parts[0]]
        angle = 2.0 * math.pi / arms
        rotation = np.array(
            [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        )
        assert np.allclose(first @ rotation.T, traj.points[parts[1]], atol=1e-12)

    def test_default_turns(self):
        """Test the Nyquist-spaced default number of turns."""
        assert default_turns(6, 128) == pytest.approx(128 / 12)
        a = generate_spiral(2, 64, n_grid=32)
        b = generate_spiral(2, 64, turns=8.0)
        assert np.array_equal(a.points, b.points)

    @pytest.mark.parametrize(
        "arms,samples,kwargs",
        [
            (0, 10, {"turns": 1.0}),
            (1, 1, {"turns": 1.0}),
            (1, 10, {"turns": 0.0}),
            (1, 10, {"turns": float("nan")}),
            (1, 10, {}),
        ],
    )
    def test_invalid_parameters(self, arms, samples, kwargs):
        """Test precondition violations."""
        with pytest.raises(InvalidArgumentError):
            generate_spiral(arms, samples, **kwargs)


class TestValidate:
    """Test trajectory validation."""

    def test_valid_edges(self):
        """Test that the closed square [-0.5, 0.5] is accepted."""
        assert validate(Trajectory([[-0.5, 0.5], [0.5, -0.5]])).ok

    def test_out_of_range_point(self):
        """Test reporting the first out-of-range point."""
        result = validate(Trajectory([[0.0, 0.0], [0.6, 0.0], [0.7, 0.0]]))
        assert not result
        assert result.index == 1
        assert "outside" in result.reason

    def test_non_finite_point(self):
        """Test reporting a NaN coordinate."""
        result = validate(Trajectory([[0.0, np.nan]]))
        assert result.index == 0
        assert result.reason == "non-finite coordinate"

    def test_require_valid_raises(self):
        """Test that operations reject invalid trajectories."""
        with pytest.raises(InvalidArgumentError, match="point 0"):
            require_valid(Trajectory([[1.0, 0.0]]))

    def test_shape_checked(self):
        """Test the (L, 2) shape requirement."""
        with pytest.raises(InvalidArgumentError):
            Trajectory(np.zeros((3, 3)))
        with pytest.raises(InvalidArgumentError):
            Trajectory(np.zeros((0, 2)))

    def test_points_are_read_only(self):
        """Test immutability of the stored coordinates."""
        traj = Trajectory([[0.1, 0.2]])
        with pytest.raises(ValueError):
            traj.points[0, 0] = 0.3


class TestCartesian:
    """Test the complete Cartesian trajectory."""

    def test_row_major_order(self):
        """Test that kx varies fastest."""
        traj = cartesian_trajectory(4)
        assert traj.size == 16
        assert np.allclose(traj.points[0], [-0.5, -0.5])
        assert np.allclose(traj.points[1], [-0.25, -0.5])
        assert np.allclose(traj.points[4], [-0.5, -0.25])

    def test_cell_centered(self):
        """Test cell-centred coordinates."""
        traj = cartesian_trajectory(4, cell_centered=True)
        assert np.allclose(traj.points[0], [-0.375, -0.375])
        assert np.allclose(traj.points[-1], [0.375, 0.375])


class TestFingerprint:
    """Test trajectory hashing."""

    def test_stable_and_sensitive(self):
        """Test that equal coordinates hash equally and any change is detected."""
        a = generate_spiral(2, 16, turns=2.0)
        b = generate_spiral(2, 16, turns=2.0)
        c = generate_spiral(2, 16, turns=2.5)
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()
        assert len(a.fingerprint()) == 64

    def test_arm_slices_mismatch(self):
        """Test that unequal arms are rejected."""
        with pytest.raises(InvalidArgumentError):
            arm_slices(Trajectory(np.zeros((5, 2))), 2)


class TestTrajectoryIO:
    """Test the CSV format."""

    def test_round_trip(self, tmp_path):
        """Test that coordinates survive a save/load cycle."""
        traj = generate_spiral(3, 40, turns=4.0)
        path = save_trajectory(traj, tmp_path / "traj.csv")
        loaded = load_trajectory(path)
        assert np.max(np.abs(loaded.points - traj.points)) <= 1e-12

    def test_header_and_line_endings(self, tmp_path):
        """Test the header line and LF-only line endings."""
        path = save_trajectory(Trajectory([[0.1, -0.2]]), tmp_path / "t.csv")
        raw = path.read_bytes()
        assert raw.startswith(b"kx,ky\n")
        assert b"\r" not in raw

    def test_non_numeric_row_reports_line(self, tmp_path):
        """Test the line number of a malformed value."""
        path = tmp_path / "bad.csv"
        path.write_text("kx,ky\n0.1,0.2\n0.1,abc\n", encoding="utf-8")
        with pytest.raises(TrajectoryFormatError) as excinfo:
            load_trajectory(path)
        assert excinfo.value.line_number == 3
        assert "line 3" in str(excinfo.value)

    def test_wrong_column_count(self, tmp_path):
        """Test rows with a missing column."""
        path = tmp_path / "bad.csv"
        path.write_text("kx,ky\n0.1\n", encoding="utf-8")
        with pytest.raises(TrajectoryFormatError) as excinfo:
            load_trajectory(path)
        assert excinfo.value.line_number == 2

    def test_empty_file(self, tmp_path):
        """Test a file with only the header."""
        path = tmp_path / "empty.csv"
        path.write_text("kx,ky\n", encoding="utf-8")
        with pytest.raises(TrajectoryFormatError):
            load_trajectory(path)


class TestSpiralExamples:
    """Test literal points of small spirals."""

    def test_half_turn_endpoint(self):
        """Test that half a turn ends on the negative kx axis."""
        traj = generate_spiral(4, 3, turns=0.5)
        assert np.allclose(traj.points[2], [-0.5, 0.0], atol=1e-15)
