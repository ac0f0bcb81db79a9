"""Tests for the vessel phantom and the ROI metrics."""

import logging

import numpy as np
import pytest

from spiralrecon import (
    ROI,
    ConfigError,
    FlowProfile,
    InvalidArgumentError,
    PhantomError,
    PhantomSpec,
    default_phantom_spec,
    kspace_distance,
    kspace_of_image,
    make_phantom,
    quad_error,
    roi_variance,
)
from spiralrecon.phantom import (
    BackgroundSquare,
    Vessel,
    load_phantom_spec,
    save_phantom_spec,
)


@pytest.fixture(scope="module")
def phantom():
    """Default 128×128 phantom with its ROIs."""
    return make_phantom()


class TestDefaultPhantom:
    """Test the default geometry."""

    def test_spec(self):
        """Test the default parameters."""
        spec = default_phantom_spec(128)
        assert spec.background.center == (63.5, 63.5)
        assert spec.background.side == 64.0
        assert [v.profile for v in spec.vessels] == [FlowProfile.PARABOLIC, FlowProfile.BLUNT]
        assert all(v.radius == pytest.approx(12.8) for v in spec.vessels)

    def test_background(self, phantom):
        """Test square magnitude, zero outside and ROI1 size."""
        image, roi1, _ = phantom
        assert image.n_grid == 128
        assert image.values[64, 64] == pytest.approx(100.0)
        assert image.values[0, 0] == 0
        assert image.values[127, 10] == 0
        assert roi1.name == "roi1"
        assert roi1.size == 64 * 64

    def test_blunt_vessel_roi(self, phantom):
        """Test that ROI2 is a constant 200 exp(1j) interior."""
        image, _, roi2 = phantom
        values = image.values[roi2.mask]
        assert roi2.name == "roi2"
        assert np.allclose(values, 200.0 * np.exp(1j))
        rows, cols = np.nonzero(roi2.mask)
        distance = np.hypot(cols - 92.16, rows - 92.16)
        assert np.all(distance <= 12.8 - 1.0)

    def test_parabolic_phase(self, phantom):
        """Test the phase peak and its fall towards the rim."""
        image, _, _ = phantom
        r2_centre = 2 * 0.4**2
        assert np.angle(image.values[38, 38]) == pytest.approx(2.0 * (1 - r2_centre / 12.8**2))
        r2_rim = 0.4**2 + 11.6**2
        assert np.angle(image.values[38, 50]) == pytest.approx(2.0 * (1 - r2_rim / 12.8**2))
        assert np.abs(image.values[38, 50]) == pytest.approx(200.0)

    def test_phase_zero_on_background(self, phantom):
        """Test that the background carries no phase."""
        image, roi1, _ = phantom
        vessel_free = roi1.mask & (np.abs(image.values) == 100.0)
        assert np.all(np.imag(image.values[vessel_free]) == 0)


class TestPhantomValidation:
    """Test geometry checks."""

    def test_overlapping_vessels(self):
        """Test that intersecting disks are refused."""
        spec = PhantomSpec(
            64,
            BackgroundSquare((31.5, 31.5), 32.0, 100.0),
            (
                Vessel((20.0, 20.0), 6.0, 200.0, "parabolic", 2.0),
                Vessel((28.0, 20.0), 6.0, 200.0, "blunt", 1.0),
            ),
        )
        with pytest.raises(PhantomError, match="overlap"):
            make_phantom(spec)

    def test_outside_grid(self):
        """Test that a vessel crossing the border is refused."""
        spec = PhantomSpec(
            64,
            BackgroundSquare((31.5, 31.5), 32.0, 100.0),
            (Vessel((2.0, 30.0), 6.0, 200.0, "blunt", 1.0),),
        )
        with pytest.raises(PhantomError, match="fit"):
            make_phantom(spec)

    def test_needs_blunt_vessel(self):
        """Test that ROI2 cannot be defined without a blunt vessel."""
        spec = PhantomSpec(
            64,
            BackgroundSquare((31.5, 31.5), 32.0, 100.0),
            (Vessel((20.0, 20.0), 6.0, 200.0, "parabolic", 2.0),),
        )
        with pytest.raises(PhantomError, match="blunt"):
            make_phantom(spec)

    def test_tiny_grid(self):
        """Test the minimum grid size."""
        with pytest.raises(PhantomError):
            make_phantom(default_phantom_spec(2))

    def test_empty_roi(self):
        """Test that an ROI must select at least one pixel."""
        with pytest.raises(PhantomError):
            ROI("empty", np.zeros((4, 4), dtype=bool))


class TestPhantomSpecFile:
    """Test the key-value phantom description."""

    def test_round_trip(self, tmp_path):
        """Test that a saved spec loads back unchanged."""
        spec = default_phantom_spec(64)
        path = save_phantom_spec(spec, tmp_path / "phantom.ini")
        assert load_phantom_spec(path) == spec

    def test_defaults_fill_missing_keys(self, tmp_path):
        """Test a file that only sets the grid size."""
        path = tmp_path / "phantom.ini"
        path.write_text("[phantom]\nn_grid = 64\n", encoding="utf-8")
        assert load_phantom_spec(path) == default_phantom_spec(64)

    def test_custom_vessel(self, tmp_path):
        """Test a single custom blunt vessel."""
        path = tmp_path / "phantom.ini"
        path.write_text(
            "[phantom]\nn_grid = 64\n\n"
            "[vessel.a]\ncenter = 40, 24\nradius = 6\nmagnitude = 150\n"
            "profile = blunt\npeak_phase = 0.5\n",
            encoding="utf-8",
        )
        spec = load_phantom_spec(path)
        assert spec.vessels == (Vessel((40.0, 24.0), 6.0, 150.0, FlowProfile.BLUNT, 0.5),)
        image, _, roi2 = make_phantom(spec)
        assert np.allclose(image.values[roi2.mask], 150.0 * np.exp(0.5j))

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file is a configuration error."""
        with pytest.raises(ConfigError):
            load_phantom_spec(tmp_path / "absent.ini")

    @pytest.mark.parametrize(
        "body",
        [
            "[vessel.a]\ncenter = 40, 24\nmagnitude = 150\nprofile = blunt\n",
            "[vessel.a]\ncenter = 40\nradius = 6\nmagnitude = 150\nprofile = blunt\n",
            "[vessel.a]\ncenter = 40, 24\nradius = 6\nmagnitude = 150\nprofile = turbulent\n",
        ],
    )
    def test_malformed_vessel(self, tmp_path, body):
        """Test missing keys, bad pairs and unknown profiles."""
        path = tmp_path / "phantom.ini"
        path.write_text(body, encoding="utf-8")
        with pytest.raises(ConfigError):
            load_phantom_spec(path)


class TestMetrics:
    """Test ROI errors and k-space distances."""

    def test_exact_reconstruction(self, phantom):
        """Test zero error for the reference itself."""
        image, roi1, _ = phantom
        error = quad_error(image, image, roi1)
        assert error.absolute == 0.0
        assert error.normalized == 0.0

    def test_known_error(self):
        """Test a unit offset on a 2×2 ROI."""
        reference = np.full((4, 4), 2.0 + 0j)
        mask = np.zeros((4, 4), dtype=bool)
        mask[:2, :2] = True
        error = quad_error(reference + 1.0, reference, ROI("r", mask))
        assert error.absolute == pytest.approx(4.0)
        assert error.normalized == pytest.approx(4.0 / 16.0)

    def test_zero_reference(self, caplog):
        """Test that a zero reference leaves the normalized error undefined."""
        mask = np.ones((4, 4), dtype=bool)
        with caplog.at_level(logging.WARNING, logger="spiralrecon.metrics"):
            error = quad_error(np.ones((4, 4)), np.zeros((4, 4)), ROI("r", mask))
        assert error.absolute == pytest.approx(16.0)
        assert error.normalized is None
        assert "undefined" in caplog.text

    def test_shape_mismatch(self):
        """Test that ROI and image sizes must agree."""
        roi = ROI("r", np.ones((4, 4), dtype=bool))
        with pytest.raises(InvalidArgumentError):
            quad_error(np.ones((8, 8)), np.ones((8, 8)), roi)
        with pytest.raises(InvalidArgumentError):
            roi_variance(np.ones((8, 8)), roi)

    def test_variance(self):
        """Test the variance of magnitudes."""
        image = np.zeros((2, 2), dtype=np.complex128)
        image[0, 0] = 3.0
        image[0, 1] = 4.0j
        mask = np.zeros((2, 2), dtype=bool)
        mask[0] = True
        assert roi_variance(image, ROI("r", mask)) == pytest.approx(0.25)

    def test_variance_ignores_global_phase(self, rng):
        """Test that a unit-modulus factor leaves the variance unchanged."""
        f = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        roi = ROI("r", np.ones((6, 6), dtype=bool))
        assert roi_variance(f * np.exp(2.1j), roi) == pytest.approx(roi_variance(f, roi))

    def test_constant_roi_has_no_variance(self, phantom):
        """Test the blunt vessel interior."""
        image, _, roi2 = phantom
        assert roi_variance(image, roi2) == pytest.approx(0.0, abs=1e-20)

    def test_kspace_of_delta(self):
        """Test that a delta has a flat spectrum."""
        image = np.zeros((8, 8))
        image[0, 0] = 1.0
        assert np.allclose(kspace_of_image(image).values, 1.0)

    def test_kspace_distance(self, rng):
        """Test scaling and global phase behaviour."""
        f = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        assert kspace_distance(f, f) == 0.0
        assert kspace_distance(2.0 * f, f) == pytest.approx(1.0)
        assert kspace_distance(f * np.exp(0.7j), f) == pytest.approx(0.0, abs=1e-12)

    def test_kspace_distance_zero_reference(self):
        """Test that the distance to a zero image is undefined."""
        with pytest.raises(InvalidArgumentError):
            kspace_distance(np.ones((4, 4)), np.zeros((4, 4)))
