"""
Tests for keypoint detectors.
"""

import math

import numpy as np
import pytest

from src.detect import (
    DETECTORS,
    DetectorConfig,
    Keypoint,
    _orientation_peaks,
    assign_orientation,
    censure_responses,
    detect_censure,
    detect_corners,
    detect_dog,
    detect_fast,
    detect_keypoints,
    detect_orb,
    fast_score_map,
    fast_score_naive,
    intensity_centroid_angle,
    sort_keypoints,
)
from src.errors import ConfigError
from src.imgcore import FloatImage, GrayImage
from src.synth import RegionMask, generate_texture

SQUARE_CORNERS = [(19.5, 19.5), (39.5, 19.5), (19.5, 39.5), (39.5, 39.5)]


def square_image() -> GrayImage:
    """A bright 20x20 square centred in a dark 60x60 image."""
    arr = np.full((60, 60), 20, dtype=np.uint8)
    arr[20:40, 20:40] = 220
    return GrayImage(arr)


def squares_image() -> GrayImage:
    """Several bright squares well inside a 96x96 image."""
    arr = np.full((96, 96), 30, dtype=np.uint8)
    for x0, y0, side, value in ((24, 24, 14, 210), (52, 30, 10, 160), (30, 56, 12, 240), (58, 58, 16, 190)):
        arr[y0:y0 + side, x0:x0 + side] = value
    return GrayImage(arr)


def disc_image(size: int, radius: float) -> GrayImage:
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    return GrayImage(np.where(np.hypot(xx - c, yy - c) <= radius, 200, 30).astype(np.uint8))


def nearest_corner(kp: Keypoint) -> tuple[tuple[float, float], float]:
    corner = min(SQUARE_CORNERS, key=lambda c: math.hypot(kp.x - c[0], kp.y - c[1]))
    return corner, math.hypot(kp.x - corner[0], kp.y - corner[1])


class TestKeypoint:
    """Test the keypoint type and ordering."""

    def test_size_must_be_positive(self):
        with pytest.raises(ValueError):
            Keypoint(1.0, 1.0, 0.0)

    def test_response_must_be_non_negative(self):
        with pytest.raises(ValueError):
            Keypoint(1.0, 1.0, 3.0, response=-1.0)

    def test_sort_by_response_then_position(self):
        kps = [
            Keypoint(5.0, 1.0, 3.0, response=2.0),
            Keypoint(1.0, 1.0, 3.0, response=2.0),
            Keypoint(0.0, 0.0, 3.0, response=9.0),
            Keypoint(0.0, 0.5, 3.0, response=2.0),
        ]
        assert [kp.pt for kp in sort_keypoints(kps)] == [(0.0, 0.0), (0.0, 0.5), (1.0, 1.0), (5.0, 1.0)]


class TestDetectorConfig:
    """Test detector configuration validation."""

    def test_invalid_arc(self):
        with pytest.raises(ConfigError):
            DetectorConfig(fast_arc=17)

    def test_invalid_threshold(self):
        with pytest.raises(ConfigError):
            DetectorConfig(corner_quality=0.0)

    def test_unknown_detector(self):
        with pytest.raises(ConfigError, match="Unknown detector"):
            detect_keypoints("sift", square_image(), DetectorConfig())

    def test_registry_names(self):
        assert set(DETECTORS) == {"harris", "gftt", "fast", "censure", "dog", "orb"}


class TestCorners:
    """Test Harris and Shi-Tomasi corners."""

    @pytest.mark.parametrize("kind", ["harris", "min_eigenvalue"])
    def test_strongest_four_are_square_corners(self, kind):
        kps = detect_corners(square_image(), DetectorConfig(), kind)
        assert len(kps) >= 4
        found = set()
        for kp in kps[:4]:
            corner, dist = nearest_corner(kp)
            assert dist <= 4.0
            found.add(corner)
        assert len(found) == 4

    def test_flat_image_has_no_corners(self):
        flat = GrayImage(np.full((32, 32), 90, dtype=np.uint8))
        assert detect_corners(flat, DetectorConfig()) == []

    def test_size_and_orientation(self):
        kps = detect_corners(square_image(), DetectorConfig(window_sigma=1.5))
        assert all(kp.size == 9.0 and kp.angle is None for kp in kps)

    def test_mask_filters_keypoints(self):
        mask = RegionMask(0, 0, 30, 30)
        kps = detect_corners(square_image(), DetectorConfig(mask=mask))
        assert kps
        assert all(mask.contains(kp.x, kp.y) for kp in kps)

    def test_too_small(self):
        with pytest.raises(ValueError):
            detect_corners(GrayImage(np.zeros((5, 5), dtype=np.uint8)), DetectorConfig())


class TestFast:
    """Test the FAST segment test."""

    @pytest.mark.parametrize("arc", [9, 12])
    def test_vectorised_scores_match_reference(self, rng, arc):
        arr = rng.integers(0, 256, size=(24, 24)).astype(np.uint8)
        for early_reject in (True, False):
            scores = fast_score_map(arr, 20, arc, early_reject)
            for y in range(3, 21):
                for x in range(3, 21):
                    assert scores[y, x] == fast_score_naive(arr, x, y, 20, arc)
        assert not scores[:3].any() and not scores[:, -3:].any()

    def test_every_square_corner_detected(self):
        kps = detect_fast(square_image(), DetectorConfig())
        for cx, cy in SQUARE_CORNERS:
            assert any(math.hypot(kp.x - cx, kp.y - cy) <= 3.0 for kp in kps)
        assert all(kp.size == 7.0 for kp in kps)

    def test_straight_edges_are_not_corners(self):
        arr = np.full((30, 30), 20, dtype=np.uint8)
        arr[:, 15:] = 220
        assert detect_fast(GrayImage(arr), DetectorConfig()) == []


class TestOrientedFast:
    """Test oriented FAST on a pyramid."""

    def test_keypoints_carry_angles(self):
        kps = detect_orb(squares_image(), DetectorConfig(orb_levels=2))
        assert kps
        for kp in kps:
            assert kp.angle is not None and 0.0 <= kp.angle < 360.0
            assert kp.octave in (0, 1)
            assert kp.response > 0

    def test_centroid_angle_points_toward_brightness(self):
        xs = np.tile(np.arange(41, dtype=np.float64), (41, 1))
        assert intensity_centroid_angle(FloatImage(xs), 20, 20, 15) == pytest.approx(0.0, abs=1e-9)
        ys = np.tile(np.arange(41, dtype=np.float64)[::-1, None], (1, 41))
        assert intensity_centroid_angle(FloatImage(ys), 20, 20, 15) == pytest.approx(90.0)

    def test_flat_patch_has_zero_angle(self):
        flat = FloatImage(np.full((41, 41), 50.0))
        assert intensity_centroid_angle(flat, 20, 20) == 0.0


class TestCensure:
    """Test the centre-surround detector."""

    def test_response_shape(self):
        responses = censure_responses(disc_image(64, 5), 7)
        assert responses.shape == (7, 64, 64)
        assert not responses[:, :2].any()

    def test_disc_centre_is_strongest(self):
        kps = detect_censure(disc_image(64, 5), DetectorConfig())
        assert kps
        assert math.hypot(kps[0].x - 31.5, kps[0].y - 31.5) <= 2.0
        assert kps[0].size in {4 * n + 1 for n in range(1, 8)}

    def test_line_structures_rejected(self):
        arr = np.full((64, 64), 30, dtype=np.uint8)
        arr[28:36, :] = 200
        assert detect_censure(GrayImage(arr), DetectorConfig()) == []

    def test_image_smaller_than_largest_filter(self):
        with pytest.raises(ValueError):
            detect_censure(GrayImage(np.zeros((20, 20), dtype=np.uint8)), DetectorConfig())


class TestDog:
    """Test Difference-of-Gaussians detection and orientation."""

    def test_keypoints_are_oriented_and_inside(self, fractal_texture):
        kps = detect_dog(fractal_texture, DetectorConfig())
        assert kps
        for kp in kps:
            assert 0.0 <= kp.angle < 360.0
            assert 0.0 <= kp.x <= fractal_texture.width - 1
            assert 0.0 <= kp.y <= fractal_texture.height - 1
            assert kp.size > 0
        assert kps == sort_keypoints(kps)

    def test_too_small(self):
        with pytest.raises(ValueError):
            detect_dog(GrayImage(np.zeros((20, 40), dtype=np.uint8)), DetectorConfig())

    def test_orientation_of_horizontal_ramp(self):
        ramp = FloatImage(np.tile(np.arange(41, dtype=np.float64) * 3.0, (41, 1)))
        oriented = assign_orientation(ramp, Keypoint(20.0, 20.0, 6.0))
        assert [kp.angle for kp in oriented] == [pytest.approx(0.0, abs=1e-9)]

    def test_orientation_of_upward_ramp(self):
        ramp = FloatImage(np.tile((40 - np.arange(41, dtype=np.float64))[:, None] * 3.0, (1, 41)))
        oriented = assign_orientation(ramp, Keypoint(20.0, 20.0, 6.0))
        assert [kp.angle for kp in oriented] == [pytest.approx(90.0)]

    def test_orientation_window_outside_image(self):
        ramp = FloatImage(np.tile(np.arange(41, dtype=np.float64), (41, 1)))
        assert assign_orientation(ramp, Keypoint(2.0, 20.0, 6.0)) == []

    def test_gaussian_blob_found_at_its_scale(self):
        yy, xx = np.mgrid[0:64, 0:64]
        blob = 30 + 200 * np.exp(-((xx - 32) ** 2 + (yy - 32) ** 2) / (2 * 4.0 ** 2))
        kps = detect_dog(GrayImage(np.floor(blob + 0.5).astype(np.uint8)), DetectorConfig())
        assert kps
        for kp in kps:
            assert math.hypot(kp.x - 32.0, kp.y - 32.0) <= 0.5
            assert 0.7 * 4.0 <= kp.size / 3.0 <= 1.4 * 4.0

    def test_step_edge_has_no_blobs(self):
        arr = np.full((64, 64), 40, dtype=np.uint8)
        arr[:, 32:] = 200
        assert detect_dog(GrayImage(arr), DetectorConfig()) == []

    def test_two_dominant_directions(self):
        gx = np.zeros((21, 21))
        gy = np.zeros((21, 21))
        gx[:, :10] = 1.0
        gy[:, 11:] = -1.0
        angles = _orientation_peaks(gx, gy, 10.0, 10.0, 3.0)
        assert sorted(angles) == [pytest.approx(0.0, abs=1e-6), pytest.approx(90.0, abs=1e-6)]


def shifted_canvas(patch: np.ndarray, dx: int, dy: int, size: int = 288, at: int = 112) -> GrayImage:
    canvas = np.zeros((size, size), dtype=np.uint8)
    h, w = patch.shape
    canvas[at + dy:at + dy + h, at + dx:at + dx + w] = patch
    return GrayImage(canvas)


class TestAllDetectors:
    """Test properties every registered detector shares."""

    @pytest.mark.parametrize("name", list(DETECTORS))
    @pytest.mark.parametrize("shift", [(8, 8), (7, 5), (3, 0)])
    def test_integer_shift_moves_every_keypoint(self, name, shift):
        """Odd and even shifts alike; the oriented FAST pyramid is kept to its full-resolution level."""
        patch = generate_texture("fractal-noise", 64, 64, seed=11).data
        cfg = DetectorConfig(dog_octaves=2, orb_levels=1)
        base = detect_keypoints(name, shifted_canvas(patch, 0, 0), cfg)
        moved = detect_keypoints(name, shifted_canvas(patch, *shift), cfg)
        assert base
        assert len(moved) == len(base)
        dx, dy = shift
        for kp in base:
            twin = min(moved, key=lambda m: math.hypot(m.x - kp.x - dx, m.y - kp.y - dy))
            assert math.hypot(twin.x - kp.x - dx, twin.y - kp.y - dy) <= 0.5
            assert twin.response == pytest.approx(kp.response, rel=1e-6, abs=1e-9)
            assert twin.size == pytest.approx(kp.size)

    @pytest.mark.parametrize("name", list(DETECTORS))
    def test_mask_is_honoured(self, name, fractal_texture):
        mask = RegionMask(0, 0, fractal_texture.width // 2, fractal_texture.height)
        kps = detect_keypoints(name, fractal_texture, DetectorConfig(mask=mask))
        assert kps
        assert all(mask.contains(kp.x, kp.y) for kp in kps)

    def test_single_bright_pixel_is_one_fast_corner(self):
        arr = np.zeros((15, 15), dtype=np.uint8)
        arr[7, 7] = 255
        [kp] = detect_fast(GrayImage(arr), DetectorConfig())
        assert (kp.x, kp.y) == (7.0, 7.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", list(DETECTORS))
    def test_default_thresholds_give_a_thousand_keypoints(self, name):
        texture = generate_texture("fractal-noise", 512, 512, seed=0)
        assert len(detect_keypoints(name, texture, DetectorConfig())) >= 1000
