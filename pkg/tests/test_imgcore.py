"""
Tests for the image core: PGM I/O, integral images, blur, gradients and rotation.
"""

import numpy as np
import pytest

from src.errors import DataError, PgmFormatError
from src.imgcore import (
    FloatImage,
    GrayImage,
    gaussian_blur,
    gaussian_kernel,
    gradients,
    integral,
    load_pgm,
    save_pgm,
    screen_rotation,
    to_gray,
    warp_rotate,
)


class TestGrayImage:
    """Test image construction and equality."""

    def test_from_values_row_major(self):
        img = GrayImage.from_values(3, 2, [1, 2, 3, 4, 5, 6])
        assert img.width == 3
        assert img.height == 2
        assert img.data[1, 0] == 4

    def test_wrong_value_count(self):
        with pytest.raises(ValueError):
            GrayImage.from_values(3, 2, [1, 2, 3])

    def test_values_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0, 256]]))

    def test_data_is_read_only(self, random_image):
        with pytest.raises(ValueError):
            random_image.data[0, 0] = 1

    def test_equality_compares_pixels(self, random_image):
        assert GrayImage(random_image.data.copy()) == random_image
        other = random_image.data.copy()
        other[0, 0] = (int(other[0, 0]) + 1) % 256
        assert GrayImage(other) != random_image

    def test_to_gray_rounds_half_up_and_clamps(self):
        img = to_gray(FloatImage(np.array([[2.5, -4.0, 300.0, 1.49]])))
        assert img.data.tolist() == [[3, 0, 255, 1]]


class TestPgm:
    """Test PGM reading and writing."""

    def test_round_trip_binary(self, tmp_path, random_image):
        path = tmp_path / "img.pgm"
        save_pgm(random_image, path)
        assert path.read_bytes().startswith(b"P5\n32 32\n255\n")
        assert load_pgm(path) == random_image

    def test_ascii_with_comments(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        path.write_bytes(b"P2\n# a comment\n3 2\n# another\n15\n0 1 2\n3 4 15\n")
        img = load_pgm(path)
        assert img.data.tolist() == [[0, 1, 2], [3, 4, 15]]

    def test_small_maxval_is_not_rescaled(self, tmp_path):
        path = tmp_path / "low.pgm"
        path.write_bytes(b"P5 2 1 15\n" + bytes([7, 15]))
        assert load_pgm(path).data.tolist() == [[7, 15]]

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(PgmFormatError, match="malformed header"):
            load_pgm(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = tmp_path / "wide.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
        with pytest.raises(PgmFormatError, match="unsupported maxval"):
            load_pgm(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
        with pytest.raises(PgmFormatError, match="truncated payload"):
            load_pgm(path)

    def test_sample_above_maxval(self, tmp_path):
        path = tmp_path / "over.pgm"
        path.write_bytes(b"P2\n2 1\n10\n3 11\n")
        with pytest.raises(PgmFormatError):
            load_pgm(path)

    def test_format_errors_are_data_errors(self, tmp_path):
        path = tmp_path / "junk.pgm"
        path.write_bytes(b"hello")
        with pytest.raises(DataError):
            load_pgm(path)

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError, match="cannot read image"):
            load_pgm(tmp_path / "absent.pgm")


class TestIntegralImage:
    """Test box sums against direct summation."""

    def test_every_box_matches_direct_sum(self, rng):
        data = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
        table = integral(GrayImage(data))
        for y0 in range(6):
            for y1 in range(y0, 6):
                for x0 in range(8):
                    for x1 in range(x0, 8):
                        expected = int(data[y0:y1, x0:x1].astype(np.int64).sum())
                        assert table.box_sum(x0, y0, x1, y1) == expected

    def test_large_sum_does_not_overflow(self):
        img = GrayImage(np.full((300, 300), 255, dtype=np.uint8))
        assert integral(img).box_sum(0, 0, 300, 300) == 255 * 300 * 300

    def test_box_outside_image(self, random_image):
        table = integral(random_image)
        with pytest.raises(ValueError):
            table.box_sum(0, 0, 33, 10)


class TestBlurAndGradients:
    """Test Gaussian blur and Sobel gradients."""

    def test_kernel_normalised_with_three_sigma_radius(self):
        k = gaussian_kernel(1.5)
        assert len(k) == 2 * 5 + 1
        assert k.sum() == pytest.approx(1.0)
        assert k[5] == k.max()

    def test_kernel_rejects_non_positive_sigma(self):
        with pytest.raises(ValueError):
            gaussian_kernel(0.0)

    def test_blur_preserves_constant_image(self):
        img = GrayImage(np.full((20, 30), 77, dtype=np.uint8))
        blurred = gaussian_blur(img, 2.0)
        assert np.allclose(blurred.data, 77.0)

    def test_blur_composes_like_one_wider_blur(self, rng):
        data = rng.integers(0, 256, size=(80, 80), dtype=np.uint8)
        twice = gaussian_blur(gaussian_blur(GrayImage(data), 2.0), 1.5).data
        once = gaussian_blur(GrayImage(data), 2.5).data
        inner = (slice(20, -20), slice(20, -20))
        assert np.abs(twice[inner] - once[inner]).max() < 2.0
        assert np.abs(twice[inner] - once[inner]).mean() < 0.5

    def test_blur_stays_within_input_range(self, rng):
        data = rng.integers(40, 200, size=(50, 60), dtype=np.uint8)
        blurred = gaussian_blur(GrayImage(data), 3.0).data
        assert blurred.min() >= 40 - 1e-9
        assert blurred.max() <= 199 + 1e-9

    def test_ramp_gradient(self):
        xs = np.tile(np.arange(40) * 3, (20, 1)).astype(np.uint8)
        gx, gy = gradients(GrayImage(xs))
        # Sobel scales a unit slope by 8.
        assert np.allclose(gx.data[1:-1, 1:-1], 24.0)
        assert np.allclose(gy.data[1:-1, 1:-1], 0.0)

    def test_gradients_need_three_by_three(self):
        with pytest.raises(ValueError):
            gradients(GrayImage(np.zeros((2, 5), dtype=np.uint8)))


class TestRotation:
    """Test the screen rotation convention and image warping."""

    def test_screen_rotation_turns_right_into_up(self):
        assert np.allclose(screen_rotation(90.0) @ [1.0, 0.0], [0.0, -1.0])

    def test_zero_and_full_turn_are_identity(self, random_image):
        assert warp_rotate(random_image, 0.0) == random_image
        assert warp_rotate(random_image, 360.0) == random_image

    def test_quarter_turn_matches_rot90(self, random_image):
        rotated = warp_rotate(random_image, 90.0)
        assert np.array_equal(rotated.data, np.rot90(random_image.data))

    def test_four_quarter_turns_restore_square_image(self, random_image):
        img = random_image
        for _ in range(4):
            img = warp_rotate(img, 90.0)
        assert img == random_image

    def test_corners_outside_source_are_zero(self):
        img = GrayImage(np.full((40, 40), 200, dtype=np.uint8))
        rotated = warp_rotate(img, 45.0)
        assert rotated.data[0, 0] == 0
        assert rotated.data[20, 20] == 200

    def test_unknown_interpolation(self, random_image):
        with pytest.raises(ValueError):
            warp_rotate(random_image, 10.0, interp="nearest")
