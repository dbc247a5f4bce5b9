"""Geometry layer: resize, LAB conversion, patch extraction."""

import math

import numpy as np
import pytest

from bmrtrack.imgproc import (
    OutOfViewError,
    TargetState,
    extract_patch,
    resize_image,
    rgb_to_lab,
)

# Scalar reference conversion, written independently of the vectorized
# implementation: published 4-digit sRGB matrix, white point taken as the
# image of (1,1,1) so the white test below is exact.
_M = [
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
]
_WHITE = [sum(row) for row in _M]


def _lab_scalar(r8: float, g8: float, b8: float):
    def linearize(u):
        u = u / 255.0
        return ((u + 0.055) / 1.055) ** 2.4 if u > 0.04045 else u / 12.92

    lin = [linearize(v) for v in (r8, g8, b8)]
    xyz = [sum(m * v for m, v in zip(row, lin)) for row in _M]

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d**3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = (f(v / w) for v, w in zip(xyz, _WHITE))
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def _lab_to_rgb_scalar(L: float, a: float, b: float):
    # analytic inverse of the reference conversion
    fy = (L + 16) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def finv(f):
        d = 6.0 / 29.0
        return f**3 if f > d else 3 * d * d * (f - 4.0 / 29.0)

    xyz = [finv(f) * w for f, w in zip((fx, fy, fz), _WHITE)]
    inv = np.linalg.inv(np.array(_M))
    lin = inv @ np.array(xyz)

    def encode(u):
        return 1.055 * u ** (1 / 2.4) - 0.055 if u > 0.0031308 else 12.92 * u

    return [encode(max(v, 0.0)) * 255.0 for v in lin]


class TestResize:
    def test_identity_dims_returns_same_bytes(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8)
        out = resize_image(img, 23, 17)
        assert np.array_equal(out, img)
        assert out is not img

    def test_downscale_to_working_size(self):
        img = np.zeros((480, 640, 3), dtype=np.uint8)
        out = resize_image(img, 320, 240)
        assert out.shape == (240, 320, 3)
        assert out.dtype == np.uint8

    def test_channel_count_preserved_for_gray(self):
        img = np.zeros((480, 640), dtype=np.uint8)
        assert resize_image(img, 320, 240).shape == (240, 320)

    def test_2x2_average_rounds_half_away_from_zero(self):
        # hand average: (0 + 0 + 255 + 255) / 4 = 127.5 -> 128
        img = np.array([[0, 0], [255, 255]], dtype=np.uint8)
        out = resize_image(img, 1, 1)
        assert out.shape == (1, 1)
        assert out[0, 0] == 128

    def test_zero_dimension_rejected(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError):
            resize_image(img, 0, 4)
        with pytest.raises(ValueError):
            resize_image(np.zeros((0, 4), dtype=np.uint8), 2, 2)

    def test_upscale_constant_stays_constant(self):
        img = np.full((3, 3), 77, dtype=np.uint8)
        assert np.all(resize_image(img, 9, 9) == 77)


class TestRgbToLab:
    def test_white_point(self):
        lab = rgb_to_lab(np.full((2, 2, 3), 255, dtype=np.uint8))
        assert np.allclose(lab[..., 0], 100.0, atol=1e-9)
        assert np.all(np.abs(lab[..., 1]) < 0.01)
        assert np.all(np.abs(lab[..., 2]) < 0.01)

    def test_black(self):
        lab = rgb_to_lab(np.zeros((1, 1, 3), dtype=np.uint8))
        assert np.allclose(lab, 0.0, atol=1e-9)

    def test_pure_red_matches_standard_values(self):
        # reference D65 conversion of sRGB (255, 0, 0)
        lab = rgb_to_lab(np.array([[[255, 0, 0]]], dtype=np.uint8))[0, 0]
        assert lab == pytest.approx((53.24, 80.09, 67.20), abs=0.05)

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        lab = rgb_to_lab(img)
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                ref = _lab_scalar(*(float(v) for v in img[y, x]))
                assert lab[y, x] == pytest.approx(ref, abs=1e-9)

    def test_roundtrip_recovers_rgb_within_one(self):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        lab = rgb_to_lab(img)
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                back = _lab_to_rgb_scalar(*lab[y, x])
                assert np.allclose(back, img[y, x].astype(float), atol=1.0)

    def test_gray_input_rejected(self):
        with pytest.raises(ValueError):
            rgb_to_lab(np.zeros((4, 4), dtype=np.uint8))


class TestExtractPatch:
    def test_centered_unit_scale_equals_manual_crop(self):
        rng = np.random.default_rng(3)
        frame = rng.integers(0, 256, size=(100, 100, 3), dtype=np.uint8)
        state = TargetState(50.0, 50.0, 1.0)
        patch = extract_patch(frame, state, (40, 40), canonical=32)
        manual = resize_image(frame[30:70, 30:70], 32, 32)
        assert np.array_equal(patch, manual)

    def test_corner_state_is_edge_clamped(self):
        frame = np.arange(100, dtype=np.uint8).reshape(10, 10)
        patch = extract_patch(frame, TargetState(0.0, 0.0, 1.0), (8, 8), canonical=8)
        assert patch.shape == (8, 8)

    def test_double_scale_doubles_window(self):
        # synthetic gradient image so resampling differences would show up
        frame = np.add.outer(np.arange(120), np.arange(120)).astype(np.uint8)
        state = TargetState(60.0, 60.0, 2.0)
        patch = extract_patch(frame, state, (20, 20), canonical=32)
        manual = resize_image(frame[40:80, 40:80], 32, 32)  # 40 = 2 * 20 window
        assert np.array_equal(patch, manual)

    def test_output_always_canonical(self):
        frame = np.zeros((50, 60), dtype=np.uint8)
        for state in (TargetState(5, 5, 0.3), TargetState(55, 45, 4.0), TargetState(30, 25, 1.0)):
            assert extract_patch(frame, state, (11, 7), canonical=32).shape == (32, 32)

    def test_window_outside_frame_raises(self):
        frame = np.zeros((50, 50), dtype=np.uint8)
        with pytest.raises(OutOfViewError):
            extract_patch(frame, TargetState(200.0, 200.0, 1.0), (10, 10))

    def test_invalid_scale_rejected(self):
        with pytest.raises(ValueError):
            TargetState(0.0, 0.0, 0.0)

    def test_fractional_window_rounds_to_nearest(self):
        frame = np.zeros((50, 50), dtype=np.uint8)
        # s * w0 = 1.5 * 7 = 10.5 -> 11-wide window; just exercises rounding path
        patch = extract_patch(frame, TargetState(25.0, 25.0, 1.5), (7, 7), canonical=16)
        assert patch.shape == (16, 16)

    def test_non_integer_center_uses_nearest_pixel(self):
        rng = np.random.default_rng(4)
        frame = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        a = extract_patch(frame, TargetState(30.4, 30.4, 1.0), (16, 16), canonical=16)
        b = extract_patch(frame, TargetState(30.0, 30.0, 1.0), (16, 16), canonical=16)
        assert np.array_equal(a, b)

    def test_resize_idempotent_at_canonical(self):
        rng = np.random.default_rng(5)
        frame = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        patch = extract_patch(frame, TargetState(32, 32, 1.0), (32, 32), canonical=32)
        assert np.array_equal(patch, frame[16:48, 16:48])


def test_math_floor_round_convention():
    # round-half-away-from-zero on nonnegative values is floor(v + 0.5)
    assert math.floor(127.5 + 0.5) == 128
    assert math.floor(0.5 + 0.5) == 1
