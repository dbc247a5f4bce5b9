"""Image geometry: resizing, color-space conversion, patch extraction.

Images are numpy arrays of dtype uint8: shape (h, w) for grayscale and
(h, w, 3) for RGB.  Decoding from files lives in :mod:`bmrtrack.benchio`;
everything here is a pure function of the pixel data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class OutOfViewError(Exception):
    """Raised when a requested patch window lies entirely outside the frame."""


@dataclass
class TargetState:
    """Target state: box center (x, y) in pixels and relative scale s (1.0 at init)."""

    x: float
    y: float
    s: float = 1.0

    def __post_init__(self) -> None:
        if not self.s > 0:
            raise ValueError(f"scale must be positive, got {self.s}")


def _require_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ValueError(f"expected (h, w) or (h, w, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one row and column")
    return img


def resize_image(img: np.ndarray, w: int, h: int) -> np.ndarray:
    """Bilinear resize to w columns by h rows.

    Output pixel centers are mapped to source coordinates with the
    half-pixel convention, source samples outside the frame are clamped to
    the nearest edge pixel, and the result is rounded half away from zero
    back to uint8.  Resizing to the input size returns the bytes unchanged.
    """
    img = _require_image(img)
    if w < 1 or h < 1:
        raise ValueError(f"target size must be at least 1x1, got {w}x{h}")
    src_h, src_w = img.shape[:2]
    if (src_w, src_h) == (w, h):
        return img.copy()

    xs = (np.arange(w) + 0.5) * (src_w / w) - 0.5
    ys = (np.arange(h) + 0.5) * (src_h / h) - 0.5
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0i = np.clip(x0.astype(np.int64), 0, src_w - 1)
    x1i = np.clip(x0i + 1, 0, src_w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, src_h - 1)
    y1i = np.clip(y0i + 1, 0, src_h - 1)

    if img.ndim == 3:
        fxb, fyb = fx[None, :, None], fy[:, None, None]
    else:
        fxb, fyb = fx[None, :], fy[:, None]
    data = img.astype(np.float64)
    row0, row1 = data[y0i], data[y1i]
    top = row0[:, x0i] * (1 - fxb) + row0[:, x1i] * fxb
    bot = row1[:, x0i] * (1 - fxb) + row1[:, x1i] * fxb
    out = top * (1 - fyb) + bot * fyb
    # round half away from zero (values are nonnegative here)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


# sRGB -> XYZ (D65); the white point is the exact image of (1, 1, 1) so that
# pure white maps to L=100, a=0, b=0 with no residual.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124, 0.3576, 0.1805],
        [0.2126, 0.7152, 0.0722],
        [0.0193, 0.1192, 0.9505],
    ]
)
_LAB_WHITE = _SRGB_TO_XYZ.sum(axis=1)
_LAB_DELTA = 6.0 / 29.0


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image (uint8 or float in [0, 255]) to CIE L*a*b*.

    Standard sRGB decoding to linear light, D65 XYZ, then L*a*b*.
    Returns float64 of shape (h, w, 3); grayscale input is rejected.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("rgb_to_lab needs a 3-channel image; use the intensity path for gray")
    rgb = img.astype(np.float64) / 255.0
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _LAB_WHITE
    f = np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def extract_patch(
    frame: np.ndarray,
    state: TargetState,
    init_size: tuple[float, float],
    canonical: int = 32,
) -> np.ndarray:
    """Crop the state's scaled window and resize it to canonical x canonical.

    The window is (s*w0, s*h0) pixels (rounded, at least 1) centered on the
    nearest integer pixel to (x, y).  Pixels outside the frame replicate the
    nearest edge pixel.  A window that misses the frame entirely raises
    OutOfViewError.
    """
    frame = _require_image(frame)
    if canonical < 1:
        raise ValueError("canonical size must be positive")
    w0, h0 = init_size
    if w0 <= 0 or h0 <= 0:
        raise ValueError(f"init_size must be positive, got {init_size}")
    win_w = max(1, int(math.floor(state.s * w0 + 0.5)))
    win_h = max(1, int(math.floor(state.s * h0 + 0.5)))
    cx = int(math.floor(state.x + 0.5))
    cy = int(math.floor(state.y + 0.5))
    x0 = cx - win_w // 2
    y0 = cy - win_h // 2

    src_h, src_w = frame.shape[:2]
    if x0 >= src_w or x0 + win_w <= 0 or y0 >= src_h or y0 + win_h <= 0:
        raise OutOfViewError(
            f"window {win_w}x{win_h} at ({cx}, {cy}) lies outside the {src_w}x{src_h} frame"
        )

    rows = np.clip(np.arange(y0, y0 + win_h), 0, src_h - 1)
    cols = np.clip(np.arange(x0, x0 + win_w), 0, src_w - 1)
    crop = frame[np.ix_(rows, cols)]
    return resize_image(crop, canonical, canonical)
