"""Shared fixtures: synthetic scenes and on-disk sequence directories."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from bmrtrack.imgproc import resize_image


def _smooth_texture(rng, h, w, lo, hi, grid, color):
    shape = (grid, grid, 3) if color else (grid, grid)
    coarse = rng.integers(lo, hi, size=shape, dtype=np.uint8)
    return resize_image(coarse, w, h)


def make_textured_scene(
    n_frames: int,
    size: tuple[int, int] = (240, 320),
    box: int = 40,
    step: int = 3,
    color: bool = True,
    seed: int = 7,
    start: tuple[int, int] = (60, 100),
    margin: int = 12,
):
    """Rigid textured square drifting over a contrasting textured background.

    The square carries a fixed smooth texture (coarse random grid upscaled
    bilinearly, so it has spatial structure rather than per-pixel noise)
    and moves `step` px/frame horizontally, bouncing off the frame margins.
    Returns (frames, boxes) with corner-format ground truth.
    """
    h, w = size
    rng = np.random.default_rng(seed)
    background = _smooth_texture(rng, h, w, 0, 110, grid=28, color=color)
    texture = _smooth_texture(rng, box, box, 150, 256, grid=6, color=color)

    x, y = start
    dx = step
    frames, boxes = [], []
    for _ in range(n_frames):
        frame = background.copy()
        frame[y : y + box, x : x + box] = texture
        frames.append(frame)
        boxes.append((float(x), float(y), float(box), float(box)))
        if not margin <= x + dx <= w - box - margin:
            dx = -dx
        x += dx
    return frames, boxes


@pytest.fixture
def scene_factory():
    return make_textured_scene


def write_sequence_dir(root, name, frames, boxes, attrs=None, fmt="png", delimiter=","):
    """Materialize an OTB-style sequence directory and return its path."""
    seq_dir = root / name
    img_dir = seq_dir / "img"
    img_dir.mkdir(parents=True)
    for i, frame in enumerate(frames, start=1):
        Image.fromarray(frame).save(img_dir / f"{i:04d}.{fmt}")
    lines = [delimiter.join(str(v) for v in b) for b in boxes]
    (seq_dir / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if attrs:
        (seq_dir / "attrs.txt").write_text("\n".join(attrs) + "\n", encoding="utf-8")
    return seq_dir


@pytest.fixture
def seq_writer(tmp_path):
    def write(name, frames, boxes, **kwargs):
        return write_sequence_dir(tmp_path, name, frames, boxes, **kwargs)

    return write
