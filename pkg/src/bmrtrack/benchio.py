"""Benchmark sequence ingestion.

A sequence directory holds numbered frames and one ground-truth rectangle
per frame:

    <root>/<SeqName>/img/0001.jpg ...
    <root>/<SeqName>/groundtruth_rect.txt   # "x,y,w,h" per line (comma, tab
                                            # or space separated)
    <root>/<SeqName>/attrs.txt              # optional, one attribute code per line
    <root>/<SeqName>/manifest.json          # optional per-sequence quirks:
                                            # {"start_frame": n, "end_frame": n}

Boxes are corner-format (x, y, w, h) and kept as floats; rounding happens
only when reports are written.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

ATTRIBUTES = ("LR", "IPR", "OPR", "SV", "OCC", "DEF", "BC", "IV", "MB", "FM", "OV")
_FRAME_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp")


class DecodeError(Exception):
    """An image file could not be decoded."""


class MalformedSequenceError(Exception):
    """Sequence directory contents are inconsistent."""


@dataclass
class Sequence:
    name: str
    frames: list[Path]
    groundtruth: np.ndarray            # (n, 4) float corner boxes
    attributes: list[str] = field(default_factory=list)
    color: bool = False
    width: int = 0                     # coordinate frame of the ground truth
    height: int = 0

    def __post_init__(self) -> None:
        self.groundtruth = np.asarray(self.groundtruth, dtype=np.float64)
        if len(self.frames) != self.groundtruth.shape[0]:
            raise MalformedSequenceError(
                f"{self.name}: {len(self.frames)} frames but "
                f"{self.groundtruth.shape[0]} ground-truth boxes"
            )
        if self.groundtruth.size and self.groundtruth[:, 2:].min() < 1:
            raise MalformedSequenceError(f"{self.name}: ground-truth box smaller than 1px")

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def decode_image(path: str | Path) -> np.ndarray:
    """Decode JPEG/PNG into a uint8 array: (h, w) gray or (h, w, 3) RGB."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc


def _frame_number(path: Path) -> int:
    digits = re.findall(r"\d+", path.stem)
    if not digits:
        raise MalformedSequenceError(f"frame name {path.name} carries no number")
    return int(digits[-1])


def _parse_groundtruth(path: Path) -> np.ndarray:
    boxes = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = re.split(r"[,\t ]+", line)
        if len(parts) != 4:
            raise MalformedSequenceError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
        try:
            boxes.append([float(p) for p in parts])
        except ValueError as exc:
            raise MalformedSequenceError(f"{path}:{lineno}: {exc}") from exc
    if not boxes:
        raise MalformedSequenceError(f"{path}: no ground-truth boxes")
    return np.array(boxes)


def load_sequence(seq_dir: str | Path) -> Sequence:
    """Load one sequence directory; see the module docstring for the layout."""
    seq_dir = Path(seq_dir)
    img_dir = seq_dir / "img"
    gt_path = seq_dir / "groundtruth_rect.txt"
    if not img_dir.is_dir():
        raise FileNotFoundError(f"missing frame directory {img_dir}")
    if not gt_path.is_file():
        raise FileNotFoundError(f"missing ground truth {gt_path}")

    frames = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES),
        key=_frame_number,
    )
    if not frames:
        raise MalformedSequenceError(f"{img_dir} holds no frames")
    numbers = [_frame_number(p) for p in frames]
    if sorted(set(numbers)) != numbers:
        raise MalformedSequenceError(f"{img_dir}: frame numbers not strictly increasing")

    manifest_path = seq_dir / "manifest.json"
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        lo = manifest.get("start_frame", numbers[0])
        hi = manifest.get("end_frame", numbers[-1])
        frames = [p for p, n in zip(frames, numbers) if lo <= n <= hi]
        if not frames:
            raise MalformedSequenceError(f"{seq_dir}: manifest frame range [{lo}, {hi}] is empty")

    groundtruth = _parse_groundtruth(gt_path)

    attributes: list[str] = []
    attrs_path = seq_dir / "attrs.txt"
    if attrs_path.is_file():
        for code in attrs_path.read_text(encoding="utf-8").split():
            if code not in ATTRIBUTES:
                raise MalformedSequenceError(f"{attrs_path}: unknown attribute {code!r}")
            attributes.append(code)

    first = decode_image(frames[0])
    return Sequence(
        name=seq_dir.name,
        frames=frames,
        groundtruth=groundtruth,
        attributes=attributes,
        color=first.ndim == 3,
        width=first.shape[1],
        height=first.shape[0],
    )


def scale_groundtruth(seq: Sequence, to: tuple[int, int] = (240, 320)) -> Sequence:
    """Rescale ground-truth boxes into a (height, width) working frame.

    Axes scale independently; applying the function again with the original
    dimensions inverts the transform (boxes stay floating point throughout).
    """
    to_h, to_w = to
    if seq.width <= 0 or seq.height <= 0:
        raise ValueError("sequence does not know its frame dimensions")
    fx = to_w / seq.width
    fy = to_h / seq.height
    scaled = seq.groundtruth * np.array([fx, fy, fx, fy])
    return replace(seq, groundtruth=scaled, width=to_w, height=to_h)
