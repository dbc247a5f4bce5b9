"""Appearance features: 31-channel HOG plus a raw LAB/intensity block.

A canonical 32x32 patch is described by two blocks:

* color block: the patch box-averaged to 16x16 and, for color input,
  converted to CIE L*a*b* (3 channels, 768 values); grayscale input keeps
  raw intensity (256 values).
* HOG block: a 4x4 grid of 8x8-pixel cells with 31 channels per cell
  (18 contrast-sensitive orientations, 9 contrast-insensitive
  orientations, 4 gradient-energy texture features), 496 values.

Each block is mapped into [0, 1] by its fixed construction range (L by
100, a/b by the +-110 gamut container, intensity by 255, HOG channels by
their truncation bounds), the two are concatenated (color first), and the
concatenation is min-max rescaled per sample.  Keeping the block ranges
fixed preserves absolute color/contrast across patches, which is what the
classifier separates; the per-sample rescale only stretches the occupied
range.  Total length: 752 for gray input, 1264 for color.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .imgproc import rgb_to_lab

HOG_CHANNELS = 31
_N_ORIENT = 9  # contrast-insensitive bins; sensitive bins are 2x this
_HOG_EPS = 1e-4
_HOG_CLIP = 0.2


def _require_patch(patch: np.ndarray, size: int) -> np.ndarray:
    patch = np.asarray(patch)
    if patch.shape[:2] != (size, size) or patch.ndim not in (2, 3):
        raise ValueError(f"expected a {size}x{size} patch, got shape {patch.shape}")
    if patch.ndim == 3 and patch.shape[2] != 3:
        raise ValueError(f"patch must have 1 or 3 channels, got {patch.shape[2]}")
    return patch


@lru_cache(maxsize=8)
def _cell_weights(size: int, cells: int) -> np.ndarray:
    """Bilinear weights of each pixel row/column into the cell grid, (cells, size).

    Pixel centers map to cell coordinates with the half-pixel convention;
    contributions that fall outside the grid are dropped.
    """
    cell = size // cells
    coords = (np.arange(size) + 0.5) / cell - 0.5
    i0 = np.floor(coords).astype(int)
    w1 = coords - i0
    weights = np.zeros((cells, size))
    cols = np.arange(size)
    for idx, wgt in ((i0, 1.0 - w1), (i0 + 1, w1)):
        ok = (idx >= 0) & (idx < cells)
        weights[idx[ok], cols[ok]] += wgt[ok]
    return weights


@lru_cache(maxsize=8)
def _pixel_to_cell_matrix(size: int, cells: int) -> np.ndarray:
    # (cells*cells, size*size) spatial scatter: weight of pixel (y, x) into
    # cell (i, j) is the product of the per-axis bilinear weights
    a = _cell_weights(size, cells)
    return np.einsum("iy,jx->ijyx", a, a).reshape(cells * cells, size * size)


def _pick_strongest_channel(gx: np.ndarray, gy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # per pixel, keep the gradient of the channel with the largest magnitude
    strength = gx * gx + gy * gy
    best = np.argmax(strength, axis=2)[..., None]
    gx = np.take_along_axis(gx, best, axis=2)[..., 0]
    gy = np.take_along_axis(gy, best, axis=2)[..., 0]
    return gx, gy


def compute_hog(patch: np.ndarray, cells: int = 4) -> np.ndarray:
    """31-channel HOG tensor of shape (cells, cells, 31) for a square patch.

    Gradients are centered differences (one-sided at the border); for RGB
    input each pixel uses the channel with the largest gradient magnitude.
    Magnitudes are binned into 18 orientation sectors over [0, 2pi) and
    accumulated into cells with bilinear spatial weighting.  Cell histograms
    are normalized by the four overlapping 2x2 cell blocks (energy sums,
    replicated at the grid border), truncated at 0.2.  Channel layout:
    [0:18] sensitive, [18:27] insensitive, [27:31] per-block texture energy.
    """
    patch = np.asarray(patch)
    if patch.ndim not in (2, 3) or patch.shape[0] != patch.shape[1]:
        raise ValueError(f"expected a square patch, got shape {patch.shape}")
    size = patch.shape[0]
    if size % cells != 0:
        raise ValueError(f"patch edge {size} not divisible into {cells} cells")

    data = patch.astype(np.float64)
    gy, gx = np.gradient(data, axis=(0, 1))
    if data.ndim == 3:
        gx, gy = _pick_strongest_channel(gx, gy)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)
    sector = 2.0 * np.pi / (2 * _N_ORIENT)
    bins = np.floor(theta / sector).astype(int) % (2 * _N_ORIENT)

    # each pixel votes its magnitude into exactly one orientation column,
    # then one GEMM distributes pixels over cells with bilinear weights
    votes = np.zeros((size * size, 2 * _N_ORIENT))
    votes[np.arange(size * size), bins.ravel()] = mag.ravel()
    hist = (_pixel_to_cell_matrix(size, cells) @ votes).reshape(cells, cells, 2 * _N_ORIENT)

    folded = hist[..., :_N_ORIENT] + hist[..., _N_ORIENT:]
    energy = np.sum(folded**2, axis=2)
    padded = np.pad(energy, 1, mode="edge")
    blocks = padded[:-1, :-1] + padded[:-1, 1:] + padded[1:, :-1] + padded[1:, 1:]
    inv = 1.0 / np.sqrt(blocks + _HOG_EPS)
    # the four blocks containing cell (i, j), shape (cells, cells, 4)
    inv4 = np.stack([inv[:-1, :-1], inv[:-1, 1:], inv[1:, :-1], inv[1:, 1:]], axis=2)

    sens = np.minimum(hist[:, :, None, :] * inv4[:, :, :, None], _HOG_CLIP)
    insens = np.minimum(folded[:, :, None, :] * inv4[:, :, :, None], _HOG_CLIP)
    out = np.empty((cells, cells, HOG_CHANNELS))
    out[..., : 2 * _N_ORIENT] = 0.5 * sens.sum(axis=2)
    out[..., 2 * _N_ORIENT : 3 * _N_ORIENT] = 0.5 * insens.sum(axis=2)
    out[..., 3 * _N_ORIENT :] = sens.sum(axis=3) / np.sqrt(2.0 * _N_ORIENT)
    return out


def _box_half(patch: np.ndarray) -> np.ndarray:
    # 2x2 box average, float output at half resolution
    p = patch.astype(np.float64)
    return (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]) / 4.0


def _to_gray(patch: np.ndarray) -> np.ndarray:
    if patch.ndim == 2:
        return patch.astype(np.float64)
    # ITU-R BT.601 luma
    return patch.astype(np.float64) @ np.array([0.299, 0.587, 0.114])


def compute_color_block(patch: np.ndarray, mode: str, canonical: int = 32) -> np.ndarray:
    """Raw color/intensity block: LAB at 16x16 (color) or intensity at 16x16 (gray)."""
    patch = _require_patch(patch, canonical)
    if mode == "color":
        if patch.ndim != 3:
            raise ValueError("color mode requires a 3-channel patch")
        return rgb_to_lab(_box_half(patch)).ravel()
    if mode == "gray":
        return _box_half(_to_gray(patch)).ravel()
    raise ValueError(f"mode must be 'color' or 'gray', got {mode!r}")


# fixed block ranges: LAB a/b of sRGB inputs stay inside +-110; HOG
# orientation channels are bounded by 2 * clip and texture channels by
# sqrt(18) * clip, both by construction
_AB_RANGE = 110.0
_HOG_ORIENT_MAX = 2.0 * _HOG_CLIP
_HOG_TEXTURE_MAX = np.sqrt(2.0 * _N_ORIENT) * _HOG_CLIP


def _unit_color_block(patch: np.ndarray, mode: str, canonical: int) -> np.ndarray:
    block = compute_color_block(patch, mode, canonical)
    if mode == "gray":
        return block / 255.0
    lab = block.reshape(-1, 3)
    unit = np.empty_like(lab)
    unit[:, 0] = lab[:, 0] / 100.0
    unit[:, 1:] = (lab[:, 1:] + _AB_RANGE) / (2.0 * _AB_RANGE)
    return np.clip(unit.ravel(), 0.0, 1.0)


def _unit_hog_block(patch: np.ndarray, n_hog: int) -> np.ndarray:
    hog = compute_hog(patch, n_hog)
    unit = np.empty_like(hog)
    unit[..., : 3 * _N_ORIENT] = hog[..., : 3 * _N_ORIENT] / _HOG_ORIENT_MAX
    unit[..., 3 * _N_ORIENT :] = hog[..., 3 * _N_ORIENT :] / _HOG_TEXTURE_MAX
    return unit.ravel()


def _minmax01(v: np.ndarray) -> np.ndarray:
    lo = v.min()
    span = v.max() - lo
    if span == 0:
        return np.zeros_like(v)
    return (v - lo) / span


def feature_length(mode: str, n_col: int = 16, n_hog: int = 4) -> int:
    channels = 3 if mode == "color" else 1
    return n_hog * n_hog * HOG_CHANNELS + n_col * n_col * channels


def build_feature_vector(patch: np.ndarray, mode: str, canonical: int = 32, n_hog: int = 4) -> np.ndarray:
    """Concatenated [color | HOG] descriptor rescaled to [0, 1].

    Blocks are normalized by their fixed construction ranges, concatenated,
    and the result is min-max rescaled per sample.  A vector with no
    contrast at all (max == min, e.g. a pure black patch in gray mode)
    degenerates to all zeros.
    """
    patch = _require_patch(patch, canonical)
    color = _unit_color_block(patch, mode, canonical)
    hog = _unit_hog_block(patch, n_hog)
    return _minmax01(np.concatenate([color, hog]))
