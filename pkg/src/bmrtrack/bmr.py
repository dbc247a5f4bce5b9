"""Boolean-map encoding of [0, 1] feature vectors.

A vector phi in [0,1]^d is thresholded at the c-1 levels {1/c, 2/c, ...,
(c-1)/c} (non-strict: a map entry is 1 iff phi_k >= theta).  The maps are
nested (each level dominates the next), stacked level-major, and scaled by
1/sqrt(c); the l2-normalized stack is the explicit feature map whose inner
product approximates the normalized intersection kernel.  Averaging the
maps back with divisor c recovers phi up to a quantization residual in
[0, 1/c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class BmrVector:
    """Stacked Boolean maps of one feature vector.

    values has length (c-1)*d; before normalization every entry is 0 or
    1/sqrt(c), afterwards the vector has unit l2 norm (or stays zero).
    """

    values: np.ndarray
    c: int
    normalized: bool = False
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        n_maps = self.c - 1
        if self.values.ndim != 1 or self.values.size % n_maps != 0:
            raise ValueError(f"values length {self.values.size} is not a multiple of {n_maps}")
        self.dim = self.values.size // n_maps

    @property
    def delta(self) -> float:
        return 1.0 / self.c

    @property
    def n_maps(self) -> int:
        return self.c - 1


def thresholds(c: int) -> np.ndarray:
    """Threshold levels {1/c, ..., (c-1)/c}; for c=4 these are binary-exact."""
    if c < 2:
        raise ValueError(f"c must be at least 2, got {c}")
    return np.arange(1, c) / c


def encode(phi: np.ndarray, c: int = 4) -> BmrVector:
    """Encode phi in [0,1]^d into the unnormalized Boolean-map stack."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 1:
        raise ValueError(f"expected a 1-d feature vector, got shape {phi.shape}")
    if phi.size and (phi.min() < 0.0 or phi.max() > 1.0):
        raise ValueError("feature entries must lie in [0, 1]")
    theta = thresholds(c)
    maps = phi[None, :] >= theta[:, None]
    return BmrVector(maps.astype(np.float64).ravel() / math.sqrt(c), c=c)


def normalize(b: BmrVector) -> BmrVector:
    """l2-normalize the stack; the all-zero stack maps to itself."""
    norm = float(np.linalg.norm(b.values))
    values = b.values / norm if norm > 0.0 else np.zeros_like(b.values)
    return BmrVector(values, c=b.c, normalized=True)


def reconstruct(b: BmrVector) -> np.ndarray:
    """Average the maps back into a quantized feature vector on {0, 1/c, ...}."""
    if b.normalized:
        raise ValueError("reconstruct needs the unnormalized stack")
    bits = b.values.reshape(b.n_maps, b.dim) * math.sqrt(b.c)
    return bits.sum(axis=0) / b.c


def intersection_kernel(phix: np.ndarray, phiy: np.ndarray) -> float:
    """Exact intersection similarity sum_k min(x_k, y_k); test oracle for encode."""
    phix = np.asarray(phix, dtype=np.float64)
    phiy = np.asarray(phiy, dtype=np.float64)
    if phix.shape != phiy.shape:
        raise ValueError(f"length mismatch: {phix.shape} vs {phiy.shape}")
    return float(np.minimum(phix, phiy).sum())
