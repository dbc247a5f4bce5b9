"""Online logistic regression over Boolean-map descriptors.

The classifier is a plain weight vector w; confidence of a descriptor b is
sigmoid(w.b).  Training minimizes the mean logistic loss over the current
frame's samples by full-batch gradient descent with unit step size for a
fixed number of iterations, warm-started from the previous weights.

Training sets pair dense positive locations (integer pixels inside an open
disk of radius alpha around the target) with negatives on a coarse grid
over the ring zeta < dist < beta, where zeta scales with the target size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bmr
from .features import build_feature_vector
from .imgproc import TargetState, extract_patch


class SamplingError(Exception):
    """Raised when a training class would be empty for the given geometry."""


@dataclass
class SamplerConfig:
    alpha: float = 3.0        # positive radius, pixels
    inner_frac: float = 0.3   # zeta = inner_frac * min(target w, h)
    beta: float = 100.0       # outer negative radius, pixels
    neg_step: int = 5         # negative grid step, pixels
    max_negatives: int = 100  # ring grid thinned evenly to at most this many


@dataclass
class TrainingSet:
    """Row-major descriptor matrix with +-1 labels."""

    features: np.ndarray  # (n, dim) float64
    labels: np.ndarray    # (n,) float64 in {+1, -1}

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValueError("features must be (n, dim) with one label per row")
        if self.n_t < 1:
            raise ValueError("training set must not be empty")

    @property
    def n_t(self) -> int:
        return self.features.shape[0]


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def predict(w: np.ndarray, b: np.ndarray) -> float:
    """Confidence sigmoid(w.b) in (0, 1)."""
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.shape != b.shape:
        raise ValueError(f"dimension mismatch: w {w.shape} vs b {b.shape}")
    return float(sigmoid(w @ b))


def _margins(w: np.ndarray, data: TrainingSet) -> np.ndarray:
    return data.labels * (data.features @ w)


def loss(w: np.ndarray, data: TrainingSet) -> float:
    """Mean logistic loss (1/n) sum log(1 + exp(-y w.b)), overflow-safe."""
    return float(np.logaddexp(0.0, -_margins(w, data)).mean())


def gradient(w: np.ndarray, data: TrainingSet) -> np.ndarray:
    """Analytic gradient of :func:`loss` with respect to w."""
    coeff = data.labels * sigmoid(-_margins(w, data))
    return -(data.features * coeff[:, None]).mean(axis=0)


def train(w0: np.ndarray, data: TrainingSet, iters: int = 20) -> np.ndarray:
    """Unit-step gradient descent from w0 for a fixed iteration count."""
    w = np.array(w0, dtype=np.float64, copy=True)
    if w.shape != (data.features.shape[1],):
        raise ValueError(f"weight length {w.shape} does not match descriptors {data.features.shape}")
    for _ in range(iters):
        w -= gradient(w, data)
    return w


def generate_sample_locations(
    center: tuple[float, float],
    cfg: SamplerConfig,
    target_wh: tuple[float, float],
    frame_shape: tuple[int, int],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Positive and negative sample centers around the target, in-frame only.

    Positives are every integer pixel strictly inside the disk of radius
    alpha.  Negatives come from the step-spaced grid anchored at the
    rounded center, kept where zeta < distance < beta, then thinned with an
    even stride to at most max_negatives (a uniform, deterministic
    subsample of the ring).  Raises SamplingError if either class comes out
    empty.
    """
    cx, cy = center
    h, w = frame_shape[:2]

    def in_frame(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h

    positives = []
    r = cfg.alpha
    for y in range(math.ceil(cy - r), math.floor(cy + r) + 1):
        for x in range(math.ceil(cx - r), math.floor(cx + r) + 1):
            if (x - cx) ** 2 + (y - cy) ** 2 < r * r and in_frame(x, y):
                positives.append((x, y))

    zeta = cfg.inner_frac * min(target_wh)
    ax, ay = round(cx), round(cy)
    k = int(cfg.beta // cfg.neg_step)
    offsets = [i * cfg.neg_step for i in range(-k, k + 1)]
    negatives = []
    for oy in offsets:
        for ox in offsets:
            x, y = ax + ox, ay + oy
            dist = math.hypot(x - cx, y - cy)
            if zeta < dist < cfg.beta and in_frame(x, y):
                negatives.append((x, y))
    if cfg.max_negatives and len(negatives) > cfg.max_negatives:
        stride = math.ceil(len(negatives) / cfg.max_negatives)
        negatives = negatives[::stride]

    if not positives:
        raise SamplingError(f"no in-frame positive locations around ({cx}, {cy})")
    if not negatives:
        raise SamplingError(f"no in-frame negative locations around ({cx}, {cy})")
    return positives, negatives


def represent(
    patch: np.ndarray,
    mode: str,
    c: int = 4,
    bmr_enabled: bool = True,
    canonical: int = 32,
) -> np.ndarray:
    """Patch descriptor: normalized Boolean-map stack, or raw features when disabled."""
    phi = build_feature_vector(patch, mode, canonical=canonical)
    if not bmr_enabled:
        return phi
    return bmr.normalize(bmr.encode(phi, c)).values


def build_training_set(
    frame: np.ndarray,
    state: TargetState,
    init_wh: tuple[float, float],
    cfg: SamplerConfig,
    mode: str,
    c: int = 4,
    bmr_enabled: bool = True,
    canonical: int = 32,
) -> TrainingSet:
    """Extract, describe and label training patches around the current state."""
    target_wh = (state.s * init_wh[0], state.s * init_wh[1])
    positives, negatives = generate_sample_locations(
        (state.x, state.y), cfg, target_wh, frame.shape[:2]
    )
    rows = []
    for x, y in positives + negatives:
        patch = extract_patch(frame, TargetState(x, y, state.s), init_wh, canonical)
        rows.append(represent(patch, mode, c=c, bmr_enabled=bmr_enabled, canonical=canonical))
    labels = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
    return TrainingSet(np.array(rows), labels)
