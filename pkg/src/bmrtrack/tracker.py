"""Particle-search tracking loop with a conservative classifier update.

Each frame, candidate states are drawn from independent Gaussians around
the previous estimate (translation and scale), scored by the classifier on
their Boolean-map descriptors, and the state maximizing score times motion
prior is kept.  The classifier is retrained (warm-started) only on frames
where the chosen state's confidence falls below the threshold rho, which
keeps stable appearance information when tracking is confident.

Frames enter in original video resolution; the tracker works internally at
the fixed working resolution and converts boxes back on output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classifier import SamplerConfig, build_training_set, predict, represent, train
from .config import RunConfig
from .imgproc import OutOfViewError, TargetState, extract_patch, resize_image

SCALE_MIN = 0.05
SCALE_MAX = 20.0


class TrackingLostError(Exception):
    """Every candidate window left the frame; carries the last good state."""

    def __init__(self, state: TargetState):
        super().__init__(f"all particles out of view at state {state}")
        self.state = state


@dataclass
class MotionModel:
    sigma_x: float = 6.0
    sigma_y: float = 6.0
    sigma_s: float = 0.01


@dataclass
class ParticleSet:
    states: np.ndarray   # (n, 3) columns x, y, s
    weights: np.ndarray  # (n,) nonnegative

    @property
    def n_p(self) -> int:
        return self.states.shape[0]


@dataclass
class FrameRecord:
    """Per-frame output: box in original coordinates plus update bookkeeping."""

    frame: int
    box: tuple[float, float, float, float]
    confidence: float
    updated: bool
    lost: bool = False


def sample_particles(
    prev: TargetState, mm: MotionModel, n_p: int, rng: np.random.Generator
) -> ParticleSet:
    """Draw n_p candidate states from N(prev, diag(sigma)) with scale clamped."""
    if n_p < 1:
        raise ValueError("need at least one particle")
    states = rng.normal(
        loc=(prev.x, prev.y, prev.s),
        scale=(mm.sigma_x, mm.sigma_y, mm.sigma_s),
        size=(n_p, 3),
    )
    states[:, 2] = np.clip(states[:, 2], SCALE_MIN, SCALE_MAX)
    return ParticleSet(states, np.full(n_p, 1.0 / n_p))


def _log_motion_prior(states: np.ndarray, prev: TargetState, mm: MotionModel) -> np.ndarray:
    logp = np.zeros(states.shape[0])
    for col, mean, sigma in (
        (0, prev.x, mm.sigma_x),
        (1, prev.y, mm.sigma_y),
        (2, prev.s, mm.sigma_s),
    ):
        if sigma > 0:
            d = states[:, col] - mean
            logp += -0.5 * (d / sigma) ** 2 - math.log(sigma * math.sqrt(2.0 * math.pi))
    return logp


class BmrTracker:
    """Single-target tracker; one instance owns one sequence."""

    def __init__(self, config: RunConfig | None = None):
        self.config = config or RunConfig()
        self.config.validate()
        self.w: np.ndarray | None = None
        self.current: TargetState | None = None
        self.init_wh: tuple[float, float] | None = None
        self.mode: str | None = None
        self.rng: np.random.Generator | None = None
        self.seed: int | None = None
        self.records: list[FrameRecord] = []
        self.frame_index = -1
        self._scale_xy: tuple[float, float] | None = None
        # last-step diagnostics for invariant checks
        self.last_particles: ParticleSet | None = None
        self.last_scores: np.ndarray | None = None
        self.last_log_weights: np.ndarray | None = None

    # -- setup ---------------------------------------------------------------

    def init(self, frame: np.ndarray, init_box, seed: int | None = None) -> TargetState:
        """Start tracking from a corner-format (x, y, w, h) box on the first frame."""
        cfg = self.config
        x, y, bw, bh = (float(v) for v in init_box)
        src_h, src_w = frame.shape[:2]
        if bw < 1 or bh < 1:
            raise ValueError(f"degenerate init box {init_box}")
        if x < 0 or y < 0 or x + bw > src_w or y + bh > src_h:
            raise ValueError(f"init box {init_box} not within {src_w}x{src_h} frame")

        self.seed = cfg.seed if seed is None else int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.mode = self._resolve_mode(frame)
        fx = cfg.work_width / src_w
        fy = cfg.work_height / src_h
        self._scale_xy = (fx, fy)
        self.init_wh = (bw * fx, bh * fy)
        self.current = TargetState((x + bw / 2.0) * fx, (y + bh / 2.0) * fy, 1.0)

        work = self._working_frame(frame)
        data = self._training_set(work)
        self.w = train(np.zeros(data.features.shape[1]), data, cfg.train_iters)
        self.frame_index = 0
        # pre-update confidence of the zero classifier is exactly 0.5 < rho
        self.records = [FrameRecord(0, tuple(float(v) for v in init_box), 0.5, True)]
        return self.current

    def _resolve_mode(self, frame: np.ndarray) -> str:
        if self.config.color_mode != "auto":
            return self.config.color_mode
        return "color" if frame.ndim == 3 else "gray"

    def _working_frame(self, frame: np.ndarray) -> np.ndarray:
        return resize_image(frame, self.config.work_width, self.config.work_height)

    def _sampler(self) -> SamplerConfig:
        cfg = self.config
        return SamplerConfig(cfg.alpha, cfg.inner_frac, cfg.beta, cfg.neg_step,
                             cfg.max_negatives)

    def motion_model(self) -> MotionModel:
        cfg = self.config
        return MotionModel(cfg.sigma_x, cfg.sigma_y, cfg.sigma_s)

    def _training_set(self, work: np.ndarray):
        cfg = self.config
        return build_training_set(
            work, self.current, self.init_wh, self._sampler(), self.mode,
            c=cfg.c, bmr_enabled=cfg.bmr_enabled, canonical=cfg.canonical,
        )

    # -- per-frame loop ------------------------------------------------------

    def _score_one(self, work: np.ndarray, state: TargetState) -> float:
        cfg = self.config
        try:
            patch = extract_patch(work, state, self.init_wh, cfg.canonical)
        except OutOfViewError:
            return 0.0
        desc = represent(patch, self.mode, c=cfg.c, bmr_enabled=cfg.bmr_enabled,
                         canonical=cfg.canonical)
        return predict(self.w, desc)

    def score_particles(self, work: np.ndarray, particles: ParticleSet) -> np.ndarray:
        """Classifier confidence per particle; out-of-view particles score 0.

        Each particle is scored independently and written back by index, so
        the result is identical for any worker count.
        """
        self._require_init()
        states = particles.states
        scores = np.empty(states.shape[0])

        def run(i: int) -> None:
            scores[i] = self._score_one(work, TargetState(*states[i]))

        workers = self.config.workers
        if workers <= 1:
            for i in range(states.shape[0]):
                run(i)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, range(states.shape[0])))
        return scores

    def step(self, frame: np.ndarray) -> TargetState:
        """Process one frame: sample, score, pick the MAP state, maybe retrain."""
        self._require_init()
        cfg = self.config
        self.frame_index += 1
        work = self._working_frame(frame)

        particles = sample_particles(self.current, self.motion_model(), cfg.n_particles, self.rng)
        scores = self.score_particles(work, particles)
        self.last_particles = particles
        self.last_scores = scores

        if not np.any(scores > 0.0):
            self.records.append(FrameRecord(self.frame_index, self.state_box(), 0.0, False, lost=True))
            raise TrackingLostError(self.current)

        particles.weights = scores / scores.sum()
        with np.errstate(divide="ignore"):
            log_w = np.where(scores > 0.0, np.log(scores), -np.inf)
        if cfg.prior_in_score:
            log_w = log_w + _log_motion_prior(particles.states, self.current, self.motion_model())
        self.last_log_weights = log_w

        best = int(np.argmax(log_w))  # ties resolve to the lowest index
        self.current = TargetState(*particles.states[best])
        confidence = float(scores[best])

        updated = confidence < cfg.rho
        if updated:
            data = self._training_set(work)
            self.w = train(self.w, data, cfg.train_iters)

        self.records.append(FrameRecord(self.frame_index, self.state_box(), confidence, updated))
        return self.current

    # -- output --------------------------------------------------------------

    def state_box(self) -> tuple[float, float, float, float]:
        """Current state as a corner-format box in original video coordinates."""
        self._require_init()
        fx, fy = self._scale_xy
        bw = self.current.s * self.init_wh[0] / fx
        bh = self.current.s * self.init_wh[1] / fy
        return (self.current.x / fx - bw / 2.0, self.current.y / fy - bh / 2.0, bw, bh)

    def _require_init(self) -> None:
        if self.w is None:
            raise RuntimeError("tracker not initialized; call init() first")


def track_sequence(frames, init_box, config: RunConfig | None = None, seed: int | None = None):
    """Run the tracker over an iterable of frames.

    Returns (boxes, records): one corner-format box per frame in original
    coordinates, the first being the given init box verbatim.  Frames where
    every particle left the view are flagged lost and keep the last state.
    """
    tracker = BmrTracker(config)
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("need at least one frame") from None
    tracker.init(first, init_box, seed=seed)
    for frame in it:
        try:
            tracker.step(frame)
        except TrackingLostError:
            continue  # flagged record already appended; keep last state
    return [rec.box for rec in tracker.records], tracker.records
