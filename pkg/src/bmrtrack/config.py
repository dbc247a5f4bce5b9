"""Run configuration: every operating constant of the tracker in one place.

All values are fixed defaults used for every sequence; a JSON config file
and/or CLI flags may override individual fields.  The effective config is
echoed into each run manifest so results can be replayed.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

COLOR_MODES = ("auto", "gray", "color")


@dataclass
class RunConfig:
    # working-frame geometry (frames are stretched anisotropically to this size)
    work_height: int = 240
    work_width: int = 320
    # patch geometry: canonical patch edge, color subsample grid, HOG cell grid
    canonical: int = 32
    n_col: int = 16
    n_hog: int = 4
    # Boolean-map encoding: c-1 threshold levels at step 1/c
    c: int = 4
    bmr_enabled: bool = True
    # training-sample geometry (pixels, working coordinates); the ring grid
    # is thinned to at most max_negatives samples so the two classes stay
    # comparable for the fixed-iteration updates
    alpha: float = 3.0
    inner_frac: float = 0.3
    beta: float = 100.0
    neg_step: int = 5
    max_negatives: int = 100
    # motion model standard deviations (x, y in pixels; s relative)
    sigma_x: float = 6.0
    sigma_y: float = 6.0
    sigma_s: float = 0.01
    n_particles: int = 400
    # conservative-update confidence threshold
    rho: float = 0.9
    train_iters: int = 20
    # multiply classifier scores by the motion-model density before the
    # argmax; off by default because sampling particles from that same
    # density already realizes the prior, and scoring it twice biases the
    # argmax toward standing still.  Scale windows are always the
    # first-frame box size times the absolute scale s.
    prior_in_score: bool = False
    color_mode: str = "auto"
    seed: int = 0
    workers: int = 1

    def validate(self) -> None:
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color_mode must be one of {COLOR_MODES}, got {self.color_mode!r}")
        positive = (
            "work_height", "work_width", "canonical", "n_col", "n_hog", "c",
            "alpha", "inner_frac", "beta", "neg_step", "max_negatives",
            "sigma_x", "sigma_y", "sigma_s", "n_particles", "rho", "train_iters",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def replaced(self, **overrides) -> "RunConfig":
        cfg = dataclasses.replace(self, **overrides)
        cfg.validate()
        return cfg
