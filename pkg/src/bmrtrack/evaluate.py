"""Benchmark metrics and evaluation protocols.

Metrics: box overlap (intersection over union), center distance in pixels,
the success curve (fraction of frames with overlap strictly above each of
21 uniform thresholds in [0, 1], summarized by its mean as the AUC) and the
precision curve (fraction of frames with center error <= threshold for
integer thresholds 0..50, headline value at 20 px).

Protocols: a one-pass run from the first ground-truth box (OPE), restarts
from evenly spaced frames (TRE), and perturbed first-frame initializations
(SRE: four edge shifts and four corner shifts of 10% of the box size, and
scale factors 0.8/0.9/1.1/1.2).  Multi-run protocols pool per-frame metrics
across runs by default; run-averaged aggregation is available via a flag.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import benchio
from .config import RunConfig
from .tracker import FrameRecord, track_sequence

Box = tuple[float, float, float, float]

SUCCESS_THRESHOLDS = np.linspace(0.0, 1.0, 21)
PRECISION_THRESHOLDS = np.arange(0, 51, dtype=np.float64)
PRECISION_HEADLINE_PX = 20.0


# -- metrics -------------------------------------------------------------


def overlap(bt: Box, bg: Box) -> float:
    """Intersection over union of two corner-format boxes; empty union gives 0."""
    ix = min(bt[0] + bt[2], bg[0] + bg[2]) - max(bt[0], bg[0])
    iy = min(bt[1] + bt[3], bg[1] + bg[3]) - max(bt[1], bg[1])
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = bt[2] * bt[3] + bg[2] * bg[3] - inter
    return inter / union if union > 0 else 0.0


def center_error(bt: Box, bg: Box) -> float:
    """Euclidean distance between box centers in pixels."""
    dx = (bt[0] + bt[2] / 2.0) - (bg[0] + bg[2] / 2.0)
    dy = (bt[1] + bt[3] / 2.0) - (bg[1] + bg[3] / 2.0)
    return float(np.hypot(dx, dy))


@dataclass
class Curve:
    thresholds: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.thresholds.shape != self.values.shape:
            raise ValueError("thresholds and values must have equal length")
        if np.any(np.diff(self.thresholds) <= 0):
            raise ValueError("thresholds must be strictly increasing")

    def value_at(self, threshold: float) -> float:
        idx = int(np.argmin(np.abs(self.thresholds - threshold)))
        return float(self.values[idx])


def success_curve(overlaps) -> Curve:
    """Fraction of frames with overlap strictly greater than each threshold."""
    overlaps = np.asarray(overlaps, dtype=np.float64)
    if overlaps.size == 0:
        raise ValueError("need at least one overlap score")
    values = (overlaps[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1)
    return Curve(SUCCESS_THRESHOLDS.copy(), values)


def precision_curve(errors) -> Curve:
    """Fraction of frames with center error within each pixel threshold."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("need at least one center error")
    values = (errors[None, :] <= PRECISION_THRESHOLDS[:, None]).mean(axis=1)
    return Curve(PRECISION_THRESHOLDS.copy(), values)


def auc(curve: Curve) -> float:
    """Mean success fraction over the uniform threshold grid."""
    return float(curve.values.mean())


# -- reports ---------------------------------------------------------------


@dataclass
class EvalReport:
    protocol: str
    sequence: str
    seed: int
    n_frames: int
    n_runs: int
    auc: float
    precision_at_20: float
    success: Curve
    precision: Curve
    overlaps: np.ndarray
    errors: np.ndarray
    records: list[FrameRecord] = field(default_factory=list)
    attributes: list[str] = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc out of range: {self.auc}")


def _report_from_metrics(protocol, seq, seed, overlaps, errors, records, n_runs, flags):
    overlaps = np.asarray(overlaps, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    succ = success_curve(overlaps)
    prec = precision_curve(errors)
    return EvalReport(
        protocol=protocol,
        sequence=seq.name,
        seed=seed,
        n_frames=int(overlaps.size),
        n_runs=n_runs,
        auc=auc(succ),
        precision_at_20=prec.value_at(PRECISION_HEADLINE_PX),
        success=succ,
        precision=prec,
        overlaps=overlaps,
        errors=errors,
        records=records,
        attributes=list(seq.attributes),
        flags=flags,
    )


# -- runners ---------------------------------------------------------------
# A runner maps (sequence, start frame index, init box, seed) to one box per
# frame from the start index onward, plus per-frame records.


def make_tracker_runner(config: RunConfig | None = None):
    """Runner backed by the Boolean-map tracker."""
    config = config or RunConfig()

    def run(seq: benchio.Sequence, start: int, init_box: Box, seed: int):
        frames = (benchio.decode_image(p) for p in seq.frames[start:])
        return track_sequence(frames, init_box, config, seed=seed)

    return run


def oracle_runner(seq: benchio.Sequence, start: int, init_box: Box, seed: int):
    """Reference runner that echoes the ground truth; upper bound for any tracker."""
    boxes = [tuple(float(v) for v in row) for row in seq.groundtruth[start:]]
    records = [FrameRecord(i, b, 1.0, False) for i, b in enumerate(boxes)]
    return boxes, records


def static_runner(seq: benchio.Sequence, start: int, init_box: Box, seed: int):
    """Baseline runner that repeats the init box for every frame."""
    box = tuple(float(v) for v in init_box)
    boxes = [box] * (seq.n_frames - start)
    records = [FrameRecord(i, box, 1.0, False) for i in range(len(boxes))]
    return boxes, records


# -- protocols ---------------------------------------------------------------


def _run_metrics(seq, start, init_box, seed, runner):
    boxes, records = runner(seq, start, init_box, seed)
    gt = seq.groundtruth[start:]
    if len(boxes) != gt.shape[0]:
        raise ValueError(f"runner returned {len(boxes)} boxes for {gt.shape[0]} frames")
    ovl = [overlap(b, tuple(g)) for b, g in zip(boxes, gt)]
    err = [center_error(b, tuple(g)) for b, g in zip(boxes, gt)]
    return ovl, err, records


def run_ope(seq: benchio.Sequence, config=None, seed: int = 0, runner=None) -> EvalReport:
    """One-pass evaluation from the first frame's ground truth."""
    runner = runner or make_tracker_runner(config)
    init_box = tuple(seq.groundtruth[0])
    ovl, err, records = _run_metrics(seq, 0, init_box, seed, runner)
    return _report_from_metrics("OPE", seq, seed, ovl, err, records, 1, {})


def tre_start_indices(n_frames: int, segments: int) -> list[int]:
    """Evenly spaced restart frames: floor(k * n / segments) for k = 0..segments-1."""
    raw = [k * n_frames // segments for k in range(segments)]
    return sorted(set(i for i in raw if i < n_frames))


def run_tre(
    seq: benchio.Sequence,
    config=None,
    segments: int = 20,
    seed: int = 0,
    runner=None,
    pooling: str = "frames",
) -> EvalReport:
    """Temporal robustness: restart from evenly spaced frames, run to the end."""
    runner = runner or make_tracker_runner(config)
    starts = tre_start_indices(seq.n_frames, segments)
    flags = {}
    if len(starts) < segments:
        flags["short_sequence"] = True

    all_ovl, all_err, per_run = [], [], []
    records: list[FrameRecord] = []
    for k, start in enumerate(starts):
        init_box = tuple(seq.groundtruth[start])
        ovl, err, recs = _run_metrics(seq, start, init_box, seed + k, runner)
        all_ovl.extend(ovl)
        all_err.extend(err)
        per_run.append((ovl, err))
        records.extend(recs)

    report = _report_from_metrics("TRE", seq, seed, all_ovl, all_err, records, len(starts), flags)
    if pooling == "runs":
        succ = np.mean([success_curve(o).values for o, _ in per_run], axis=0)
        prec = np.mean([precision_curve(e).values for _, e in per_run], axis=0)
        report.success = Curve(SUCCESS_THRESHOLDS.copy(), succ)
        report.precision = Curve(PRECISION_THRESHOLDS.copy(), prec)
        report.auc = auc(report.success)
        report.precision_at_20 = report.precision.value_at(PRECISION_HEADLINE_PX)
    elif pooling != "frames":
        raise ValueError(f"pooling must be 'frames' or 'runs', got {pooling!r}")
    return report


def sre_perturbations(box: Box) -> list[tuple[str, Box]]:
    """The 12 perturbed initializations: 8 shifts of 10% box size, 4 rescales."""
    x, y, w, h = box
    sx, sy = 0.1 * w, 0.1 * h
    shifts = {
        "left": (-sx, 0.0), "right": (sx, 0.0), "up": (0.0, -sy), "down": (0.0, sy),
        "up_left": (-sx, -sy), "up_right": (sx, -sy),
        "down_left": (-sx, sy), "down_right": (sx, sy),
    }
    out = [(name, (x + dx, y + dy, w, h)) for name, (dx, dy) in shifts.items()]
    for f in (0.8, 0.9, 1.1, 1.2):
        cx, cy = x + w / 2.0, y + h / 2.0
        out.append((f"scale_{f}", (cx - f * w / 2.0, cy - f * h / 2.0, f * w, f * h)))
    return out


def _clip_box(box: Box, width: int, height: int) -> tuple[Box, bool]:
    x, y, w, h = box
    x2, y2 = x + w, y + h
    cx0, cy0 = max(x, 0.0), max(y, 0.0)
    cx2, cy2 = min(x2, float(width)), min(y2, float(height))
    clipped = (cx0, cy0, max(cx2 - cx0, 1.0), max(cy2 - cy0, 1.0))
    return clipped, clipped != box


def run_sre(seq: benchio.Sequence, config=None, seed: int = 0, runner=None,
            perturbations=None) -> EvalReport:
    """Spatial robustness: perturbed first-frame boxes, each run one-pass and pooled."""
    runner = runner or make_tracker_runner(config)
    base = tuple(seq.groundtruth[0])
    if perturbations is None:
        perturbations = sre_perturbations(base)

    flags = {}
    all_ovl, all_err = [], []
    records: list[FrameRecord] = []
    for k, (name, box) in enumerate(perturbations):
        box, was_clipped = _clip_box(box, seq.width, seq.height)
        if was_clipped:
            flags.setdefault("clipped_runs", []).append(name)
        ovl, err, recs = _run_metrics(seq, 0, box, seed + k, runner)
        all_ovl.extend(ovl)
        all_err.extend(err)
        records.extend(recs)
    return _report_from_metrics("SRE", seq, seed, all_ovl, all_err, records,
                                len(perturbations), flags)


# -- emission ----------------------------------------------------------------


def write_boxes_csv(records: list[FrameRecord], path: str | Path) -> None:
    """boxes.csv: frame,x,y,w,h,confidence,updated (shortest-roundtrip floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "x", "y", "w", "h", "confidence", "updated"])
        for rec in records:
            x, y, w, h = rec.box
            writer.writerow([rec.frame, repr(x), repr(y), repr(w), repr(h),
                             repr(rec.confidence), int(rec.updated)])


def _curve_rows(curve: Curve):
    return [(float(t), float(v)) for t, v in zip(curve.thresholds, curve.values)]


def write_report(report: EvalReport, out_dir: str | Path) -> Path:
    """Emit report.json plus success/precision curve CSVs into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "protocol": report.protocol,
        "sequence": report.sequence,
        "seed": report.seed,
        "n_frames": report.n_frames,
        "n_runs": report.n_runs,
        "auc": report.auc,
        "precision_at_20": report.precision_at_20,
        "attributes": report.attributes,
        "flags": report.flags,
        "records": [dataclasses.asdict(r) for r in report.records],
    }
    (out_dir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    for fname, curve in (("success_curve.csv", report.success),
                         ("precision_curve.csv", report.precision)):
        with open(out_dir / fname, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "value"])
            writer.writerows(_curve_rows(curve))
    return out_dir / "report.json"


def aggregate_reports(reports: list[EvalReport]) -> dict:
    """Cross-sequence summary: mean AUC/precision plus per-attribute rows."""
    if not reports:
        raise ValueError("nothing to aggregate")
    summary = {
        "n_sequences": len(reports),
        "protocol": reports[0].protocol,
        "auc": float(np.mean([r.auc for r in reports])),
        "precision_at_20": float(np.mean([r.precision_at_20 for r in reports])),
        "per_sequence": {r.sequence: {"auc": r.auc, "precision_at_20": r.precision_at_20}
                         for r in reports},
    }
    by_attr = {}
    for code in benchio.ATTRIBUTES:
        tagged = [r for r in reports if code in r.attributes]
        if tagged:
            by_attr[code] = {
                "n_sequences": len(tagged),
                "auc": float(np.mean([r.auc for r in tagged])),
                "precision_at_20": float(np.mean([r.precision_at_20 for r in tagged])),
            }
    summary["by_attribute"] = by_attr
    return summary
