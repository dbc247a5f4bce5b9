"""Command-line front-end.

    bmrtrack track --seq <dir> [--init x,y,w,h] [--seed n] [--out dir]
    bmrtrack eval --root <dataset> --mode ope|tre|sre [--seqs a,b] [--out dir]
    bmrtrack selftest [--seed n]

Exit codes: 0 success, 1 tracking/test failure or missing data, 2 usage
error.  The dataset root may also come from the BMRTRACK_DATA_ROOT
environment variable.  Every run writes a manifest with the effective
config, the seed and library versions so it can be replayed.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, benchio, evaluate, selftest
from .config import RunConfig
from .tracker import track_sequence

ENV_DATA_ROOT = "BMRTRACK_DATA_ROOT"


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    return cfg.replaced(**overrides) if overrides else cfg


def _write_manifest(out_dir: Path, cfg: RunConfig, extra: dict) -> None:
    manifest = {
        "config": json.loads(cfg.to_json()),
        "versions": {
            "bmrtrack": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    manifest.update(extra)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def cmd_track(args) -> int:
    cfg = _load_config(args)
    seq = benchio.load_sequence(args.seq)
    if args.init:
        init_box = tuple(float(v) for v in args.init.split(","))
        if len(init_box) != 4:
            print("--init expects x,y,w,h", file=sys.stderr)
            return 2
    else:
        init_box = tuple(seq.groundtruth[0])

    frames = (benchio.decode_image(p) for p in seq.frames)
    _, records = track_sequence(frames, init_box, cfg, seed=cfg.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluate.write_boxes_csv(records, out_dir / "boxes.csv")
    _write_manifest(out_dir, cfg, {"command": "track", "sequence": seq.name,
                                   "seed": cfg.seed, "n_frames": seq.n_frames})
    print(f"tracked {seq.name}: {seq.n_frames} frames -> {out_dir / 'boxes.csv'}")
    return 0


_PROTOCOLS = {"ope": evaluate.run_ope, "tre": evaluate.run_tre, "sre": evaluate.run_sre}


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    root = Path(args.root or os.environ.get(ENV_DATA_ROOT, ""))
    if not root or not root.is_dir():
        print(f"dataset root not found: {root or '(unset)'}", file=sys.stderr)
        return 1

    available = sorted(p.name for p in root.iterdir() if (p / "img").is_dir())
    if args.seqs:
        wanted = [s.strip() for s in args.seqs.split(",") if s.strip()]
        missing = [s for s in wanted if s not in available]
        if missing:
            print(f"unknown sequences {missing}; available: {available}", file=sys.stderr)
            return 1
    else:
        wanted = available
    if not wanted:
        print(f"no sequences under {root}", file=sys.stderr)
        return 1

    run_protocol = _PROTOCOLS[args.mode]
    out_dir = Path(args.out)
    reports = []
    for name in wanted:
        seq = benchio.load_sequence(root / name)
        report = run_protocol(seq, cfg, seed=cfg.seed)
        seq_dir = out_dir / name / args.mode
        evaluate.write_report(report, seq_dir)
        if report.records:
            evaluate.write_boxes_csv(report.records, seq_dir / "boxes.csv")
        reports.append(report)
        print(f"{name}: auc={report.auc:.4f} precision@20={report.precision_at_20:.4f}")

    summary = evaluate.aggregate_reports(reports)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    _write_manifest(out_dir, cfg, {"command": "eval", "mode": args.mode,
                                   "sequences": wanted, "seed": cfg.seed})
    print(f"aggregate auc={summary['auc']:.4f} over {summary['n_sequences']} sequence(s)")
    return 0


def cmd_selftest(args) -> int:
    results = selftest.run_all(seed=args.seed if args.seed is not None else 0)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  cases={r.cases}  {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmrtrack", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    track = sub.add_parser("track", help="run the tracker on one sequence directory")
    track.add_argument("--seq", required=True, help="sequence directory (img/ + groundtruth)")
    track.add_argument("--init", help="x,y,w,h init box; default: first ground-truth row")
    track.add_argument("--config", help="JSON config file")
    track.add_argument("--seed", type=int)
    track.add_argument("--workers", type=int)
    track.add_argument("--out", default="bmrtrack_out")
    track.set_defaults(func=cmd_track)

    ev = sub.add_parser("eval", help="run a benchmark protocol over a dataset")
    ev.add_argument("--root", help=f"dataset root (or ${ENV_DATA_ROOT})")
    ev.add_argument("--mode", required=True, choices=sorted(_PROTOCOLS))
    ev.add_argument("--seqs", help="comma-separated sequence names; default: all")
    ev.add_argument("--config", help="JSON config file")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--workers", type=int)
    ev.add_argument("--out", default="bmrtrack_eval")
    ev.set_defaults(func=cmd_eval)

    st = sub.add_parser("selftest", help="run the built-in property checks")
    st.add_argument("--seed", type=int)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, benchio.DecodeError, benchio.MalformedSequenceError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
