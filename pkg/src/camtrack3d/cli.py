"""Command-line front end.

Subcommands: ``track`` runs the engine over a detection file, ``synth``
generates a synthetic scenario, ``eval`` scores a tracking result
against ground truth, and ``ablate`` re-runs tracking under a grid of
stage-flag combinations and tabulates the metrics.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import dataio
from .config import ConfigError, TrackerConfig, load_config, load_config_file
from .metrics import MetricReport, evaluate
from .pipeline import run_sequence
from .synth import ScenarioSpec, generate_scenario

_FLAG_LETTERS = {
    "G": "geometry_filter",
    "P": "tracker_filter",
    "H": "adaptive_noise",
    "S": "second_association",
}


def _apply_flag_letters(cfg: TrackerConfig, letters: str) -> TrackerConfig:
    """Enable exactly the named stages; unnamed ones turn off."""
    wanted = {s.strip().upper() for s in letters.split(",") if s.strip()}
    unknown = wanted - set(_FLAG_LETTERS)
    if unknown:
        raise ConfigError(
            f"unknown stage letters: {', '.join(sorted(unknown))} (choose from G, P, H, S)"
        )
    updates = {name: letter in wanted for letter, name in _FLAG_LETTERS.items()}
    return dataclasses.replace(cfg, flags=dataclasses.replace(cfg.flags, **updates))


def _load_cfg(path: str | None) -> TrackerConfig:
    return load_config_file(path) if path else load_config()


def _report_dict(report: MetricReport) -> dict:
    def row(m) -> dict:
        return {
            "amota": m.amota, "amotp": m.amotp, "mota": m.mota,
            "ids": m.ids, "fp": m.fp, "fn": m.fn, "gt": m.gt,
        }

    return {
        "aggregate": row(report),
        "per_category": {
            cat.value: {**row(m), "recall": m.recall}
            for cat, m in sorted(report.per_category.items(), key=lambda kv: kv[0].value)
        },
        "notes": list(report.notes),
    }


def _report_table(report: MetricReport) -> str:
    header = f"{'category':<12}{'AMOTA':>8}{'AMOTP':>8}{'MOTA':>8}{'IDS':>6}{'FP':>6}{'FN':>6}{'GT':>7}"
    lines = [header, "-" * len(header)]
    for cat, m in sorted(report.per_category.items(), key=lambda kv: kv[0].value):
        lines.append(
            f"{cat.value:<12}{m.amota:>8.3f}{m.amotp:>8.3f}{m.mota:>8.3f}"
            f"{m.ids:>6d}{m.fp:>6d}{m.fn:>6d}{m.gt:>7d}"
        )
    lines.append(
        f"{'aggregate':<12}{report.amota:>8.3f}{report.amotp:>8.3f}{report.mota:>8.3f}"
        f"{report.ids:>6d}{report.fp:>6d}{report.fn:>6d}{report.gt:>7d}"
    )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _cmd_track(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    if args.flags is not None:
        cfg = _apply_flag_letters(cfg, args.flags)
    manifest = dataio.load_manifest(args.manifest)
    frames = dataio.load_detections(args.detections, manifest)
    rig = dataio.load_calibration(args.calibration)
    if args.drop_cameras:
        rig = rig.drop_cameras(args.drop_cameras)
    results = run_sequence(frames, rig, cfg)
    dataio.write_tracking(results, manifest, args.out)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = ScenarioSpec.from_dict(json.load(fh))
    det_frames, gt_frames, rig = generate_scenario(spec, args.seed)
    manifest = dataio.SceneManifest(
        tokens=tuple(f"sample_{i:06d}" for i in range(len(det_frames))),
        timestamps=tuple(f.timestamp for f in det_frames),
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_manifest(manifest, out / "manifest.json")
    dataio.write_detections(det_frames, manifest, out / "detections.json")
    dataio.write_ground_truth(gt_frames, manifest, out / "ground_truth.json")
    dataio.write_calibration(rig, out / "calibration.json")
    print(f"wrote scenario ({len(det_frames)} frames) to {out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    manifest = dataio.load_manifest(args.manifest)
    preds = dataio.tracking_to_eval(dataio.load_tracking(args.results, manifest))
    gts = dataio.tracking_to_eval(dataio.load_ground_truth(args.ground_truth, manifest))
    report = evaluate(preds, gts)
    if args.format == "json":
        _emit(json.dumps(_report_dict(report), indent=2, sort_keys=True), args.out)
    else:
        _emit(_report_table(report), args.out)
    return 0


_ABLATION_GRID = [
    ("baseline", ""),
    ("G", "G"),
    ("G+P", "G,P"),
    ("G+H", "G,H"),
    ("G+P+H", "G,P,H"),
    ("G+P+H+S", "G,P,H,S"),
]


def _cmd_ablate(args: argparse.Namespace) -> int:
    base_cfg = _load_cfg(args.config)
    manifest = dataio.load_manifest(args.manifest)
    frames = dataio.load_detections(args.detections, manifest)
    rig = dataio.load_calibration(args.calibration)
    if args.drop_cameras:
        rig = rig.drop_cameras(args.drop_cameras)
    gts = dataio.tracking_to_eval(dataio.load_ground_truth(args.ground_truth, manifest))

    rows = []
    for label, letters in _ABLATION_GRID:
        cfg = _apply_flag_letters(base_cfg, letters)
        results = run_sequence(frames, rig, cfg)
        report = evaluate(dataio.results_to_eval(results), gts)
        rows.append((label, report))

    if args.format == "json":
        doc = {label: _report_dict(r)["aggregate"] for label, r in rows}
        _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
    else:
        header = f"{'flags':<10}{'AMOTA':>8}{'AMOTP':>8}{'MOTA':>8}{'IDS':>6}{'FP':>6}{'FN':>6}"
        lines = [header, "-" * len(header)]
        for label, r in rows:
            lines.append(
                f"{label:<10}{r.amota:>8.3f}{r.amotp:>8.3f}{r.mota:>8.3f}"
                f"{r.ids:>6d}{r.fp:>6d}{r.fn:>6d}"
            )
        _emit("\n".join(lines), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camtrack3d",
        description="Multi-camera 3D multi-object tracking engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run tracking over a detection file")
    p_track.add_argument("--detections", required=True)
    p_track.add_argument("--calibration", required=True)
    p_track.add_argument("--manifest", required=True)
    p_track.add_argument("--config", default=None)
    p_track.add_argument("--out", required=True)
    p_track.add_argument("--drop-cameras", type=int, default=0, metavar="N",
                         help="remove the last N rig cameras before tracking")
    p_track.add_argument("--flags", default=None, metavar="G,P,H,S",
                         help="enable only these stages (empty string = all off)")
    p_track.set_defaults(func=_cmd_track)

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario")
    p_synth.add_argument("--spec", required=True)
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--out-dir", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_eval = sub.add_parser("eval", help="score tracking results against ground truth")
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--ground-truth", required=True)
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--format", choices=("json", "table"), default="table")
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=_cmd_eval)

    p_abl = sub.add_parser("ablate", help="compare stage-flag combinations on one input")
    p_abl.add_argument("--detections", required=True)
    p_abl.add_argument("--calibration", required=True)
    p_abl.add_argument("--manifest", required=True)
    p_abl.add_argument("--ground-truth", required=True)
    p_abl.add_argument("--config", default=None)
    p_abl.add_argument("--drop-cameras", type=int, default=0, metavar="N")
    p_abl.add_argument("--format", choices=("json", "table"), default="table")
    p_abl.add_argument("--out", default=None)
    p_abl.set_defaults(func=_cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
