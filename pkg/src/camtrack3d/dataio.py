"""File formats: detections, ground truth, tracking results, calibration.

All files are JSON. Detection and tracking files follow the public
driving-benchmark submission shape: a "results" object keyed by sample
token, each holding a list of records with translation / size (w, l, h)
/ rotation quaternion [w, x, y, z] / velocity / name / score fields.
Frame order and timestamps come from a separate scene manifest, since
sample tokens are opaque. Writers emit sorted keys and fixed separators
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .cameras import Camera, CameraRig
from .categories import Category, category_from_name
from .geometry import Box3D
from .metrics import EvalObject
from .pipeline import Frame, FrameResult

QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class SceneManifest:
    """Orders the opaque sample tokens and assigns their timestamps."""

    tokens: tuple[str, ...]
    timestamps: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.timestamps):
            raise ValueError("manifest tokens and timestamps must pair up")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("manifest tokens must be unique")
        if any(b < a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("manifest timestamps must be nondecreasing")


def quaternion_to_yaw(q: Sequence[float]) -> float:
    """Heading about the vertical axis from a [w, x, y, z] unit quaternion."""
    if len(q) != 4:
        raise ValueError(f"quaternion must have 4 components, got {len(q)}")
    w, x, y, z = (float(v) for v in q)
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if abs(norm - 1.0) > QUAT_NORM_TOL:
        raise ValueError(f"quaternion norm {norm} is not within {QUAT_NORM_TOL} of 1")
    return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def yaw_to_quaternion(yaw: float) -> list[float]:
    return [math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)]


def _finite_list(value: Any, n: int, what: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ValueError(f"{what} must be a list of {n} numbers, got {value!r}")
    out = [float(v) for v in value]
    if not all(math.isfinite(v) for v in out):
        raise ValueError(f"{what} contains non-finite values: {value!r}")
    return out


def _box_from_record(rec: dict, name_key: str, score_key: str, where: str) -> Box3D:
    try:
        translation = _finite_list(rec["translation"], 3, "translation")
        size = _finite_list(rec["size"], 3, "size")
        yaw = quaternion_to_yaw(_finite_list(rec["rotation"], 4, "rotation"))
        velocity = rec.get("velocity")
        if velocity is not None:
            velocity = tuple(_finite_list(velocity, 2, "velocity"))
        category = category_from_name(rec[name_key])
        score = float(rec.get(score_key, 1.0))
        return Box3D(
            center=tuple(translation),
            size=tuple(size),
            yaw=yaw,
            category=category,
            score=score,
            velocity=velocity,
        )
    except (KeyError, TypeError, ValueError) as e:
        detail = f"missing field {e}" if isinstance(e, KeyError) else str(e)
        raise ValueError(f"{where}: {detail}") from None


def load_manifest(path: str | Path) -> SceneManifest:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    samples = doc.get("samples")
    if not isinstance(samples, list):
        raise ValueError(f"manifest {path} must contain a 'samples' list")
    tokens = []
    times = []
    for i, s in enumerate(samples):
        if not isinstance(s, dict) or "token" not in s or "timestamp" not in s:
            raise ValueError(f"manifest sample {i} needs 'token' and 'timestamp'")
        tokens.append(str(s["token"]))
        times.append(float(s["timestamp"]))
    return SceneManifest(tokens=tuple(tokens), timestamps=tuple(times))


def write_manifest(manifest: SceneManifest, path: str | Path) -> None:
    doc = {
        "samples": [
            {"token": tok, "timestamp": ts}
            for tok, ts in zip(manifest.tokens, manifest.timestamps)
        ]
    }
    _dump(doc, path)


def _load_results_object(path: str | Path) -> dict[str, list]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    results = doc.get("results") if isinstance(doc, dict) else None
    if not isinstance(results, dict):
        raise ValueError(f"{path} must contain a 'results' object keyed by sample token")
    for token, recs in results.items():
        if not isinstance(recs, list):
            raise ValueError(f"results for sample {token} must be a list")
    return results


def load_detections(path: str | Path, manifest: SceneManifest) -> list[Frame]:
    """Read a detection file into manifest-ordered frames.

    Only tokens present in the results appear as frames; a token with an
    empty record list yields an empty frame. Tokens unknown to the
    manifest are an error since their order is undefined.
    """
    results = _load_results_object(path)
    unknown = set(results) - set(manifest.tokens)
    if unknown:
        raise ValueError(f"samples not in manifest: {', '.join(sorted(unknown))}")
    frames = []
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        if token not in results:
            continue
        boxes = [
            _box_from_record(rec, "detection_name", "detection_score", f"sample {token} record {i}")
            for i, rec in enumerate(results[token])
        ]
        frames.append(Frame(timestamp=ts, detections=tuple(boxes)))
    return frames


def load_ground_truth(
    path: str | Path, manifest: SceneManifest
) -> list[tuple[float, list[tuple[str, Box3D]]]]:
    """Read ground truth as (timestamp, [(instance id, box), ...]) frames."""
    results = _load_results_object(path)
    unknown = set(results) - set(manifest.tokens)
    if unknown:
        raise ValueError(f"samples not in manifest: {', '.join(sorted(unknown))}")
    frames = []
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        if token not in results:
            continue
        objs = []
        for i, rec in enumerate(results[token]):
            where = f"sample {token} record {i}"
            if "instance" not in rec:
                raise ValueError(f"{where}: ground truth needs an 'instance' id")
            box = _box_from_record(rec, "detection_name", "detection_score", where)
            objs.append((str(rec["instance"]), box))
        frames.append((ts, objs))
    return frames


def load_tracking(
    path: str | Path, manifest: SceneManifest
) -> list[tuple[float, list[tuple[str, Box3D]]]]:
    """Read a tracking result file as (timestamp, [(track id, box), ...])."""
    results = _load_results_object(path)
    unknown = set(results) - set(manifest.tokens)
    if unknown:
        raise ValueError(f"samples not in manifest: {', '.join(sorted(unknown))}")
    frames = []
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        if token not in results:
            continue
        objs = []
        for i, rec in enumerate(results[token]):
            where = f"sample {token} record {i}"
            if "tracking_id" not in rec:
                raise ValueError(f"{where}: tracking result needs a 'tracking_id'")
            box = _box_from_record(rec, "tracking_name", "tracking_score", where)
            objs.append((str(rec["tracking_id"]), box))
        frames.append((ts, objs))
    return frames


def _box_fields(box: Box3D) -> dict[str, Any]:
    return {
        "translation": list(box.center),
        "size": list(box.size),
        "rotation": yaw_to_quaternion(box.yaw),
        "velocity": list(box.velocity) if box.velocity is not None else None,
    }


def write_detections(
    frames: Sequence[Frame], manifest: SceneManifest, path: str | Path
) -> None:
    by_time = {f.timestamp: f for f in frames}
    results: dict[str, list] = {}
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        frame = by_time.get(ts)
        if frame is None:
            continue
        results[token] = [
            {
                "sample_token": token,
                **_box_fields(box),
                "detection_name": box.category.value,
                "detection_score": box.score,
            }
            for box in frame.detections
        ]
    _dump({"results": results}, path)


def write_ground_truth(
    frames: Sequence[tuple[float, list[tuple[str, Box3D]]]],
    manifest: SceneManifest,
    path: str | Path,
) -> None:
    by_time = {t: objs for t, objs in frames}
    results: dict[str, list] = {}
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        objs = by_time.get(ts)
        if objs is None:
            continue
        results[token] = [
            {
                "sample_token": token,
                "instance": instance,
                **_box_fields(box),
                "detection_name": box.category.value,
                "detection_score": box.score,
            }
            for instance, box in objs
        ]
    _dump({"results": results}, path)


def write_tracking(
    results: Sequence[FrameResult], manifest: SceneManifest, path: str | Path
) -> None:
    by_time = {r.timestamp: r for r in results}
    out: dict[str, list] = {}
    for token, ts in zip(manifest.tokens, manifest.timestamps):
        fr = by_time.get(ts)
        if fr is None:
            continue
        out[token] = [
            {
                "sample_token": token,
                "tracking_id": str(rec.track_id),
                **_box_fields(rec.box),
                "tracking_name": rec.category.value,
                "tracking_score": rec.score,
            }
            for rec in fr.records
        ]
    _dump({"meta": {"use_camera": True}, "results": out}, path)


def load_calibration(path: str | Path) -> CameraRig:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cams_doc = doc.get("cameras")
    if not isinstance(cams_doc, list) or not cams_doc:
        raise ValueError(f"calibration {path} must contain a nonempty 'cameras' list")
    cameras = []
    for i, c in enumerate(cams_doc):
        try:
            intrinsic = np.array(_finite_list(c["intrinsic"], 9, "intrinsic")).reshape(3, 3)
            extrinsic = np.array(_finite_list(c["extrinsic"], 12, "extrinsic")).reshape(3, 4)
            cameras.append(
                Camera(
                    extrinsic=extrinsic,
                    intrinsic=intrinsic,
                    width=int(c["width"]),
                    height=int(c["height"]),
                    name=str(c.get("name", f"camera_{i}")),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            detail = f"missing field {e}" if isinstance(e, KeyError) else str(e)
            raise ValueError(f"camera {i}: {detail}") from None
    return CameraRig(tuple(cameras))


def write_calibration(rig: CameraRig, path: str | Path) -> None:
    doc = {
        "cameras": [
            {
                "name": cam.name,
                "intrinsic": [float(v) for v in cam.intrinsic.ravel()],
                "extrinsic": [float(v) for v in cam.extrinsic.ravel()],
                "width": cam.width,
                "height": cam.height,
            }
            for cam in rig
        ]
    }
    _dump(doc, path)


def tracking_to_eval(
    frames: Sequence[tuple[float, list[tuple[str, Box3D]]]],
) -> list[tuple[float, list[EvalObject]]]:
    """Adapt (timestamp, [(ident, box)]) frames to evaluation inputs."""
    return [
        (
            ts,
            [
                EvalObject(
                    ident=ident,
                    category=box.category,
                    x=box.center[0],
                    y=box.center[1],
                    score=box.score,
                )
                for ident, box in objs
            ],
        )
        for ts, objs in frames
    ]


def results_to_eval(results: Sequence[FrameResult]) -> list[tuple[float, list[EvalObject]]]:
    """Adapt in-memory tracking output to evaluation inputs."""
    return [
        (
            fr.timestamp,
            [
                EvalObject(
                    ident=str(rec.track_id),
                    category=rec.category,
                    x=rec.box.center[0],
                    y=rec.box.center[1],
                    score=rec.score,
                )
                for rec in fr.records
            ],
        )
        for fr in results
    ]


def _dump(doc: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
