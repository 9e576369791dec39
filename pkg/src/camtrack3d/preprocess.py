"""Confidence-guided detection pre-processing.

Three steps run before association: duplicate removal on scaled
footprints (small-object boxes are inflated for the suppression decision
only), a per-category score split into high and coarse-low sets, and a
recall pass that keeps only those low-score detections that a projected
tracklet can vouch for in at least one camera.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .assignment import solve_assignment
from .cameras import CameraRig, mcas
from .categories import Category
from .geometry import Box3D, giou_bev, iou_bev, scale_box

NMS_METRICS = {
    "iou_bev": iou_bev,
    "giou_bev": giou_bev,
}

# Maps an index into the recalled low-score list to the id of the tracklet
# that recalled it; consulted again during two-step verification.
PreMatchMap = dict[int, int]


def geometry_filter(
    detections: Sequence[Box3D],
    scale: Mapping[Category, float],
    metric: Mapping[Category, str],
    threshold: Mapping[Category, float],
) -> list[Box3D]:
    """Per-category NMS on scaled footprints; survivors emitted unscaled.

    Boxes are inflated by the category's scale factor before computing
    suppression overlaps, so small well-separated objects still suppress
    near-duplicates. Ties are broken by (score desc, center-x, center-y,
    input position) for determinism. Output preserves input order.
    """
    keep = [False] * len(detections)
    for cat in Category:
        idx = [i for i, d in enumerate(detections) if d.category is cat]
        if not idx:
            continue
        factor = scale[cat]
        sim = NMS_METRICS[metric[cat]]
        thr = threshold[cat]
        scaled = {i: scale_box(detections[i], factor) for i in idx}
        order = sorted(
            idx,
            key=lambda i: (-detections[i].score, detections[i].center[0], detections[i].center[1], i),
        )
        kept_scaled: list[Box3D] = []
        for i in order:
            cand = scaled[i]
            if any(sim(k, cand) > thr for k in kept_scaled):
                continue
            kept_scaled.append(cand)
            keep[i] = True
    return [d for i, d in enumerate(detections) if keep[i]]


def score_split(
    detections: Sequence[Box3D],
    split: Mapping[Category, float],
    floor: float = 0.01,
) -> tuple[list[Box3D], list[Box3D]]:
    """Partition into (high, low_coarse); scores below the floor are dropped."""
    high: list[Box3D] = []
    low: list[Box3D] = []
    for d in detections:
        if d.score < floor:
            continue
        if d.score >= split[d.category]:
            high.append(d)
        else:
            low.append(d)
    return high, low


def tracker_filter(
    low_coarse: Sequence[Box3D],
    tracks: Sequence[tuple[int, Box3D]],
    rig: CameraRig,
    gate: Mapping[Category, float],
    app: str = "iou_2d",
    fuse_mode: str = "sum",
) -> tuple[list[Box3D], PreMatchMap]:
    """Recall low-score detections vouched for by a predicted tracklet.

    tracks are (tracklet id, predicted box) pairs. Cost is the negated
    multi-camera appearance similarity; a one-to-one assignment is solved
    per category and pairs at or below the category gate are accepted.
    Detections that fail leave the pipeline entirely.
    """
    recalled: list[Box3D] = []
    prematch: PreMatchMap = {}
    if not low_coarse or not tracks:
        return recalled, prematch
    for cat in Category:
        det_idx = [i for i, d in enumerate(low_coarse) if d.category is cat]
        trk_idx = [j for j, (_, b) in enumerate(tracks) if b.category is cat]
        if not det_idx or not trk_idx:
            continue
        sims = mcas(
            [low_coarse[i] for i in det_idx],
            [tracks[j][1] for j in trk_idx],
            rig,
            app=app,
            mode=fuse_mode,
        )
        cost = [[None if s is None else -s for s in row] for row in sims]
        for r, c in solve_assignment(cost):
            if cost[r][c] is not None and cost[r][c] <= gate[cat]:
                prematch[len(recalled)] = tracks[trk_idx[c]][0]
                recalled.append(low_coarse[det_idx[r]])
    return recalled, prematch
