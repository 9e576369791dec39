"""Two-stage detection-to-tracklet association.

Stage 0 matches high-score detections against predicted tracklets on
ground-plane overlap. Stage 1 pools the stage-0 leftovers with recalled
low-score detections and matches the remaining tracklets on multi-camera
image-space similarity. A low-score pair survives only if pre-processing
already vouched for the same tracklet (two-step verification); failures
are dropped outright and never seed new tracklets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .assignment import solve_assignment
from .cameras import CameraRig, mcas
from .categories import Category
from .geometry import Box3D, giou_3d, giou_bev
from .preprocess import PreMatchMap

MOTION_METRICS = {
    "giou_bev": giou_bev,
    "giou_3d": giou_3d,
}

GATE_MODES = ("post", "pre")


@dataclass(frozen=True)
class Match:
    """One accepted detection-to-tracklet pair.

    kind says which detection list the index points into ("high" or
    "low"); stage is 0 for a motion match and 1 for an appearance match.
    """

    kind: str
    index: int
    tracklet_id: int
    stage: int


@dataclass(frozen=True)
class AssociationResult:
    matches: tuple[Match, ...]
    unmatched_high: tuple[int, ...]
    unmatched_low: tuple[int, ...]
    unmatched_tracklets: tuple[int, ...]


def _solve_gated(
    cost: list[list[float | None]],
    gate: float,
    gate_mode: str,
) -> list[tuple[int, int]]:
    """Assign, keeping only pairs whose cost clears the gate.

    "post" solves first and drops over-gate pairs; "pre" removes them
    from the feasible domain before solving.
    """
    if gate_mode not in GATE_MODES:
        raise ValueError(f"unknown gate mode {gate_mode!r}")
    if gate_mode == "pre":
        cost = [[v if v is not None and v <= gate else None for v in row] for row in cost]
        return solve_assignment(cost)
    pairs = solve_assignment(cost)
    return [(r, c) for r, c in pairs if cost[r][c] is not None and cost[r][c] <= gate]


def first_association(
    detections: Sequence[Box3D],
    tracks: Sequence[tuple[int, Box3D]],
    metric: Mapping[Category, str],
    gate: Mapping[Category, float],
    gate_mode: str = "post",
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Motion-based matching of high-score detections.

    Cost is 1 - overlap so the configured gates apply as upper bounds.
    Returns (pairs of (detection index, tracklet id), unmatched detection
    indices, unmatched tracklet ids). Cross-category pairs are infeasible.
    """
    matched_det: set[int] = set()
    matched_trk: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for cat in Category:
        det_idx = [i for i, d in enumerate(detections) if d.category is cat]
        trk_idx = [j for j, (_, b) in enumerate(tracks) if b.category is cat]
        if not det_idx or not trk_idx:
            continue
        overlap = MOTION_METRICS[metric[cat]]
        cost = [
            [1.0 - overlap(detections[i], tracks[j][1]) for j in trk_idx]
            for i in det_idx
        ]
        for r, c in _solve_gated(cost, gate[cat], gate_mode):
            i, j = det_idx[r], trk_idx[c]
            pairs.append((i, tracks[j][0]))
            matched_det.add(i)
            matched_trk.add(j)
    unmatched_det = [i for i in range(len(detections)) if i not in matched_det]
    unmatched_trk = [tracks[j][0] for j in range(len(tracks)) if j not in matched_trk]
    return pairs, unmatched_det, unmatched_trk


def second_association(
    candidates: Sequence[Box3D],
    tracks: Sequence[tuple[int, Box3D]],
    rig: CameraRig,
    gate: Mapping[Category, float],
    app: str = "giou_2d",
    fuse_mode: str = "sum",
    gate_mode: str = "post",
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Appearance-based matching in image space.

    Cost is the negated multi-camera similarity; pairs with no shared
    camera are infeasible. Same return convention as first_association.
    """
    matched_cand: set[int] = set()
    matched_trk: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for cat in Category:
        cand_idx = [i for i, d in enumerate(candidates) if d.category is cat]
        trk_idx = [j for j, (_, b) in enumerate(tracks) if b.category is cat]
        if not cand_idx or not trk_idx:
            continue
        sims = mcas(
            [candidates[i] for i in cand_idx],
            [tracks[j][1] for j in trk_idx],
            rig,
            app=app,
            mode=fuse_mode,
        )
        cost = [[None if s is None else -s for s in row] for row in sims]
        for r, c in _solve_gated(cost, gate[cat], gate_mode):
            i, j = cand_idx[r], trk_idx[c]
            pairs.append((i, tracks[j][0]))
            matched_cand.add(i)
            matched_trk.add(j)
    unmatched_cand = [i for i in range(len(candidates)) if i not in matched_cand]
    unmatched_trk = [tracks[j][0] for j in range(len(tracks)) if j not in matched_trk]
    return pairs, unmatched_cand, unmatched_trk


def verify_two_step(
    low_pairs: Sequence[tuple[int, int]],
    prematch: PreMatchMap,
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Split stage-1 low-score pairs into (retained, discarded).

    A pair (low index, tracklet id) is retained only when pre-processing
    recalled that detection for the same tracklet. Detections missing
    from the map fail defensively.
    """
    retained: list[tuple[int, int]] = []
    discarded: list[tuple[int, int]] = []
    for idx, trk_id in low_pairs:
        if prematch.get(idx) == trk_id:
            retained.append((idx, trk_id))
        else:
            discarded.append((idx, trk_id))
    return retained, discarded


def associate(
    d_high: Sequence[Box3D],
    d_low: Sequence[Box3D],
    prematch: PreMatchMap,
    tracks: Sequence[tuple[int, Box3D]],
    rig: CameraRig,
    *,
    motion_metric: Mapping[Category, str],
    motion_gate: Mapping[Category, float],
    appearance_gate: Mapping[Category, float],
    app: str = "giou_2d",
    fuse_mode: str = "sum",
    second_stage: bool = True,
    verification: bool = True,
    gate_mode: str = "post",
) -> AssociationResult:
    """Run both association stages and verification; see module docstring.

    Tracklets in pairs discarded by verification received no measurement
    and are reported unmatched. The discarded detections vanish for the
    frame: they join neither unmatched set.
    """
    stage0, u_high, u_trk_ids = first_association(
        d_high, tracks, motion_metric, motion_gate, gate_mode
    )
    matches = [Match("high", i, trk_id, 0) for i, trk_id in stage0]

    if not second_stage:
        return AssociationResult(
            matches=tuple(matches),
            unmatched_high=tuple(u_high),
            unmatched_low=tuple(range(len(d_low))),
            unmatched_tracklets=tuple(u_trk_ids),
        )

    candidates = [d_high[i] for i in u_high] + list(d_low)
    remaining = [(tid, box) for tid, box in tracks if tid in set(u_trk_ids)]
    stage1, u_cand, u_trk_ids2 = second_association(
        candidates, remaining, rig, appearance_gate, app, fuse_mode, gate_mode
    )

    n_high = len(u_high)
    high_pairs = [(c, t) for c, t in stage1 if c < n_high]
    low_pairs = [(c - n_high, t) for c, t in stage1 if c >= n_high]
    if verification:
        retained, discarded = verify_two_step(low_pairs, prematch)
    else:
        retained, discarded = list(low_pairs), []

    matches.extend(Match("high", u_high[c], t, 1) for c, t in high_pairs)
    matches.extend(Match("low", i, t, 1) for i, t in retained)

    unmatched_high = [u_high[c] for c in u_cand if c < n_high]
    unmatched_low = [c - n_high for c in u_cand if c >= n_high]
    unmatched_trk = list(u_trk_ids2) + [t for _, t in discarded]
    return AssociationResult(
        matches=tuple(matches),
        unmatched_high=tuple(unmatched_high),
        unmatched_low=tuple(sorted(unmatched_low)),
        unmatched_tracklets=tuple(unmatched_trk),
    )
