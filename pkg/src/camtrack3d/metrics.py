"""Tracking metrics: CLEAR-MOT counts plus recall-averaged AMOTA/AMOTP.

Matching follows the public driving-benchmark convention: per frame,
predictions are taken in descending score order and each claims the
nearest unmatched ground-truth object of its category within a 2 m
planar center distance. An identity switch is counted whenever a
ground-truth instance's matched track id differs from its most recent
match. AMOTA averages the recall-normalized MOTAR over 40 evenly spaced
recall thresholds; recalls the tracker never reaches contribute the
worst value (0 for MOTAR, the match radius for MOTP).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .categories import Category

MATCH_RADIUS = 2.0
N_RECALL_STEPS = 40


@dataclass(frozen=True)
class EvalObject:
    """One object in one frame: a track output or a ground-truth instance."""

    ident: str
    category: Category
    x: float
    y: float
    score: float = 1.0


# A sequence is a list of (timestamp, objects) pairs.
EvalFrames = Sequence[tuple[float, Sequence[EvalObject]]]


@dataclass(frozen=True)
class CategoryMetrics:
    amota: float
    amotp: float
    mota: float
    ids: int
    fp: int
    fn: int
    gt: int
    recall: float


@dataclass(frozen=True)
class MetricReport:
    per_category: Mapping[Category, CategoryMetrics]
    amota: float
    amotp: float
    mota: float
    ids: int
    fp: int
    fn: int
    gt: int
    notes: tuple[str, ...]


def _align(predictions: EvalFrames, ground_truth: EvalFrames) -> list[tuple[list[EvalObject], list[EvalObject]]]:
    """Pair up frames by timestamp over the union of both sequences."""
    pred_by_t: dict[float, list[EvalObject]] = {}
    for t, objs in predictions:
        pred_by_t.setdefault(t, []).extend(objs)
    gt_by_t: dict[float, list[EvalObject]] = {}
    for t, objs in ground_truth:
        gt_by_t.setdefault(t, []).extend(objs)
    times = sorted(set(pred_by_t) | set(gt_by_t))
    return [(pred_by_t.get(t, []), gt_by_t.get(t, [])) for t in times]


def _clear_pass(
    frames: Sequence[tuple[list[EvalObject], list[EvalObject]]],
    cutoff: float | None,
    radius: float,
) -> tuple[int, int, int, int, list[tuple[float, float]]]:
    """One CLEAR accumulation over aligned frames of a single category.

    Returns (fp, fn, ids, gt_count, matches) where matches carry
    (prediction score, center distance) per true positive.
    """
    fp = fn = ids = n_gt = 0
    matches: list[tuple[float, float]] = []
    last_track: dict[str, str] = {}
    for preds, gts in frames:
        if cutoff is not None:
            preds = [p for p in preds if p.score >= cutoff]
        n_gt += len(gts)
        order = sorted(preds, key=lambda p: (-p.score, p.ident))
        taken = [False] * len(gts)
        for p in order:
            best_j = -1
            best_d = radius
            for j, g in enumerate(gts):
                if taken[j]:
                    continue
                d = math.hypot(p.x - g.x, p.y - g.y)
                if d <= best_d:
                    best_d = d
                    best_j = j
            if best_j < 0:
                fp += 1
                continue
            taken[best_j] = True
            g = gts[best_j]
            prev = last_track.get(g.ident)
            if prev is not None and prev != p.ident:
                ids += 1
            last_track[g.ident] = p.ident
            matches.append((p.score, best_d))
        fn += taken.count(False)
    return fp, fn, ids, n_gt, matches


def _category_metrics(
    frames: Sequence[tuple[list[EvalObject], list[EvalObject]]],
    radius: float,
) -> CategoryMetrics:
    fp, fn, ids, n_gt, matches = _clear_pass(frames, None, radius)
    mota = min(1.0, max(0.0, 1.0 - (fp + fn + ids) / n_gt))
    tp_scores = sorted((s for s, _ in matches), reverse=True)
    recall = len(tp_scores) / n_gt

    motar_sum = 0.0
    motp_sum = 0.0
    for k in range(1, N_RECALL_STEPS + 1):
        r = k / N_RECALL_STEPS
        need = math.ceil(r * n_gt)
        if need > len(tp_scores):
            # This recall is never reached; score the sweep point as worst.
            motp_sum += radius
            continue
        cutoff = tp_scores[need - 1]
        fp_r, fn_r, ids_r, _, matches_r = _clear_pass(frames, cutoff, radius)
        motar = 1.0 - (ids_r + fp_r + fn_r - (1.0 - r) * n_gt) / (r * n_gt)
        motar_sum += min(1.0, max(0.0, motar))
        motp_sum += (
            sum(d for _, d in matches_r) / len(matches_r) if matches_r else radius
        )

    return CategoryMetrics(
        amota=motar_sum / N_RECALL_STEPS,
        amotp=motp_sum / N_RECALL_STEPS,
        mota=mota,
        ids=ids,
        fp=fp,
        fn=fn,
        gt=n_gt,
        recall=recall,
    )


def evaluate(
    predictions: EvalFrames,
    ground_truth: EvalFrames,
    radius: float = MATCH_RADIUS,
) -> MetricReport:
    """Score a tracking result against ground truth.

    Frames are aligned by timestamp, so input frame order is irrelevant.
    Categories with no ground truth are excluded from the aggregate and
    reported in the notes when predictions for them exist.
    """
    aligned = _align(predictions, ground_truth)
    per_cat: dict[Category, CategoryMetrics] = {}
    notes: list[str] = []
    for cat in Category:
        cat_frames = [
            (
                [p for p in preds if p.category is cat],
                [g for g in gts if g.category is cat],
            )
            for preds, gts in aligned
        ]
        if not any(gts for _, gts in cat_frames):
            n_pred = sum(len(preds) for preds, _ in cat_frames)
            if n_pred:
                notes.append(
                    f"{cat.value}: {n_pred} predictions but no ground truth; excluded from aggregate"
                )
            continue
        per_cat[cat] = _category_metrics(cat_frames, radius)

    if not per_cat:
        return MetricReport(
            per_category={}, amota=0.0, amotp=radius, mota=0.0,
            ids=0, fp=0, fn=0, gt=0, notes=tuple(notes),
        )
    n = len(per_cat)
    return MetricReport(
        per_category=per_cat,
        amota=sum(m.amota for m in per_cat.values()) / n,
        amotp=sum(m.amotp for m in per_cat.values()) / n,
        mota=sum(m.mota for m in per_cat.values()) / n,
        ids=sum(m.ids for m in per_cat.values()),
        fp=sum(m.fp for m in per_cat.values()),
        fn=sum(m.fn for m in per_cat.values()),
        gt=sum(m.gt for m in per_cat.values()),
        notes=tuple(notes),
    )
