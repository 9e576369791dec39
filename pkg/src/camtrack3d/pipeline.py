"""Frame-by-frame tracking engine.

Each frame runs five stages in order: predict all live tracklets,
pre-process detections, associate in two stages, update matched filters
with confidence-scaled measurement noise, and advance lifecycle state.
Only Active tracklets are reported; by default a miss emits nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Sequence

from .association import associate
from .cameras import CameraRig
from .categories import Category
from .config import TrackerConfig
from .geometry import Box3D
from .lifecycle import Status, Tracklet, initialize, merge, new_id_source, step
from .motion import (
    MeasurementNoise,
    box_from_state,
    measurement_noise,
    predict_state,
    update_state,
)
from .preprocess import geometry_filter, score_split, tracker_filter


@dataclass(frozen=True)
class Frame:
    """One keyframe of detections, timestamp in seconds."""

    timestamp: float
    detections: tuple[Box3D, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "detections", tuple(self.detections))


@dataclass(frozen=True)
class TrackRecord:
    track_id: int
    box: Box3D
    score: float
    category: Category


@dataclass(frozen=True)
class FrameResult:
    timestamp: float
    records: tuple[TrackRecord, ...]


class Tracker:
    """Stateful tracker for one sequence; frames must arrive in time order."""

    def __init__(self, config: TrackerConfig, rig: CameraRig) -> None:
        self.config = config
        self.rig = rig
        self.tracklets: list[Tracklet] = []
        self._ids: Iterator[int] = new_id_source()
        self._last_time: float | None = None

    def process_frame(self, frame: Frame) -> FrameResult:
        cfg = self.config
        flags = cfg.flags
        t = frame.timestamp
        if self._last_time is not None and t < self._last_time:
            raise ValueError(f"frame timestamps must be nondecreasing: {t} after {self._last_time}")
        dt = None if self._last_time is None else t - self._last_time
        self._last_time = t

        # 1. Predict every live tracklet to the current frame time.
        if dt is not None and dt > 0:
            self.tracklets = [
                replace(
                    trk,
                    state=predict_state(
                        trk.state,
                        dt,
                        cfg.categories[trk.category].process_noise,
                        cfg.rear_axle_ratio,
                    ),
                )
                for trk in self.tracklets
            ]
        tracks = [
            (trk.track_id, box_from_state(trk.state, trk.category, trk.score))
            for trk in self.tracklets
        ]

        # 2. Pre-process detections.
        detections = list(frame.detections)
        if flags.geometry_filter:
            detections = geometry_filter(
                detections,
                cfg.per_category("nms_scale"),
                cfg.per_category("nms_metric"),
                cfg.per_category("nms_threshold"),
            )
        high, low_coarse = score_split(detections, cfg.per_category("score_split"), cfg.score_floor)
        if flags.tracker_filter:
            low, prematch = tracker_filter(
                low_coarse,
                tracks,
                self.rig,
                cfg.per_category("recall_gate"),
                cfg.recall_appearance,
                cfg.fusion,
            )
        else:
            low, prematch = [], {}

        # 3. Associate detections to predicted tracklets.
        result = associate(
            high,
            low,
            prematch,
            tracks,
            self.rig,
            motion_metric=cfg.per_category("motion_metric"),
            motion_gate=cfg.per_category("motion_gate"),
            appearance_gate=cfg.per_category("appearance_gate"),
            app=cfg.appearance,
            fuse_mode=cfg.fusion,
            second_stage=flags.second_association,
            verification=flags.two_step_verification,
            gate_mode=cfg.gate_mode,
        )

        # 4. Measurement updates and lifecycle advance for matched tracklets.
        by_id = {trk.track_id: trk for trk in self.tracklets}
        updated: list[Tracklet] = []
        matched_ids: set[int] = set()
        for m in result.matches:
            box = high[m.index] if m.kind == "high" else low[m.index]
            trk = by_id[m.tracklet_id]
            cc = cfg.categories[trk.category]
            dim = 9 if cfg.use_velocity and box.velocity is not None else 7
            if flags.adaptive_noise:
                alpha = m.stage if flags.stage_factor else 0
                noise = measurement_noise(alpha, box.score, dim)
            else:
                noise = MeasurementNoise(cfg.fixed_noise, dim)
            state = update_state(trk.state, box, noise, cfg.use_velocity, cfg.flip_yaw)
            score = cfg.score_smoothing * trk.score + (1.0 - cfg.score_smoothing) * box.score
            trk = replace(trk, state=state, score=score)
            updated.append(step(trk, True, cc.confirm_hits, cc.max_misses))
            matched_ids.add(m.tracklet_id)

        # 5. Lifecycle for unmatched tracklets, births, and the merge.
        survivors: list[Tracklet] = []
        for trk_id in result.unmatched_tracklets:
            trk = by_id[trk_id]
            cc = cfg.categories[trk.category]
            stepped = step(trk, False, cc.confirm_hits, cc.max_misses)
            if stepped.status is not Status.DEAD:
                survivors.append(stepped)
        newborn = initialize(
            [high[i] for i in result.unmatched_high],
            [low[i] for i in result.unmatched_low],
            timestamp=t,
            ids=self._ids,
            model=cfg.per_category("motion_model"),
            p0_scale=cfg.initial_covariance,
        )
        self.tracklets = merge(newborn, updated, survivors)

        emit_ids = matched_ids | {trk.track_id for trk in newborn}
        records = []
        for trk in self.tracklets:
            if trk.status is not Status.ACTIVE:
                continue
            if trk.track_id not in emit_ids and not cfg.emit_on_miss:
                continue
            records.append(
                TrackRecord(
                    track_id=trk.track_id,
                    box=box_from_state(trk.state, trk.category, trk.score),
                    score=trk.score,
                    category=trk.category,
                )
            )
        return FrameResult(timestamp=t, records=tuple(records))


def run_sequence(
    frames: Sequence[Frame],
    rig: CameraRig,
    config: TrackerConfig,
) -> list[FrameResult]:
    """Track one sequence from scratch; pure function of its inputs."""
    tracker = Tracker(config, rig)
    results = []
    for i, frame in enumerate(frames):
        try:
            results.append(tracker.process_frame(frame))
        except ValueError as e:
            raise ValueError(f"frame {i} (t={frame.timestamp}): {e}") from e
    return results
