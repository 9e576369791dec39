"""Synthetic multi-camera tracking scenarios for desk-scale verification.

Ground-truth objects follow constant turn-rate, constant-acceleration
arcs laid out on well-separated rings around the rig. Detections are the
truths minus seeded drops, plus position/extent/yaw perturbation, plus
clutter. Clutter is a mix of near-duplicates of live objects (what
duplicate suppression should remove) and free-floating background boxes.
Everything is a deterministic function of the scenario parameters
and the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .cameras import CameraRig, camera_from_pose
from .categories import Category, category_from_name
from .geometry import Box3D, wrap_angle
from .motion import IA, IOMEGA, IV, IX, IY, IYAW, STATE_DIM, ctra_transition
from .pipeline import Frame

# Typical object extents (w, l, h) per category, meters.
DEFAULT_SIZES: dict[Category, tuple[float, float, float]] = {
    Category.CAR: (1.95, 4.62, 1.73),
    Category.PED: (0.67, 0.73, 1.77),
    Category.BIC: (0.60, 1.70, 1.28),
    Category.MOTO: (0.77, 2.11, 1.46),
    Category.BUS: (2.93, 11.0, 3.47),
    Category.TRA: (2.90, 12.3, 3.87),
    Category.TRU: (2.51, 6.93, 2.84),
}

GroundTruthFrames = list[tuple[float, list[tuple[str, Box3D]]]]


@dataclass(frozen=True)
class ScenarioSpec:
    """Knobs for one generated scene."""

    n_frames: int = 100
    dt: float = 0.5
    objects: dict[str, int] = field(default_factory=lambda: {"car": 20})
    speed_range: tuple[float, float] = (3.0, 9.0)
    accel_range: tuple[float, float] = (0.0, 0.0)
    yaw_rate_range: tuple[float, float] = (-0.15, 0.15)
    fp_rate: float = 0.0            # expected clutter boxes per frame
    fn_rate: float = 0.0            # per-object drop probability per frame
    duplicate_fraction: float = 0.7  # share of clutter shadowing a live object
    orbit: bool = True              # closed circles around the rig (keeps objects apart)
    position_noise: float = 0.0     # meters, per horizontal axis
    extent_noise: float = 0.0       # meters
    yaw_noise: float = 0.0          # radians
    score_mean: float = 0.8         # true-detection score center
    score_noise: float = 0.0        # true-detection score spread
    clutter_score: tuple[float, float] = (0.05, 0.6)
    n_cameras: int = 6
    ring_radius: float = 28.0       # first object ring, meters from origin
    ring_spacing: float = 7.0       # radial gap between rings

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError("n_frames must be at least 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.objects:
            raise ValueError("objects must name at least one category")
        for name, count in self.objects.items():
            category_from_name(name)
            if count < 1:
                raise ValueError(f"object count for {name} must be at least 1")
        for name in ("fp_rate", "position_noise", "extent_noise", "yaw_noise", "score_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("fn_rate", "duplicate_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not 0.0 < self.score_mean <= 1.0:
            raise ValueError("score_mean must be in (0, 1]")
        if self.n_cameras < 1:
            raise ValueError("n_cameras must be at least 1")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ScenarioSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        kwargs: dict[str, Any] = dict(doc)
        for key in ("speed_range", "accel_range", "yaw_rate_range", "clutter_score"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "objects" in kwargs:
            kwargs["objects"] = {str(k): int(v) for k, v in kwargs["objects"].items()}
        return cls(**kwargs)


def ring_rig(n_cameras: int = 6, width: int = 1600, height: int = 900) -> CameraRig:
    """Outward-looking cameras at the origin, evenly spaced in azimuth."""
    intrinsic = np.array(
        [[1266.0, 0.0, width / 2.0], [0.0, 1266.0, height / 2.0], [0.0, 0.0, 1.0]]
    )
    cams = []
    for k in range(n_cameras):
        yaw = 2.0 * math.pi * k / n_cameras
        # Small radial offset so the rig is a physical ring, not one point.
        pos = (1.5 * math.cos(yaw), 1.5 * math.sin(yaw), 1.6)
        cams.append(camera_from_pose(pos, yaw, intrinsic, width, height, name=f"camera_{k}"))
    return CameraRig(tuple(cams))


def _initial_states(spec: ScenarioSpec, rng: np.random.Generator) -> list[tuple[str, Category, np.ndarray]]:
    """Objects seeded on concentric rings so footprints never interact."""
    names = sorted(spec.objects)
    roster: list[Category] = []
    for name in names:
        roster.extend([category_from_name(name)] * spec.objects[name])
    states = []
    n = len(roster)
    n_rings = (n + 7) // 8
    # One speed and direction per ring: a ring rotates rigidly, so the
    # within-ring gaps laid out below never close.
    ring_speed = [rng.uniform(*spec.speed_range) for _ in range(n_rings)]
    ring_dir = [1.0 if r % 2 == 0 else -1.0 for r in range(n_rings)]
    for i, cat in enumerate(roster):
        ring, slot = divmod(i, 8)
        per_ring = min(8, n - ring * 8)
        radius = spec.ring_radius + spec.ring_spacing * ring
        angle = 2.0 * math.pi * slot / per_ring + rng.uniform(0.0, 0.2)
        speed = ring_speed[ring] if spec.orbit else rng.uniform(*spec.speed_range)
        accel = rng.uniform(*spec.accel_range)
        direction = ring_dir[ring] if spec.orbit else (1.0 if i % 2 == 0 else -1.0)
        mean = np.zeros(STATE_DIM)
        mean[IX] = radius * math.cos(angle)
        mean[IY] = radius * math.sin(angle)
        mean[2] = DEFAULT_SIZES[cat][2] / 2.0
        mean[IV] = speed
        mean[IA] = accel
        mean[IYAW] = wrap_angle(angle + direction * math.pi / 2.0)
        if spec.orbit:
            # Turn rate that closes the circle, so rings never mix.
            mean[IOMEGA] = direction * speed / radius
        else:
            mean[IOMEGA] = rng.uniform(*spec.yaw_rate_range)
        mean[7:10] = DEFAULT_SIZES[cat]
        states.append((f"obj_{i:04d}", cat, mean))
    return states


def _box_of(mean: np.ndarray, cat: Category, score: float = 1.0) -> Box3D:
    return Box3D(
        center=(float(mean[IX]), float(mean[IY]), float(mean[2])),
        size=(float(mean[7]), float(mean[8]), float(mean[9])),
        yaw=float(mean[IYAW]),
        category=cat,
        score=score,
        velocity=(
            float(mean[IV] * math.cos(mean[IYAW])),
            float(mean[IV] * math.sin(mean[IYAW])),
        ),
    )


def _perturb(box: Box3D, spec: ScenarioSpec, rng: np.random.Generator, score: float) -> Box3D:
    x, y, z = box.center
    w, l, h = box.size
    if spec.position_noise > 0:
        x += rng.normal(0.0, spec.position_noise)
        y += rng.normal(0.0, spec.position_noise)
        z += rng.normal(0.0, 0.2 * spec.position_noise)
    if spec.extent_noise > 0:
        w = max(0.2, w + rng.normal(0.0, spec.extent_noise))
        l = max(0.2, l + rng.normal(0.0, spec.extent_noise))
        h = max(0.2, h + rng.normal(0.0, spec.extent_noise))
    yaw = box.yaw + (rng.normal(0.0, spec.yaw_noise) if spec.yaw_noise > 0 else 0.0)
    return Box3D(
        center=(x, y, z),
        size=(w, l, h),
        yaw=yaw,
        category=box.category,
        score=score,
        velocity=box.velocity,
    )


def _tp_score(spec: ScenarioSpec, rng: np.random.Generator) -> float:
    if spec.score_noise <= 0:
        return spec.score_mean
    return float(min(1.0, max(0.02, rng.normal(spec.score_mean, spec.score_noise))))


def _clutter_boxes(
    truths: Sequence[Box3D], spec: ScenarioSpec, rng: np.random.Generator
) -> list[Box3D]:
    out = []
    for _ in range(rng.poisson(spec.fp_rate)):
        score = float(rng.uniform(*spec.clutter_score))
        if truths and rng.random() < spec.duplicate_fraction:
            # Shadow a live object with a slightly shifted copy.
            src = truths[rng.integers(len(truths))]
            x, y, z = src.center
            out.append(
                Box3D(
                    center=(x + rng.normal(0.0, 0.5), y + rng.normal(0.0, 0.5), z),
                    size=src.size,
                    yaw=src.yaw + rng.normal(0.0, 0.05),
                    category=src.category,
                    score=score,
                    velocity=src.velocity,
                )
            )
        else:
            cat = Category(rng.choice([c.value for c in Category]))
            radius = rng.uniform(spec.ring_radius * 0.5, spec.ring_radius * 1.8)
            angle = rng.uniform(0.0, 2.0 * math.pi)
            size = DEFAULT_SIZES[cat]
            out.append(
                Box3D(
                    center=(radius * math.cos(angle), radius * math.sin(angle), size[2] / 2),
                    size=size,
                    yaw=rng.uniform(-math.pi, math.pi),
                    category=cat,
                    score=score,
                    velocity=(0.0, 0.0),
                )
            )
    return out


def generate_scenario(
    spec: ScenarioSpec, seed: int
) -> tuple[list[Frame], GroundTruthFrames, CameraRig]:
    """Build (detection frames, ground-truth frames, camera rig)."""
    rng = np.random.default_rng(seed)
    rig = ring_rig(spec.n_cameras)
    objects = _initial_states(spec, rng)

    det_frames: list[Frame] = []
    gt_frames: GroundTruthFrames = []
    states = {name: mean for name, _, mean in objects}
    for k in range(spec.n_frames):
        t = k * spec.dt
        gt_objs: list[tuple[str, Box3D]] = []
        detections: list[Box3D] = []
        truths: list[Box3D] = []
        for name, cat, _ in objects:
            box = _box_of(states[name], cat)
            gt_objs.append((name, box))
            truths.append(box)
            if spec.fn_rate > 0 and rng.random() < spec.fn_rate:
                continue
            detections.append(_perturb(box, spec, rng, _tp_score(spec, rng)))
        detections.extend(_clutter_boxes(truths, spec, rng))
        gt_frames.append((t, gt_objs))
        det_frames.append(Frame(timestamp=t, detections=tuple(detections)))
        for name, _, _ in objects:
            states[name] = ctra_transition(states[name], spec.dt)
            states[name][IYAW] = wrap_angle(states[name][IYAW])
    return det_frames, gt_frames, rig
