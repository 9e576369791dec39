"""Pinhole cameras, box projection, and multi-view appearance similarity.

A rig is an ordered list of cameras. Projecting a 3D box into a camera
yields an axis-aligned image box or an invalid marker; similarity between
two boxes is computed per camera where both are visible and then fused
across cameras. "No shared camera" is represented as None, never as 0,
so downstream cost matrices can exclude the pair outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import Box2D, Box3D, giou_2d, iou_2d

# Corners at camera-frame depth below this are treated as behind the lens.
DEPTH_EPS = 1e-3

APP_METRICS: dict[str, Callable[[Box2D, Box2D], float]] = {
    "iou_2d": iou_2d,
    "giou_2d": giou_2d,
}

FUSE_MODES = ("sum", "max", "avg")


@dataclass(frozen=True)
class Camera:
    """One pinhole camera: 3x4 global-to-camera extrinsic, 3x3 intrinsic.

    Camera frame is x-right, y-down, z-forward.
    """

    extrinsic: np.ndarray
    intrinsic: np.ndarray
    width: int
    height: int
    name: str = ""

    def __post_init__(self) -> None:
        ext = np.asarray(self.extrinsic, dtype=float)
        intr = np.asarray(self.intrinsic, dtype=float)
        if ext.shape != (3, 4):
            raise ValueError(f"extrinsic must be 3x4, got {ext.shape}")
        if intr.shape != (3, 3):
            raise ValueError(f"intrinsic must be 3x3, got {intr.shape}")
        if intr[0, 0] <= 0 or intr[1, 1] <= 0:
            raise ValueError("intrinsic focal entries must be positive")
        if abs(np.linalg.det(intr)) < 1e-12:
            raise ValueError("intrinsic matrix is singular")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        ext.setflags(write=False)
        intr.setflags(write=False)
        object.__setattr__(self, "extrinsic", ext)
        object.__setattr__(self, "intrinsic", intr)


@dataclass(frozen=True)
class CameraRig:
    """Ordered collection of cameras; order is stable across a sequence."""

    cameras: tuple[Camera, ...]

    def __post_init__(self) -> None:
        if len(self.cameras) < 1:
            raise ValueError("a rig needs at least one camera")
        object.__setattr__(self, "cameras", tuple(self.cameras))

    def __len__(self) -> int:
        return len(self.cameras)

    def __iter__(self):
        return iter(self.cameras)

    def drop_cameras(self, count: int) -> "CameraRig":
        """Remove the last ``count`` cameras, keeping at least one."""
        if count < 0 or count >= len(self.cameras):
            raise ValueError(f"cannot drop {count} of {len(self.cameras)} cameras")
        if count == 0:
            return self
        return CameraRig(self.cameras[: len(self.cameras) - count])


# One projected Box2D per rig camera, invalid entries included.
MultiViewState = tuple[Box2D, ...]


def camera_from_pose(
    position: Sequence[float],
    yaw: float,
    intrinsic: np.ndarray,
    width: int,
    height: int,
    name: str = "",
) -> Camera:
    """Build a level camera at ``position`` looking along heading ``yaw``.

    Global frame is z-up; the camera's optical axis is horizontal.
    """
    fx, fy = math.cos(yaw), math.sin(yaw)
    forward = np.array([fx, fy, 0.0])
    right = np.array([fy, -fx, 0.0])
    down = np.array([0.0, 0.0, -1.0])
    rot = np.stack([right, down, forward])
    t = -rot @ np.asarray(position, dtype=float)
    extrinsic = np.hstack([rot, t[:, None]])
    return Camera(extrinsic=extrinsic, intrinsic=np.asarray(intrinsic, dtype=float), width=width, height=height, name=name)


def project_box(b: Box3D, cam: Camera) -> Box2D:
    """Project a 3D box to the axis-aligned image bbox of its corners.

    Corners behind the camera are culled; the bbox is clipped to the image
    rectangle. Returns an invalid box when fewer than 2 corners are in
    front of the camera or the clipped bbox has no area.
    """
    corners = np.array(b.corners(), dtype=float)
    homog = np.hstack([corners, np.ones((8, 1))])
    cam_pts = homog @ cam.extrinsic.T
    depths = cam_pts[:, 2]
    front = depths > DEPTH_EPS
    if int(front.sum()) < 2:
        return Box2D.invalid_box()
    pts = cam_pts[front]
    pix = pts @ cam.intrinsic.T
    pix = pix[:, :2] / pix[:, 2:3]
    u1 = max(float(pix[:, 0].min()), 0.0)
    v1 = max(float(pix[:, 1].min()), 0.0)
    u2 = min(float(pix[:, 0].max()), float(cam.width))
    v2 = min(float(pix[:, 1].max()), float(cam.height))
    if u2 - u1 <= 0.0 or v2 - v1 <= 0.0:
        return Box2D.invalid_box()
    return Box2D(u1, v1, u2, v2)


def project_all(b: Box3D, rig: CameraRig) -> MultiViewState:
    """Project one box into every rig camera, preserving camera order."""
    return tuple(project_box(b, cam) for cam in rig)


def pairwise_similarity(
    sa: MultiViewState,
    sb: MultiViewState,
    app: str = "iou_2d",
) -> list[float | None]:
    """Per-camera appearance similarity; None where either view is invalid."""
    if len(sa) != len(sb):
        raise ValueError(f"multi-view states disagree on camera count: {len(sa)} vs {len(sb)}")
    metric = APP_METRICS[app]
    out: list[float | None] = []
    for ba, bb in zip(sa, sb):
        if ba.valid and bb.valid:
            out.append(metric(ba, bb))
        else:
            out.append(None)
    return out


def fuse(values: Sequence[float | None], mode: str = "sum") -> float | None:
    """Aggregate valid per-camera similarities; None if no camera saw both."""
    if mode not in FUSE_MODES:
        raise ValueError(f"unknown fuse mode {mode!r}; expected one of {FUSE_MODES}")
    valid = [v for v in values if v is not None]
    if not valid:
        return None
    if mode == "sum":
        return sum(valid)
    if mode == "max":
        return max(valid)
    return sum(valid) / len(valid)


def mcas_from_states(
    states_a: Sequence[MultiViewState],
    states_b: Sequence[MultiViewState],
    app: str = "iou_2d",
    mode: str = "sum",
) -> list[list[float | None]]:
    """Similarity matrix between two sets of precomputed multi-view states."""
    return [
        [fuse(pairwise_similarity(sa, sb, app), mode) for sb in states_b]
        for sa in states_a
    ]


def mcas(
    boxes_a: Sequence[Box3D],
    boxes_b: Sequence[Box3D],
    rig: CameraRig,
    app: str = "iou_2d",
    mode: str = "sum",
) -> list[list[float | None]]:
    """Multi-camera appearance similarity matrix, |A| x |B|.

    Each box is projected into the rig once; entry (i, j) fuses the
    per-camera similarities over cameras observing both boxes.
    """
    states_a = [project_all(b, rig) for b in boxes_a]
    states_b = [project_all(b, rig) for b in boxes_b]
    return mcas_from_states(states_a, states_b, app, mode)
