"""Rotated-box types and 2D/BEV/3D overlap metrics.

All similarity functions are pure and symmetric. Footprint overlap is
computed exactly via convex polygon clipping, not sampling; generalized
variants penalize by the convex hull of both footprints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .categories import Category

# Vertices closer than this are merged after clipping to avoid slivers.
_MERGE_EPS = 1e-9

Point = tuple[float, float]


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.fmod(angle + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


@dataclass(frozen=True)
class Box3D:
    """A yaw-rotated 3D box in the global frame.

    center is (x, y, z) in meters, size is (w, l, h) with length along the
    heading, yaw in radians (normalized to (-pi, pi] at construction),
    velocity an optional (vx, vy) in m/s.
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float
    category: Category
    score: float = 1.0
    velocity: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        w, l, h = self.size
        if not (w > 0 and l > 0 and h > 0):
            raise ValueError(f"box sizes must be strictly positive, got {self.size}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def volume(self) -> float:
        w, l, h = self.size
        return w * l * h

    @property
    def z_interval(self) -> tuple[float, float]:
        """Vertical extent (bottom, top)."""
        z, h = self.center[2], self.size[2]
        return z - 0.5 * h, z + 0.5 * h

    def corners(self) -> list[tuple[float, float, float]]:
        """The 8 box corners in the global frame."""
        x, y, z = self.center
        w, l, h = self.size
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        out = []
        for dx, dy in ((l, w), (-l, w), (-l, -w), (l, -w)):
            gx = x + 0.5 * (dx * c - dy * s)
            gy = y + 0.5 * (dx * s + dy * c)
            for dz in (-h, h):
                out.append((gx, gy, z + 0.5 * dz))
        return out


_SENTINEL = float("nan")


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned image-plane box; ``valid=False`` carries NaN coordinates."""

    u1: float
    v1: float
    u2: float
    v2: float
    valid: bool = True

    def __post_init__(self) -> None:
        if self.valid and not (self.u1 <= self.u2 and self.v1 <= self.v2):
            raise ValueError("valid Box2D requires u1 <= u2 and v1 <= v2")

    @classmethod
    def invalid_box(cls) -> "Box2D":
        return cls(_SENTINEL, _SENTINEL, _SENTINEL, _SENTINEL, valid=False)

    @property
    def area(self) -> float:
        return (self.u2 - self.u1) * (self.v2 - self.v1)


@dataclass(frozen=True)
class BevPolygon:
    """Convex quad footprint, 4 vertices in counter-clockwise order."""

    vertices: tuple[Point, Point, Point, Point]

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)


def polygon_area(vertices) -> float:
    """Shoelace area; positive for counter-clockwise vertex order."""
    n = len(vertices)
    acc = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def bev_polygon(b: Box3D) -> BevPolygon:
    """Footprint of the box on the ground plane, CCW, area w*l."""
    x, y, _ = b.center
    w, l, _ = b.size
    c, s = math.cos(b.yaw), math.sin(b.yaw)
    hw, hl = 0.5 * w, 0.5 * l
    verts = tuple(
        (x + dx * c - dy * s, y + dx * s + dy * c)
        for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
    )
    return BevPolygon(verts)


def _dedupe(vertices: list[Point]) -> list[Point]:
    out: list[Point] = []
    for p in vertices:
        if not out or (abs(p[0] - out[-1][0]) > _MERGE_EPS or abs(p[1] - out[-1][1]) > _MERGE_EPS):
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= _MERGE_EPS and abs(out[0][1] - out[-1][1]) <= _MERGE_EPS:
        out.pop()
    return out


def clip_convex(subject, clip) -> list[Point]:
    """Sutherland-Hodgman intersection of two convex CCW polygons."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        input_pts = output
        output = []
        prev = input_pts[-1]
        prev_in = ex * (prev[1] - ay) - ey * (prev[0] - ax) >= 0.0
        for cur in input_pts:
            cur_in = ex * (cur[1] - ay) - ey * (cur[0] - ax) >= 0.0
            if cur_in != prev_in:
                # Edge crossing: intersect segment prev->cur with the clip line.
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if abs(denom) > 0.0:
                    t = (ey * (prev[0] - ax) - ex * (prev[1] - ay)) / denom
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return _dedupe(output)


def convex_hull(points) -> list[Point]:
    """Convex hull (Andrew monotone chain), CCW without repeated endpoint."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def half(seq):
        chain: list[Point] = []
        for p in seq:
            while len(chain) >= 2:
                ox, oy = chain[-2]
                ax, ay = chain[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def _footprint_overlap(a: Box3D, b: Box3D) -> tuple[float, float, list[Point], list[Point]]:
    pa = bev_polygon(a).vertices
    pb = bev_polygon(b).vertices
    inter = clip_convex(pa, pb)
    inter_area = abs(polygon_area(inter)) if len(inter) >= 3 else 0.0
    return inter_area, abs(polygon_area(pa)) + abs(polygon_area(pb)), list(pa), list(pb)


def iou_bev(a: Box3D, b: Box3D) -> float:
    """Footprint intersection-over-union in [0, 1]."""
    inter, area_sum, _, _ = _footprint_overlap(a, b)
    union = area_sum - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def giou_bev(a: Box3D, b: Box3D) -> float:
    """Generalized footprint IoU in (-1, 1]; negative for distant boxes."""
    inter, area_sum, pa, pb = _footprint_overlap(a, b)
    union = area_sum - inter
    hull = convex_hull(pa + pb)
    hull_area = abs(polygon_area(hull))
    iou = inter / union if union > 0.0 else 0.0
    if hull_area <= 0.0:
        return iou
    return iou - (hull_area - union) / hull_area


def giou_3d(a: Box3D, b: Box3D) -> float:
    """Generalized volumetric IoU.

    The enclosing volume is the footprint-hull area times the joint vertical
    span, which upper-bounds the union and keeps the value <= the plain IoU.
    """
    inter_bev, _, pa, pb = _footprint_overlap(a, b)
    bot_a, top_a = a.z_interval
    bot_b, top_b = b.z_interval
    v_overlap = max(0.0, min(top_a, top_b) - max(bot_a, bot_b))
    i3 = inter_bev * v_overlap
    u3 = a.volume + b.volume - i3
    hull_area = abs(polygon_area(convex_hull(pa + pb)))
    span = max(top_a, top_b) - min(bot_a, bot_b)
    vc = hull_area * span
    iou3 = i3 / u3 if u3 > 0.0 else 0.0
    if vc <= 0.0:
        return iou3
    return iou3 - (vc - u3) / vc


def _check_valid_2d(a: Box2D, b: Box2D) -> None:
    if not (a.valid and b.valid):
        raise ValueError("iou_2d/giou_2d require valid boxes; mask invalid pairs upstream")


def iou_2d(a: Box2D, b: Box2D) -> float:
    """Axis-aligned image-box IoU in [0, 1]."""
    _check_valid_2d(a, b)
    iw = min(a.u2, b.u2) - max(a.u1, b.u1)
    ih = min(a.v2, b.v2) - max(a.v1, b.v1)
    inter = max(0.0, iw) * max(0.0, ih)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def giou_2d(a: Box2D, b: Box2D) -> float:
    """Generalized axis-aligned IoU with the enclosing rectangle as hull."""
    _check_valid_2d(a, b)
    iw = min(a.u2, b.u2) - max(a.u1, b.u1)
    ih = min(a.v2, b.v2) - max(a.v1, b.v1)
    inter = max(0.0, iw) * max(0.0, ih)
    union = a.area + b.area - inter
    cw = max(a.u2, b.u2) - min(a.u1, b.u1)
    ch = max(a.v2, b.v2) - min(a.v1, b.v1)
    hull = cw * ch
    iou = inter / union if union > 0.0 else 0.0
    if hull <= 0.0:
        return iou
    return iou - (hull - union) / hull


def scale_box(b: Box3D, factor: float) -> Box3D:
    """Scale box extents about its own center; pose and score unchanged."""
    if factor <= 0.0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    w, l, h = b.size
    return Box3D(
        center=b.center,
        size=(w * factor, l * factor, h * factor),
        yaw=b.yaw,
        category=b.category,
        score=b.score,
        velocity=b.velocity,
    )
