"""Count-based tracklet birth, confirmation, and death.

High-score unmatched detections become Active tracklets at once;
low-score ones start Tentative and must hit on every consecutive frame
until confirmed, dying on their first miss. Active tracklets survive a
configurable number of consecutive misses. Dead is terminal and ids are
never reused within a sequence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .categories import Category
from .geometry import Box3D
from .motion import KinematicState, state_from_box


class Status(Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    DEAD = "dead"


@dataclass(frozen=True)
class Tracklet:
    track_id: int
    category: Category
    state: KinematicState
    status: Status
    score: float
    birth_time: float
    hit_streak: int = 1
    miss_streak: int = 0

    def __post_init__(self) -> None:
        if self.track_id <= 0:
            raise ValueError("track ids are positive integers")
        if self.hit_streak > 0 and self.miss_streak > 0:
            raise ValueError("hit and miss streaks cannot both be positive")


def new_id_source(start: int = 1) -> Iterator[int]:
    """Monotone id allocator; never reuses an id within a sequence."""
    return itertools.count(start)


def initialize(
    high: Sequence[Box3D],
    low: Sequence[Box3D],
    *,
    timestamp: float,
    ids: Iterator[int],
    model: Mapping[Category, str],
    p0_scale: float = 1.0,
) -> list[Tracklet]:
    """Birth tracklets from final unmatched detections.

    High-score boxes start Active (emitted immediately); low-score boxes
    start Tentative. Both begin with a hit streak of 1.
    """
    born: list[Tracklet] = []
    for boxes, status in ((high, Status.ACTIVE), (low, Status.TENTATIVE)):
        for box in boxes:
            born.append(
                Tracklet(
                    track_id=next(ids),
                    category=box.category,
                    state=state_from_box(box, model[box.category], p0_scale),
                    status=status,
                    score=box.score,
                    birth_time=timestamp,
                )
            )
    return born


def step(t: Tracklet, matched: bool, m_hit: int, m_age: int) -> Tracklet:
    """Advance lifecycle counters for one frame.

    Tentative tracklets confirm after m_hit consecutive hits and die on
    any miss; Active tracklets die after m_age consecutive misses.
    """
    if t.status is Status.DEAD:
        raise ValueError(f"tracklet {t.track_id} is dead and cannot be stepped")
    if matched:
        hit = t.hit_streak + 1
        status = t.status
        if status is Status.TENTATIVE and hit >= m_hit:
            status = Status.ACTIVE
        return replace(t, hit_streak=hit, miss_streak=0, status=status)
    miss = t.miss_streak + 1
    if t.status is Status.TENTATIVE or miss >= m_age:
        status = Status.DEAD
    else:
        status = t.status
    return replace(t, hit_streak=0, miss_streak=miss, status=status)


def merge(
    newborn: Iterable[Tracklet],
    matched: Iterable[Tracklet],
    surviving: Iterable[Tracklet],
) -> list[Tracklet]:
    """Combine the frame's tracklet groups into the live set, ordered by id."""
    alive: list[Tracklet] = []
    seen: set[int] = set()
    for t in itertools.chain(newborn, matched, surviving):
        if t.status is Status.DEAD:
            continue
        if t.track_id in seen:
            raise ValueError(f"duplicate tracklet id {t.track_id} in merge")
        seen.add(t.track_id)
        alive.append(t)
    alive.sort(key=lambda t: t.track_id)
    return alive
