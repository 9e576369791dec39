"""Track lifecycle state machine."""

import numpy as np
import pytest

from camtrack3d.categories import Category
from camtrack3d.lifecycle import (
    Status,
    Tracklet,
    initialize,
    merge,
    new_id_source,
    step,
)
from camtrack3d.motion import STATE_DIM, KinematicState

from conftest import make_box

MODEL = {c: "ctra" for c in Category}


def tracklet(tid=1, status=Status.ACTIVE, hit=1, miss=0):
    return Tracklet(
        track_id=tid,
        category=Category.CAR,
        state=KinematicState(np.zeros(STATE_DIM), np.eye(STATE_DIM)),
        status=status,
        score=0.5,
        birth_time=0.0,
        hit_streak=hit,
        miss_streak=miss,
    )


class TestTrackletInvariants:
    def test_positive_id_required(self):
        with pytest.raises(ValueError):
            tracklet(tid=0)
        with pytest.raises(ValueError):
            tracklet(tid=-3)

    def test_streaks_mutually_exclusive(self):
        with pytest.raises(ValueError):
            tracklet(hit=1, miss=1)

    def test_id_source_monotone(self):
        ids = new_id_source()
        drawn = [next(ids) for _ in range(100)]
        assert drawn == list(range(1, 101))
        offset = new_id_source(start=50)
        assert next(offset) == 50


class TestInitialize:
    def test_high_starts_active_low_tentative(self):
        high = [make_box(score=0.9), make_box(x=5, score=0.8)]
        low = [make_box(x=10, score=0.1)]
        born = initialize(high, low, timestamp=3.5, ids=new_id_source(), model=MODEL)
        assert [t.track_id for t in born] == [1, 2, 3]
        assert [t.status for t in born] == [Status.ACTIVE, Status.ACTIVE, Status.TENTATIVE]
        for t, b in zip(born, high + low):
            assert t.hit_streak == 1
            assert t.miss_streak == 0
            assert t.score == b.score
            assert t.birth_time == 3.5
            assert t.category is b.category

    def test_model_map_and_covariance_scale(self):
        model = dict(MODEL)
        model[Category.CAR] = "bicycle"
        born = initialize([make_box()], [], timestamp=0.0, ids=new_id_source(),
                          model=model, p0_scale=4.0)
        assert born[0].state.model == "bicycle"
        assert np.allclose(born[0].state.covariance, 4.0 * np.eye(STATE_DIM))


class TestStep:
    def test_tentative_confirms_after_enough_hits(self):
        t = tracklet(status=Status.TENTATIVE, hit=1)
        t = step(t, matched=True, m_hit=2, m_age=2)
        assert t.status is Status.ACTIVE
        assert t.hit_streak == 2

    def test_tentative_needs_consecutive_hits(self):
        t = tracklet(status=Status.TENTATIVE, hit=1)
        t = step(t, matched=True, m_hit=3, m_age=2)
        assert t.status is Status.TENTATIVE
        t = step(t, matched=True, m_hit=3, m_age=2)
        assert t.status is Status.ACTIVE

    def test_tentative_dies_on_first_miss(self):
        t = tracklet(status=Status.TENTATIVE, hit=1)
        assert step(t, matched=False, m_hit=2, m_age=5).status is Status.DEAD

    def test_active_survives_then_dies_by_miss_budget(self):
        t = tracklet(status=Status.ACTIVE)
        t = step(t, matched=False, m_hit=2, m_age=2)
        assert t.status is Status.ACTIVE
        assert t.miss_streak == 1
        t = step(t, matched=False, m_hit=2, m_age=2)
        assert t.status is Status.DEAD

    def test_hit_resets_miss_streak(self):
        t = tracklet(status=Status.ACTIVE)
        t = step(t, matched=False, m_hit=2, m_age=3)
        t = step(t, matched=True, m_hit=2, m_age=3)
        assert t.miss_streak == 0
        assert t.hit_streak == 1
        # The budget starts over after the hit.
        t = step(t, matched=False, m_hit=2, m_age=3)
        t = step(t, matched=False, m_hit=2, m_age=3)
        assert t.status is Status.ACTIVE
        t = step(t, matched=False, m_hit=2, m_age=3)
        assert t.status is Status.DEAD

    def test_dead_cannot_step(self):
        t = tracklet(status=Status.TENTATIVE)
        dead = step(t, matched=False, m_hit=2, m_age=2)
        with pytest.raises(ValueError):
            step(dead, matched=True, m_hit=2, m_age=2)

    @pytest.mark.parametrize("m_hit,m_age", [(2, 2), (3, 1), (1, 4), (4, 3)])
    def test_matches_reference_machine(self, m_hit, m_age):
        # Independent transcription of the rules, driven by random
        # hit/miss strings.
        rng = np.random.default_rng(m_hit * 10 + m_age)
        for start in (Status.ACTIVE, Status.TENTATIVE):
            for _ in range(200):
                seq = rng.random(12) < 0.55
                t = tracklet(status=start)
                status, hits, misses = start, 1, 0
                for matched in seq:
                    if status is Status.DEAD:
                        break
                    t = step(t, matched=bool(matched), m_hit=m_hit, m_age=m_age)
                    if matched:
                        hits, misses = hits + 1, 0
                        if status is Status.TENTATIVE and hits >= m_hit:
                            status = Status.ACTIVE
                    else:
                        hits, misses = 0, misses + 1
                        if status is Status.TENTATIVE or misses >= m_age:
                            status = Status.DEAD
                    assert t.status is status
                    assert t.hit_streak == hits
                    assert t.miss_streak == misses


class TestMerge:
    def test_combines_and_sorts_by_id(self):
        out = merge([tracklet(tid=5)], [tracklet(tid=2)], [tracklet(tid=9)])
        assert [t.track_id for t in out] == [2, 5, 9]

    def test_dead_excluded(self):
        dead = tracklet(tid=3, status=Status.DEAD)
        out = merge([], [tracklet(tid=1)], [dead])
        assert [t.track_id for t in out] == [1]

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            merge([tracklet(tid=1)], [tracklet(tid=1)], [])

    def test_conservation(self):
        groups = (
            [tracklet(tid=1), tracklet(tid=4)],
            [tracklet(tid=2)],
            [tracklet(tid=3, status=Status.DEAD), tracklet(tid=5)],
        )
        out = merge(*groups)
        live = {t.track_id for g in groups for t in g if t.status is not Status.DEAD}
        assert {t.track_id for t in out} == live
