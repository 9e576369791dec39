"""Shared fixtures and box factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from camtrack3d.categories import Category
from camtrack3d.geometry import Box3D
from camtrack3d.synth import ring_rig


def make_box(
    x=0.0, y=0.0, z=1.0,
    w=1.0, l=1.0, h=1.0,
    yaw=0.0,
    category=Category.CAR,
    score=1.0,
    velocity=None,
):
    return Box3D(
        center=(x, y, z), size=(w, l, h), yaw=yaw,
        category=category, score=score, velocity=velocity,
    )


def random_box(rng: np.random.Generator, spread=6.0, category=Category.CAR) -> Box3D:
    return make_box(
        x=rng.uniform(-spread, spread),
        y=rng.uniform(-spread, spread),
        z=rng.uniform(0.5, 2.0),
        w=rng.uniform(0.4, 3.0),
        l=rng.uniform(0.4, 6.0),
        h=rng.uniform(0.5, 3.0),
        yaw=rng.uniform(-np.pi, np.pi),
        category=category,
        score=rng.uniform(0.05, 1.0),
    )


@pytest.fixture(scope="session")
def rig6():
    return ring_rig(6)
