"""Projection and multi-view similarity tests."""

import math

import numpy as np
import pytest

from camtrack3d.cameras import (
    Box2D,
    Camera,
    CameraRig,
    camera_from_pose,
    fuse,
    mcas,
    mcas_from_states,
    pairwise_similarity,
    project_all,
    project_box,
)
from camtrack3d.categories import Category
from camtrack3d.synth import ring_rig

from conftest import make_box, random_box

K = np.array([[1266.0, 0.0, 800.0], [0.0, 1266.0, 450.0], [0.0, 0.0, 1.0]])


def forward_cam(position=(0.0, 0.0, 1.6), yaw=0.0):
    return camera_from_pose(position, yaw, K, 1600, 900)


def project_point(cam: Camera, p) -> tuple[float, float, float]:
    """Independent single-point projection used as the test oracle."""
    v = cam.extrinsic @ np.append(np.asarray(p, float), 1.0)
    pix = cam.intrinsic @ v
    return pix[0] / pix[2], pix[1] / pix[2], v[2]


class TestCameraConstruction:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            Camera(extrinsic=np.eye(3), intrinsic=K, width=10, height=10)
        with pytest.raises(ValueError):
            Camera(extrinsic=np.zeros((3, 4)), intrinsic=np.zeros((2, 2)), width=10, height=10)

    def test_rejects_bad_intrinsics(self):
        bad = K.copy()
        bad[0, 0] = -1.0
        with pytest.raises(ValueError):
            Camera(extrinsic=np.zeros((3, 4)), intrinsic=bad, width=10, height=10)
        singular = K.copy()
        singular[2, 2] = 0.0
        with pytest.raises(ValueError):
            Camera(extrinsic=np.zeros((3, 4)), intrinsic=singular, width=10, height=10)

    def test_matrices_read_only(self):
        cam = forward_cam()
        with pytest.raises(ValueError):
            cam.intrinsic[0, 0] = 5.0

    def test_rig_needs_a_camera(self):
        with pytest.raises(ValueError):
            CameraRig(())

    def test_drop_cameras(self):
        rig = ring_rig(6)
        assert len(rig.drop_cameras(0)) == 6
        assert len(rig.drop_cameras(3)) == 3
        assert rig.drop_cameras(2).cameras == rig.cameras[:4]
        with pytest.raises(ValueError):
            rig.drop_cameras(6)
        with pytest.raises(ValueError):
            rig.drop_cameras(-1)


class TestPointGeometry:
    """Hand-derived projections for a camera at the origin facing +x."""

    def test_axis_point_hits_principal_point(self):
        u, v, depth = project_point(forward_cam(), (10.0, 0.0, 1.6))
        assert (u, v) == pytest.approx((800.0, 450.0))
        assert depth == pytest.approx(10.0)

    def test_world_minus_y_is_image_right(self):
        u, _, _ = project_point(forward_cam(), (10.0, -1.0, 1.6))
        assert u == pytest.approx(800.0 + 1266.0 / 10.0)

    def test_world_up_is_image_up(self):
        _, v, _ = project_point(forward_cam(), (10.0, 0.0, 2.6))
        assert v == pytest.approx(450.0 - 1266.0 / 10.0)

    def test_yawed_camera_axis(self):
        cam = forward_cam(yaw=math.pi / 2)
        u, v, depth = project_point(cam, (0.0, 5.0, 1.6))
        assert (u, v) == pytest.approx((800.0, 450.0))
        assert depth == pytest.approx(5.0)

    def test_translation_applied_before_rotation(self):
        cam = forward_cam(position=(2.0, 3.0, 1.0))
        _, _, depth = project_point(cam, (12.0, 3.0, 1.0))
        assert depth == pytest.approx(10.0)


class TestProjectBox:
    def test_matches_corner_oracle(self):
        cam = forward_cam()
        rng = np.random.default_rng(11)
        for _ in range(100):
            b = random_box(rng, spread=4.0)
            # Push the box well in front so every corner has positive depth.
            b = make_box(
                x=b.center[0] + 25.0, y=b.center[1], z=b.center[2],
                w=b.size[0], l=b.size[1], h=b.size[2], yaw=b.yaw,
            )
            us, vs = [], []
            for corner in b.corners():
                u, v, depth = project_point(cam, corner)
                assert depth > 0
                us.append(u)
                vs.append(v)
            got = project_box(b, cam)
            assert got.valid
            assert got.u1 == pytest.approx(max(min(us), 0.0))
            assert got.v1 == pytest.approx(max(min(vs), 0.0))
            assert got.u2 == pytest.approx(min(max(us), 1600.0))
            assert got.v2 == pytest.approx(min(max(vs), 900.0))

    def test_box_behind_camera_invalid(self):
        assert not project_box(make_box(x=-20.0), forward_cam()).valid

    def test_box_outside_frame_invalid(self):
        # In front but far off to the side: projects beyond the image edge.
        assert not project_box(make_box(x=5.0, y=-100.0), forward_cam()).valid

    def test_partial_visibility_clips_to_frame(self):
        got = project_box(make_box(x=5.0, y=2.1, w=1.5, l=1.5), forward_cam())
        assert got.valid
        assert got.u1 == 0.0
        assert got.u2 > 0.0

    def test_project_all_preserves_camera_order(self):
        rig = ring_rig(6)
        b = make_box(x=30.0)
        states = project_all(b, rig)
        assert len(states) == 6
        assert states[0].valid
        for cam, state in zip(rig, states):
            assert state == project_box(b, cam)


class TestFusion:
    def test_modes(self):
        vals = [0.5, None, 0.25]
        assert fuse(vals, "sum") == pytest.approx(0.75)
        assert fuse(vals, "max") == pytest.approx(0.5)
        assert fuse(vals, "avg") == pytest.approx(0.375)

    def test_all_invalid_is_none(self):
        assert fuse([None, None]) is None
        assert fuse([]) is None

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            fuse([0.5], "median")

    def test_pairwise_requires_matching_camera_count(self):
        a = (Box2D(0, 0, 1, 1),)
        b = (Box2D(0, 0, 1, 1), Box2D(0, 0, 1, 1))
        with pytest.raises(ValueError):
            pairwise_similarity(a, b)

    def test_pairwise_none_where_either_invalid(self):
        a = (Box2D(0, 0, 2, 2), Box2D.invalid_box(), Box2D(0, 0, 2, 2))
        b = (Box2D(1, 0, 3, 2), Box2D(0, 0, 2, 2), Box2D.invalid_box())
        sims = pairwise_similarity(a, b, "iou_2d")
        assert sims[0] == pytest.approx(1.0 / 3.0)
        assert sims[1] is None
        assert sims[2] is None


class TestMultiCameraSimilarity:
    def test_symmetry(self, rig6):
        rng = np.random.default_rng(5)
        boxes_a = [make_box(x=28 + rng.uniform(-2, 2), y=rng.uniform(-4, 4), w=2, l=4) for _ in range(4)]
        boxes_b = [make_box(x=28 + rng.uniform(-2, 2), y=rng.uniform(-4, 4), w=2, l=4) for _ in range(3)]
        ab = mcas(boxes_a, boxes_b, rig6)
        ba = mcas(boxes_b, boxes_a, rig6)
        for i in range(4):
            for j in range(3):
                if ab[i][j] is None:
                    assert ba[j][i] is None
                else:
                    assert ab[i][j] == pytest.approx(ba[j][i])

    def test_camera_order_invariance(self, rig6):
        shuffled = CameraRig(rig6.cameras[::-1])
        a = [make_box(x=27.0, w=2, l=4), make_box(x=30.0, y=3.0, w=2, l=4)]
        b = [make_box(x=28.0, w=2, l=4)]
        for mode in ("sum", "max", "avg"):
            m1 = mcas(a, b, rig6, mode=mode)
            m2 = mcas(a, b, shuffled, mode=mode)
            for r1, r2 in zip(m1, m2):
                for v1, v2 in zip(r1, r2):
                    assert (v1 is None) == (v2 is None)
                    if v1 is not None:
                        assert v1 == pytest.approx(v2)

    def test_no_shared_camera_is_none(self, rig6):
        # Opposite sides of the rig: no camera sees both boxes.
        a = make_box(x=30.0)
        b = make_box(x=-30.0)
        assert mcas([a], [b], rig6)[0][0] is None

    def test_matches_naive_per_pair_evaluation(self, rig6):
        rng = np.random.default_rng(23)
        boxes_a = [random_box(rng, spread=25.0) for _ in range(5)]
        boxes_b = [random_box(rng, spread=25.0) for _ in range(5)]
        batch = mcas(boxes_a, boxes_b, rig6, app="iou_2d", mode="sum")
        for i, a in enumerate(boxes_a):
            for j, b in enumerate(boxes_b):
                naive = fuse(
                    pairwise_similarity(project_all(a, rig6), project_all(b, rig6), "iou_2d"),
                    "sum",
                )
                if naive is None:
                    assert batch[i][j] is None
                else:
                    assert batch[i][j] == pytest.approx(naive)

    def test_dropping_cameras_never_raises_sum_similarity(self, rig6):
        # Fewer views can only lose nonnegative per-camera contributions.
        rng = np.random.default_rng(31)
        pairs = [
            (random_box(rng, spread=25.0), random_box(rng, spread=25.0))
            for _ in range(30)
        ]
        for count in (1, 2, 3, 4, 5):
            small = rig6.drop_cameras(count)
            for a, b in pairs:
                full = mcas([a], [b], rig6, app="iou_2d", mode="sum")[0][0]
                less = mcas([a], [b], small, app="iou_2d", mode="sum")[0][0]
                if full is None:
                    assert less is None
                elif less is not None:
                    assert less <= full + 1e-12

    def test_states_matrix_shape(self):
        states_a = [(Box2D(0, 0, 2, 2),), (Box2D.invalid_box(),)]
        states_b = [(Box2D(1, 0, 3, 2),)]
        m = mcas_from_states(states_a, states_b)
        assert len(m) == 2 and len(m[0]) == 1
        assert m[0][0] == pytest.approx(1.0 / 3.0)
        assert m[1][0] is None
