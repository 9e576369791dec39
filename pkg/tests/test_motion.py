"""Motion model and filter tests against independent numerical oracles."""

import logging
import math

import numpy as np
import pytest

from camtrack3d.categories import Category
from camtrack3d.motion import (
    BETA_DEFAULT,
    IA,
    IH,
    IL,
    IOMEGA,
    IV,
    IW,
    IX,
    IY,
    IYAW,
    IZ,
    OMEGA_MIN,
    STATE_DIM,
    V_MIN,
    KinematicState,
    MeasurementNoise,
    ProcessNoise,
    apply_transition,
    bicycle_transition,
    box_from_state,
    ctra_transition,
    measurement_noise,
    predict_state,
    state_from_box,
    transition_jacobian,
    update_state,
)

from conftest import make_box

DT = 0.5


def random_state(rng, model="ctra"):
    m = np.zeros(STATE_DIM)
    m[IX], m[IY] = rng.uniform(-20, 20, 2)
    m[IZ] = rng.uniform(0, 3)
    m[IV] = rng.uniform(-10, 15)
    m[IA] = rng.uniform(-3, 3)
    m[IYAW] = rng.uniform(-math.pi, math.pi)
    m[IOMEGA] = rng.uniform(-1.0, 1.0)
    m[IW], m[IL], m[IH] = rng.uniform(0.5, 4, 3)
    if model == "bicycle":
        # Keep clear of the low-speed fallback boundary so finite
        # differences probe a single smooth branch.
        while abs(m[IV]) < V_MIN + 0.2:
            m[IV] = rng.uniform(-10, 15)
    if abs(m[IOMEGA]) < 3 * OMEGA_MIN:
        m[IOMEGA] = 3 * OMEGA_MIN * (1 if m[IOMEGA] >= 0 else -1)
    return m


def rk4(f, s0, dt, n=2000):
    s = np.asarray(s0, dtype=float).copy()
    h = dt / n
    for _ in range(n):
        k1 = f(s)
        k2 = f(s + 0.5 * h * k1)
        k3 = f(s + 0.5 * h * k2)
        k4 = f(s + h * k3)
        s = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def ctra_rk4(mean, dt):
    """Independent integration of the planar turn-and-accelerate dynamics."""
    a, w = mean[IA], mean[IOMEGA]

    def f(s):
        x, y, v, th = s
        return np.array([v * math.cos(th), v * math.sin(th), a, w])

    x, y, v, th = rk4(f, [mean[IX], mean[IY], mean[IV], mean[IYAW]], dt)
    out = mean.copy()
    out[IX], out[IY], out[IV], out[IYAW] = x, y, v, th
    return out


def bicycle_rk4(mean, dt, beta=BETA_DEFAULT):
    """Rear-axle arc integrated numerically, then recomposed at the center."""
    v0, a, th0, w = mean[IV], mean[IA], mean[IYAW], mean[IOMEGA]
    d = beta * mean[IL]
    kappa = w / v0

    def f(s):
        xr, yr, v, th = s
        return np.array([v * math.cos(th), v * math.sin(th), a, kappa * v])

    xr0 = mean[IX] - d * math.cos(th0)
    yr0 = mean[IY] - d * math.sin(th0)
    xr, yr, v1, th1 = rk4(f, [xr0, yr0, v0, th0], dt)
    out = mean.copy()
    out[IX] = xr + d * math.cos(th1)
    out[IY] = yr + d * math.sin(th1)
    out[IV] = v1
    out[IYAW] = th1
    out[IOMEGA] = kappa * v1
    return out


def fd_jacobian(model, mean, dt):
    F = np.zeros((STATE_DIM, STATE_DIM))
    for i in range(STATE_DIM):
        h = 1e-6 * max(1.0, abs(mean[i]))
        hi, lo = mean.copy(), mean.copy()
        hi[i] += h
        lo[i] -= h
        F[:, i] = (apply_transition(model, hi, dt) - apply_transition(model, lo, dt)) / (2 * h)
    return F


class TestTurnTransition:
    def test_straight_line_exact(self):
        m = np.zeros(STATE_DIM)
        m[IV], m[IYAW] = 6.0, 0.7
        m[IW] = m[IL] = m[IH] = 1.0
        out = ctra_transition(m, DT)
        assert out[IX] == pytest.approx(6.0 * DT * math.cos(0.7), abs=1e-12)
        assert out[IY] == pytest.approx(6.0 * DT * math.sin(0.7), abs=1e-12)
        assert out[IYAW] == pytest.approx(0.7)

    def test_constant_acceleration_displacement(self):
        m = np.zeros(STATE_DIM)
        m[IV], m[IA] = 4.0, 2.0
        out = ctra_transition(m, DT)
        assert out[IX] == pytest.approx(4.0 * DT + 0.5 * 2.0 * DT * DT, abs=1e-12)
        assert out[IV] == pytest.approx(5.0)

    def test_quarter_turn_closed_form(self):
        # Unit-radius circle: after one second at these rates the object
        # sits at (1, 1) facing +y.
        m = np.zeros(STATE_DIM)
        m[IV] = math.pi / 2
        m[IOMEGA] = math.pi / 2
        out = ctra_transition(m, 1.0)
        assert out[IX] == pytest.approx(1.0, abs=1e-9)
        assert out[IY] == pytest.approx(1.0, abs=1e-9)
        assert out[IYAW] == pytest.approx(math.pi / 2, abs=1e-12)

    def test_matches_numerical_integration(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = random_state(rng)
            got = ctra_transition(m, DT)
            want = ctra_rk4(m, DT)
            assert np.allclose(got, want, atol=1e-9), (m, got - want)

    def test_small_turn_rate_branch_matches_integration(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = random_state(rng)
            m[IOMEGA] = rng.uniform(-OMEGA_MIN, OMEGA_MIN)
            assert np.allclose(ctra_transition(m, DT), ctra_rk4(m, DT), atol=1e-9)

    def test_branch_continuity_at_threshold(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = random_state(rng)
            lo, hi = m.copy(), m.copy()
            lo[IOMEGA] = OMEGA_MIN - 1e-9
            hi[IOMEGA] = OMEGA_MIN + 1e-9
            assert np.allclose(ctra_transition(lo, DT), ctra_transition(hi, DT), atol=1e-6)

    def test_extent_and_vertical_untouched(self):
        rng = np.random.default_rng(6)
        m = random_state(rng)
        out = ctra_transition(m, DT)
        for i in (IZ, IW, IL, IH):
            assert out[i] == m[i]


class TestAxleTransition:
    def test_matches_numerical_integration(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = random_state(rng, model="bicycle")
            got = bicycle_transition(m, DT)
            want = bicycle_rk4(m, DT)
            assert np.allclose(got, want, atol=1e-8), (m, got - want)

    def test_turn_rate_follows_speed(self):
        # Curvature is held, so the turn rate rescales with the new speed.
        m = np.zeros(STATE_DIM)
        m[IV], m[IA], m[IOMEGA], m[IL] = 10.0, 2.0, 0.3, 4.0
        m[IW] = m[IH] = 1.0
        out = bicycle_transition(m, DT)
        assert out[IV] == pytest.approx(11.0)
        assert out[IOMEGA] == pytest.approx(0.3 * 11.0 / 10.0)

    def test_low_speed_falls_back_to_turn_model(self):
        m = np.zeros(STATE_DIM)
        m[IV], m[IOMEGA], m[IL] = 0.05, 0.2, 4.0
        m[IW] = m[IH] = 1.0
        assert np.array_equal(bicycle_transition(m, DT), ctra_transition(m, DT))

    def test_small_turn_rate_branch(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m = random_state(rng, model="bicycle")
            m[IOMEGA] = rng.uniform(-OMEGA_MIN, OMEGA_MIN)
            assert np.allclose(bicycle_transition(m, DT), bicycle_rk4(m, DT), atol=1e-7)

    def test_rear_axle_recomposition_no_acceleration(self):
        # With constant speed the rear axle traces an exact circular arc;
        # reconstruct the center independently from that arc.
        m = np.zeros(STATE_DIM)
        m[IV], m[IOMEGA], m[IYAW], m[IL] = 8.0, 0.4, 0.3, 5.0
        m[IW] = m[IH] = 2.0
        d = BETA_DEFAULT * m[IL]
        kappa = m[IOMEGA] / m[IV]
        s_arc = m[IV] * DT
        th1 = m[IYAW] + kappa * s_arc
        xr = m[IX] - d * math.cos(m[IYAW]) + (math.sin(th1) - math.sin(m[IYAW])) / kappa
        yr = m[IY] - d * math.sin(m[IYAW]) - (math.cos(th1) - math.cos(m[IYAW])) / kappa
        out = bicycle_transition(m, DT)
        assert out[IX] == pytest.approx(xr + d * math.cos(th1), abs=1e-12)
        assert out[IY] == pytest.approx(yr + d * math.sin(th1), abs=1e-12)
        assert out[IYAW] == pytest.approx(th1)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError):
            apply_transition("cv", np.zeros(STATE_DIM), DT)
        with pytest.raises(ValueError):
            transition_jacobian("cv", np.zeros(STATE_DIM), DT)


class TestJacobians:
    @pytest.mark.parametrize("model", ["ctra", "bicycle"])
    def test_matches_finite_differences(self, model):
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(100):
            m = random_state(rng, model=model)
            F = transition_jacobian(model, m, DT)
            FD = fd_jacobian(model, m, DT)
            worst = max(worst, float(np.max(np.abs(F - FD))))
        assert worst < 1e-4

    @pytest.mark.parametrize("model", ["ctra", "bicycle"])
    def test_small_turn_rate_branch(self, model):
        rng = np.random.default_rng(10)
        for _ in range(30):
            m = random_state(rng, model=model)
            m[IOMEGA] = rng.uniform(-0.5, 0.5) * OMEGA_MIN
            F = transition_jacobian(model, m, DT)
            FD = fd_jacobian(model, m, DT)
            assert np.allclose(F, FD, atol=1e-4)

    def test_length_moves_position_in_axle_model(self):
        # The rear-axle pivot depends on box length; turning must expose it.
        m = np.zeros(STATE_DIM)
        m[IV], m[IOMEGA], m[IL] = 8.0, 0.5, 4.0
        m[IW] = m[IH] = 1.0
        F = transition_jacobian("bicycle", m, DT)
        assert F[IX, IL] != 0.0 or F[IY, IL] != 0.0
        assert np.allclose(F, fd_jacobian("bicycle", m, DT), atol=1e-5)


class TestPredict:
    def q(self):
        return ProcessNoise()

    def test_requires_positive_dt(self):
        s = KinematicState(np.zeros(STATE_DIM), np.eye(STATE_DIM))
        with pytest.raises(ValueError):
            predict_state(s, 0.0, self.q())
        with pytest.raises(ValueError):
            predict_state(s, -0.5, self.q())

    def test_zero_covariance_becomes_process_noise(self):
        s = KinematicState(np.zeros(STATE_DIM), np.zeros((STATE_DIM, STATE_DIM)))
        out = predict_state(s, DT, self.q())
        assert np.allclose(out.covariance, self.q().matrix())

    def test_covariance_stays_symmetric_psd(self):
        rng = np.random.default_rng(12)
        for model in ("ctra", "bicycle"):
            s = KinematicState(random_state(rng, model), np.eye(STATE_DIM), model=model)
            for _ in range(100):
                s = predict_state(s, DT, self.q())
                assert np.allclose(s.covariance, s.covariance.T)
                assert np.linalg.eigvalsh(s.covariance).min() > -1e-9

    def test_yaw_wrapped_after_predict(self):
        m = np.zeros(STATE_DIM)
        m[IYAW], m[IOMEGA] = 3.0, 1.0
        s = KinematicState(m, np.eye(STATE_DIM))
        out = predict_state(s, DT, self.q())
        assert out.mean[IYAW] == pytest.approx(3.5 - 2 * math.pi)

    def test_uncertainty_grows_without_measurements(self):
        rng = np.random.default_rng(13)
        s = KinematicState(random_state(rng), np.eye(STATE_DIM))
        prev = np.trace(s.covariance)
        for _ in range(10):
            s = predict_state(s, DT, self.q())
            cur = np.trace(s.covariance)
            assert cur > prev
            prev = cur


class TestMeasurementNoise:
    def test_confidence_law(self):
        assert measurement_noise(0, 0.0, 7).multiplier == pytest.approx(1.0)
        assert measurement_noise(1, 0.0, 7).multiplier == pytest.approx(10.0)
        assert measurement_noise(0, 0.8, 7).multiplier == pytest.approx(0.04)
        assert measurement_noise(1, 0.8, 7).multiplier == pytest.approx(0.4)
        assert measurement_noise(0, 1.0, 7).multiplier == 0.0

    def test_higher_confidence_never_raises_noise(self):
        for alpha in (0, 1):
            scores = np.linspace(0, 1, 50)
            mults = [measurement_noise(alpha, float(s), 7).multiplier for s in scores]
            assert all(b <= a + 1e-15 for a, b in zip(mults, mults[1:]))

    def test_matrix_is_scaled_identity(self):
        n = measurement_noise(1, 0.5, 9)
        assert np.allclose(n.matrix(), (10.0 * 0.25) * np.eye(9))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            measurement_noise(2, 0.5, 7)
        with pytest.raises(ValueError):
            measurement_noise(0, 1.5, 7)


class TestUpdate:
    def prior(self, p=2.0):
        m = np.zeros(STATE_DIM)
        m[IW] = m[IL] = m[IH] = 1.0
        return KinematicState(m, p * np.eye(STATE_DIM))

    def test_exact_measurement_with_zero_noise(self):
        z = make_box(x=1.0, y=-2.0, z=0.5, w=2.0, l=3.0, h=1.5, yaw=0.4)
        out = update_state(self.prior(), z, MeasurementNoise(0.0, 7), use_velocity=False)
        assert out.mean[IX] == pytest.approx(1.0)
        assert out.mean[IY] == pytest.approx(-2.0)
        assert out.mean[IZ] == pytest.approx(0.5)
        assert tuple(out.mean[[IW, IL, IH]]) == pytest.approx((2.0, 3.0, 1.5))
        assert out.mean[IYAW] == pytest.approx(0.4)

    def test_huge_noise_leaves_state(self):
        z = make_box(x=5.0, y=5.0)
        prior = self.prior()
        out = update_state(prior, z, MeasurementNoise(1e12, 7), use_velocity=False)
        assert np.allclose(out.mean, prior.mean, atol=1e-9)

    def test_scalar_gain(self):
        # Diagonal prior and noise reduce each measured component to the
        # classic one-dimensional filter: gain p / (p + r).
        z = make_box(x=1.0)
        out = update_state(self.prior(p=2.0), z, MeasurementNoise(0.5, 7), use_velocity=False)
        assert out.mean[IX] == pytest.approx(0.8 * 1.0)
        assert out.covariance[IX, IX] == pytest.approx(2.0 * 0.5 / 2.5)
        # Unmeasured kinematic components stay put under a diagonal prior.
        assert out.mean[IV] == 0.0
        assert out.covariance[IV, IV] == pytest.approx(2.0)

    def test_yaw_innovation_wraps(self):
        prior = self.prior(p=2.0)
        prior.mean[IYAW] = math.pi - 0.1
        z = make_box(yaw=-math.pi + 0.1)
        out = update_state(prior, z, MeasurementNoise(0.5, 7), use_velocity=False)
        # Innovation is +0.2 across the seam, gain 0.8, posterior wraps.
        assert out.mean[IYAW] == pytest.approx(math.pi - 0.1 + 0.16 - 2 * math.pi)

    def test_opposite_heading_folds_when_enabled(self):
        prior = self.prior()
        z = make_box(yaw=math.pi - 0.05)
        folded = update_state(prior, z, MeasurementNoise(0.5, 7),
                              use_velocity=False, flip_yaw=True)
        raw = update_state(prior, z, MeasurementNoise(0.5, 7),
                           use_velocity=False, flip_yaw=False)
        # Folded: the near-pi residual is treated as a flipped detection.
        assert abs(folded.mean[IYAW]) < 0.1
        assert abs(raw.mean[IYAW]) > 1.0

    def test_velocity_measurement_dimensions(self):
        z = make_box(x=1.0, velocity=(3.0, 0.0))
        out = update_state(self.prior(), z, MeasurementNoise(0.5, 9), use_velocity=True)
        assert out.mean[IV] > 0.5
        with pytest.raises(ValueError):
            update_state(self.prior(), z, MeasurementNoise(0.5, 7), use_velocity=True)
        # Without detector velocity the measurement shrinks to 7 entries.
        z7 = make_box(x=1.0)
        with pytest.raises(ValueError):
            update_state(self.prior(), z7, MeasurementNoise(0.5, 9), use_velocity=True)

    def test_joseph_form_keeps_covariance_valid(self):
        rng = np.random.default_rng(14)
        s = self.prior()
        for k in range(200):
            z = make_box(
                x=rng.normal(), y=rng.normal(), z=1.0 + 0.1 * rng.normal(),
                yaw=rng.uniform(-3, 3), score=float(rng.uniform(0.05, 1.0)),
            )
            noise = measurement_noise(k % 2, z.score, 7)
            s = update_state(s, z, noise, use_velocity=False)
            assert np.allclose(s.covariance, s.covariance.T)
            assert np.linalg.eigvalsh(s.covariance).min() > -1e-9
            s = predict_state(s, DT, ProcessNoise())

    def test_noiseless_convergence(self):
        # Predict keeps the gain bounded away from zero, so the full
        # filter loop homes in geometrically on a stationary object.
        truth = make_box(x=3.0, y=-1.0, z=0.8, w=2.0, l=4.5, h=1.6, yaw=0.9)
        s = self.prior()
        for _ in range(30):
            s = predict_state(s, DT, ProcessNoise())
            s = update_state(s, truth, MeasurementNoise(0.16, 7), use_velocity=False)
        assert s.mean[IX] == pytest.approx(3.0, abs=1e-6)
        assert s.mean[IY] == pytest.approx(-1.0, abs=1e-6)
        assert s.mean[IYAW] == pytest.approx(0.9, abs=1e-6)
        assert s.mean[IV] == pytest.approx(0.0, abs=1e-3)
        assert s.covariance[IX, IX] < 0.2

    def test_singular_innovation_regularized(self, caplog):
        # Zero prior covariance and zero noise make S exactly singular.
        s = KinematicState(np.zeros(STATE_DIM), np.zeros((STATE_DIM, STATE_DIM)))
        z = make_box(x=1.0)
        with caplog.at_level(logging.DEBUG, logger="camtrack3d.motion"):
            out = update_state(s, z, MeasurementNoise(0.0, 7), use_velocity=False)
        assert np.all(np.isfinite(out.mean))
        assert np.all(np.isfinite(out.covariance))
        assert "regulariz" in caplog.text


class TestBoxStateConversion:
    def test_velocity_projects_onto_heading(self):
        b = make_box(yaw=math.pi / 2, velocity=(0.0, 7.0))
        s = state_from_box(b)
        assert s.mean[IV] == pytest.approx(7.0)
        sideways = make_box(yaw=0.0, velocity=(0.0, 7.0))
        assert state_from_box(sideways).mean[IV] == pytest.approx(0.0)

    def test_reverse_velocity_is_negative_speed(self):
        b = make_box(yaw=0.0, velocity=(-4.0, 0.0))
        assert state_from_box(b).mean[IV] == pytest.approx(-4.0)

    def test_round_trip(self):
        b = make_box(x=2, y=3, z=1.2, w=1.5, l=4.0, h=1.8, yaw=0.6,
                     velocity=(5.0 * math.cos(0.6), 5.0 * math.sin(0.6)))
        s = state_from_box(b, model="bicycle", p0_scale=2.5)
        assert np.allclose(s.covariance, 2.5 * np.eye(STATE_DIM))
        back = box_from_state(s, b.category, 0.7)
        assert back.center == pytest.approx(b.center)
        assert back.size == pytest.approx(b.size)
        assert back.yaw == pytest.approx(b.yaw)
        assert back.velocity == pytest.approx(b.velocity)
        assert back.score == 0.7

    def test_no_velocity_starts_at_rest(self):
        assert state_from_box(make_box()).mean[IV] == 0.0

    def test_state_validation(self):
        with pytest.raises(ValueError):
            KinematicState(np.zeros(5), np.eye(5))
        with pytest.raises(ValueError):
            KinematicState(np.zeros(STATE_DIM), np.eye(STATE_DIM), model="cv")
