"""Kinematic state propagation and extended Kalman filtering.

State vector (10-dim): [x, y, z, v, a, yaw, omega, w, l, h] with speed v
along the heading, acceleration a, yaw rate omega, and static extents.

Two transition models share this layout. CTRA integrates a constant
turn-rate, constant-acceleration arc in closed form; its near-zero
turn-rate branch is a third-order Taylor expansion in omega, so it meets
the exact arc to well below 1e-6 at the switch point and degenerates to
the exact straight-line form at omega = 0. The bicycle model steers a
constant-curvature (kappa = omega / v) arc about the rear axle, placed
``beta * l`` behind the box center, and rescales the yaw rate with the
new speed so curvature is preserved; it falls back to CTRA when speed is
too small to define a curvature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .categories import Category
from .geometry import Box3D, wrap_angle

log = logging.getLogger(__name__)

STATE_DIM = 10
# Index map for the state vector.
IX, IY, IZ, IV, IA, IYAW, IOMEGA, IW, IL, IH = range(STATE_DIM)

OMEGA_MIN = 1e-4  # below this, turn-rate terms use the series branch
V_MIN = 0.1  # below this speed the bicycle curvature is undefined
BETA_DEFAULT = 0.4  # rear axle sits beta * length behind the box center
REG_LAMBDA = 1e-9

MODELS = ("ctra", "bicycle")

# Measurement layout: (x, y, z, w, l, h, yaw), then (vx, vy) if present.
_MEAS_STATE_IDX = (IX, IY, IZ, IW, IL, IH, IYAW)
_MEAS_YAW_ROW = 6


@dataclass(frozen=True)
class ProcessNoise:
    """Diagonal process-noise intensities, SI units squared."""

    position: float = 0.1
    velocity: float = 0.5
    acceleration: float = 0.5
    yaw: float = 0.01
    yaw_rate: float = 0.05
    extent: float = 0.01

    def matrix(self) -> np.ndarray:
        d = [
            self.position, self.position, self.position,
            self.velocity, self.acceleration,
            self.yaw, self.yaw_rate,
            self.extent, self.extent, self.extent,
        ]
        return np.diag(d)


@dataclass(frozen=True)
class MeasurementNoise:
    """Scalar multiplier on an identity matrix of the measurement dimension."""

    multiplier: float
    dim: int

    def matrix(self) -> np.ndarray:
        return self.multiplier * np.eye(self.dim)


def measurement_noise(alpha: int, score: float, dim: int) -> MeasurementNoise:
    """Noise-adaptive measurement covariance scale: 10^alpha * (1 - score)^2.

    alpha is the association stage (0 motion, 1 appearance); higher scores
    mean more trusted measurements and strictly smaller noise.
    """
    if alpha not in (0, 1):
        raise ValueError(f"stage index must be 0 or 1, got {alpha}")
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score must be in [0, 1], got {score}")
    return MeasurementNoise(multiplier=(10.0 ** alpha) * (1.0 - score) ** 2, dim=dim)


@dataclass(frozen=True)
class KinematicState:
    """State mean, covariance, and the transition model that drives it."""

    mean: np.ndarray
    covariance: np.ndarray
    model: str = "ctra"

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (STATE_DIM,):
            raise ValueError(f"state mean must have shape ({STATE_DIM},), got {mean.shape}")
        if cov.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(f"covariance must be {STATE_DIM}x{STATE_DIM}, got {cov.shape}")
        if self.model not in MODELS:
            raise ValueError(f"unknown motion model {self.model!r}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def state_from_box(box: Box3D, model: str = "ctra", p0_scale: float = 1.0) -> KinematicState:
    """Initialize a filter state from a detection box.

    Speed is the detection velocity projected onto the box heading (signed),
    zero when the detection carries no velocity. Acceleration and yaw rate
    start at zero; covariance starts at ``p0_scale`` times identity.
    """
    mean = np.zeros(STATE_DIM)
    mean[IX], mean[IY], mean[IZ] = box.center
    mean[IYAW] = box.yaw
    mean[IW], mean[IL], mean[IH] = box.size
    if box.velocity is not None:
        vx, vy = box.velocity
        mean[IV] = vx * math.cos(box.yaw) + vy * math.sin(box.yaw)
    return KinematicState(mean=mean, covariance=p0_scale * np.eye(STATE_DIM), model=model)


def box_from_state(state: KinematicState, category: Category, score: float) -> Box3D:
    """Render the state mean back into a detection-shaped box."""
    m = state.mean
    return Box3D(
        center=(float(m[IX]), float(m[IY]), float(m[IZ])),
        size=(float(m[IW]), float(m[IL]), float(m[IH])),
        yaw=float(m[IYAW]),
        category=category,
        score=score,
        velocity=(float(m[IV] * math.cos(m[IYAW])), float(m[IV] * math.sin(m[IYAW]))),
    )


def _ctra_arc(mean: np.ndarray, dt: float) -> np.ndarray:
    x, y = mean[IX], mean[IY]
    v, a = mean[IV], mean[IA]
    th, w = mean[IYAW], mean[IOMEGA]
    out = mean.copy()
    vt = v + a * dt
    th1 = th + w * dt
    s0, c0 = math.sin(th), math.cos(th)
    s1, c1 = math.sin(th1), math.cos(th1)
    out[IX] = x + (vt * s1 - v * s0) / w + a * (c1 - c0) / (w * w)
    out[IY] = y - (vt * c1 - v * c0) / w + a * (s1 - s0) / (w * w)
    out[IV] = vt
    out[IYAW] = th1
    return out


def _time_moments(v: float, a: float, dt: float) -> tuple[float, float, float, float]:
    # m_k = integral of (v + a t) t^k over [0, dt]
    m0 = v * dt + 0.5 * a * dt * dt
    m1 = v * dt**2 / 2.0 + a * dt**3 / 3.0
    m2 = v * dt**3 / 3.0 + a * dt**4 / 4.0
    m3 = v * dt**4 / 4.0 + a * dt**5 / 5.0
    return m0, m1, m2, m3


def _ctra_series(mean: np.ndarray, dt: float) -> np.ndarray:
    v, a = mean[IV], mean[IA]
    th, w = mean[IYAW], mean[IOMEGA]
    out = mean.copy()
    m0, m1, m2, m3 = _time_moments(v, a, dt)
    along = m0 - 0.5 * w * w * m2
    across = w * m1 - w**3 * m3 / 6.0
    s0, c0 = math.sin(th), math.cos(th)
    out[IX] = mean[IX] + c0 * along - s0 * across
    out[IY] = mean[IY] + s0 * along + c0 * across
    out[IV] = v + a * dt
    out[IYAW] = th + w * dt
    return out


def ctra_transition(mean: np.ndarray, dt: float) -> np.ndarray:
    """Propagate the state mean by dt under constant turn rate and acceleration."""
    if abs(mean[IOMEGA]) < OMEGA_MIN:
        return _ctra_series(mean, dt)
    return _ctra_arc(mean, dt)


def _ctra_jacobian(mean: np.ndarray, dt: float) -> np.ndarray:
    F = np.eye(STATE_DIM)
    v, a = mean[IV], mean[IA]
    th, w = mean[IYAW], mean[IOMEGA]
    F[IV, IA] = dt
    F[IYAW, IOMEGA] = dt
    s0, c0 = math.sin(th), math.cos(th)
    if abs(w) < OMEGA_MIN:
        m0, m1, m2, m3 = _time_moments(v, a, dt)
        along = m0 - 0.5 * w * w * m2
        across = w * m1 - w**3 * m3 / 6.0
        dA_dv = dt - w * w * dt**3 / 6.0
        dA_da = dt**2 / 2.0 - w * w * dt**4 / 8.0
        dA_dw = -w * m2
        dB_dv = w * dt**2 / 2.0 - w**3 * dt**4 / 24.0
        dB_da = w * dt**3 / 3.0 - w**3 * dt**5 / 30.0
        dB_dw = m1 - 0.5 * w * w * m3
        F[IX, IV] = c0 * dA_dv - s0 * dB_dv
        F[IX, IA] = c0 * dA_da - s0 * dB_da
        F[IX, IYAW] = -s0 * along - c0 * across
        F[IX, IOMEGA] = c0 * dA_dw - s0 * dB_dw
        F[IY, IV] = s0 * dA_dv + c0 * dB_dv
        F[IY, IA] = s0 * dA_da + c0 * dB_da
        F[IY, IYAW] = c0 * along - s0 * across
        F[IY, IOMEGA] = s0 * dA_dw + c0 * dB_dw
        return F
    vt = v + a * dt
    th1 = th + w * dt
    s1, c1 = math.sin(th1), math.cos(th1)
    F[IX, IV] = (s1 - s0) / w
    F[IX, IA] = dt * s1 / w + (c1 - c0) / (w * w)
    F[IX, IYAW] = (vt * c1 - v * c0) / w - a * (s1 - s0) / (w * w)
    F[IX, IOMEGA] = (
        vt * dt * c1 / w
        - (vt * s1 - v * s0) / (w * w)
        - a * dt * s1 / (w * w)
        - 2.0 * a * (c1 - c0) / (w**3)
    )
    F[IY, IV] = -(c1 - c0) / w
    F[IY, IA] = -dt * c1 / w + (s1 - s0) / (w * w)
    F[IY, IYAW] = (vt * s1 - v * s0) / w + a * (c1 - c0) / (w * w)
    F[IY, IOMEGA] = (
        vt * dt * s1 / w
        + (vt * c1 - v * c0) / (w * w)
        + a * dt * c1 / (w * w)
        - 2.0 * a * (s1 - s0) / (w**3)
    )
    return F


def bicycle_transition(mean: np.ndarray, dt: float, beta: float = BETA_DEFAULT) -> np.ndarray:
    """Propagate the mean along a constant-curvature arc about the rear axle."""
    v = mean[IV]
    if abs(v) < V_MIN:
        return ctra_transition(mean, dt)
    a, th, w, length = mean[IA], mean[IYAW], mean[IOMEGA], mean[IL]
    d = beta * length
    kappa = w / v
    s_arc = v * dt + 0.5 * a * dt * dt
    psi = th + kappa * s_arc
    s0, c0 = math.sin(th), math.cos(th)
    s1, c1 = math.sin(psi), math.cos(psi)
    if abs(w) < OMEGA_MIN:
        u = kappa * s_arc
        dxr = s_arc * c0 - 0.5 * kappa * s_arc**2 * s0 - u * u * s_arc / 6.0 * c0
        dyr = s_arc * s0 + 0.5 * kappa * s_arc**2 * c0 - u * u * s_arc / 6.0 * s0
    else:
        dxr = (s1 - s0) / kappa
        dyr = -(c1 - c0) / kappa
    out = mean.copy()
    out[IX] = mean[IX] - d * c0 + dxr + d * c1
    out[IY] = mean[IY] - d * s0 + dyr + d * s1
    out[IV] = v + a * dt
    out[IYAW] = psi
    out[IOMEGA] = kappa * (v + a * dt)
    return out


def _bicycle_jacobian(mean: np.ndarray, dt: float, beta: float = BETA_DEFAULT) -> np.ndarray:
    v = mean[IV]
    if abs(v) < V_MIN:
        return _ctra_jacobian(mean, dt)
    a, th, w, length = mean[IA], mean[IYAW], mean[IOMEGA], mean[IL]
    d = beta * length
    kappa = w / v
    s_arc = v * dt + 0.5 * a * dt * dt
    psi = th + kappa * s_arc
    s0, c0 = math.sin(th), math.cos(th)
    s1, c1 = math.sin(psi), math.cos(psi)

    dk_dv = -w / (v * v)
    dk_dw = 1.0 / v
    ds_dv = dt
    ds_da = 0.5 * dt * dt
    dpsi_dth = 1.0
    dpsi_dv = kappa * ds_dv + s_arc * dk_dv
    dpsi_da = kappa * ds_da
    dpsi_dw = s_arc * dk_dw

    if abs(w) < OMEGA_MIN:
        u = kappa * s_arc
        dxr = s_arc * c0 - 0.5 * kappa * s_arc**2 * s0 - u * u * s_arc / 6.0 * c0
        dyr = s_arc * s0 + 0.5 * kappa * s_arc**2 * c0 - u * u * s_arc / 6.0 * s0
        ddx_dth = -s_arc * s0 - 0.5 * kappa * s_arc**2 * c0 + kappa**2 * s_arc**3 / 6.0 * s0
        ddx_dS = c0 - kappa * s_arc * s0 - 0.5 * kappa**2 * s_arc**2 * c0
        ddx_dk = -0.5 * s_arc**2 * s0 - kappa * s_arc**3 / 3.0 * c0
        ddy_dth = s_arc * c0 - 0.5 * kappa * s_arc**2 * s0 - kappa**2 * s_arc**3 / 6.0 * c0
        ddy_dS = s0 + kappa * s_arc * c0 - 0.5 * kappa**2 * s_arc**2 * s0
        ddy_dk = 0.5 * s_arc**2 * c0 - kappa * s_arc**3 / 3.0 * s0
    else:
        dxr = (s1 - s0) / kappa
        dyr = -(c1 - c0) / kappa
        ddx_dth = (c1 - c0) / kappa
        ddx_dS = c1
        ddx_dk = (s_arc * c1 - dxr) / kappa
        ddy_dth = (s1 - s0) / kappa
        ddy_dS = s1
        ddy_dk = (s_arc * s1 - dyr) / kappa

    ddx_dv = ddx_dS * ds_dv + ddx_dk * dk_dv
    ddx_da = ddx_dS * ds_da
    ddx_dw = ddx_dk * dk_dw
    ddy_dv = ddy_dS * ds_dv + ddy_dk * dk_dv
    ddy_da = ddy_dS * ds_da
    ddy_dw = ddy_dk * dk_dw

    F = np.eye(STATE_DIM)
    F[IX, IYAW] = d * s0 + ddx_dth - d * s1 * dpsi_dth
    F[IX, IV] = ddx_dv - d * s1 * dpsi_dv
    F[IX, IA] = ddx_da - d * s1 * dpsi_da
    F[IX, IOMEGA] = ddx_dw - d * s1 * dpsi_dw
    F[IX, IL] = beta * (c1 - c0)
    F[IY, IYAW] = -d * c0 + ddy_dth + d * c1 * dpsi_dth
    F[IY, IV] = ddy_dv + d * c1 * dpsi_dv
    F[IY, IA] = ddy_da + d * c1 * dpsi_da
    F[IY, IOMEGA] = ddy_dw + d * c1 * dpsi_dw
    F[IY, IL] = beta * (s1 - s0)
    F[IYAW, IV] = dpsi_dv
    F[IYAW, IA] = dpsi_da
    F[IYAW, IOMEGA] = dpsi_dw
    F[IV, IA] = dt
    F[IOMEGA, IV] = -w * a * dt / (v * v)
    F[IOMEGA, IA] = w * dt / v
    F[IOMEGA, IOMEGA] = (v + a * dt) / v
    return F


def apply_transition(model: str, mean: np.ndarray, dt: float, beta: float = BETA_DEFAULT) -> np.ndarray:
    if model == "ctra":
        return ctra_transition(mean, dt)
    if model == "bicycle":
        return bicycle_transition(mean, dt, beta)
    raise ValueError(f"unknown motion model {model!r}")


def transition_jacobian(model: str, mean: np.ndarray, dt: float, beta: float = BETA_DEFAULT) -> np.ndarray:
    """Analytic Jacobian of the chosen transition at the given mean."""
    if model == "ctra":
        return _ctra_jacobian(mean, dt)
    if model == "bicycle":
        return _bicycle_jacobian(mean, dt, beta)
    raise ValueError(f"unknown motion model {model!r}")


def predict_state(
    state: KinematicState,
    dt: float,
    q: ProcessNoise,
    beta: float = BETA_DEFAULT,
) -> KinematicState:
    """EKF time update: propagate mean and covariance by dt."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    F = transition_jacobian(state.model, state.mean, dt, beta)
    mean = apply_transition(state.model, state.mean, dt, beta)
    mean[IYAW] = wrap_angle(mean[IYAW])
    cov = F @ state.covariance @ F.T + q.matrix()
    cov = 0.5 * (cov + cov.T)
    return replace(state, mean=mean, covariance=cov)


def _measurement(box: Box3D, use_velocity: bool) -> np.ndarray:
    z = [box.center[0], box.center[1], box.center[2], *box.size, box.yaw]
    if use_velocity and box.velocity is not None:
        z.extend(box.velocity)
    return np.array(z, dtype=float)


def _measurement_model(mean: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Predicted measurement and its Jacobian H for the given dimension."""
    h = np.array([mean[i] for i in _MEAS_STATE_IDX])
    H = np.zeros((dim, STATE_DIM))
    for row, idx in enumerate(_MEAS_STATE_IDX):
        H[row, idx] = 1.0
    if dim == 9:
        v, th = mean[IV], mean[IYAW]
        s, c = math.sin(th), math.cos(th)
        h = np.concatenate([h, [v * c, v * s]])
        H[7, IV] = c
        H[7, IYAW] = -v * s
        H[8, IV] = s
        H[8, IYAW] = v * c
    elif dim != 7:
        raise ValueError(f"unsupported measurement dimension {dim}")
    return h, H


def update_state(
    state: KinematicState,
    box: Box3D,
    noise: MeasurementNoise,
    use_velocity: bool = True,
    flip_yaw: bool = False,
) -> KinematicState:
    """EKF measurement update with Joseph-form covariance.

    The yaw innovation is wrapped to (-pi, pi]; with ``flip_yaw`` a
    residual beyond pi/2 is folded by pi first, treating the detector
    heading as orientation-ambiguous.
    """
    z = _measurement(box, use_velocity)
    dim = z.shape[0]
    if noise.dim != dim:
        raise ValueError(f"noise dimension {noise.dim} does not match measurement {dim}")
    pred, H = _measurement_model(state.mean, dim)
    innov = z - pred
    yaw_err = wrap_angle(innov[_MEAS_YAW_ROW])
    if flip_yaw and abs(yaw_err) > 0.5 * math.pi:
        yaw_err = wrap_angle(yaw_err + math.pi)
    innov[_MEAS_YAW_ROW] = yaw_err

    P = state.covariance
    R = noise.matrix()
    S = H @ P @ H.T + R
    try:
        K = np.linalg.solve(S, H @ P).T
    except np.linalg.LinAlgError:
        log.debug("singular innovation covariance; regularizing with %g * I", REG_LAMBDA)
        S = S + REG_LAMBDA * np.eye(dim)
        K = np.linalg.solve(S, H @ P).T

    mean = state.mean + K @ innov
    mean[IYAW] = wrap_angle(mean[IYAW])
    ikh = np.eye(STATE_DIM) - K @ H
    cov = ikh @ P @ ikh.T + K @ R @ K.T
    cov = 0.5 * (cov + cov.T)
    return replace(state, mean=mean, covariance=cov)
