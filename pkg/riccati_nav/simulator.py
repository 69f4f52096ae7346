"""Ground-truth rigid-body simulation and sensor synthesis."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .const import (
    DEFAULT_DT,
    GRAVITY_I,
    LANDMARK_I,
    MAG_I,
    MIN_LANDMARK_DISTANCE,
    TIMESTAMP_TOL,
    UNIT_TOL,
)
from .exceptions import BearingUndefinedError, DegenerateInputError
from .so3 import Mat3, Vec3, as_vec3, check_unit, exp_so3, is_rotation

_LOGGER = logging.getLogger(__name__)

# Gauss-Legendre nodes of the fourth-order Magnus step
_GL_OFFSET = math.sqrt(3.0) / 6.0
_MAGNUS_COMMUTATOR = math.sqrt(3.0) / 12.0


@dataclass(frozen=True)
class Environment:
    """Inertial reference vectors and landmark position."""

    g_I: Vec3 = field(default_factory=lambda: np.array(GRAVITY_I))
    m_I: Vec3 = field(default_factory=lambda: np.array(MAG_I))
    p_landmark: Vec3 = field(default_factory=lambda: np.array(LANDMARK_I))

    def __post_init__(self) -> None:
        object.__setattr__(self, "g_I", as_vec3(self.g_I))
        object.__setattr__(self, "m_I", check_unit(self.m_I))
        object.__setattr__(self, "p_landmark", as_vec3(self.p_landmark))
        if np.linalg.norm(np.cross(self.g_I, self.m_I)) <= UNIT_TOL:
            raise DegenerateInputError("g_I and m_I must not be collinear")


@dataclass(frozen=True)
class TrajectorySpec:
    """Analytic position with derivatives, angular velocity and initial attitude."""

    position: Callable[[float], Vec3]
    velocity: Callable[[float], Vec3]
    acceleration: Callable[[float], Vec3]
    omega: Callable[[float], Vec3]
    R0: Mat3
    name: str = "custom"

    def __post_init__(self) -> None:
        if not is_rotation(self.R0):
            raise DegenerateInputError("R0 is not a rotation matrix")


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel white-noise power (variance per sample)."""

    omega: float = 0.0
    a_B: float = 0.0
    eta_B: float = 0.0
    m_B: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("omega", "a_B", "eta_B", "m_B"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"Noise power for {name} must be non-negative")

    @property
    def is_noise_free(self) -> bool:
        """Whether every channel is noiseless."""
        return self.omega == self.a_B == self.eta_B == self.m_B == 0.0

    def generator(self) -> np.random.Generator:
        """Fresh generator seeded from ``seed``."""
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class RigidBodyState:
    """Ground-truth position, velocity and attitude at time ``t``."""

    t: float
    p_I: Vec3
    v_I: Vec3
    R: Mat3


@dataclass(frozen=True)
class SensorFrame:
    """One synchronized measurement set."""

    t: float
    omega: Vec3
    a_B: Vec3
    eta_B: Vec3
    m_B: Vec3


class AttitudePropagator:
    """
    Integrates dR/dt = R [omega(t)]x with exact exponential steps.

    Each step is a fourth-order Magnus step, so the iterate never leaves the
    rotation group. The last evaluated (t, R) pair is cached, so walking
    forward in time costs one step per sample.
    """

    def __init__(self, spec: TrajectorySpec, step: float = DEFAULT_DT) -> None:
        if step <= 0:
            raise ValueError(f"Integration step must be positive, got {step}")
        self._spec = spec
        self._step = step
        self._t = 0.0
        self._R = np.array(spec.R0, dtype=float)

    def _advance(self, t0: float, h: float, R: Mat3) -> Mat3:
        mid = t0 + 0.5 * h
        w1 = self._spec.omega(mid - _GL_OFFSET * h)
        w2 = self._spec.omega(mid + _GL_OFFSET * h)
        phi = 0.5 * h * (w1 + w2) + _MAGNUS_COMMUTATOR * h * h * np.cross(w1, w2)
        return R @ exp_so3(phi, 1.0)

    def rotation_at(self, t: float) -> Mat3:
        """Attitude at ``t``, restarting from R0 when asked for an earlier time."""
        if t < 0:
            raise ValueError(f"t must be non-negative, got {t}")
        if t < self._t - TIMESTAMP_TOL:
            self._t = 0.0
            self._R = np.array(self._spec.R0, dtype=float)
        span = t - self._t
        if span > TIMESTAMP_TOL:
            n_steps = max(1, math.ceil(span / self._step - 1e-9))
            h = span / n_steps
            R = self._R
            for k in range(n_steps):
                R = self._advance(self._t + k * h, h, R)
            self._R = R
            self._t = t
        return self._R.copy()


def eval_truth(
    spec: TrajectorySpec,
    env: Environment,
    t: float,
    *,
    step: float = DEFAULT_DT,
    propagator: AttitudePropagator | None = None,
) -> tuple[RigidBodyState, Vec3]:
    """Ground-truth state and inertial acceleration at ``t``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if propagator is None:
        propagator = AttitudePropagator(spec, step)
    state = RigidBodyState(
        t=t,
        p_I=as_vec3(spec.position(t)),
        v_I=as_vec3(spec.velocity(t)),
        R=propagator.rotation_at(t),
    )
    return state, as_vec3(spec.acceleration(t))


def _noisy(value: Vec3, power: float, rng: np.random.Generator) -> Vec3:
    # Always draw so channel order in the stream never depends on the powers.
    return value + math.sqrt(power) * rng.standard_normal(3)


def synth_sensors(
    state: RigidBodyState,
    accel_I: ArrayLike,
    omega: ArrayLike,
    env: Environment,
    noise: NoiseSpec,
    rng: np.random.Generator | None = None,
) -> SensorFrame:
    """Synthesize one IMU, bearing and body-vector measurement set."""
    if rng is None:
        rng = noise.generator()
    offset = state.p_I - env.p_landmark
    distance = float(np.linalg.norm(offset))
    if distance <= MIN_LANDMARK_DISTANCE:
        raise BearingUndefinedError(
            f"Vehicle is {distance:.3g} m from the landmark at t={state.t:.6f}"
        )
    Rt = state.R.T
    a_B = Rt @ (as_vec3(accel_I) - env.g_I)
    eta_B = Rt @ offset / distance
    m_B = Rt @ env.m_I

    omega_meas = _noisy(as_vec3(omega), noise.omega, rng)
    a_meas = _noisy(a_B, noise.a_B, rng)
    eta_meas = _noisy(eta_B, noise.eta_B, rng)
    m_meas = _noisy(m_B, noise.m_B, rng)
    eta_norm = float(np.linalg.norm(eta_meas))
    if eta_norm <= MIN_LANDMARK_DISTANCE:
        raise BearingUndefinedError(f"Noisy bearing vanished at t={state.t:.6f}")
    return SensorFrame(
        t=state.t,
        omega=omega_meas,
        a_B=a_meas,
        eta_B=eta_meas / eta_norm,
        m_B=m_meas,
    )


def body_frame_state(
    state: RigidBodyState, env: Environment
) -> tuple[Vec3, Vec3, Vec3, Vec3]:
    """True (p_B, v_B, g_B, m_B), with position taken relative to the landmark."""
    Rt = state.R.T
    return (
        Rt @ (state.p_I - env.p_landmark),
        Rt @ state.v_I,
        Rt @ env.g_I,
        Rt @ env.m_I,
    )


def sample_count(t_end: float, dt: float) -> int:
    """Number of uniform samples on ``[0, t_end]`` including both ends."""
    return int(math.floor(t_end / dt + 1e-9)) + 1


def run_truth(
    spec: TrajectorySpec,
    env: Environment,
    noise: NoiseSpec,
    t_end: float,
    dt: float = DEFAULT_DT,
) -> list[tuple[RigidBodyState, SensorFrame]]:
    """Sample the trajectory uniformly and synthesize a measurement per sample."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < dt:
        raise ValueError(f"t_end ({t_end}) must be at least dt ({dt})")

    n_samples = sample_count(t_end, dt)
    propagator = AttitudePropagator(spec, dt)
    rng = noise.generator()
    samples: list[tuple[RigidBodyState, SensorFrame]] = []
    for k in range(n_samples):
        t = k * dt
        state, accel_I = eval_truth(spec, env, t, propagator=propagator)
        frame = synth_sensors(state, accel_I, spec.omega(t), env, noise, rng)
        samples.append((state, frame))

    _LOGGER.debug(
        "Simulated %d samples of %s trajectory (dt=%g, t_end=%g)",
        n_samples,
        spec.name,
        dt,
        t_end,
    )
    return samples
