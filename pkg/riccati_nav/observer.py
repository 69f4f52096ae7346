"""Riccati observers for body-frame position, velocity, gravity and vector states."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .const import (
    BEARING_UNIT_TOL,
    COLLINEAR_TOL,
    DEFAULT_DT,
    GRAVITY_I,
    LANDMARK_I,
    MAG_I,
    MIN_GRAVITY_NORM,
    NORMALIZE_TOL,
    TIMESTAMP_TOL,
    UNIT_TOL,
    VARIANT_DECOUPLED,
    VARIANT_FULL,
    VARIANT_REDUCED,
)
from .exceptions import DegenerateInputError, HorizonError, NumericalFailure
from .simulator import Environment, SensorFrame
from .so3 import IDENTITY3, Mat3, Vec3, as_vec3, project_to_rotation, skew

_LOGGER = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Weight = Matrix | Callable[[float], Matrix]

ZERO3 = np.zeros((3, 3))

# Lagrange weights at the midpoint of the last interval of three uniform samples
_QUADRATIC_MID = (-0.125, 0.75, 0.375)


class Variant(str, Enum):
    """Observer family member."""

    FULL = VARIANT_FULL
    DECOUPLED = VARIANT_DECOUPLED
    REDUCED = VARIANT_REDUCED

    @property
    def n_states(self) -> int:
        """Length of the state vector."""
        return 9 if self is Variant.REDUCED else 12

    @property
    def n_outputs(self) -> int:
        """Length of the output vector."""
        return 3 if self is Variant.REDUCED else 6


@dataclass(frozen=True)
class LtvMatrices:
    """System matrices of the linear time-varying model at one instant."""

    A: Matrix
    B: Matrix
    C: Matrix


@dataclass(frozen=True)
class WeightSchedule:
    """Piecewise-constant weight: ``base`` scaled by the last breakpoint at or before t."""

    base: Matrix
    breakpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        ordered = tuple(sorted((float(t), float(s)) for t, s in self.breakpoints))
        if any(scale <= 0.0 for _, scale in ordered):
            raise ValueError("Schedule scales must be positive")
        object.__setattr__(self, "breakpoints", ordered)

    def __call__(self, t: float) -> Matrix:
        scale = 1.0
        for t_break, s in self.breakpoints:
            if t >= t_break - TIMESTAMP_TOL:
                scale = s
        return self.base * scale


def weight_at(weight: Weight, t: float) -> Matrix:
    """Evaluate a constant or time-varying weight matrix."""
    if callable(weight):
        return np.asarray(weight(t), dtype=float)
    return np.asarray(weight, dtype=float)


def _is_positive_definite(M: Matrix) -> bool:
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def _is_block_diagonal(M: Matrix, split: int) -> bool:
    return not (np.any(M[:split, split:]) or np.any(M[split:, :split]))


@dataclass(frozen=True)
class ObserverConfig:
    """Tuning and environment of a Riccati observer."""

    variant: Variant = Variant.FULL
    P0: Matrix = field(default_factory=lambda: np.eye(12))
    V: Weight = field(default_factory=lambda: 36.0 * np.eye(12))
    Q: Weight = field(default_factory=lambda: np.eye(6))
    dt: float = DEFAULT_DT
    g_I: Vec3 = field(default_factory=lambda: np.array(GRAVITY_I))
    m_I: Vec3 = field(default_factory=lambda: np.array(MAG_I))

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "P0", np.asarray(self.P0, dtype=float))
        object.__setattr__(self, "g_I", as_vec3(self.g_I))
        object.__setattr__(self, "m_I", as_vec3(self.m_I))
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

        n, p = self.variant.n_states, self.variant.n_outputs
        weights = {"P0": self.P0, "V": self._probe(self.V), "Q": self._probe(self.Q)}
        sizes = {"P0": n, "V": n, "Q": p}
        for name, M in weights.items():
            if M.shape != (sizes[name], sizes[name]):
                raise ValueError(
                    f"{name} must be {sizes[name]}x{sizes[name]} for the "
                    f"{self.variant.value} variant, got {M.shape}"
                )
            if np.max(np.abs(M - M.T)) > UNIT_TOL:
                raise ValueError(f"{name} must be symmetric")
            if not _is_positive_definite(M):
                raise ValueError(f"{name} must be positive definite")

        if self.variant is Variant.DECOUPLED:
            splits = {"P0": 9, "V": 9, "Q": 3}
            for name, M in weights.items():
                if not _is_block_diagonal(M, splits[name]):
                    raise ValueError(
                        f"{name} must be block diagonal for the decoupled variant"
                    )

    @staticmethod
    def _probe(weight: Weight) -> Matrix:
        if isinstance(weight, WeightSchedule):
            return weight.base
        return weight_at(weight, 0.0)


@dataclass(frozen=True)
class ObserverState:
    """Estimate, Riccati matrix and the most recent measurement frames."""

    x_hat: NDArray[np.float64]
    P: Matrix
    t: float
    inputs: tuple[SensorFrame, ...] = ()

    @property
    def p_hat(self) -> Vec3:
        """Body-frame position estimate."""
        return self.x_hat[0:3]

    @property
    def v_hat(self) -> Vec3:
        """Body-frame velocity estimate."""
        return self.x_hat[3:6]

    @property
    def g_hat(self) -> Vec3:
        """Body-frame gravity estimate."""
        return self.x_hat[6:9]

    @property
    def m_hat(self) -> Vec3 | None:
        """Body-frame vector estimate, None for the reduced variant."""
        return self.x_hat[9:12] if self.x_hat.shape[0] == 12 else None


def _unit_bearing(eta_B: ArrayLike) -> Vec3:
    eta = as_vec3(eta_B)
    norm = float(np.linalg.norm(eta))
    if norm <= NORMALIZE_TOL:
        raise DegenerateInputError("Bearing vector is zero")
    if abs(norm - 1.0) > BEARING_UNIT_TOL:
        _LOGGER.debug("Renormalizing bearing of norm %.9f", norm)
    return eta / norm


def build_matrices(
    omega: ArrayLike, eta_B: ArrayLike, variant: Variant | str
) -> LtvMatrices:
    """A, B and C of the body-frame model for the given variant."""
    variant = Variant(variant)
    W = -skew(omega)
    eta = _unit_bearing(eta_B)
    Pi = IDENTITY3 - np.outer(eta, eta)

    if variant is Variant.REDUCED:
        A = np.block(
            [
                [W, IDENTITY3, ZERO3],
                [ZERO3, W, IDENTITY3],
                [ZERO3, ZERO3, W],
            ]
        )
        B = np.vstack([ZERO3, IDENTITY3, ZERO3])
        C = np.hstack([Pi, ZERO3, ZERO3])
        return LtvMatrices(A=A, B=B, C=C)

    A = np.block(
        [
            [W, IDENTITY3, ZERO3, ZERO3],
            [ZERO3, W, IDENTITY3, ZERO3],
            [ZERO3, ZERO3, W, ZERO3],
            [ZERO3, ZERO3, ZERO3, W],
        ]
    )
    B = np.vstack([ZERO3, IDENTITY3, ZERO3, ZERO3])
    C = np.block(
        [
            [Pi, ZERO3, ZERO3, ZERO3],
            [ZERO3, ZERO3, ZERO3, IDENTITY3],
        ]
    )
    return LtvMatrices(A=A, B=B, C=C)


def _vector_block_matrices(omega: ArrayLike) -> LtvMatrices:
    """Matrices of the stand-alone body-vector filter dm/dt = -[w]x m, y = m."""
    return LtvMatrices(A=-skew(omega), B=ZERO3, C=IDENTITY3)


def _riccati_rhs(P: Matrix, mats: LtvMatrices, V: Matrix, Q: Matrix) -> Matrix:
    A, C = mats.A, mats.C
    PCt = P @ C.T
    return A @ P + P @ A.T - PCt @ Q @ PCt.T + V


def _stage_triple(
    mats: LtvMatrices | Sequence[LtvMatrices],
) -> tuple[LtvMatrices, LtvMatrices, LtvMatrices]:
    if isinstance(mats, LtvMatrices):
        return mats, mats, mats
    if len(mats) != 3:
        raise ValueError("Expected matrices at the start, midpoint and end of the step")
    return mats[0], mats[1], mats[2]


def _riccati_rk4(
    P: Matrix,
    mats: tuple[LtvMatrices, LtvMatrices, LtvMatrices],
    V: Matrix,
    Q: Matrix,
    dt: float,
) -> tuple[Matrix, tuple[Matrix, Matrix, Matrix, Matrix]]:
    """One RK4 step of the Riccati ODE; also returns the four stage points."""
    start, mid, end = mats
    k1 = _riccati_rhs(P, start, V, Q)
    P2 = P + 0.5 * dt * k1
    k2 = _riccati_rhs(P2, mid, V, Q)
    P3 = P + 0.5 * dt * k2
    k3 = _riccati_rhs(P3, mid, V, Q)
    P4 = P + dt * k3
    k4 = _riccati_rhs(P4, end, V, Q)
    P_next = P + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return P_next, (P, P2, P3, P4)


def _finalize_riccati(P: Matrix, t: float | None = None) -> Matrix:
    where = f" at t={t:.6f}" if t is not None else ""
    # cholesky does not reject nan
    if not np.all(np.isfinite(P)):
        raise NumericalFailure(
            f"Riccati matrix became non-finite{where}", t=t, min_eig=math.nan
        )
    P = 0.5 * (P + P.T)
    if not _is_positive_definite(P):
        min_eig = float(np.linalg.eigvalsh(P)[0])
        raise NumericalFailure(
            f"Riccati matrix lost positive definiteness{where} "
            f"(min eigenvalue {min_eig:.6g})",
            t=t,
            min_eig=min_eig,
        )
    return P


def riccati_step(
    P: ArrayLike,
    mats: LtvMatrices | Sequence[LtvMatrices],
    V: ArrayLike,
    Q: ArrayLike,
    dt: float,
) -> Matrix:
    """
    Advance dP/dt = A P + P A^T - P C^T Q C P + V by one RK4 step.

    ``mats`` is either one set of matrices held over the step or a
    (start, midpoint, end) triple. The result is symmetrized and must stay
    positive definite.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    P_next, _ = _riccati_rk4(
        np.asarray(P, dtype=float),
        _stage_triple(mats),
        np.asarray(V, dtype=float),
        np.asarray(Q, dtype=float),
        dt,
    )
    return _finalize_riccati(P_next)


def _advance(
    x: NDArray[np.float64],
    P: Matrix,
    mats: tuple[LtvMatrices, LtvMatrices, LtvMatrices],
    inputs: tuple[Vec3, Vec3, Vec3],
    outputs: tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]],
    V: Matrix,
    Q: Matrix,
    dt: float,
    t: float,
) -> tuple[NDArray[np.float64], Matrix]:
    """Joint RK4 step of the estimate and the Riccati matrix."""
    P_next, P_stages = _riccati_rk4(P, mats, V, Q, dt)
    stage_index = (0, 1, 1, 2)

    def rhs(x_stage: NDArray[np.float64], k: int) -> NDArray[np.float64]:
        i = stage_index[k]
        A, B, C = mats[i].A, mats[i].B, mats[i].C
        K = P_stages[k] @ C.T @ Q
        return A @ x_stage + B @ inputs[i] + K @ (outputs[i] - C @ x_stage)

    k1 = rhs(x, 0)
    k2 = rhs(x + 0.5 * dt * k1, 1)
    k3 = rhs(x + 0.5 * dt * k2, 2)
    k4 = rhs(x + dt * k3, 3)
    x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    P_next = _finalize_riccati(P_next, t + dt)
    if not np.all(np.isfinite(x_next)):
        raise NumericalFailure(
            f"State estimate became non-finite at t={t + dt:.6f}",
            t=t + dt,
            min_eig=math.nan,
        )
    return x_next, P_next


def _midpoint_frame(history: tuple[SensorFrame, ...], frame: SensorFrame) -> SensorFrame:
    """Measurements interpolated at the midpoint between the last frame and ``frame``."""
    prev = history[-1]
    if len(history) >= 2:
        nodes = (history[-2], prev, frame)
        weights = _QUADRATIC_MID
    else:
        nodes = (prev, frame)
        weights = (0.5, 0.5)

    def blend(values: Sequence[Vec3]) -> Vec3:
        return sum(w * v for w, v in zip(weights, values, strict=True))

    # Bearings enter only through their projector, so the sign is free; align
    # it before blending so that passing through the landmark stays smooth.
    etas = [
        node.eta_B if float(node.eta_B @ prev.eta_B) >= 0.0 else -node.eta_B
        for node in nodes
    ]
    eta_mid = blend(etas)
    norm = float(np.linalg.norm(eta_mid))
    eta_mid = eta_mid / norm if norm > NORMALIZE_TOL else prev.eta_B
    return SensorFrame(
        t=0.5 * (prev.t + frame.t),
        omega=blend([n.omega for n in nodes]),
        a_B=blend([n.a_B for n in nodes]),
        eta_B=eta_mid,
        m_B=blend([n.m_B for n in nodes]),
    )


def _bearing_block_step(
    x: NDArray[np.float64],
    P: Matrix,
    frames: tuple[SensorFrame, SensorFrame, SensorFrame],
    V: Matrix,
    Q: Matrix,
    dt: float,
    t: float,
) -> tuple[NDArray[np.float64], Matrix]:
    """Step the 9-state (position, velocity, gravity) observer."""
    mats = tuple(build_matrices(f.omega, f.eta_B, Variant.REDUCED) for f in frames)
    zero = np.zeros(3)
    return _advance(
        x,
        P,
        mats,  # type: ignore[arg-type]
        (frames[0].a_B, frames[1].a_B, frames[2].a_B),
        (zero, zero, zero),
        V,
        Q,
        dt,
        t,
    )


def _vector_block_step(
    x: NDArray[np.float64],
    P: Matrix,
    frames: tuple[SensorFrame, SensorFrame, SensorFrame],
    V: Matrix,
    Q: Matrix,
    dt: float,
    t: float,
) -> tuple[NDArray[np.float64], Matrix]:
    """Step the 3-state body-vector filter."""
    mats = tuple(_vector_block_matrices(f.omega) for f in frames)
    zero = np.zeros(3)
    return _advance(
        x,
        P,
        mats,  # type: ignore[arg-type]
        (zero, zero, zero),
        (frames[0].m_B, frames[1].m_B, frames[2].m_B),
        V,
        Q,
        dt,
        t,
    )


def initial_state(
    cfg: ObserverConfig, x0: ArrayLike, frame: SensorFrame
) -> ObserverState:
    """Observer state at the time of the first measurement frame."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (cfg.variant.n_states,):
        raise ValueError(
            f"x0 must have {cfg.variant.n_states} entries for the "
            f"{cfg.variant.value} variant, got {x0.shape[0]}"
        )
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    return ObserverState(x_hat=x0, P=cfg.P0.copy(), t=frame.t, inputs=(frame,))


def observer_step(
    s: ObserverState, frame: SensorFrame, cfg: ObserverConfig
) -> ObserverState:
    """Advance the observer to the time of ``frame``."""
    if not s.inputs:
        raise ValueError("Observer state has no previous measurement frame")
    if abs(frame.t - (s.t + cfg.dt)) > TIMESTAMP_TOL:
        raise HorizonError(
            f"Frame at t={frame.t:.9f} does not follow state at t={s.t:.9f} "
            f"with step {cfg.dt}"
        )

    frames = (s.inputs[-1], _midpoint_frame(s.inputs, frame), frame)
    V = weight_at(cfg.V, s.t)
    Q = weight_at(cfg.Q, s.t)
    h = cfg.dt

    if cfg.variant is Variant.REDUCED:
        x_next, P_next = _bearing_block_step(s.x_hat, s.P, frames, V, Q, h, s.t)
    elif cfg.variant is Variant.DECOUPLED:
        x1, P1 = _bearing_block_step(
            s.x_hat[:9], s.P[:9, :9], frames, V[:9, :9], Q[:3, :3], h, s.t
        )
        x2, P2 = _vector_block_step(
            s.x_hat[9:], s.P[9:, 9:], frames, V[9:, 9:], Q[3:, 3:], h, s.t
        )
        x_next = np.concatenate([x1, x2])
        P_next = linalg.block_diag(P1, P2)
    else:
        mats = tuple(build_matrices(f.omega, f.eta_B, Variant.FULL) for f in frames)
        zero = np.zeros(3)
        x_next, P_next = _advance(
            s.x_hat,
            s.P,
            mats,  # type: ignore[arg-type]
            (frames[0].a_B, frames[1].a_B, frames[2].a_B),
            tuple(np.concatenate([zero, f.m_B]) for f in frames),  # type: ignore[arg-type]
            V,
            Q,
            h,
            s.t,
        )

    return ObserverState(
        x_hat=x_next, P=P_next, t=frame.t, inputs=(s.inputs[-1], frame)
    )


def _frame_matrix(g: Vec3, m: Vec3) -> tuple[Mat3, tuple[float, float, float]]:
    gm = np.cross(g, m)
    ggm = np.cross(g, gm)
    return np.column_stack([g, gm, ggm]), (
        float(np.linalg.norm(g)),
        float(np.linalg.norm(gm)),
        float(np.linalg.norm(ggm)),
    )


def reconstruct_attitude(
    g_hat_B: ArrayLike, m_hat_B: ArrayLike, env: Environment
) -> tuple[Mat3, Mat3]:
    """
    Algebraic attitude from body-frame gravity and vector estimates.

    Returns the raw estimate (not necessarily orthogonal while the observer
    is still converging) and its projection onto the rotation group.
    """
    g_hat = as_vec3(g_hat_B)
    m_hat = as_vec3(m_hat_B)
    if np.linalg.norm(np.cross(g_hat, m_hat)) <= COLLINEAR_TOL:
        raise DegenerateInputError("Estimated gravity and body vector are collinear")

    inertial, norms = _frame_matrix(env.g_I, env.m_I)
    R_bar = inertial / np.array(norms)
    body, _ = _frame_matrix(g_hat, m_hat)
    R_hat_t = (body / np.array(norms)) @ R_bar.T
    R_raw = R_hat_t.T
    return R_raw, project_to_rotation(R_raw)


def roll_pitch_from_gravity(g_hat_B: ArrayLike) -> tuple[float, float]:
    """Pitch and roll (ZYX convention) from the body-frame gravity estimate."""
    g1, g2, g3 = as_vec3(g_hat_B)
    if math.sqrt(g1 * g1 + g2 * g2 + g3 * g3) <= MIN_GRAVITY_NORM:
        raise DegenerateInputError("Gravity estimate is too small for roll/pitch")
    theta = math.atan2(-g1, math.hypot(g2, g3))
    phi = math.atan2(g2, g3)
    if phi <= -math.pi:
        phi = math.pi
    return theta, phi


def recover_inertial(
    s: ObserverState, R_hat: ArrayLike, env: Environment
) -> tuple[Vec3, Vec3]:
    """Inertial position and velocity estimates from the body-frame state."""
    R_hat = np.asarray(R_hat, dtype=float)
    return R_hat @ s.p_hat + env.p_landmark, R_hat @ s.v_hat


class RiccatiObserver:
    """Stateful wrapper driving :func:`observer_step` frame by frame."""

    def __init__(
        self,
        cfg: ObserverConfig,
        x0: ArrayLike,
        first_frame: SensorFrame,
        *,
        p_landmark: ArrayLike = LANDMARK_I,
        R_hat0: ArrayLike = IDENTITY3,
    ) -> None:
        """Initialize the observer at the time of the first frame."""
        self.cfg = cfg
        self.env = Environment(g_I=cfg.g_I, m_I=cfg.m_I, p_landmark=p_landmark)
        self._R_hat = np.asarray(R_hat0, dtype=float)
        self._R_raw = self._R_hat.copy()
        self._frame = first_frame

        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if cfg.variant is not Variant.REDUCED and x0.shape == (9,):
            # Vector estimate seeded from the initial attitude guess
            x0 = np.concatenate([x0, self._R_hat.T @ self.env.m_I])
        self.state = initial_state(cfg, x0, first_frame)

    @property
    def t(self) -> float:
        """Time of the current estimate."""
        return self.state.t

    @property
    def variant(self) -> Variant:
        """Observer variant in use."""
        return self.cfg.variant

    def update(self, frame: SensorFrame) -> ObserverState:
        """Consume the next measurement frame."""
        self.state = observer_step(self.state, frame, self.cfg)
        self._frame = frame
        return self.state

    def attitude(self) -> tuple[Mat3, Mat3]:
        """
        Raw and projected attitude estimates.

        The reduced variant has no vector estimate and uses the latest
        measured body vector instead. While the estimates are degenerate the
        last valid attitude is held.
        """
        m = self.state.m_hat
        if m is None:
            m = self._frame.m_B
        try:
            self._R_raw, self._R_hat = reconstruct_attitude(
                self.state.g_hat, m, self.env
            )
        except DegenerateInputError as err:
            _LOGGER.debug("Holding attitude at t=%.3f: %s", self.t, err)
        return self._R_raw, self._R_hat

    def roll_pitch(self) -> tuple[float, float]:
        """Pitch and roll derived from the gravity estimate."""
        return roll_pitch_from_gravity(self.state.g_hat)

    def inertial(self) -> tuple[Vec3, Vec3]:
        """Inertial position and velocity estimates."""
        _, R_hat = self.attitude()
        return recover_inertial(self.state, R_hat, self.env)
