"""Analytic trajectories built from offset, rate and sinusoid coefficient tables."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from .const import MIN_LANDMARK_DISTANCE
from .exceptions import DegenerateInputError
from .simulator import TrajectorySpec
from .so3 import E2, IDENTITY3, Vec3, as_vec3, exp_so3


@dataclass(frozen=True)
class SinusoidTerm:
    """One ``amp * sin(freq * t + phase)`` term."""

    amp: float
    freq: float
    phase: float = 0.0


@dataclass(frozen=True)
class AxisSignal:
    """Scalar signal ``offset + rate * t + sum(terms)`` with analytic derivatives."""

    offset: float = 0.0
    rate: float = 0.0
    terms: tuple[SinusoidTerm, ...] = ()

    def derivative(self, t: float, order: int = 0) -> float:
        """Value (order 0) or n-th time derivative at ``t``."""
        total = 0.0
        if order == 0:
            total = self.offset + self.rate * t
        elif order == 1:
            total = self.rate
        for term in self.terms:
            # d^n/dt^n sin(wt + c) = w^n sin(wt + c + n*pi/2)
            total += (
                term.amp
                * term.freq**order
                * math.sin(term.freq * t + term.phase + order * math.pi / 2.0)
            )
        return total


@dataclass(frozen=True)
class SignalTable:
    """Three axis signals forming a vector-valued function of time."""

    axes: tuple[AxisSignal, AxisSignal, AxisSignal]

    def __call__(self, t: float, order: int = 0) -> Vec3:
        return np.array([axis.derivative(t, order) for axis in self.axes])

    def is_bounded(self) -> bool:
        """Whether no axis grows linearly in time."""
        return all(axis.rate == 0.0 for axis in self.axes)


def signal_table(table: Sequence[Mapping[str, Any]]) -> SignalTable:
    """Build a :class:`SignalTable` from three coefficient mappings."""
    if len(table) != 3:
        raise ValueError(f"Expected three axis entries, got {len(table)}")
    axes = tuple(
        AxisSignal(
            offset=float(axis.get("offset", 0.0)),
            rate=float(axis.get("rate", 0.0)),
            terms=tuple(
                SinusoidTerm(
                    amp=float(term["amp"]),
                    freq=float(term["freq"]),
                    phase=float(term.get("phase", 0.0)),
                )
                for term in axis.get("terms", ())
            ),
        )
        for axis in table
    )
    return SignalTable(axes)  # type: ignore[arg-type]


def table_trajectory(
    position: SignalTable,
    omega: SignalTable,
    R0: ArrayLike = IDENTITY3,
    name: str = "table",
) -> TrajectorySpec:
    """Trajectory whose position and angular velocity are coefficient tables."""
    if not omega.is_bounded():
        raise ValueError("Angular velocity must be bounded (no rate terms)")
    return TrajectorySpec(
        position=lambda t: position(t, 0),
        velocity=lambda t: position(t, 1),
        acceleration=lambda t: position(t, 2),
        omega=lambda t: omega(t, 0),
        R0=np.asarray(R0, dtype=float),
        name=name,
    )


# Position: p(t) = [cos(5t), sin(10t)/4, -sqrt(3) sin(10t)/4]
EIGHT_POSITION: list[dict[str, Any]] = [
    {"terms": [{"amp": 1.0, "freq": 5.0, "phase": math.pi / 2.0}]},
    {"terms": [{"amp": 0.25, "freq": 10.0}]},
    {"terms": [{"amp": -math.sqrt(3.0) / 4.0, "freq": 10.0}]},
]

# Angular velocity: [sin(0.1t + pi), 0.5 sin(0.2t), 0.1 sin(0.3t + pi/3)]
EIGHT_OMEGA: list[dict[str, Any]] = [
    {"terms": [{"amp": 1.0, "freq": 0.1, "phase": math.pi}]},
    {"terms": [{"amp": 0.5, "freq": 0.2}]},
    {"terms": [{"amp": 0.1, "freq": 0.3, "phase": math.pi / 3.0}]},
]

ZERO_SIGNAL: list[dict[str, Any]] = [{}, {}, {}]


def eight_trajectory() -> TrajectorySpec:
    """Eight-shaped trajectory with R(0) = exp(pi/2 [e2]x)."""
    return table_trajectory(
        signal_table(EIGHT_POSITION),
        signal_table(EIGHT_OMEGA),
        R0=exp_so3(math.pi / 2.0 * E2, 1.0),
        name="eight",
    )


def static_trajectory(position: ArrayLike = (2.0, 1.0, -1.0)) -> TrajectorySpec:
    """Vehicle at rest with constant attitude."""
    p = as_vec3(position)
    table = [{"offset": float(c)} for c in p]
    return table_trajectory(
        signal_table(table), signal_table(ZERO_SIGNAL), name="static"
    )


def radial_line_trajectory(
    start: ArrayLike = (20.0, 0.0, 0.0), speed: float = 0.5
) -> TrajectorySpec:
    """Straight-line flight toward the landmark at the origin."""
    p0 = as_vec3(start)
    distance = float(np.linalg.norm(p0))
    if distance <= MIN_LANDMARK_DISTANCE:
        raise DegenerateInputError("Radial line must start away from the landmark")
    direction = -p0 / distance
    table = [
        {"offset": float(p0[i]), "rate": float(speed * direction[i])} for i in range(3)
    ]
    omega = [{"terms": [{"amp": 0.2, "freq": 0.5}]}, {}, {}]
    return table_trajectory(signal_table(table), signal_table(omega), name="radial-line")


def circle_trajectory(
    radius: float = 2.0, rate: float = 1.0, height: float = -1.0
) -> TrajectorySpec:
    """Horizontal circle around the landmark."""
    table = [
        {"terms": [{"amp": radius, "freq": rate, "phase": math.pi / 2.0}]},
        {"terms": [{"amp": radius, "freq": rate}]},
        {"offset": height},
    ]
    omega = [{}, {}, {"offset": rate}]
    return table_trajectory(signal_table(table), signal_table(omega), name="circle")


def random_trajectory(rng: np.random.Generator, n_terms: int = 2) -> TrajectorySpec:
    """Random sinusoidal trajectory kept away from the landmark at the origin."""
    position = []
    for axis in range(3):
        offset = 3.0 if axis == 0 else 0.0
        terms = [
            {
                "amp": float(rng.uniform(0.2, 1.0)),
                "freq": float(rng.uniform(0.5, 3.0)),
                "phase": float(rng.uniform(0.0, 2.0 * math.pi)),
            }
            for _ in range(n_terms)
        ]
        position.append({"offset": offset, "terms": terms})
    omega = [
        {
            "terms": [
                {
                    "amp": float(rng.uniform(0.1, 0.8)),
                    "freq": float(rng.uniform(0.1, 1.0)),
                    "phase": float(rng.uniform(0.0, 2.0 * math.pi)),
                }
            ]
        }
        for _ in range(3)
    ]
    R0 = exp_so3(rng.normal(size=3), 1.0)
    return table_trajectory(
        signal_table(position), signal_table(omega), R0=R0, name="random"
    )
