"""Transition matrices, observability Gramians and persistency-of-excitation margins."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .const import (
    BEARING_UNIT_TOL,
    DEFAULT_PE_DELTA,
    DEFAULT_PE_STEP,
    PE_THRESHOLD,
    TIMESTAMP_TOL,
)
from .exceptions import HorizonError, NormalizationError
from .observer import Variant, build_matrices
from .simulator import SensorFrame

_LOGGER = logging.getLogger(__name__)

Matrix = NDArray[np.float64]


@dataclass(frozen=True)
class GramianReport:
    """Observability Gramian over ``[t_start, t_start + delta]``."""

    t_start: float
    delta: float
    W: Matrix
    min_eig: float
    mu_pe: float
    pe_satisfied: bool


@dataclass(frozen=True)
class PeSweep:
    """Bearing excitation margin over a sequence of windows."""

    delta: float
    window_starts: NDArray[np.float64]
    mu: NDArray[np.float64]
    threshold: float = PE_THRESHOLD

    @property
    def min_mu(self) -> float:
        """Smallest margin over all windows."""
        return float(np.min(self.mu)) if self.mu.size else math.nan

    @property
    def satisfied(self) -> bool:
        """Whether every window clears the threshold."""
        return bool(self.mu.size) and self.min_mu > self.threshold

    def as_dict(self) -> dict[str, float | bool | int]:
        """Return the sweep summary as a JSON-ready dict."""
        return {
            "delta": self.delta,
            "windows": int(self.mu.size),
            "min_mu": self.min_mu,
            "max_mu": float(np.max(self.mu)) if self.mu.size else math.nan,
            "threshold": self.threshold,
            "satisfied": self.satisfied,
        }


def _rk4_step_maps(A: Matrix, A_mid: Matrix, h: float) -> Matrix:
    """
    One-step propagators of dphi/dt = A(t) phi for every sample interval.

    For a linear system the classical RK4 step is itself a matrix; computing
    it once per interval turns every transition query into a product.
    """
    n = A.shape[-1]
    eye = np.eye(n)
    A0, A1 = A[:-1], A[1:]
    k1 = A0
    k2 = A_mid @ (eye + 0.5 * h * k1)
    k3 = A_mid @ (eye + 0.5 * h * k2)
    k4 = A1 @ (eye + h * k3)
    return eye + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_samples(A: Matrix) -> Matrix:
    """Cubic interpolation of ``A`` at interval midpoints (quadratic at the ends)."""
    N = A.shape[0]
    if N < 3:
        return 0.5 * (A[:-1] + A[1:])
    mid = np.empty_like(A[:-1])
    # Interior intervals use the four surrounding samples
    mid[1:-1] = (-A[:-3] + 9.0 * A[1:-2] + 9.0 * A[2:-1] - A[3:]) / 16.0
    mid[0] = 0.375 * A[0] + 0.75 * A[1] - 0.125 * A[2]
    mid[-1] = -0.125 * A[-3] + 0.75 * A[-2] + 0.375 * A[-1]
    return mid


@dataclass(frozen=True)
class SampledLtv:
    """Uniformly sampled (A, C) pair, optionally with inertial bearings."""

    times: NDArray[np.float64]
    A: Matrix
    C: Matrix
    eta_I: NDArray[np.float64] | None = None
    step_maps: Matrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise HorizonError("Need at least two samples")
        if A.shape[0] != times.size or C.shape[0] != times.size:
            raise ValueError("A, C and times must have the same number of samples")
        steps = np.diff(times)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps[0]:
            raise HorizonError("Samples must be uniformly spaced and increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        if self.eta_I is not None:
            object.__setattr__(self, "eta_I", np.asarray(self.eta_I, dtype=float))
        object.__setattr__(
            self, "step_maps", _rk4_step_maps(A, _midpoint_samples(A), float(steps[0]))
        )

    @property
    def h(self) -> float:
        """Sample spacing."""
        return float(self.times[1] - self.times[0])

    @property
    def n_states(self) -> int:
        """State dimension of the sampled system."""
        return self.A.shape[-1]

    def index(self, t: float) -> int:
        """Sample index of time ``t``; it must lie on the grid."""
        k = int(round((t - self.times[0]) / self.h))
        if k < 0 or k >= self.times.size:
            raise HorizonError(
                f"t={t:.6f} outside horizon [{self.times[0]:.6f}, {self.times[-1]:.6f}]"
            )
        if abs(self.times[k] - t) > max(TIMESTAMP_TOL, 1e-6 * self.h):
            raise HorizonError(f"t={t:.9f} is not a sample time")
        return k

    def window(self, t: float, delta: float) -> tuple[int, int]:
        """Start and end sample indices of ``[t, t + delta]``."""
        if delta <= 0:
            raise HorizonError(f"Window length must be positive, got {delta}")
        return self.index(t), self.index(t + delta)


def sample_ltv(
    frames: Sequence[SensorFrame],
    variant: Variant | str = Variant.FULL,
    rotations: Sequence[ArrayLike] | None = None,
) -> SampledLtv:
    """Stack the model matrices along a measurement sequence."""
    variant = Variant(variant)
    mats = [build_matrices(f.omega, f.eta_B, variant) for f in frames]
    eta_I = None
    if rotations is not None:
        eta_I = np.array(
            [np.asarray(R) @ f.eta_B for R, f in zip(rotations, frames, strict=True)]
        )
    return SampledLtv(
        times=np.array([f.t for f in frames]),
        A=np.array([m.A for m in mats]),
        C=np.array([m.C for m in mats]),
        eta_I=eta_I,
    )


def _forward_transition(sampled: SampledLtv, k0: int, k1: int) -> Matrix:
    phi = np.eye(sampled.n_states)
    for k in range(k0, k1):
        phi = sampled.step_maps[k] @ phi
    return phi


def transition_matrix(sampled: SampledLtv, s: float, t: float) -> Matrix:
    """State transition matrix phi(t, s), mapping x(s) to x(t)."""
    ks, kt = sampled.index(s), sampled.index(t)
    if kt >= ks:
        return _forward_transition(sampled, ks, kt)
    return np.linalg.inv(_forward_transition(sampled, kt, ks))


def _trapezoid_weights(n: int, h: float) -> NDArray[np.float64]:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _gramian_integrand_sum(
    phis: Matrix, CtC: Matrix, weights: NDArray[np.float64]
) -> Matrix:
    terms = np.einsum("kji,kjl,klm->kim", phis, CtC, phis, optimize=True)
    return np.tensordot(weights, terms, axes=1)


def _report(
    t: float, delta: float, W: Matrix, mu_pe: float, threshold: float
) -> GramianReport:
    W = 0.5 * (W + W.T)
    min_eig = float(np.linalg.eigvalsh(W)[0])
    return GramianReport(
        t_start=t,
        delta=delta,
        W=W,
        min_eig=min_eig,
        mu_pe=mu_pe,
        pe_satisfied=min_eig > threshold,
    )


def gramian(
    sampled: SampledLtv,
    t: float,
    delta: float,
    *,
    threshold: float = PE_THRESHOLD,
) -> GramianReport:
    """Windowed observability Gramian by trapezoidal quadrature."""
    k0, k1 = sampled.window(t, delta)
    n = sampled.n_states
    phis = np.empty((k1 - k0 + 1, n, n))
    phis[0] = np.eye(n)
    for j, k in enumerate(range(k0, k1), start=1):
        phis[j] = sampled.step_maps[k] @ phis[j - 1]
    C = sampled.C[k0 : k1 + 1]
    CtC = np.einsum("kji,kjl->kil", C, C)
    weights = _trapezoid_weights(k1 - k0 + 1, sampled.h)
    W = _gramian_integrand_sum(phis, CtC, weights) / delta

    mu_pe = math.nan
    if sampled.eta_I is not None:
        mu_pe = pe_margin(sampled.times, sampled.eta_I, t, delta)
    return _report(t, delta, W, mu_pe, threshold)


def nilpotent_chain_transition(tau: float, n_states: int = 12) -> Matrix:
    """exp(A_bar tau) for the position-velocity-gravity chain (plus vector block)."""
    A_bar = np.zeros((n_states, n_states))
    A_bar[0:3, 3:6] = np.eye(3)
    A_bar[3:6, 6:9] = np.eye(3)
    # The chain is nilpotent of order three, so the series stops at tau^2
    return np.eye(n_states) + tau * A_bar + 0.5 * tau**2 * (A_bar @ A_bar)


def block_rotation(R: ArrayLike, n_blocks: int = 4) -> Matrix:
    """Block-diagonal matrix repeating ``R`` ``n_blocks`` times."""
    return linalg.block_diag(*([np.asarray(R, dtype=float)] * n_blocks))


def gramian_via_factorization(
    sampled: SampledLtv,
    rotations: Sequence[ArrayLike],
    t: float,
    delta: float,
    *,
    mu: float = 1.0,
) -> Matrix:
    """
    Gramian of the full pair through the inertial change of variables.

    With z = T(t) x the dynamics become the constant nilpotent chain, so
    phi(s, t) = T(s)^T exp(A_bar (s - t)) T(t) and the integrand reduces to
    exp(A_bar tau)^T C_bar^T Sigma(s) C_bar exp(A_bar tau) with
    Sigma(s) = blkdiag(Pi_eta_I(s), mu I) and C_bar = [[I 0 0 0], [0 0 0 I/sqrt(mu)]].
    """
    if sampled.n_states != 12:
        raise ValueError("Factorization applies to the 12-state pair")
    if sampled.eta_I is None:
        raise ValueError("Sampled system carries no inertial bearings")
    if len(rotations) != sampled.times.size:
        raise ValueError("Need one rotation per sample")
    k0, k1 = sampled.window(t, delta)

    C_bar = np.zeros((6, 12))
    C_bar[0:3, 0:3] = np.eye(3)
    C_bar[3:6, 9:12] = np.eye(3) / math.sqrt(mu)

    weights = _trapezoid_weights(k1 - k0 + 1, sampled.h)
    inner = np.zeros((12, 12))
    for j, k in enumerate(range(k0, k1 + 1)):
        eta = sampled.eta_I[k]
        Sigma = linalg.block_diag(np.eye(3) - np.outer(eta, eta), mu * np.eye(3))
        phi_bar = nilpotent_chain_transition(sampled.times[k] - sampled.times[k0])
        M = C_bar @ phi_bar
        inner += weights[j] * (M.T @ Sigma @ M)

    T = block_rotation(rotations[k0])
    W = T.T @ inner @ T / delta
    return 0.5 * (W + W.T)


def pe_margin(
    times: ArrayLike, eta_I: ArrayLike, t: float, delta: float
) -> float:
    """Minimum eigenvalue of the window-averaged bearing projector."""
    times = np.asarray(times, dtype=float)
    eta = np.asarray(eta_I, dtype=float)
    if delta <= 0:
        raise HorizonError(f"Window length must be positive, got {delta}")
    h = float(times[1] - times[0])
    k0 = int(round((t - times[0]) / h))
    k1 = int(round((t + delta - times[0]) / h))
    if k0 < 0 or k1 >= times.size:
        raise HorizonError(
            f"Window [{t:.6f}, {t + delta:.6f}] outside horizon "
            f"[{times[0]:.6f}, {times[-1]:.6f}]"
        )
    window = eta[k0 : k1 + 1]
    norms = np.linalg.norm(window, axis=1)
    if np.max(np.abs(norms - 1.0)) > BEARING_UNIT_TOL:
        raise NormalizationError("Bearing samples must have unit norm")

    projectors = np.eye(3) - np.einsum("ki,kj->kij", window, window)
    weights = _trapezoid_weights(window.shape[0], h)
    average = np.tensordot(weights, projectors, axes=1) / (h * (k1 - k0))
    return float(np.linalg.eigvalsh(0.5 * (average + average.T))[0])


def window_starts(t_end: float, delta: float, step: float) -> NDArray[np.float64]:
    """Start times of the windows ``[t, t + delta]`` that fit in ``[0, t_end]``."""
    if delta <= 0:
        raise HorizonError(f"Window length must be positive, got {delta}")
    if step <= 0:
        raise HorizonError(f"Window step must be positive, got {step}")
    if delta > t_end + TIMESTAMP_TOL:
        raise HorizonError(f"Window length {delta} exceeds horizon {t_end}")
    count = int(math.floor((t_end - delta) / step + 1e-9)) + 1
    return np.arange(count) * step


def pe_sweep(
    times: ArrayLike,
    eta_I: ArrayLike,
    delta: float = DEFAULT_PE_DELTA,
    step: float = DEFAULT_PE_STEP,
    *,
    threshold: float = PE_THRESHOLD,
) -> PeSweep:
    """Bearing excitation margin over sliding windows."""
    times = np.asarray(times, dtype=float)
    starts = times[0] + window_starts(times[-1] - times[0], delta, step)
    mu = np.array([pe_margin(times, eta_I, t, delta) for t in starts])
    for t, value in zip(starts, mu, strict=True):
        _LOGGER.debug("PE window [%.2f, %.2f]: mu=%.6g", t, t + delta, value)
    return PeSweep(delta=delta, window_starts=starts, mu=mu, threshold=threshold)


def gramian_sweep(
    sampled: SampledLtv,
    delta: float = DEFAULT_PE_DELTA,
    step: float = DEFAULT_PE_STEP,
    *,
    threshold: float = PE_THRESHOLD,
) -> list[GramianReport]:
    """Gramian reports over sliding windows."""
    starts = sampled.times[0] + window_starts(
        sampled.times[-1] - sampled.times[0], delta, step
    )
    reports = [gramian(sampled, t, delta, threshold=threshold) for t in starts]
    for report in reports:
        _LOGGER.debug(
            "Gramian window [%.2f, %.2f]: min_eig=%.6g",
            report.t_start,
            report.t_start + report.delta,
            report.min_eig,
        )
    return reports
