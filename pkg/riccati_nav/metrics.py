"""Run summaries computed from the exported time series."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import CONV_HOLD, CONV_THRESHOLD, SETTLE_TIME, TIMESTAMP_TOL
from .export import RunTable, StepRecord, read_csv
from .observability import PeSweep

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsSettings:
    """Thresholds used when summarizing a run."""

    conv_threshold: float = CONV_THRESHOLD
    conv_hold: float = CONV_HOLD
    settle_time: float = SETTLE_TIME


@dataclass(frozen=True)
class TrackingMetrics:
    """Error summary that depends only on the exported columns."""

    pos_rmse: float
    vel_rmse: float
    att_rmse: float
    converged: bool
    convergence_time: float | None
    final_pos_err: float
    final_vel_err: float
    final_att_err: float
    att_err_max: float
    att_err_mean: float

    def as_dict(self) -> dict[str, Any]:
        """Return the summary as a JSON-ready dict."""
        return asdict(self)


@dataclass(frozen=True)
class RunMetrics:
    """Tracking summary plus excitation and filtering diagnostics."""

    tracking: TrackingMetrics
    pe: PeSweep | None = None
    pitch_rmse: float | None = None
    roll_rmse: float | None = None
    m_residual_var: float | None = None
    m_noise_var: float | None = None

    @property
    def converged(self) -> bool:
        """Whether the position error settled below the threshold."""
        return self.tracking.converged

    def as_dict(self) -> dict[str, Any]:
        """Return the summary as a JSON-ready dict."""
        return {
            **self.tracking.as_dict(),
            "pitch_rmse": self.pitch_rmse,
            "roll_rmse": self.roll_rmse,
            "m_residual_var": self.m_residual_var,
            "m_noise_var": self.m_noise_var,
            "pe": self.pe.as_dict() if self.pe is not None else None,
        }


def _rmse(values: NDArray[np.float64]) -> float:
    return float(np.sqrt(np.mean(np.square(values))))


def settled_mask(t: ArrayLike, settle_time: float) -> NDArray[np.bool_]:
    """Samples at or after ``settle_time``; every sample if the run is shorter."""
    t = np.asarray(t, dtype=float)
    mask = t >= settle_time - TIMESTAMP_TOL
    return mask if np.any(mask) else np.ones_like(mask)


def convergence_time(
    t: ArrayLike, err: ArrayLike, threshold: float, hold: float
) -> float | None:
    """
    Earliest time after which ``err`` stays below ``threshold``.

    Returns None unless the error ends below the threshold and stays there
    for at least ``hold`` seconds before the last sample.
    """
    t = np.asarray(t, dtype=float)
    below = np.asarray(err, dtype=float) < threshold
    if below.size == 0 or not below[-1]:
        return None
    above = np.flatnonzero(~below)
    first = int(above[-1]) + 1 if above.size else 0
    if t[-1] - t[first] < hold - TIMESTAMP_TOL:
        return None
    return float(t[first])


def log_error_slope(t: ArrayLike, err: ArrayLike, t_start: float, t_stop: float) -> float:
    """Least-squares slope of log(err) over ``[t_start, t_stop]``."""
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    mask = (t >= t_start) & (t <= t_stop) & (err > 0.0)
    if np.count_nonzero(mask) < 2:
        raise ValueError("Need at least two positive samples in the window")
    slope, _ = np.polyfit(t[mask], np.log(err[mask]), 1)
    return float(slope)


def compute_tracking(
    table: RunTable, settings: MetricsSettings | None = None
) -> TrackingMetrics:
    """Position, velocity and attitude error summary of a run."""
    settings = settings or MetricsSettings()
    t = table.t
    pos = table.column("pos_err_norm")
    vel = table.column("vel_err_norm")
    att = table.column("att_err_rad")
    mask = settled_mask(t, settings.settle_time)
    t_conv = convergence_time(t, pos, settings.conv_threshold, settings.conv_hold)
    return TrackingMetrics(
        pos_rmse=_rmse(pos[mask]),
        vel_rmse=_rmse(vel[mask]),
        att_rmse=_rmse(att[mask]),
        converged=t_conv is not None,
        convergence_time=t_conv,
        final_pos_err=float(pos[-1]),
        final_vel_err=float(vel[-1]),
        final_att_err=float(att[-1]),
        att_err_max=float(np.max(att)),
        att_err_mean=float(np.mean(att)),
    )


def _wrapped(delta: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.arctan2(np.sin(delta), np.cos(delta))


def compute_metrics(
    records: list[StepRecord],
    table: RunTable,
    settings: MetricsSettings | None = None,
    pe: PeSweep | None = None,
) -> RunMetrics:
    """Full run summary from the in-process records and their table."""
    settings = settings or MetricsSettings()
    tracking = compute_tracking(table, settings)
    mask = settled_mask(table.t, settings.settle_time)

    rp_true = np.array([r.roll_pitch_true for r in records])
    rp_est = np.array([r.roll_pitch_est for r in records])
    pitch_err, roll_err = _wrapped(rp_est - rp_true)[mask].T
    pitch_rmse = _rmse(pitch_err)
    roll_rmse = _rmse(roll_err)

    m_true = np.array([r.m_true_B for r in records])[mask]
    noise = table.column("m_meas_B")[mask] - m_true
    m_noise_var = float(np.mean(np.var(noise, axis=0)))
    m_residual_var = None
    if records[0].m_est_B is not None:
        residual = table.column("m_est_B")[mask] - m_true
        m_residual_var = float(np.mean(np.var(residual, axis=0)))

    metrics = RunMetrics(
        tracking=tracking,
        pe=pe,
        pitch_rmse=None if math.isnan(pitch_rmse) else pitch_rmse,
        roll_rmse=None if math.isnan(roll_rmse) else roll_rmse,
        m_residual_var=m_residual_var,
        m_noise_var=m_noise_var,
    )
    if tracking.converged:
        _LOGGER.info(
            "Converged at t=%.3f s (position RMSE %.3g m)",
            tracking.convergence_time,
            tracking.pos_rmse,
        )
    else:
        _LOGGER.warning(
            "Not converged: final position error %.3g m", tracking.final_pos_err
        )
    return metrics


def metrics_from_csv(
    path: str | Path, settings: MetricsSettings | None = None
) -> TrackingMetrics:
    """Recompute the tracking summary from an exported CSV file."""
    return compute_tracking(read_csv(path), settings)
