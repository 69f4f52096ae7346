"""Scenario pipeline: simulate, estimate, summarize and export."""

from __future__ import annotations

import asyncio
import dataclasses
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .const import CSV_FILENAME, DIAGNOSTICS_FILENAME, PREVIEW_FILENAME
from .diagnostics import build_diagnostics, write_diagnostics
from .exceptions import DegenerateInputError, HorizonError, NumericalFailure
from .export import RunTable, StepRecord, write_csv
from .metrics import RunMetrics, compute_metrics
from .observability import PeSweep, pe_sweep, window_starts
from .observer import RiccatiObserver, roll_pitch_from_gravity
from .render import render_preview
from .scenario import ScenarioConfig
from .simulator import RigidBodyState, SensorFrame, body_frame_state, run_truth
from .so3 import Vec3, rotation_angle_error

_LOGGER = logging.getLogger(__name__)

_NAN_PAIR = (math.nan, math.nan)


@dataclass(frozen=True)
class ScenarioResult:
    """Outcome of one scenario run."""

    config: ScenarioConfig
    records: list[StepRecord]
    table: RunTable
    metrics: RunMetrics
    csv_path: Path | None = None
    diagnostics_path: Path | None = None
    preview_path: Path | None = None

    @property
    def pe(self) -> PeSweep | None:
        """Excitation sweep of the run, if the horizon allowed one."""
        return self.metrics.pe


def _roll_pitch(g_B: Vec3) -> tuple[float, float]:
    try:
        return roll_pitch_from_gravity(g_B)
    except DegenerateInputError:
        return _NAN_PAIR


def inertial_bearings(
    states: Sequence[RigidBodyState], p_landmark: Vec3
) -> np.ndarray:
    """Unit landmark-to-vehicle directions in the inertial frame."""
    offsets = np.array([s.p_I for s in states]) - p_landmark
    return offsets / np.linalg.norm(offsets, axis=1, keepdims=True)


class ScenarioCoordinator:
    """Drives one scenario from truth generation to exported files."""

    def __init__(self, cfg: ScenarioConfig) -> None:
        """Initialize the coordinator."""
        self.cfg = cfg
        self.samples: list[tuple[RigidBodyState, SensorFrame]] = []

    def simulate(self) -> list[tuple[RigidBodyState, SensorFrame]]:
        """Generate truth and sensor frames for the configured horizon."""
        cfg = self.cfg
        self.samples = run_truth(
            cfg.trajectory, cfg.environment, cfg.noise, cfg.t_end, cfg.dt
        )
        return self.samples

    def estimate(self) -> list[StepRecord]:
        """Run the observer over the simulated frames."""
        cfg = self.cfg
        env = cfg.environment
        first_state, first_frame = self.samples[0]
        observer = RiccatiObserver(
            cfg.observer,
            cfg.x0,
            first_frame,
            p_landmark=env.p_landmark,
            R_hat0=cfg.R_hat0,
        )

        records = [self._record(observer, first_state, first_frame)]
        for state, frame in self.samples[1:]:
            try:
                observer.update(frame)
            except NumericalFailure as err:
                _LOGGER.error(
                    "Scenario %s failed at t=%.6f: %s", cfg.name, frame.t, err
                )
                raise
            records.append(self._record(observer, state, frame))
        return records

    def _record(
        self, observer: RiccatiObserver, state: RigidBodyState, frame: SensorFrame
    ) -> StepRecord:
        env = self.cfg.environment
        _, R_hat = observer.attitude()
        p_est, v_est = observer.inertial()
        _, _, g_true_B, m_true_B = body_frame_state(state, env)
        estimate = observer.state
        return StepRecord(
            t=state.t,
            p_true=state.p_I,
            v_true=state.v_I,
            p_est=p_est,
            v_est=v_est,
            att_err=rotation_angle_error(R_hat, state.R),
            g_est_B=estimate.g_hat.copy(),
            m_meas_B=frame.m_B,
            m_est_B=None if estimate.m_hat is None else estimate.m_hat.copy(),
            m_true_B=m_true_B,
            roll_pitch_true=_roll_pitch(g_true_B),
            roll_pitch_est=_roll_pitch(estimate.g_hat),
        )

    def excitation(self) -> PeSweep | None:
        """PE sweep over the true trajectory, or None when the run is too short."""
        cfg = self.cfg
        states = [state for state, _ in self.samples]
        times = np.array([s.t for s in states])
        try:
            sweep = pe_sweep(
                times,
                inertial_bearings(states, cfg.environment.p_landmark),
                cfg.pe_delta,
                cfg.pe_step,
            )
        except HorizonError as err:
            _LOGGER.warning("Skipping excitation sweep: %s", err)
            return None
        if not sweep.satisfied:
            _LOGGER.warning(
                "Bearing excitation below threshold (min mu %.3g over %.1f s windows)",
                sweep.min_mu,
                sweep.delta,
            )
        return sweep

    def run(self) -> ScenarioResult:
        """Simulate, estimate, summarize and, if configured, export."""
        cfg = self.cfg
        _LOGGER.info(
            "Running scenario %s: %s observer, t_end=%g s, dt=%g s",
            cfg.name,
            cfg.variant.value,
            cfg.t_end,
            cfg.dt,
        )
        self.simulate()
        records = self.estimate()
        table = RunTable.from_records(records)
        metrics = compute_metrics(records, table, cfg.metrics, self.excitation())
        result = ScenarioResult(config=cfg, records=records, table=table, metrics=metrics)
        if cfg.out_dir is not None:
            result = self.export(result, cfg.out_dir)
        return result

    def export(self, result: ScenarioResult, out_dir: Path) -> ScenarioResult:
        """Write the CSV, the diagnostics file and the optional preview."""
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = write_csv(result.table, out_dir / CSV_FILENAME)
        preview_path = None
        if self.cfg.preview:
            preview_path = out_dir / PREVIEW_FILENAME
            preview_path.write_bytes(render_preview(
                result.table, tuple(self.cfg.environment.p_landmark[:2])
            ))
            _LOGGER.info("Wrote preview to %s", preview_path)
        result = dataclasses.replace(
            result, csv_path=csv_path, preview_path=preview_path
        )
        diagnostics_path = write_diagnostics(
            build_diagnostics(result), out_dir / DIAGNOSTICS_FILENAME
        )
        return dataclasses.replace(result, diagnostics_path=diagnostics_path)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Simulate, estimate and summarize one scenario."""
    return ScenarioCoordinator(cfg).run()


def pe_audit(
    cfg: ScenarioConfig, delta: float | None = None, step: float | None = None
) -> PeSweep:
    """Sweep the bearing excitation margin over the configured trajectory."""
    delta = cfg.pe_delta if delta is None else delta
    step = cfg.pe_step if step is None else step
    # Reject bad windows before paying for the simulation
    window_starts(cfg.t_end, delta, step)
    coordinator = ScenarioCoordinator(dataclasses.replace(cfg, pe_delta=delta, pe_step=step))
    coordinator.simulate()
    sweep = coordinator.excitation()
    if sweep is None:
        raise HorizonError(f"No {delta} s window fits in {cfg.t_end} s")
    _LOGGER.info(
        "Excitation audit of %s: min mu %.6g over %d windows",
        cfg.name,
        sweep.min_mu,
        sweep.mu.size,
    )
    return sweep


def _isolated(cfgs: Sequence[ScenarioConfig], out_dir: Path) -> list[ScenarioConfig]:
    seen: dict[str, int] = {}
    isolated = []
    for cfg in cfgs:
        count = seen.get(cfg.name, 0)
        seen[cfg.name] = count + 1
        subdir = cfg.name if count == 0 else f"{cfg.name}-{count}"
        isolated.append(dataclasses.replace(cfg, out_dir=out_dir / subdir))
    return isolated


async def async_run_batch(
    cfgs: Sequence[ScenarioConfig], out_dir: str | Path
) -> list[ScenarioResult | BaseException]:
    """Run scenarios concurrently, each writing to its own subdirectory."""
    jobs = _isolated(cfgs, Path(out_dir))
    results = await asyncio.gather(
        *(asyncio.to_thread(run_scenario, cfg) for cfg in jobs),
        return_exceptions=True,
    )
    for cfg, result in zip(jobs, results, strict=True):
        if isinstance(result, BaseException):
            _LOGGER.error("Scenario %s failed: %s", cfg.name, result)
    return list(results)
