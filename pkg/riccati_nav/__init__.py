"""Riccati observer for inertial navigation from IMU, one landmark bearing and a body-frame vector."""

from __future__ import annotations

from .const import VERSION
from .coordinator import ScenarioResult, async_run_batch, pe_audit, run_scenario
from .exceptions import (
    BearingUndefinedError,
    DegenerateInputError,
    ExportError,
    HorizonError,
    NormalizationError,
    NumericalFailure,
    RiccatiNavError,
    ScenarioError,
)
from .metrics import RunMetrics, TrackingMetrics, metrics_from_csv
from .observer import ObserverConfig, ObserverState, RiccatiObserver, Variant
from .scenario import ScenarioConfig, load_scenario, scenario_from_dict

__version__ = VERSION

__all__ = [
    "BearingUndefinedError",
    "DegenerateInputError",
    "ExportError",
    "HorizonError",
    "NormalizationError",
    "NumericalFailure",
    "ObserverConfig",
    "ObserverState",
    "RiccatiNavError",
    "RiccatiObserver",
    "RunMetrics",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioResult",
    "TrackingMetrics",
    "Variant",
    "async_run_batch",
    "load_scenario",
    "metrics_from_csv",
    "pe_audit",
    "run_scenario",
    "scenario_from_dict",
]
