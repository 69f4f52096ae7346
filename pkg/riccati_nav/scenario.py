"""Scenario documents: presets, validation and assembly."""

from __future__ import annotations

import copy
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol
import yaml
from numpy.typing import NDArray
from scipy import linalg

from .const import (
    CONV_HOLD,
    CONV_THRESHOLD,
    DEFAULT_DT,
    DEFAULT_P0,
    DEFAULT_PE_DELTA,
    DEFAULT_PE_STEP,
    DEFAULT_Q,
    DEFAULT_T_END,
    DEFAULT_V,
    GRAVITY_I,
    LANDMARK_I,
    MAG_I,
    PRESET_CIRCLE,
    PRESET_RADIAL,
    PRESET_REFERENCE,
    PRESET_REFERENCE_CLEAN,
    PRESET_STATIC,
    SETTLE_TIME,
    VARIANT_DECOUPLED,
    VARIANT_FULL,
    VARIANT_REDUCED,
    VARIANTS,
)
from .exceptions import DegenerateInputError, NormalizationError, ScenarioError
from .metrics import MetricsSettings
from .observer import ObserverConfig, Variant, Weight, WeightSchedule
from .simulator import Environment, NoiseSpec, TrajectorySpec
from .so3 import IDENTITY3, Mat3, exp_so3, is_rotation
from .trajectories import (
    circle_trajectory,
    eight_trajectory,
    radial_line_trajectory,
    signal_table,
    static_trajectory,
    table_trajectory,
)

_LOGGER = logging.getLogger(__name__)

TRAJECTORY_TYPES = ("eight", "static", "radial-line", "circle", "table")


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise vol.Invalid("expected a finite number")
    return value


Number = vol.All(vol.Coerce(float), _finite)
Vector3 = vol.All([Number], vol.Length(min=3, max=3))
PositiveNumber = vol.All(Number, vol.Range(min=0, min_included=False))
NonNegativeNumber = vol.All(Number, vol.Range(min=0))
MatrixValue = vol.Any(Number, [Number], [[Number]])

TERM_SCHEMA = vol.Schema(
    {
        vol.Required("amp"): Number,
        vol.Required("freq"): Number,
        vol.Optional("phase", default=0.0): Number,
    }
)

AXIS_SCHEMA = vol.Schema(
    {
        vol.Optional("offset", default=0.0): Number,
        vol.Optional("rate", default=0.0): Number,
        vol.Optional("terms", default=[]): [TERM_SCHEMA],
    }
)

TABLE_SCHEMA = vol.All([AXIS_SCHEMA], vol.Length(min=3, max=3))

WEIGHT_SCHEMA = vol.Any(
    MatrixValue,
    vol.Schema(
        {
            vol.Required("matrix"): MatrixValue,
            vol.Optional("schedule", default=[]): [
                {vol.Required("t"): NonNegativeNumber, vol.Required("scale"): PositiveNumber}
            ],
        }
    ),
)

SCENARIO_SCHEMA = vol.Schema(
    {
        vol.Optional("name"): str,
        vol.Optional("preset"): str,
        vol.Required("trajectory"): {
            vol.Required("type"): vol.In(TRAJECTORY_TYPES),
            vol.Optional("position"): TABLE_SCHEMA,
            vol.Optional("omega"): TABLE_SCHEMA,
            vol.Optional("R0"): [[Number]],
            vol.Optional("R0_rotvec"): Vector3,
            vol.Optional("params", default={}): {
                vol.Optional("position"): Vector3,
                vol.Optional("start"): Vector3,
                vol.Optional("speed"): PositiveNumber,
                vol.Optional("radius"): PositiveNumber,
                vol.Optional("rate"): Number,
                vol.Optional("height"): Number,
            },
        },
        vol.Optional("environment", default={}): {
            vol.Optional("g_I", default=list(GRAVITY_I)): Vector3,
            vol.Optional("m_I", default=list(MAG_I)): Vector3,
            vol.Optional("p_landmark", default=list(LANDMARK_I)): Vector3,
        },
        vol.Optional("noise", default={}): {
            vol.Optional("omega", default=0.0): NonNegativeNumber,
            vol.Optional("a_B", default=0.0): NonNegativeNumber,
            vol.Optional("eta_B", default=0.0): NonNegativeNumber,
            vol.Optional("m_B", default=0.0): NonNegativeNumber,
            vol.Optional("seed", default=0): vol.All(vol.Coerce(int), vol.Range(min=0)),
        },
        vol.Required("observer"): {
            vol.Optional("variant", default=VARIANT_FULL): vol.In(VARIANTS),
            vol.Required("x0"): [Number],
            vol.Optional("P0", default=DEFAULT_P0): MatrixValue,
            vol.Optional("V", default=DEFAULT_V): WEIGHT_SCHEMA,
            vol.Optional("Q", default=DEFAULT_Q): WEIGHT_SCHEMA,
            vol.Optional("P0_m", default=DEFAULT_P0): MatrixValue,
            vol.Optional("V_m", default=DEFAULT_V): WEIGHT_SCHEMA,
            vol.Optional("Q_m", default=DEFAULT_Q): WEIGHT_SCHEMA,
            vol.Optional("R_hat0"): [[Number]],
        },
        vol.Required("run"): {
            vol.Required("t_end"): PositiveNumber,
            vol.Optional("dt", default=DEFAULT_DT): PositiveNumber,
            vol.Optional("out_dir"): vol.Any(None, str),
            vol.Optional("preview", default=False): bool,
        },
        vol.Optional("metrics", default={}): {
            vol.Optional("conv_threshold", default=CONV_THRESHOLD): PositiveNumber,
            vol.Optional("conv_hold", default=CONV_HOLD): NonNegativeNumber,
            vol.Optional("settle_time", default=SETTLE_TIME): NonNegativeNumber,
        },
        vol.Optional("pe", default={}): {
            vol.Optional("delta", default=DEFAULT_PE_DELTA): PositiveNumber,
            vol.Optional("step", default=DEFAULT_PE_STEP): PositiveNumber,
        },
    }
)

_REFERENCE_OBSERVER: dict[str, Any] = {
    "variant": VARIANT_REDUCED,
    "x0": [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4.9, 4.9, 4.9],
    "P0": 1.0,
    "V": 36.0,
    "Q": 1.0,
}

PRESETS: dict[str, dict[str, Any]] = {
    PRESET_REFERENCE: {
        "trajectory": {"type": "eight"},
        "noise": {"m_B": 1e-2, "seed": 0},
        "observer": _REFERENCE_OBSERVER,
        "run": {"t_end": DEFAULT_T_END, "dt": DEFAULT_DT},
    },
    PRESET_REFERENCE_CLEAN: {
        "trajectory": {"type": "eight"},
        "observer": _REFERENCE_OBSERVER,
        "run": {"t_end": DEFAULT_T_END, "dt": DEFAULT_DT},
    },
    PRESET_STATIC: {
        "trajectory": {"type": "static"},
        "observer": {**_REFERENCE_OBSERVER, "variant": VARIANT_DECOUPLED},
        "run": {"t_end": 20.0, "dt": DEFAULT_DT},
    },
    PRESET_RADIAL: {
        "trajectory": {"type": "radial-line"},
        "observer": {**_REFERENCE_OBSERVER, "variant": VARIANT_DECOUPLED},
        "run": {"t_end": 20.0, "dt": DEFAULT_DT},
    },
    PRESET_CIRCLE: {
        "trajectory": {"type": "circle"},
        "noise": {"m_B": 1e-2, "seed": 0},
        "observer": {**_REFERENCE_OBSERVER, "variant": VARIANT_FULL},
        "run": {"t_end": 20.0, "dt": DEFAULT_DT},
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to simulate, estimate and report one scenario."""

    name: str
    trajectory: TrajectorySpec
    environment: Environment
    noise: NoiseSpec
    observer: ObserverConfig
    x0: NDArray[np.float64]
    R_hat0: Mat3
    t_end: float
    out_dir: Path | None = None
    preview: bool = False
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    pe_delta: float = DEFAULT_PE_DELTA
    pe_step: float = DEFAULT_PE_STEP
    document: Mapping[str, Any] = field(default_factory=dict, repr=False)

    @property
    def dt(self) -> float:
        """Integration step."""
        return self.observer.dt

    @property
    def seed(self) -> int:
        """Noise generator seed."""
        return self.noise.seed

    @property
    def variant(self) -> Variant:
        """Observer variant."""
        return self.observer.variant


@dataclass(frozen=True)
class BlockWeight:
    """Block-diagonal weight assembled from constant or scheduled blocks."""

    blocks: tuple[Weight, ...]

    def __call__(self, t: float) -> NDArray[np.float64]:
        return linalg.block_diag(
            *(b(t) if callable(b) else np.asarray(b) for b in self.blocks)
        )


def _merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``update`` onto a copy of ``base``."""
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _matrix(value: Any, n: int, path: list[str]) -> NDArray[np.float64]:
    """Scalar (times identity), diagonal list or full n x n nested list."""
    if isinstance(value, float | int):
        return float(value) * np.eye(n)
    arr = np.asarray(value, dtype=float)
    if arr.shape == (n,):
        return np.diag(arr)
    if arr.shape == (n, n):
        return arr
    raise ScenarioError(f"expected a scalar, {n} values or a {n}x{n} matrix", path=path)


def _weight(value: Any, n: int, path: list[str]) -> Weight:
    if isinstance(value, Mapping):
        base = _matrix(value["matrix"], n, [*path, "matrix"])
        schedule = tuple((item["t"], item["scale"]) for item in value["schedule"])
        return WeightSchedule(base=base, breakpoints=schedule) if schedule else base
    return _matrix(value, n, path)


def _combine(first: Weight, second: Weight) -> Weight:
    if callable(first) or callable(second):
        return BlockWeight((first, second))
    return linalg.block_diag(first, second)


def _rotation(value: Any, path: list[str]) -> Mat3:
    R = np.asarray(value, dtype=float)
    if R.shape != (3, 3) or not is_rotation(R):
        raise ScenarioError("not a rotation matrix", path=path)
    return R


def _build_trajectory(doc: Mapping[str, Any]) -> TrajectorySpec:
    kind = doc["type"]
    params = doc["params"]
    path = ["trajectory"]
    builders = {
        "eight": eight_trajectory,
        "static": static_trajectory,
        "radial-line": radial_line_trajectory,
        "circle": circle_trajectory,
    }
    if kind in builders:
        try:
            return builders[kind](**params)
        except TypeError as err:
            raise ScenarioError(
                f"parameter not accepted by {kind} trajectory", path=[*path, "params"]
            ) from err
        except DegenerateInputError as err:
            raise ScenarioError(str(err), path=[*path, "params"]) from err

    for key in ("position", "omega"):
        if key not in doc:
            raise ScenarioError("required key not provided", path=[*path, key])
    R0 = IDENTITY3
    if "R0" in doc:
        R0 = _rotation(doc["R0"], [*path, "R0"])
    elif "R0_rotvec" in doc:
        R0 = exp_so3(doc["R0_rotvec"], 1.0)
    try:
        return table_trajectory(
            signal_table(doc["position"]), signal_table(doc["omega"]), R0=R0
        )
    except ValueError as err:
        raise ScenarioError(str(err), path=[*path, "omega"]) from err


def _build_observer(doc: Mapping[str, Any], dt: float, env: Environment) -> ObserverConfig:
    variant = Variant(doc["variant"])
    path = ["observer"]
    P0 = _matrix(doc["P0"], 9, [*path, "P0"])
    V = _weight(doc["V"], 9, [*path, "V"])
    Q = _weight(doc["Q"], 3, [*path, "Q"])
    if variant is not Variant.REDUCED:
        P0 = linalg.block_diag(P0, _matrix(doc["P0_m"], 3, [*path, "P0_m"]))
        V = _combine(V, _weight(doc["V_m"], 3, [*path, "V_m"]))
        Q = _combine(Q, _weight(doc["Q_m"], 3, [*path, "Q_m"]))
    try:
        return ObserverConfig(
            variant=variant, P0=P0, V=V, Q=Q, dt=dt, g_I=env.g_I, m_I=env.m_I
        )
    except ValueError as err:
        raise ScenarioError(str(err), path=path) from err


def validate_document(document: Mapping[str, Any]) -> dict[str, Any]:
    """Schema-check a merged scenario document."""
    try:
        return SCENARIO_SCHEMA(dict(document))
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        raise ScenarioError(first.msg, path=first.path) from err


def scenario_from_dict(
    document: Mapping[str, Any], *, name: str | None = None
) -> ScenarioConfig:
    """Validate a scenario document (preset reference allowed) and assemble it."""
    preset = document.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ScenarioError(f"unknown preset '{preset}'", path=["preset"])
        document = _merge(PRESETS[preset], document)
    doc = validate_document(document)
    name = name or doc.get("name") or preset or "scenario"

    try:
        env = Environment(**doc["environment"])
    except (NormalizationError, DegenerateInputError) as err:
        raise ScenarioError(str(err), path=["environment"]) from err
    trajectory = _build_trajectory(doc["trajectory"])
    run = doc["run"]
    if run["t_end"] < run["dt"]:
        raise ScenarioError("t_end must be at least dt", path=["run", "t_end"])
    observer = _build_observer(doc["observer"], run["dt"], env)

    x0 = np.asarray(doc["observer"]["x0"], dtype=float)
    allowed = (9,) if observer.variant is Variant.REDUCED else (9, 12)
    if x0.size not in allowed:
        raise ScenarioError(
            f"expected {' or '.join(map(str, allowed))} entries, got {x0.size}",
            path=["observer", "x0"],
        )
    R_hat0 = IDENTITY3
    if "R_hat0" in doc["observer"]:
        R_hat0 = _rotation(doc["observer"]["R_hat0"], ["observer", "R_hat0"])

    out_dir = run.get("out_dir")
    return ScenarioConfig(
        name=name,
        trajectory=trajectory,
        environment=env,
        noise=NoiseSpec(**doc["noise"]),
        observer=observer,
        x0=x0,
        R_hat0=R_hat0,
        t_end=run["t_end"],
        out_dir=Path(out_dir) if out_dir else None,
        preview=run["preview"],
        metrics=MetricsSettings(**doc["metrics"]),
        pe_delta=doc["pe"]["delta"],
        pe_step=doc["pe"]["step"],
        document=doc,
    )


def read_document(path: str | Path) -> dict[str, Any]:
    """Parse a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err.strerror}") from err
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ScenarioError(f"cannot parse {path}: {err}") from err
    if document is None:
        document = {}
    if not isinstance(document, Mapping):
        raise ScenarioError(f"{path} does not contain a mapping")
    return dict(document)


def load_scenario(
    path: str | Path | None = None,
    *,
    preset: str | None = None,
    variant: str | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
    t_end: float | None = None,
    preview: bool | None = None,
) -> ScenarioConfig:
    """
    Load a scenario from a YAML file and/or a built-in preset.

    Keyword overrides take precedence over the file, which takes precedence
    over the preset.
    """
    if path is None and preset is None:
        raise ScenarioError("either a scenario file or a preset is required")
    document: dict[str, Any] = read_document(path) if path is not None else {}
    if preset is not None:
        document["preset"] = preset

    overrides: dict[str, Any] = {}
    if variant is not None:
        overrides.setdefault("observer", {})["variant"] = variant
    if seed is not None:
        overrides.setdefault("noise", {})["seed"] = seed
    if out_dir is not None:
        overrides.setdefault("run", {})["out_dir"] = str(out_dir)
    if t_end is not None:
        overrides.setdefault("run", {})["t_end"] = t_end
    if preview is not None:
        overrides.setdefault("run", {})["preview"] = preview
    document = _merge(document, overrides)

    name = document.get("name")
    if name is None and path is not None:
        name = Path(path).stem
    cfg = scenario_from_dict(document, name=name)
    _LOGGER.info(
        "Loaded scenario %s (%s trajectory, %s observer, t_end=%g s, seed=%d)",
        cfg.name,
        cfg.trajectory.name,
        cfg.variant.value,
        cfg.t_end,
        cfg.seed,
    )
    if not math.isclose(cfg.t_end / cfg.dt, round(cfg.t_end / cfg.dt), abs_tol=1e-6):
        _LOGGER.warning("t_end is not a multiple of dt; the last partial step is dropped")
    return cfg
