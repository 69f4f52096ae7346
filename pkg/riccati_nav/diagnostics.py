"""Diagnostics summary written next to each exported run."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import VERSION

if TYPE_CHECKING:
    from .coordinator import ScenarioResult

_LOGGER = logging.getLogger(__name__)

# Run settings that only matter in-process
TO_OMIT = {"out_dir", "preview"}


def to_jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple | np.ndarray):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def build_diagnostics(result: ScenarioResult) -> dict[str, Any]:
    """Return the diagnostics document of a finished run."""
    cfg = result.config
    return to_jsonable(
        {
            "version": VERSION,
            "scenario": {
                "name": cfg.name,
                "trajectory": cfg.trajectory.name,
                "variant": cfg.variant.value,
                "dt": cfg.dt,
                "t_end": cfg.t_end,
                "seed": cfg.seed,
                "samples": len(result.table),
                "noise_free": cfg.noise.is_noise_free,
            },
            "document": {
                **cfg.document,
                "run": {
                    k: v for k, v in cfg.document.get("run", {}).items() if k not in TO_OMIT
                },
            },
            "metrics": result.metrics.as_dict(),
            "files": {
                "csv": result.csv_path.name if result.csv_path else None,
                "preview": result.preview_path.name if result.preview_path else None,
            },
        }
    )


def write_diagnostics(data: Mapping[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _LOGGER.info("Wrote diagnostics to %s", path)
    return path
