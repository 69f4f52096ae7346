"""Constants for the Riccati navigation observer."""

from __future__ import annotations

import math
from typing import Final

VERSION: Final = "0.3.0"

# Tolerances
UNIT_TOL: Final = 1e-9
BEARING_UNIT_TOL: Final = 1e-6
SMALL_ANGLE: Final = 1e-8
SINGULAR_TOL: Final = 1e-12
MIN_LANDMARK_DISTANCE: Final = 1e-6
COLLINEAR_TOL: Final = 1e-6
MIN_GRAVITY_NORM: Final = 1e-6
TIMESTAMP_TOL: Final = 1e-9
NORMALIZE_TOL: Final = 1e-12

# Environment defaults
GRAVITY_I: Final = (0.0, 0.0, 9.81)
MAG_I: Final = (1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0))
LANDMARK_I: Final = (0.0, 0.0, 0.0)

# Integration
DEFAULT_DT: Final = 1e-3
DEFAULT_T_END: Final = 30.0

# Observer variants
VARIANT_FULL: Final = "full"
VARIANT_DECOUPLED: Final = "decoupled"
VARIANT_REDUCED: Final = "reduced"
VARIANTS: Final = (VARIANT_FULL, VARIANT_DECOUPLED, VARIANT_REDUCED)

# Observer tuning defaults (P0, V, Q scale the identity)
DEFAULT_P0: Final = 1.0
DEFAULT_V: Final = 36.0
DEFAULT_Q: Final = 1.0

# Observability analysis
PE_THRESHOLD: Final = 1e-4
DEFAULT_PE_DELTA: Final = 2.0
DEFAULT_PE_STEP: Final = 0.5

# Metrics
CONV_THRESHOLD: Final = 0.05
CONV_HOLD: Final = 1.0
SETTLE_TIME: Final = 10.0

# Output files
CSV_FILENAME: Final = "timeseries.csv"
DIAGNOSTICS_FILENAME: Final = "diagnostics.json"
DEFAULT_OUT_DIR: Final = "runs"
PREVIEW_FILENAME: Final = "preview.png"

# CLI exit codes
EXIT_OK: Final = 0
EXIT_ERROR: Final = 1
EXIT_CONFIG: Final = 2
EXIT_NUMERICAL: Final = 3

# Built-in scenario presets
PRESET_REFERENCE: Final = "paper-fig3"
PRESET_REFERENCE_CLEAN: Final = "paper-fig3-clean"
PRESET_STATIC: Final = "static"
PRESET_RADIAL: Final = "radial-line"
PRESET_CIRCLE: Final = "circle"
