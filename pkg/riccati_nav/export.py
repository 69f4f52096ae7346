"""Time-series export: column schema, CSV writer and reader."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .exceptions import ExportError
from .so3 import Vec3

_LOGGER = logging.getLogger(__name__)

_AXES = ("x", "y", "z")
_NAN3 = np.full(3, np.nan)


@dataclass(frozen=True)
class StepRecord:
    """Truth and estimate at one sample time."""

    t: float
    p_true: Vec3
    v_true: Vec3
    p_est: Vec3
    v_est: Vec3
    att_err: float
    g_est_B: Vec3
    m_meas_B: Vec3
    m_est_B: Vec3 | None
    m_true_B: Vec3
    roll_pitch_true: tuple[float, float]
    roll_pitch_est: tuple[float, float]


@dataclass(frozen=True, kw_only=True)
class CsvColumnDescription:
    """Describes one exported quantity, scalar or three-component."""

    key: str
    value_fn: Callable[[StepRecord], float | Vec3]
    width: int = 1

    @property
    def headers(self) -> tuple[str, ...]:
        """CSV header names of this quantity."""
        if self.width == 1:
            return (self.key,)
        return tuple(f"{self.key}_{axis}" for axis in _AXES)


CSV_COLUMNS: tuple[CsvColumnDescription, ...] = (
    CsvColumnDescription(key="t", value_fn=lambda r: r.t),
    CsvColumnDescription(key="p_true", width=3, value_fn=lambda r: r.p_true),
    CsvColumnDescription(key="v_true", width=3, value_fn=lambda r: r.v_true),
    CsvColumnDescription(key="p_est", width=3, value_fn=lambda r: r.p_est),
    CsvColumnDescription(key="v_est", width=3, value_fn=lambda r: r.v_est),
    CsvColumnDescription(key="att_err_rad", value_fn=lambda r: r.att_err),
    CsvColumnDescription(key="g_est_B", width=3, value_fn=lambda r: r.g_est_B),
    CsvColumnDescription(key="m_meas_B", width=3, value_fn=lambda r: r.m_meas_B),
    # No vector estimate in the reduced variant
    CsvColumnDescription(
        key="m_est_B",
        width=3,
        value_fn=lambda r: _NAN3 if r.m_est_B is None else r.m_est_B,
    ),
    CsvColumnDescription(
        key="pos_err_norm", value_fn=lambda r: float(np.linalg.norm(r.p_est - r.p_true))
    ),
    CsvColumnDescription(
        key="vel_err_norm", value_fn=lambda r: float(np.linalg.norm(r.v_est - r.v_true))
    ),
)

CSV_HEADER: tuple[str, ...] = tuple(h for c in CSV_COLUMNS for h in c.headers)


def _column_slices() -> dict[str, slice]:
    slices: dict[str, slice] = {}
    start = 0
    for column in CSV_COLUMNS:
        slices[column.key] = slice(start, start + column.width)
        start += column.width
    return slices


_SLICES = _column_slices()


@dataclass(frozen=True)
class RunTable:
    """Exported time series as an (n_samples, n_columns) array."""

    data: NDArray[np.float64]

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(CSV_HEADER):
            raise ExportError(
                f"Expected {len(CSV_HEADER)} columns, got array of shape {data.shape}"
            )
        object.__setattr__(self, "data", data)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def t(self) -> NDArray[np.float64]:
        """Sample times."""
        return self.data[:, 0]

    def column(self, key: str) -> NDArray[np.float64]:
        """Samples of one quantity: shape (n,) for scalars, (n, 3) for vectors."""
        try:
            cols = _SLICES[key]
        except KeyError:
            raise KeyError(f"Unknown column '{key}'") from None
        block = self.data[:, cols]
        return block[:, 0] if block.shape[1] == 1 else block

    @classmethod
    def from_records(cls, records: Iterable[StepRecord]) -> RunTable:
        """Tabulate step records in column order."""
        rows = [
            np.concatenate(
                [np.atleast_1d(np.asarray(c.value_fn(r), dtype=float)) for c in CSV_COLUMNS]
            )
            for r in records
        ]
        if not rows:
            raise ExportError("No samples to tabulate")
        return cls(np.vstack(rows))


def write_csv(table: RunTable, path: str | Path) -> Path:
    """Write the table as UTF-8 CSV with round-trip exact floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        np.savetxt(
            handle,
            table.data,
            fmt="%.17g",
            delimiter=",",
            header=",".join(CSV_HEADER),
            comments="",
            newline="\n",
        )
    _LOGGER.info("Wrote %d samples to %s", len(table), path)
    return path


def read_csv(path: str | Path) -> RunTable:
    """Read a table written by :func:`write_csv`."""
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        header = tuple(handle.readline().strip().split(","))
        if header != CSV_HEADER:
            raise ExportError(f"{path} does not have the expected header")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    return RunTable(data)
