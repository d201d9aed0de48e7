"""Sampled paths on uniform dyadic grids, plus CSV I/O and input validation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from os import PathLike
from typing import Union

import numpy as np

from .exceptions import GridError, LevelError

__all__ = [
    "PartitionSpec",
    "SampledPath",
    "check_path",
    "level_from_points",
    "read_path_csv",
    "write_path_csv",
]


def level_from_points(num_points: int) -> int:
    """Return ``n`` such that ``num_points == 2**n + 1``, or raise GridError."""
    intervals = int(num_points) - 1
    if intervals < 1 or intervals & (intervals - 1):
        raise GridError(f"{num_points} grid points is not of the form 2**n + 1")
    return intervals.bit_length() - 1


@dataclass(frozen=True)
class PartitionSpec:
    """Uniform dyadic partition of [0, T] with ``2**level`` intervals."""

    level: int
    horizon: float = 1.0

    def __post_init__(self):
        if self.level < 0:
            raise LevelError(f"partition level must be nonnegative, got {self.level}")
        if not self.horizon > 0:
            raise GridError(f"horizon must be positive, got {self.horizon}")

    @property
    def size(self) -> int:
        return 2**self.level

    @property
    def mesh(self) -> float:
        return self.horizon * 2.0**-self.level

    def times(self) -> np.ndarray:
        return np.arange(self.size + 1) * self.mesh


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Values of a d-dimensional path on the dyadic grid of level ``level`` over [0, horizon].

    ``values`` has shape ``(2**level + 1, d)``; row ``i`` sits at time ``i * horizon * 2**-level``.
    """

    values: np.ndarray
    level: int
    horizon: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise GridError(f"path values must be 2-d (points, dim), got shape {values.shape}")
        if values.shape[0] != 2**self.level + 1:
            raise GridError(
                f"level {self.level} needs {2**self.level + 1} rows, got {values.shape[0]}"
            )
        if not self.horizon > 0:
            raise GridError(f"horizon must be positive, got {self.horizon}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def partition(self) -> PartitionSpec:
        return PartitionSpec(self.level, self.horizon)

    @property
    def mesh(self) -> float:
        return self.horizon * 2.0**-self.level

    def times(self) -> np.ndarray:
        return self.partition.times()

    def component(self, i: int) -> "SampledPath":
        return SampledPath(self.values[:, i : i + 1], self.level, self.horizon)

    def same_grid(self, other: "SampledPath") -> bool:
        return self.level == other.level and self.horizon == other.horizon

    def __eq__(self, other):
        if not isinstance(other, SampledPath):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"SampledPath(level={self.level}, horizon={self.horizon}, dim={self.dim})"


def check_path(y, horizon: float = 1.0, ensure_finite: bool = True) -> SampledPath:
    """Coerce ``y`` to a :class:`SampledPath`.

    Arrays of shape ``(2**n + 1,)`` or ``(2**n + 1, d)`` are accepted and placed on [0, horizon].
    """
    if isinstance(y, SampledPath):
        path = y
    else:
        values = np.asarray(y, dtype=float)
        if values.ndim == 0:
            raise GridError("expected an array of path values, got a scalar")
        path = SampledPath(values, level_from_points(values.shape[0]), float(horizon))
    if ensure_finite and not np.all(np.isfinite(path.values)):
        raise GridError("path contains non-finite values")
    return path


def write_path_csv(path: SampledPath, dest: Union[str, PathLike]) -> None:
    """Dump ``path`` as CSV with header ``t,x1,...,xd``; floats use shortest round-trip repr."""
    times = path.times()
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(path.dim)])
        for t, row in zip(times, path.values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_path_csv(src: Union[str, PathLike]) -> SampledPath:
    """Inverse of :func:`write_path_csv`. The grid must be uniform dyadic starting at 0."""
    with open(src, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "t" or len(header) < 2:
            raise GridError(f"{src}: expected header 't,x1,...,xd'")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise GridError(f"{src}: ragged rows")
    level = level_from_points(data.shape[0])
    times = data[:, 0]
    horizon = float(times[-1])
    expected = np.arange(data.shape[0]) * (horizon * 2.0**-level)
    if times[0] != 0.0 or not np.allclose(times, expected, rtol=1e-12, atol=1e-15 * horizon):
        raise GridError(f"{src}: time column is not a uniform grid starting at 0")
    if not math.isfinite(horizon) or horizon <= 0:
        raise GridError(f"{src}: invalid horizon {horizon}")
    return SampledPath(data[:, 1:], level, horizon)
