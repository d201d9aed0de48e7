"""Scaled quadratic variation and covariation along uniform dyadic partitions.

For a scalar path x observed on a partition of mesh h, the gamma-scaled quadratic
variation up to partition point t_j is ``sum_{i<j} h**gamma * (x_{i+1} - x_i)**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import GridError, LevelError
from .paths import SampledPath

__all__ = [
    "COMPENSATED_MIN_POINTS",
    "ScaledVariationCurve",
    "scaled_cov",
    "scaled_qv",
    "subsample",
    "total_scaled_qv",
]

# Running sums at least this long accumulate in extended precision.
COMPENSATED_MIN_POINTS = 2**16


@dataclass(frozen=True, eq=False)
class ScaledVariationCurve:
    """Running scaled (co)variation at each partition point; ``values[0] == 0``."""

    gamma: float
    level: int
    horizon: float
    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * (self.horizon * 2.0**-self.level)

    def sup_deviation(self, target=None) -> float:
        """max_t |curve(t) - target(t)| over partition points; ``target`` defaults to t.

        The running sum is constant between partition points, so this is the sup over [0, T]
        against the step-evaluated target.
        """
        ref = self.times() if target is None else np.asarray(target, dtype=float)
        return float(np.max(np.abs(self.values - ref)))


def subsample(path: SampledPath, level: int) -> SampledPath:
    """Restrict ``path`` to the coarser dyadic grid of ``level``."""
    if level < 0 or level > path.level:
        raise LevelError(f"cannot subsample level {path.level} path to level {level}")
    stride = 2 ** (path.level - level)
    return SampledPath(path.values[::stride], level, path.horizon)


def _scalar(path: SampledPath, name: str) -> np.ndarray:
    if path.dim != 1:
        raise GridError(f"{name} must be one-dimensional, got dim={path.dim}")
    return path.values[:, 0]


def _running_sum(terms: np.ndarray, weight: float) -> np.ndarray:
    out = np.zeros(terms.shape[0] + 1)
    if terms.shape[0] + 1 >= COMPENSATED_MIN_POINTS:
        out[1:] = np.cumsum(terms.astype(np.longdouble)) * np.longdouble(weight)
    else:
        out[1:] = np.cumsum(terms) * weight
    return out


def scaled_cov(x: SampledPath, z: SampledPath, gamma: float) -> ScaledVariationCurve:
    """Running gamma-scaled covariation of two scalar paths on the same grid."""
    if not x.same_grid(z):
        raise GridError(
            f"grids differ: (level {x.level}, T={x.horizon}) vs (level {z.level}, T={z.horizon})"
        )
    dx = np.diff(_scalar(x, "x"))
    dz = np.diff(_scalar(z, "z"))
    return ScaledVariationCurve(gamma, x.level, x.horizon, _running_sum(dx * dz, x.mesh**gamma))


def scaled_qv(x: SampledPath, gamma: float) -> ScaledVariationCurve:
    """Running gamma-scaled quadratic variation of a scalar path."""
    dx = np.diff(_scalar(x, "x"))
    return ScaledVariationCurve(gamma, x.level, x.horizon, _running_sum(dx * dx, x.mesh**gamma))


def total_scaled_qv(y: SampledPath, gamma: float) -> float:
    """Sum over components of the final gamma-scaled quadratic variation."""
    return float(sum(scaled_qv(y.component(i), gamma).final for i in range(y.dim)))
