"""Fractional diffusions dy = u(t, y) dt + sum_k theta_k sigma_k(y) dB^k on a fine grid.

Vector-field callbacks take states with trailing axis ``d`` and must broadcast over leading
axes; this lets :func:`solve_heun3_many` integrate a batch of realizations in one sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DivergenceError, GridError, PreconditionError
from .paths import SampledPath

__all__ = [
    "RdeProblem",
    "VectorFieldSet",
    "expm2",
    "field_action",
    "solve_2d_linear_exact",
    "solve_heun3",
    "solve_heun3_many",
]

Field = Callable[[np.ndarray], np.ndarray]
Drift = Callable[[float, np.ndarray], np.ndarray]

# Heun's third-order tableau: nodes (0, 1/3, 2/3), weights (1/4, 0, 3/4).
_C2, _C3 = 1.0 / 3.0, 2.0 / 3.0
_B1, _B3 = 0.25, 0.75


@dataclass
class VectorFieldSet:
    """Noise fields ``sigma_k`` with coefficients ``theta`` and an optional drift ``u(t, y)``."""

    dim: int
    fields: Sequence[Field]
    theta: np.ndarray
    drift: Optional[Drift] = None
    names: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.theta.shape[0] != len(self.fields):
            raise ValueError(f"{len(self.fields)} fields but {self.theta.shape[0]} coefficients")
        if np.any(self.theta < 0):
            raise ValueError("noise coefficients must be nonnegative")

    @property
    def num_fields(self) -> int:
        return len(self.fields)

    def with_theta(self, theta) -> "VectorFieldSet":
        return VectorFieldSet(self.dim, self.fields, theta, self.drift, self.names)

    def rhs(self, t: float, y: np.ndarray, rate: np.ndarray) -> np.ndarray:
        """u(t, y) + sum_k theta_k sigma_k(y) rate_k; ``rate`` has trailing axis K."""
        out = np.zeros_like(y) if self.drift is None else np.asarray(self.drift(t, y), dtype=float)
        for k, sigma in enumerate(self.fields):
            if self.theta[k] != 0.0:
                out = out + (self.theta[k] * rate[..., k])[..., None] * sigma(y)
        return out


@dataclass
class RdeProblem:
    fields: VectorFieldSet
    driver: SampledPath
    y0: np.ndarray

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float).reshape(-1)
        if self.driver.dim != self.fields.num_fields:
            raise GridError(
                f"driver has {self.driver.dim} components but there are "
                f"{self.fields.num_fields} noise fields"
            )
        if self.y0.shape[0] != self.fields.dim:
            raise ValueError(f"y0 has length {self.y0.shape[0]}, expected {self.fields.dim}")


def field_action(sigma: Field, grad_f: Callable[[np.ndarray], np.ndarray], state) -> np.ndarray:
    """sigma[f](state) = sum_j sigma^j(state) * d_j f(state)."""
    state = np.asarray(state, dtype=float)
    return np.sum(np.asarray(sigma(state)) * np.asarray(grad_f(state)), axis=-1)


def _heun3(fields: VectorFieldSet, increments: np.ndarray, y0: np.ndarray, h: float, t0=0.0):
    # increments: (steps, ..., K); y0: (..., d)
    steps = increments.shape[0]
    out = np.empty((steps + 1,) + y0.shape)
    y = y0.copy()
    out[0] = y
    for i in range(steps):
        rate = increments[i] / h
        t = t0 + i * h
        k1 = fields.rhs(t, y, rate)
        k2 = fields.rhs(t + _C2 * h, y + (_C2 * h) * k1, rate)
        k3 = fields.rhs(t + _C3 * h, y + (_C3 * h) * k2, rate)
        y = y + h * (_B1 * k1 + _B3 * k3)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(i + 1)
        out[i + 1] = y
    return out


def solve_heun3(problem: RdeProblem) -> SampledPath:
    """Heun-3 on the driver's grid, holding the driver's increment rate fixed within each step."""
    drv = problem.driver
    sol = _heun3(problem.fields, np.diff(drv.values, axis=0), problem.y0, drv.mesh)
    return SampledPath(sol, drv.level, drv.horizon)


def solve_heun3_many(fields: VectorFieldSet, drivers: Sequence[SampledPath], y0) -> list:
    """Solve one problem per driver in a single vectorized sweep (all drivers share a grid)."""
    if not drivers:
        return []
    first = drivers[0]
    if any(not first.same_grid(d) or d.dim != first.dim for d in drivers):
        raise GridError("all drivers must share grid and dimension")
    RdeProblem(fields, first, y0)
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    incr = np.stack([np.diff(d.values, axis=0) for d in drivers], axis=1)
    start = np.broadcast_to(y0, (len(drivers), y0.shape[0])).copy()
    sol = _heun3(fields, incr, start, first.mesh)
    return [SampledPath(sol[:, r], first.level, first.horizon) for r in range(len(drivers))]


def expm2(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of real 2x2 matrices (shape ``(..., 2, 2)``) in closed form.

    Writes m = tau*I + N with N traceless, so N @ N = q*I with q = -det(N), and
    exp(m) = e^tau (c(q) I + s(q) N) with c = cosh(sqrt q), s = sinh(sqrt q)/sqrt q
    (trigonometric when q < 0). Exact for defective matrices as well.
    """
    m = np.asarray(m, dtype=float)
    tau = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    n00 = m[..., 0, 0] - tau
    n01 = m[..., 0, 1]
    n10 = m[..., 1, 0]
    q = n00 * n00 + n01 * n10
    root = np.sqrt(np.abs(q))
    small = np.abs(q) < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(q >= 0, np.cosh(root), np.cos(root))
        s = np.where(q >= 0, np.sinh(root), np.sin(root)) / root
    c = np.where(small, 1 + q / 2 + q * q / 24 + q**3 / 720, c)
    s = np.where(small, 1 + q / 6 + q * q / 120 + q**3 / 5040, s)
    scale = np.exp(tau)
    out = np.empty(m.shape)
    out[..., 0, 0] = scale * (c + s * n00)
    out[..., 1, 1] = scale * (c - s * n00)
    out[..., 0, 1] = scale * s * n01
    out[..., 1, 0] = scale * s * n10
    return out


def solve_2d_linear_exact(a1, a2, theta, driver: SampledPath, y0) -> SampledPath:
    """y_t = exp(theta_1 A1 B^1_t + theta_2 A2 B^2_t) y0 for commuting theta_k A_k."""
    m1 = theta[0] * np.asarray(a1, dtype=float)
    m2 = theta[1] * np.asarray(a2, dtype=float)
    if m1.shape != (2, 2) or m2.shape != (2, 2):
        raise PreconditionError("A1 and A2 must be 2x2")
    if driver.dim != 2:
        raise GridError(f"driver must have 2 components, got {driver.dim}")
    comm = np.linalg.norm(m1 @ m2 - m2 @ m1)
    scale = np.linalg.norm(m1) * np.linalg.norm(m2)
    if comm > 1e-12 * scale:
        raise PreconditionError(f"theta_1 A1 and theta_2 A2 do not commute (|[.,.]|_F={comm:.3e})")
    gen = driver.values[:, 0, None, None] * m1 + driver.values[:, 1, None, None] * m2
    y = expm2(gen) @ np.asarray(y0, dtype=float).reshape(2)
    return SampledPath(y, driver.level, driver.horizon)
