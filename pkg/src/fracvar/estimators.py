"""Hurst-index and noise-coefficient estimators built on scaled quadratic variation.

The functional API (``estimate_hurst``, ``build_design``, ``solve_theta``, ...) is wrapped by
the scikit-learn style :class:`HurstEstimator` and :class:`ThetaEstimator`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    DegeneratePathError,
    DomainError,
    HurstRangeWarning,
    LevelError,
    SingularDesignError,
)
from .paths import SampledPath, check_path
from .rde import VectorFieldSet, field_action
from .variation import scaled_qv, subsample, total_scaled_qv

__all__ = [
    "DesignSystem",
    "GammaEstimate",
    "HurstEstimate",
    "HurstEstimator",
    "TestFunction",
    "ThetaEstimate",
    "ThetaEstimator",
    "build_design",
    "condition_number",
    "estimate_gamma",
    "estimate_hurst",
    "estimate_theta_known_H",
    "estimate_theta_unknown_H",
    "hurst_from_ratio",
    "rate_delta",
    "solve_theta",
]


@dataclass(frozen=True)
class TestFunction:
    """A scalar observable f(y) together with its analytic gradient."""

    __test__ = False  # not a pytest class

    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    name: str = "f"

    def __call__(self, y):
        return self.func(y)


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    ratio: float
    delta: float
    levels: tuple


@dataclass(frozen=True)
class HurstEstimate:
    h_hat: float
    level: int
    ratio: float

    @property
    def in_range(self) -> bool:
        return 0.0 < self.h_hat < 1.0

    @property
    def gamma(self) -> float:
        return 1.0 - 2.0 * self.h_hat


@dataclass(frozen=True, eq=False)
class DesignSystem:
    Y: np.ndarray
    X: np.ndarray
    kappa: float
    gamma: float
    level: int


@dataclass(frozen=True, eq=False)
class ThetaEstimate:
    beta: np.ndarray
    theta: np.ndarray
    residual: float
    used_hurst: float
    hurst_was_estimated: bool
    kappa: float = math.nan
    level: Optional[int] = None

    def to_record(self, true_hurst: Optional[float] = None) -> dict:
        """JSON-ready record ``{H, n, h_hat, theta_hat, beta, kappa, residual, hurst_was_estimated}``."""
        return {
            "H": true_hurst if true_hurst is not None else (None if self.hurst_was_estimated else self.used_hurst),
            "n": self.level,
            "h_hat": self.used_hurst if self.hurst_was_estimated else None,
            "theta_hat": [float(v) for v in self.theta],
            "beta": [float(v) for v in self.beta],
            "kappa": _json_float(self.kappa),
            "residual": float(self.residual),
            "hurst_was_estimated": bool(self.hurst_was_estimated),
        }


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "nan")


def rate_delta(hurst: float, n: int) -> float:
    """Almost-sure rate of the scaled QV of fBm on the dyadic grid of level n (T = 1)."""
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1), got {hurst}")
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    if hurst <= 0.5:
        return 2.0 ** (-n / 2) * math.sqrt(n)
    return 2.0 ** (-n * (1.0 - hurst)) * math.sqrt(n)


def estimate_gamma(x: SampledPath, x_lambda: SampledPath, delta: Optional[float] = None) -> GammaEstimate:
    """Scaling-exponent estimate from the unscaled QV on two grids.

    ``x`` sits on level n and ``x_lambda`` on level lambda_n of the same path; ``delta`` is the
    mesh ratio |pi_lambda| / |pi_n| and defaults to the ratio of the two grids' meshes.
    """
    if delta is None:
        delta = x_lambda.mesh / x.mesh
    if delta <= 0 or delta == 1.0:
        raise DomainError(f"mesh ratio must be positive and != 1, got {delta}")
    num = total_scaled_qv(x_lambda, 0.0)
    den = total_scaled_qv(x, 0.0)
    if den == 0.0 or num == 0.0:
        raise DegeneratePathError("quadratic variation vanishes; path is constant on the grid")
    ratio = num / den
    return GammaEstimate(-math.log(ratio) / math.log(delta), ratio, float(delta), (x.level, x_lambda.level))


def hurst_from_ratio(ratio: float) -> float:
    """(1 - log2 S) / 2; not clipped to (0, 1)."""
    return 0.5 * (1.0 - math.log(ratio) / math.log(2.0))


def estimate_hurst(y: SampledPath, level: int, warn: bool = True) -> HurstEstimate:
    """H_n = (1 - log2 S_n) / 2 with S_n the ratio of unscaled QVs on levels n+1 and n.

    Values outside (0, 1) are returned unchanged and trigger a :class:`HurstRangeWarning`.
    """
    if level < 0 or level + 1 > y.level:
        raise LevelError(f"Hurst estimate at level {level} needs a path of level >= {level + 1}")
    est = estimate_gamma(subsample(y, level), subsample(y, level + 1), 0.5)
    h_hat = hurst_from_ratio(est.ratio)
    out = HurstEstimate(h_hat, level, est.ratio)
    if warn and not out.in_range:
        warnings.warn(f"estimated Hurst index {h_hat:.4g} at level {level} is outside (0, 1)", HurstRangeWarning, stacklevel=2)
    return out


def condition_number(X: np.ndarray) -> float:
    """||X||_F * ||(X^T X)^{-1} X^T||_F, or +inf when X lacks full column rank."""
    X = np.asarray(X, dtype=float)
    sv = np.linalg.svd(X, compute_uv=False)
    if sv.size == 0 or X.shape[0] < X.shape[1]:
        return math.inf
    tol = max(X.shape) * np.finfo(float).eps * sv[0]
    if sv[0] == 0.0 or sv[-1] <= tol:
        return math.inf
    return float(np.sqrt(np.sum(sv**2)) * np.sqrt(np.sum(sv**-2.0)))


def _observable(y: SampledPath, f: TestFunction) -> SampledPath:
    return SampledPath(np.asarray(f(y.values), dtype=float).reshape(-1), y.level, y.horizon)


def build_design(y: SampledPath, fields: VectorFieldSet, tests: Sequence[TestFunction], gamma: float) -> DesignSystem:
    """Observation vector Y and design matrix X on ``y``'s own grid.

    Y[m] is the gamma-scaled QV of f_m(y); X[m, k] is the left Riemann sum of sigma_k[f_m](y)^2.
    """
    h = y.mesh
    left = y.values[:-1]
    Y = np.array([scaled_qv(_observable(y, f), gamma).final for f in tests])
    X = np.empty((len(tests), fields.num_fields))
    for m, f in enumerate(tests):
        for k, sigma in enumerate(fields.fields):
            act = field_action(sigma, f.grad, left)
            X[m, k] = h * np.sum(act * act)
    return DesignSystem(Y, X, condition_number(X), float(gamma), y.level)


def solve_theta(design: DesignSystem) -> ThetaEstimate:
    """Least-squares beta via Householder QR; theta = sqrt(max(beta, 0))."""
    if not math.isfinite(design.kappa):
        raise SingularDesignError(design.kappa)
    X, Y = design.X, design.Y
    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ Y)
    theta = np.sqrt(np.clip(beta, 0.0, None))
    resid = float(np.linalg.norm(Y - X @ beta))
    return ThetaEstimate(beta, theta, resid, math.nan, False, design.kappa, design.level)


def _at_level(y: SampledPath, level: Optional[int]) -> SampledPath:
    return y if level is None or level == y.level else subsample(y, level)


def estimate_theta_known_H(y, fields, tests, hurst: float, level: Optional[int] = None) -> ThetaEstimate:
    """theta_n with gamma = 1 - 2H; ``y`` is subsampled to ``level`` first when given."""
    obs = _at_level(y, level)
    est = solve_theta(build_design(obs, fields, tests, 1.0 - 2.0 * hurst))
    return ThetaEstimate(est.beta, est.theta, est.residual, float(hurst), False, est.kappa, obs.level)


def estimate_theta_unknown_H(y, fields, tests, level: Optional[int] = None) -> ThetaEstimate:
    """theta-bar_n: the Hurst index is first estimated at ``level`` (default: one below y's level)."""
    if level is None:
        level = y.level - 1
    h = estimate_hurst(y, level, warn=False)
    est = solve_theta(build_design(subsample(y, level), fields, tests, h.gamma))
    return ThetaEstimate(est.beta, est.theta, est.residual, h.h_hat, True, est.kappa, level)


class HurstEstimator(BaseEstimator):
    """Estimate the Hurst index of a fractional diffusion from one observed path.

    Parameters
    ----------
    level : int, optional
        Partition level n; the path must be observed on level n + 1 or finer.
        Defaults to one below the observation level.
    horizon : float
        Time horizon used when ``fit`` receives a plain array.

    Attributes
    ----------
    hurst_ : float
    gamma_ : float
        Scaling exponent ``1 - 2 * hurst_``.
    ratio_ : float
    level_ : int
    """

    def __init__(self, level=None, horizon=1.0):
        self.level = level
        self.horizon = horizon

    def fit(self, y, _unused=None):
        path = check_path(y, self.horizon)
        level = path.level - 1 if self.level is None else self.level
        est = estimate_hurst(path, level)
        self.hurst_ = est.h_hat
        self.gamma_ = est.gamma
        self.ratio_ = est.ratio
        self.level_ = level
        return self

    def transform(self, y):
        """Scaled quadratic variation of each component with the fitted exponent."""
        check_is_fitted(self, "hurst_")
        path = check_path(y, self.horizon)
        return np.array([scaled_qv(path.component(i), self.gamma_).final for i in range(path.dim)])


class ThetaEstimator(BaseEstimator):
    """Least-squares recovery of the noise coefficients theta from one observed path.

    Parameters
    ----------
    fields : VectorFieldSet
        Noise vector fields; their ``theta`` is ignored.
    test_functions : sequence of TestFunction
    hurst : float, optional
        Known Hurst index. When None the index is estimated from the same path.
    level : int, optional
        Partition level used for estimation; defaults to the observation level
        (known H) or one below it (unknown H).
    horizon : float
    """

    def __init__(self, fields=None, test_functions=(), hurst=None, level=None, horizon=1.0):
        self.fields = fields
        self.test_functions = test_functions
        self.hurst = hurst
        self.level = level
        self.horizon = horizon

    def fit(self, y, _unused=None):
        if self.fields is None:
            raise ValueError("ThetaEstimator requires vector fields")
        path = check_path(y, self.horizon)
        if self.hurst is None:
            est = estimate_theta_unknown_H(path, self.fields, self.test_functions, self.level)
        else:
            est = estimate_theta_known_H(path, self.fields, self.test_functions, self.hurst, self.level)
        self.estimate_ = est
        self.beta_ = est.beta
        self.theta_ = est.theta
        self.hurst_ = est.used_hurst
        self.kappa_ = est.kappa
        self.residual_ = est.residual
        self.level_ = est.level
        return self

    def predict(self, y):
        """Scaled quadratic variations X @ beta implied by the fitted coefficients on ``y``."""
        check_is_fitted(self, "beta_")
        path = check_path(y, self.horizon)
        path = _at_level(path, min(self.level_, path.level))
        design = build_design(path, self.fields, self.test_functions, 1.0 - 2.0 * self.hurst_)
        return design.X @ self.beta_
