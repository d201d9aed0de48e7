"""Exact sampling of fractional Brownian motion on dyadic grids (Davies-Harte).

Gaussian variates come from ``numpy.random.Generator.standard_normal`` (ziggurat)
on a PCG64 stream per component. Component ``k`` of a request with seed ``s`` uses
``SeedSequence(s, spawn_key=(k,))``, so components are independent of each other and of
the order in which they are drawn.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DomainError, EmbeddingError
from .paths import SampledPath

__all__ = [
    "EIGENVALUE_RTOL",
    "FbmSampleRequest",
    "component_rng",
    "fbm_covariance",
    "fgn_autocovariance",
    "sample_fbm",
]

EIGENVALUE_RTOL = 1e-9
_SEED_MASK = (1 << 64) - 1


def _check_hurst(hurst):
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1), got {hurst}")


def fbm_covariance(hurst, s, t):
    """E[B_s B_t] = (t^2H + s^2H - |t - s|^2H) / 2. Broadcasts over ``s`` and ``t``."""
    _check_hurst(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("fbm_covariance is defined for nonnegative times only")
    two_h = 2.0 * hurst
    cov = 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)
    return float(cov) if cov.ndim == 0 else cov


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at integer ``lags``."""
    k = np.abs(np.asarray(lags, dtype=float))
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** two_h + np.abs(k - 1) ** two_h - 2.0 * k**two_h)


@lru_cache(maxsize=32)
def _circulant_scale(hurst: float, n: int) -> np.ndarray:
    # sqrt(eigenvalues / 2n) of the 2n circulant embedding of n unit-step increments
    r = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(row).real
    top = eig.max()
    low = eig.min()
    if low < -EIGENVALUE_RTOL * top:
        raise EmbeddingError(
            f"circulant embedding eigenvalue {low:.3e} below tolerance "
            f"(H={hurst}, n={n}, largest {top:.3e})"
        )
    eig = np.clip(eig, 0.0, None)
    scale = np.sqrt(eig / (2 * n))
    scale.setflags(write=False)
    return scale


def component_rng(seed: int, component: int) -> np.random.Generator:
    """Independent generator for one component of one request."""
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(int(component),))
    return np.random.Generator(np.random.PCG64(ss))


def _unit_increments(hurst: float, n: int, rng: np.random.Generator) -> np.ndarray:
    scale = _circulant_scale(hurst, n)
    m = scale.shape[0]
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    # real part of F diag(sqrt(lambda / 2n)) (Z1 + i Z2) has the circulant covariance
    return np.fft.fft(scale * z).real[:n]


@dataclass(frozen=True)
class FbmSampleRequest:
    """K independent scalar fBm components on the dyadic grid of level ``fine_level`` over [0, horizon]."""

    hurst: float
    num_components: int = 1
    fine_level: int = 10
    horizon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        _check_hurst(self.hurst)
        if self.num_components < 1:
            raise DomainError(f"num_components must be positive, got {self.num_components}")
        if self.fine_level < 1:
            raise DomainError(f"fine_level must be positive, got {self.fine_level}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")


def sample_fbm(req: FbmSampleRequest) -> SampledPath:
    """Draw a K-component fBm path; deterministic in ``req``.

    Examples
    --------
    >>> path = sample_fbm(FbmSampleRequest(hurst=0.5, num_components=2, fine_level=4, seed=1))
    >>> path.values.shape
    (17, 2)
    >>> bool((path.values[0] == 0).all())
    True
    """
    n = 2**req.fine_level
    step = (req.horizon / n) ** req.hurst
    values = np.zeros((n + 1, req.num_components))
    for k in range(req.num_components):
        incr = _unit_increments(req.hurst, n, component_rng(req.seed, k))
        np.cumsum(incr * step, out=values[1:, k])
    return SampledPath(values, req.fine_level, req.horizon)
