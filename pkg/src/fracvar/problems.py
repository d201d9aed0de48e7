"""Built-in fractional diffusions used by the convergence experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .estimators import TestFunction
from .paths import SampledPath
from .rde import VectorFieldSet, solve_2d_linear_exact

__all__ = ["ExampleProblem", "builtin_examples", "get_example", "A1", "A2"]

A1 = np.array([[1.0, 0.5], [0.5, 1.0]])
A2 = np.array([[2.0, -1.0], [-1.0, 2.0]])


@dataclass(frozen=True)
class ExampleProblem:
    """A diffusion with known coefficients, an initial state and the observables used to fit it.

    ``exact`` maps a driver path to the exact solution when one is available; otherwise the
    harness integrates with Heun-3.
    """

    name: str
    fields: VectorFieldSet
    y0: np.ndarray
    tests: Sequence[TestFunction]
    exact: Optional[Callable[[SampledPath], SampledPath]] = None

    @property
    def theta(self) -> np.ndarray:
        return self.fields.theta

    @property
    def num_noises(self) -> int:
        return self.fields.num_fields


def _coord(i, d):
    def func(y):
        return y[..., i]

    def grad(y):
        g = np.zeros(np.shape(y))
        g[..., i] = 1.0
        return g

    return TestFunction(func, grad, f"y{i + 1}")


def _nonlinear1d():
    fields = VectorFieldSet(
        dim=1,
        fields=(np.sin, np.cos),
        theta=(0.5, 0.8),
        names=("sin(y)", "cos(y)"),
    )
    tests = (
        TestFunction(lambda y: np.sin(y[..., 0]), np.cos, "sin"),
        TestFunction(lambda y: np.cos(y[..., 0]), lambda y: -np.sin(y), "cos"),
    )
    return ExampleProblem("nonlinear1d", fields, np.array([1.0]), tests)


def _linear2d():
    theta = np.array([0.1, 0.1])
    fields = VectorFieldSet(
        dim=2,
        fields=(lambda y: y @ A1.T, lambda y: y @ A2.T),
        theta=theta,
        names=("A1 y", "A2 y"),
    )
    y0 = np.array([0.5, 1.0])

    def exact(driver):
        return solve_2d_linear_exact(A1, A2, theta, driver, y0)

    return ExampleProblem("linear2d", fields, y0, (_coord(0, 2), _coord(1, 2)), exact)


def _sigma1(z):
    out = np.zeros(np.shape(z))
    out[..., 0] = np.sin(z[..., 0]) * np.cos(z[..., 1])
    return out


def _sigma2(z):
    out = np.zeros(np.shape(z))
    out[..., 1] = np.cos(z[..., 0]) * np.sin(z[..., 1])
    return out


def _nonlinear2d():
    fields = VectorFieldSet(
        dim=2,
        fields=(_sigma1, _sigma2),
        theta=(0.5, 0.8),
        names=("(sin x cos y, 0)", "(0, cos x sin y)"),
    )
    return ExampleProblem("nonlinear2d", fields, np.array([0.5, 0.5]), (_coord(0, 2), _coord(1, 2)))


_REGISTRY = {
    "nonlinear1d": _nonlinear1d,
    "linear2d": _linear2d,
    "nonlinear2d": _nonlinear2d,
}


def builtin_examples() -> dict:
    """Fresh instances of every built-in example keyed by id."""
    return {name: build() for name, build in _REGISTRY.items()}


def get_example(name: str) -> ExampleProblem:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(_REGISTRY)}") from None
