"""Fixed-step RK4 (forward and backward in time) and composite Simpson's rule.

Both integrators accept an optional ``context`` array with one row per grid
node (controls, or states plus controls for the adjoint pass). At RK4
half-steps the context is the average of the two neighbouring rows, i.e.
linear interpolation on a uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class IntegrationError(ArithmeticError):
    """A non-finite value appeared during integration."""

    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError(f"n must be an integer, got {self.n!r}")
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.n % 2:
            raise ValueError(f"n must be even for Simpson's 1/3 rule, got {self.n}")
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"need finite t0 < t1, got t0={self.t0!r}, t1={self.t1!r}")

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / self.n

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of a vector quantity at every node of a uniform grid."""

    grid: TimeGrid
    samples: np.ndarray  # shape (n + 1, dim)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.shape[0] != self.grid.n + 1:
            raise ValueError(
                f"expected {self.grid.n + 1} samples for the grid, got {samples.shape[0]}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def column(self, i: int) -> np.ndarray:
        return self.samples[:, i]

    def __len__(self):
        return self.samples.shape[0]


VectorField = Callable[..., "np.ndarray | tuple"]


def _check_context(context, grid: TimeGrid) -> Optional[np.ndarray]:
    if context is None:
        return None
    ctx = np.asarray(context, dtype=float)
    if ctx.ndim == 1:
        ctx = ctx[:, None]
    if ctx.shape[0] != grid.n + 1:
        raise ValueError(
            f"context has {ctx.shape[0]} rows but the grid has {grid.n + 1} nodes")
    return ctx


def _finite(y: np.ndarray) -> bool:
    # inf - inf and nan both propagate to a non-finite sum
    return math.isfinite(float(np.sum(y)))


def rk4_integrate_forward(f: VectorField, y0, grid: TimeGrid, context=None) -> Trajectory:
    """Classical RK4 from t0 to t1.

    ``f(t, y)`` returns dy/dt; with ``context`` it is called as ``f(t, y, c)``
    where ``c`` is the context row at ``t``.
    """
    ctx = _check_context(context, grid)
    h = grid.h
    t = grid.times
    y = np.array(y0, dtype=float).ravel()
    out = np.empty((grid.n + 1, y.size))
    out[0] = y
    if not _finite(y):
        raise IntegrationError("non-finite initial value", node=0)

    for k in range(grid.n):
        tk, tm = t[k], t[k] + 0.5 * h
        if ctx is None:
            k1 = np.asarray(f(tk, y))
            k2 = np.asarray(f(tm, y + 0.5 * h * k1))
            k3 = np.asarray(f(tm, y + 0.5 * h * k2))
            k4 = np.asarray(f(t[k + 1], y + h * k3))
        else:
            cm = 0.5 * (ctx[k] + ctx[k + 1])
            k1 = np.asarray(f(tk, y, ctx[k]))
            k2 = np.asarray(f(tm, y + 0.5 * h * k1, cm))
            k3 = np.asarray(f(tm, y + 0.5 * h * k2, cm))
            k4 = np.asarray(f(t[k + 1], y + h * k3, ctx[k + 1]))
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not _finite(y):
            raise IntegrationError(f"non-finite state at node {k + 1} (t={t[k + 1]:g})", node=k + 1)
        out[k + 1] = y
    return Trajectory(grid, out)


def rk4_integrate_backward(g: VectorField, yT, grid: TimeGrid, context=None) -> Trajectory:
    """Classical RK4 from t1 down to t0 with step -h; sample n equals ``yT``.

    Typical use is an adjoint system whose right-hand side depends on a state
    trajectory and control schedule passed in ``context`` (one row per node).
    """
    ctx = _check_context(context, grid)
    h = grid.h
    t = grid.times
    y = np.array(yT, dtype=float).ravel()
    out = np.empty((grid.n + 1, y.size))
    out[grid.n] = y
    if not _finite(y):
        raise IntegrationError("non-finite terminal value", node=grid.n)

    for k in range(grid.n, 0, -1):
        tk, tm = t[k], t[k] - 0.5 * h
        if ctx is None:
            k1 = np.asarray(g(tk, y))
            k2 = np.asarray(g(tm, y - 0.5 * h * k1))
            k3 = np.asarray(g(tm, y - 0.5 * h * k2))
            k4 = np.asarray(g(t[k - 1], y - h * k3))
        else:
            cm = 0.5 * (ctx[k] + ctx[k - 1])
            k1 = np.asarray(g(tk, y, ctx[k]))
            k2 = np.asarray(g(tm, y - 0.5 * h * k1, cm))
            k3 = np.asarray(g(tm, y - 0.5 * h * k2, cm))
            k4 = np.asarray(g(t[k - 1], y - h * k3, ctx[k - 1]))
        y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not _finite(y):
            raise IntegrationError(f"non-finite value at node {k - 1} (t={t[k - 1]:g})", node=k - 1)
        out[k - 1] = y
    return Trajectory(grid, out)


def simpson_integral(samples, h: float) -> float:
    """Composite Simpson's 1/3 rule on equally spaced samples."""
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if y.size < 3 or y.size % 2 == 0:
        raise ValueError(
            f"Simpson's 1/3 rule needs an odd number (>= 3) of samples, got {y.size}")
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))

