"""Fourier conductor, the simple-material control.

``q = -k grad theta`` and ``c_heat dtheta/dt = -div q + r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fields import Grid, div, grad, rank_of
from .timestepping import rk4_step


@dataclass(frozen=True)
class FourierParams:
    k: float = 1.0
    c_heat: float = 1.0

    def __post_init__(self):
        if not self.k > 0 or not self.c_heat > 0:
            raise ValueError("k and c_heat must be positive")


@dataclass(frozen=True)
class FourierState:
    grid: Grid
    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if rank_of(self.theta, self.grid) != 0:
            raise ValueError("theta must be a scalar field")


def heat_flux(s: FourierState, p: FourierParams) -> np.ndarray:
    return -p.k * grad(s.theta, s.grid)


def _rate(theta, grid, p, r):
    return (p.k * div(grad(theta, grid), grid) + r) / p.c_heat


def fourier_step(s: FourierState, p: FourierParams, r=None, dt: float = 1e-3) -> FourierState:
    grid = s.grid

    def src(t):
        if r is None:
            return 0.0
        return r(t) if callable(r) else r

    (theta,) = rk4_step(lambda y, t: (_rate(y[0], grid, p, src(t)),), (s.theta,), s.t, dt)
    if not np.all(theta > 0):
        raise DomainError("temperature must stay positive")
    return FourierState(grid, theta, s.t + dt)


def heat_rate(s: FourierState, p: FourierParams, r=None) -> np.ndarray:
    """``h = -div q + r``."""
    rr = 0.0 if r is None else (r(s.t) if callable(r) else r)
    return -div(heat_flux(s, p), s.grid) + rr
