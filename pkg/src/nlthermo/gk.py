"""Rigid Guyer-Krumhansl heat conductor.

State is the absolute temperature ``theta`` and the heat flux ``q``, with
``rho = 1`` and internal energy ``e = c_heat * theta``::

    dq/dt     = -q/tau_r - (c0/theta**2) grad theta + tau_n (lap q + 2 grad div q)
    dtheta/dt = (-div q + r) / c_heat

The entropy is ``eta = c_heat log(theta) - |q|^2 / (2 c0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .fields import Grid, div, grad, gk_flux, inner, laplacian, rank_of
from .powers import PowerBreakdown, inv_log_mean, midpoint
from .timestepping import rk4_step

Source = Union[None, float, np.ndarray, Callable[[float], np.ndarray]]


@dataclass(frozen=True)
class GkParams:
    tau_r: float
    tau_n: float
    c0: float
    c_heat: float = 1.0
    # falsification runs set this to False to allow tau_n <= 0
    strict: bool = True

    def __post_init__(self):
        for name in ("tau_r", "c0", "c_heat"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not np.isfinite(self.tau_n):
            raise ValueError("tau_n must be finite")
        if self.strict and not self.tau_n > 0:
            raise ValueError("tau_n must be positive (pass strict=False for falsification runs)")

    @property
    def admissible(self) -> bool:
        return self.tau_r > 0 and self.tau_n > 0


@dataclass(frozen=True)
class GkState:
    grid: Grid
    theta: np.ndarray
    q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if rank_of(self.theta, self.grid) != 0 or rank_of(self.q, self.grid) != 1:
            raise ValueError("theta must be a scalar field and q a vector field")


def _check_theta(theta: np.ndarray) -> None:
    if not np.all(theta > 0):
        raise DomainError(f"temperature must stay positive (min {np.min(theta):.3e})")


def source_at(r: Source, t: float, grid: Grid) -> np.ndarray:
    if r is None:
        return np.zeros(grid.shape)
    if callable(r):
        return np.asarray(r(t), dtype=float)
    return np.broadcast_to(np.asarray(r, dtype=float), grid.shape)


def _rates(grid, theta, q, p: GkParams, r):
    _check_theta(theta)
    dq_div = div(q, grid)
    dq = (
        -q / p.tau_r
        - (p.c0 / theta**2) * grad(theta, grid)
        + p.tau_n * (laplacian(q, grid) + 2.0 * grad(dq_div, grid))
    )
    dtheta = (r - dq_div) / p.c_heat
    return dtheta, dq


def gk_rhs(s: GkState, p: GkParams, r: Source = None) -> tuple[np.ndarray, np.ndarray]:
    """``(dtheta/dt, dq/dt)`` at the state ``s``."""
    return _rates(s.grid, s.theta, s.q, p, source_at(r, s.t, s.grid))


def gk_step(s: GkState, p: GkParams, r: Source, dt: float) -> GkState:
    grid = s.grid

    def rhs(y, t):
        return _rates(grid, y[0], y[1], p, source_at(r, t, grid))

    theta, q = rk4_step(rhs, (s.theta, s.q), s.t, dt)
    _check_theta(theta)
    return GkState(grid, theta, q, s.t + dt)


def stable_dt(p: GkParams, grid: Grid, theta_min: float, safety: float = 0.5) -> float:
    """``safety * min(tau_r, h^2/(6 tau_n), c_heat theta^2 h^2 / c0)``."""
    h = grid.hmin
    bounds = [p.tau_r, p.c_heat * theta_min**2 * h**2 / p.c0]
    if p.tau_n != 0:
        bounds.append(h**2 / (6.0 * abs(p.tau_n)))
    return safety * min(bounds)


def gk_entropy(s: GkState, p: GkParams) -> np.ndarray:
    _check_theta(s.theta)
    return p.c_heat * np.log(s.theta) - inner(s.q, s.q, s.grid) / (2.0 * p.c0)


def gk_energy(s: GkState, p: GkParams) -> np.ndarray:
    return p.c_heat * s.theta


def _production(grid, q, p: GkParams):
    gq = grad(q, grid)
    dq = div(q, grid)
    relax = inner(q, q, grid) / (p.c0 * p.tau_r)
    nonlocal_ = (p.tau_n / p.c0) * (inner(gq, gq, grid) + 2.0 * dq**2)
    return relax, nonlocal_


def _rate_terms(s: GkState, p: GkParams, r: Source, prev: GkState | None, dt: float | None):
    """Shared pieces: (1/theta) de/dt, d(|q|^2)/dt, d(c_heat log theta)/dt and the midpoint q."""
    grid = s.grid
    if prev is None:
        dtheta, dq = gk_rhs(s, p, r)
        de_dt = p.c_heat * dtheta
        heat_over_theta = de_dt / s.theta
        dlog = heat_over_theta
        dq2 = 2.0 * inner(s.q, dq, grid)
        return heat_over_theta, dq2, dlog, s.theta, s.q, de_dt
    if dt is None or dt <= 0:
        raise ValueError("a positive dt is needed with a previous state")
    _check_theta(prev.theta)
    _check_theta(s.theta)
    de_dt = p.c_heat * (s.theta - prev.theta) / dt
    heat_over_theta = de_dt * inv_log_mean(prev.theta, s.theta)
    dlog = p.c_heat * np.log(s.theta / prev.theta) / dt
    dq2 = (inner(s.q, s.q, grid) - inner(prev.q, prev.q, grid)) / dt
    return heat_over_theta, dq2, dlog, midpoint(s.theta, prev.theta), midpoint(s.q, prev.q), de_dt


def gk_entropy_actions(
    s: GkState,
    p: GkParams,
    r: Source = None,
    prev: GkState | None = None,
    dt: float | None = None,
) -> PowerBreakdown:
    """Internal and external entropy actions and the entropy extra-flux.

    Without ``prev`` the time derivatives are the instantaneous rates of
    :func:`gk_rhs`; with ``prev`` they are backward differences over
    ``[prev.t, s.t]`` and the remaining factors sit at the step midpoint.
    """
    grid = s.grid
    heat_over_theta, dq2, _, theta, q, de_dt = _rate_terms(s, p, r, prev, dt)
    relax, nonlocal_ = _production(grid, q, p)
    internal = heat_over_theta - dq2 / (2.0 * p.c0) - relax - nonlocal_

    t_eval = s.t if prev is None else 0.5 * (s.t + prev.t)
    src = source_at(r, t_eval, grid)
    phi0 = (p.tau_n / p.c0) * gk_flux(q, grid)
    external = -div(q / theta, grid) + src / theta - div(phi0, grid)
    return PowerBreakdown(
        grid,
        internal,
        external,
        extra_flux=phi0,
        terms={
            "heat_rate": de_dt,
            "heat_over_theta": heat_over_theta,
            "flux_energy_rate": -dq2 / (2.0 * p.c0),
            "relaxation": -relax,
            "nonlocal": -nonlocal_,
            "source_over_theta": src / theta,
        },
    )


def gk_second_law_residual(
    s: GkState,
    p: GkParams,
    r: Source = None,
    prev: GkState | None = None,
    dt: float | None = None,
) -> np.ndarray:
    """Pointwise ``d eta/dt - A_en^i``.

    Equals ``|q|^2/(c0 tau_r) + (tau_n/c0)(|grad q|^2 + 2 (div q)^2)`` up to
    round-off, since both sides are built from the same discrete pieces.
    """
    grid = s.grid
    heat_over_theta, dq2, dlog, _, q, _ = _rate_terms(s, p, r, prev, dt)
    relax, nonlocal_ = _production(grid, q, p)
    deta = dlog - dq2 / (2.0 * p.c0)
    internal = heat_over_theta - dq2 / (2.0 * p.c0) - relax - nonlocal_
    return deta - internal


def second_law_scale(s: GkState, p: GkParams, r: Source = None, prev=None, dt=None) -> float:
    """Magnitude of the largest term entering the Second-Law residual."""
    heat_over_theta, dq2, _, _, q, _ = _rate_terms(s, p, r, prev, dt)
    relax, nonlocal_ = _production(s.grid, q, p)
    parts = [heat_over_theta, dq2 / (2.0 * p.c0), relax, nonlocal_]
    return max(float(np.max(np.abs(a))) for a in parts)


def uniform_mode_solution(q0: np.ndarray, p: GkParams, t: float) -> np.ndarray:
    """Closed form ``q0 exp(-t/tau_r)`` for spatially uniform data with r = 0."""
    return np.asarray(q0) * np.exp(-t / p.tau_r)
