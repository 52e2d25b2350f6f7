"""Isothermal Cahn-Hilliard mixture.

``dc/dt = div[M(c) grad mu]`` with ``mu = -gamma lap c + theta0 F'(c) + theta G'(c)``,
``F = beta (c^4/4 - c^2/2)`` and ``G = beta c^2 / 2``.

The flux is built from the staggered pair: ``mu`` is differenced forward
onto cell faces, multiplied by the face-averaged mobility and differenced
back.  Mass is then conserved by telescoping, and the discrete free energy
``int [theta0 F + theta G + gamma/2 |D+ c|^2]`` decays exactly along the
semi-discrete flow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .fields import Grid, div_backward, face_average, grad_forward, laplacian, rank_of, volume_integral
from .powers import PowerBreakdown, midpoint
from .timestepping import rk4_step

MOBILITIES = ("constant", "degenerate")


@dataclass(frozen=True)
class ChParams:
    gamma: float
    beta: float
    theta0: float
    theta: float
    m0: float = 1.0
    mobility: str = "constant"
    c_heat: float = 1.0

    def __post_init__(self):
        for name in ("beta", "theta0", "theta", "c_heat"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.m0 < 0:
            raise ValueError("mobility must be non-negative")
        if self.mobility not in MOBILITIES:
            raise ValueError(f"mobility must be one of {MOBILITIES}")


@dataclass(frozen=True)
class ChState:
    grid: Grid
    c: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if rank_of(self.c, self.grid) != 0:
            raise ValueError("c must be a scalar field")


def _check_range(c: np.ndarray) -> None:
    cmax = float(np.max(np.abs(c)))
    if not np.isfinite(cmax) or cmax > 10.0:
        raise DomainError(f"concentration left the admissible range (max |c| = {cmax:.3g})")
    if cmax > 1.5:
        warnings.warn(f"concentration overshoot: max |c| = {cmax:.3g}", RuntimeWarning, stacklevel=3)


def F(c, p: ChParams):
    return p.beta * (0.25 * c**4 - 0.5 * c**2)


def G(c, p: ChParams):
    return 0.5 * p.beta * c**2


def mobility(c: np.ndarray, p: ChParams) -> np.ndarray:
    if p.mobility == "constant":
        return np.full(np.shape(c), float(p.m0))
    return np.maximum(0.0, p.m0 * (1.0 - c**2))


def chemical_potential(s: ChState, p: ChParams) -> np.ndarray:
    return _mu(s.c, s.grid, p)


def _mu(c, grid, p):
    return -p.gamma * laplacian(c, grid) + p.theta0 * p.beta * (c**3 - c) + p.theta * p.beta * c


def _flux(c, mu, grid, p):
    """Face flux ``M grad mu``; one component per axis, living on upper faces."""
    Mf = face_average(mobility(c, p), grid)
    return Mf * grad_forward(mu, grid)


def _rate(c, grid, p):
    return div_backward(_flux(c, _mu(c, grid, p), grid, p), grid)


def ch_rhs(s: ChState, p: ChParams, source=None) -> np.ndarray:
    out = _rate(s.c, s.grid, p)
    if source is not None:
        out = out + _source(source, s.t)
    return out


def _source(source, t):
    return np.asarray(source(t) if callable(source) else source, dtype=float)


def ch_step(s: ChState, p: ChParams, dt: float, source: Callable | np.ndarray | None = None) -> ChState:
    """One RK4 step; ``source`` is an optional zero-mean forcing added to dc/dt."""
    grid = s.grid

    def rhs(y, t):
        r = _rate(y[0], grid, p)
        if source is not None:
            r = r + _source(source, t)
        return (r,)

    (c,) = rk4_step(rhs, (s.c,), s.t, dt)
    _check_range(c)
    return ChState(grid, c, s.t + dt)


def stable_dt(p: ChParams, grid: Grid, safety: float = 0.5) -> float:
    """RK4 bound from the largest eigenvalue of the linearised operator about c = 0 and |c| = 1."""
    lam = sum(4.0 / h**2 for h in grid.spacing)
    stiff = p.m0 * lam * (p.gamma * lam + p.beta * (3.0 * p.theta0 + p.theta))
    return safety * 2.78 / stiff if stiff > 0 else np.inf


def free_energy_density(c, grid, p: ChParams) -> np.ndarray:
    Dc = grad_forward(c, grid)
    return p.theta0 * F(c, p) + p.theta * G(c, p) + 0.5 * p.gamma * (Dc**2).sum(axis=0)


def free_energy(s: ChState, p: ChParams) -> float:
    return volume_integral(free_energy_density(s.c, s.grid, p), s.grid)


def internal_energy(s: ChState, p: ChParams) -> float:
    """``int [theta0 F + gamma/2 |D+ c|^2]``, the concentration part of e (theta is held fixed)."""
    Dc = grad_forward(s.c, s.grid)
    dens = p.theta0 * F(s.c, p) + 0.5 * p.gamma * (Dc**2).sum(axis=0)
    return volume_integral(dens, s.grid)


def mass(s: ChState) -> float:
    return volume_integral(s.c, s.grid)


def dissipation_density(c, grid, p: ChParams) -> np.ndarray:
    """``M |grad mu|^2`` with the face mobility, summed over axes at each node."""
    mu = _mu(c, grid, p)
    Mf = face_average(mobility(c, p), grid)
    return (Mf * grad_forward(mu, grid) ** 2).sum(axis=0)


def dissipation(s: ChState, p: ChParams) -> float:
    return volume_integral(dissipation_density(s.c, s.grid, p), s.grid)


def growth_rate(k: float, p: ChParams, h: float | None = None) -> float:
    """Linear growth rate of mode ``k`` about ``c = 0`` (constant mobility).

    With ``h`` given, the symbol of the compact Laplacian replaces ``k^2``.
    """
    lam = k**2 if h is None else (2.0 * np.sin(0.5 * k * h) / h) ** 2
    return -p.m0 * lam * (p.gamma * lam - p.beta * (p.theta0 - p.theta))


def ch_powers(s_prev: ChState, s_now: ChState, p: ChParams, dt: float) -> PowerBreakdown:
    """Chemical powers over the step ``[s_prev.t, s_now.t]``.

    ``terms`` holds the dual-form internal power ``cdot mu + M|grad mu|^2 + div N``,
    the extra flux ``N = -gamma cdot grad c`` is returned as ``extra_flux``.
    """
    grid = s_now.grid
    c0, c1 = s_prev.c, s_now.c
    cm = midpoint(c0, c1)
    cdot = (c1 - c0) / dt
    D0, D1 = grad_forward(c0, grid), grad_forward(c1, grid)
    Dm = midpoint(D0, D1)
    mu = midpoint(_mu(c0, grid, p), _mu(c1, grid, p))
    Dmu = grad_forward(mu, grid)
    Mf = face_average(mobility(cm, p), grid)
    diss = (Mf * Dmu**2).sum(axis=0)

    dF = p.theta0 * (F(c1, p) - F(c0, p)) / dt
    dG = p.theta * (G(c1, p) - G(c0, p)) / dt
    dgrad = 0.5 * p.gamma * ((D1**2).sum(axis=0) - (D0**2).sum(axis=0)) / dt
    internal = dF + dG + dgrad + diss

    cdot_f = face_average(cdot, grid)
    mu_f = face_average(mu, grid)
    N = -p.gamma * cdot_f * Dm
    external = div_backward(p.gamma * cdot_f * Dm + Mf * mu_f * Dmu, grid)
    dual = cdot * mu + diss + div_backward(N, grid)
    return PowerBreakdown(
        grid,
        internal,
        external,
        extra_flux=N,
        terms={
            "dual": dual,
            "classical": cdot * mu + diss,
            "dissipation": diss,
            "free_energy_rate": dF + dG + dgrad,
            "theta_G_rate": dG,
        },
    )


def isothermal_source(s: ChState, p: ChParams) -> np.ndarray:
    """The heat supply ``r = -theta dG/dt - M|grad mu|^2`` that keeps theta fixed."""
    cdot = _rate(s.c, s.grid, p)
    return -p.theta * p.beta * s.c * cdot - dissipation_density(s.c, s.grid, p)


def ch_heat_form_residual(
    s_prev: ChState,
    s_now: ChState,
    p: ChParams,
    dt: float,
    q: np.ndarray | None = None,
    r: np.ndarray | None = None,
    theta_prev: float | None = None,
    theta_now: float | None = None,
) -> float:
    """Volume-integrated residual of the internal-energy balance.

    ``e = theta0 F + gamma/2 |grad c|^2 + c_heat theta`` and
    ``de/dt = cdot mu + gamma div(cdot grad c) + M|grad mu|^2 - div q + r``.
    """
    grid = s_now.grid
    pw = ch_powers(s_prev, s_now, p, dt)
    th0 = p.theta if theta_prev is None else theta_prev
    th1 = p.theta if theta_now is None else theta_now
    c0, c1 = s_prev.c, s_now.c
    D0, D1 = grad_forward(c0, grid), grad_forward(c1, grid)
    de = (
        p.theta0 * (F(c1, p) - F(c0, p)) / dt
        + 0.5 * p.gamma * ((D1**2).sum(axis=0) - (D0**2).sum(axis=0)) / dt
        + p.c_heat * (th1 - th0) / dt
    )
    supply = pw.terms["dual"]
    if q is not None:
        supply = supply - div_backward(face_average_vector(q, grid), grid)
    if r is not None:
        supply = supply + r
    return volume_integral(de - supply, grid)


def face_average_vector(q: np.ndarray, grid: Grid) -> np.ndarray:
    """Component ``a`` of ``q`` averaged onto the upper face along axis ``a``."""
    return np.stack([np.asarray(face_average(q[a], grid))[a] for a in range(grid.dims)])


def random_state(grid: Grid, amplitude: float = 0.01, seed: int = 0, mean: float = 0.0) -> ChState:
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape)
    noise -= noise.mean()
    return ChState(grid, mean + amplitude * noise / np.max(np.abs(noise)))
