"""Rigid quadrupole dielectric, transverse-electric reduction in 2D.

``E = (Ex, Ey)`` lies in the plane and ``H`` is the out-of-plane component.
The constitutive operator ``L(E) = eps0 E - eps1 lap E - eps2 grad div E``
is symmetric positive definite, so ``dE/dt`` comes from a CG solve::

    L(dE/dt) = (d_y H, -d_x H)
    mu dH/dt = -(d_x Ey - d_y Ex)

Curls use central differences; the ``eps2`` pair uses ``div_backward`` and
its adjoint ``-grad_forward`` so the extra-flux identity is exact node by node.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import Grid, div, div_backward, grad_forward, laplacian, partial, rank_of, volume_integral
from .powers import PowerBreakdown, midpoint
from .timestepping import cg, rk4_step


@dataclass(frozen=True)
class EmParams:
    mu: float = 1.0
    eps0: float = 1.0
    eps1: float = 0.0
    eps2: float = 0.0

    def __post_init__(self):
        if not self.mu > 0 or not self.eps0 > 0:
            raise ValueError("mu and eps0 must be positive")
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("eps1 and eps2 must be non-negative")


@dataclass(frozen=True)
class EmState:
    grid: Grid
    E: np.ndarray
    H: np.ndarray
    t: float = 0.0
    # last dE/dt, reused as the CG starting guess
    E_rate: np.ndarray | None = None

    def __post_init__(self):
        if self.grid.dims != 2:
            raise ValueError("the dielectric runs on 2D grids")
        if rank_of(self.E, self.grid) != 1 or rank_of(self.H, self.grid) != 0:
            raise ValueError("E must be a vector field and H a scalar field")


def _div_b(E, grid):
    return div_backward(E, grid)


def constitutive(E: np.ndarray, grid: Grid, p: EmParams) -> np.ndarray:
    """``D = L(E)``."""
    out = p.eps0 * E
    if p.eps1:
        out = out - p.eps1 * laplacian(E, grid)
    if p.eps2:
        out = out - p.eps2 * grad_forward(_div_b(E, grid), grid)
    return out


def curl_h(H: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([partial(H, grid, 1), -partial(H, grid, 0)])


def curl_e(E: np.ndarray, grid: Grid) -> np.ndarray:
    return partial(E[1], grid, 0) - partial(E[0], grid, 1)


def _rates(E, H, grid, p, guess=None):
    rhs = curl_h(H, grid)
    if p.eps1 == 0 and p.eps2 == 0:
        dE = rhs / p.eps0
    else:
        dE = cg(lambda x: constitutive(x, grid, p), rhs, x0=guess, rtol=1e-13, maxiter=20 * max(grid.n))
    return dE, -curl_e(E, grid) / p.mu


def em_rhs(s: EmState, p: EmParams):
    return _rates(s.E, s.H, s.grid, p, s.E_rate)


def em_step(s: EmState, p: EmParams, dt: float) -> EmState:
    grid = s.grid
    guess = [s.E_rate]

    def rhs(y, t):
        dE, dH = _rates(y[0], y[1], grid, p, guess[0])
        guess[0] = dE
        return dE, dH

    E, H = rk4_step(rhs, (s.E, s.H), s.t, dt)
    return replace(s, E=E, H=H, t=s.t + dt, E_rate=guess[0])


def stable_dt(p: EmParams, grid: Grid, safety: float = 0.5) -> float:
    """``safety * 2.83 / omega_max``; central curls cap the wavenumber at ``1/h``."""
    kmax2 = sum(1.0 / h**2 for h in grid.spacing)
    return safety * 2.83 / np.sqrt(kmax2 / (p.mu * p.eps0))


def energy_density(E, H, grid, p: EmParams) -> np.ndarray:
    out = p.mu * H**2 + p.eps0 * (E**2).sum(axis=0)
    if p.eps1:
        out = out + p.eps1 * (grad_forward(E, grid) ** 2).reshape((-1,) + grid.shape).sum(axis=0)
    if p.eps2:
        out = out + p.eps2 * _div_b(E, grid) ** 2
    return 0.5 * out


def em_energy(s: EmState, p: EmParams) -> float:
    return volume_integral(energy_density(s.E, s.H, s.grid, p), s.grid)


def em_powers(s_prev: EmState, s_now: EmState, p: EmParams, dt: float | None = None) -> PowerBreakdown:
    """Electromagnetic powers over one step.

    internal: backward difference of the energy density
    classical: ``dD/dt . E + dB/dt . H`` at the midpoint
    external: ``-div(E x H + N)``, with ``N = -eps1 (grad Edot) E - eps2 (div Edot) E``
    """
    grid = s_now.grid
    dt = s_now.t - s_prev.t if dt is None else dt
    internal = (energy_density(s_now.E, s_now.H, grid, p) - energy_density(s_prev.E, s_prev.H, grid, p)) / dt
    Edot = (s_now.E - s_prev.E) / dt
    Hdot = (s_now.H - s_prev.H) / dt
    Em = midpoint(s_prev.E, s_now.E)
    Hm = midpoint(s_prev.H, s_now.H)
    classical = (constitutive(Edot, grid, p) * Em).sum(axis=0) + p.mu * Hdot * Hm

    N = extra_flux(Edot, Em, grid, p)
    poynting = np.stack([Em[1] * Hm, -Em[0] * Hm])
    external = -div(poynting, grid) - div_backward(N, grid)
    return PowerBreakdown(
        grid,
        internal,
        external,
        extra_flux=N,
        terms={"classical": classical, "dual": classical - div_backward(N, grid), "poynting": poynting},
    )


def extra_flux(Edot: np.ndarray, E: np.ndarray, grid: Grid, p: EmParams) -> np.ndarray:
    """Face flux ``N`` (one component per axis) built with the shifted-node product rule."""
    N = np.zeros(grid.field_shape(1))
    for a in range(grid.dims):
        if p.eps1:
            DEdot = grad_forward(Edot, grid)[a]
            N[a] -= p.eps1 * (DEdot * np.roll(E, -1, axis=1 + a)).sum(axis=0)
        if p.eps2:
            N[a] -= p.eps2 * E[a] * np.roll(_div_b(Edot, grid), -1, axis=a)
    return N


def em_heat_power_residual(s_prev: EmState, s_now: EmState, p: EmParams, dt: float | None = None):
    """Implied heat power, classical minus new definition.

    Returns ``(integral, field)``: the field is ``div N``, zero after volume
    integration and non-zero pointwise whenever ``eps1`` or ``eps2`` act.
    """
    pw = em_powers(s_prev, s_now, p, dt)
    field = pw.terms["classical"] - pw.internal
    return volume_integral(field, s_now.grid), field


def plane_wave_frequency(k: float, p: EmParams, h: float | None = None) -> float:
    """Angular frequency of a transverse wave ``Ey ~ sin(k x)``.

    With ``h`` the symbols of the central curl and compact Laplacian are used.
    """
    if h is None:
        return float(k / np.sqrt(p.mu * (p.eps0 + p.eps1 * k**2)))
    kt = np.sin(k * h) / h
    lam = (2.0 * np.sin(0.5 * k * h) / h) ** 2
    return float(kt / np.sqrt(p.mu * (p.eps0 + p.eps1 * lam)))


def plane_wave(grid: Grid, p: EmParams, mode: int = 1, amp: float = 1.0) -> EmState:
    """Right-travelling wave along x with the discrete dispersion relation."""
    x = grid.coords()[0]
    k = 2 * np.pi * mode / grid.length[0]
    h = grid.spacing[0]
    omega = plane_wave_frequency(k, p, h)
    kt = np.sin(k * h) / h
    E = np.stack([np.zeros(grid.shape), amp * np.sin(k * x)])
    H = (kt * amp / (p.mu * omega)) * np.sin(k * x)
    return EmState(grid, E, H)


def gaussian_pulse(grid: Grid, p: EmParams, width: float = 0.5, amp: float = 1.0) -> EmState:
    """Divergence-carrying Gaussian bump in ``Ex`` at the domain centre, ``H = 0``."""
    x, y = grid.coords()
    cx, cy = (0.5 * L for L in grid.length)
    bump = amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width**2))
    return EmState(grid, np.stack([bump, 0.5 * bump]), np.zeros(grid.shape))


def mode_phase(s: EmState, mode: int = 1) -> float:
    """Phase of ``Ey`` against ``sin(k x)``, i.e. ``phi`` with ``Ey ~ sin(k x - phi)``."""
    x = s.grid.coords()[0]
    k = 2 * np.pi * mode / s.grid.length[0]
    a = volume_integral(s.E[1] * np.sin(k * x), s.grid)
    b = volume_integral(s.E[1] * np.cos(k * x), s.grid)
    return float(np.arctan2(-b, a))
