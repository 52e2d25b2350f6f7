"""Kirchhoff thermoelastic plate, with and without memory.

Instantaneous model, with ``D`` the compact Laplacian::

    (rho - b D) udd = -a D D u + c_th D theta + rho f

Memory model (no rotary inertia)::

    rho udd = -D [ int C'(s) D u(t - s) ds + C0 D u ] + c_th D theta + rho f

with ``C'(s) = -C1 exp(-lam s)``.  ``theta`` is prescribed, not evolved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import (
    Grid,
    div_backward,
    grad,
    grad_forward,
    laplacian,
    rank_of,
    volume_integral,
)
from .powers import PowerBreakdown, midpoint
from .timestepping import cg, rk4_step


@dataclass(frozen=True)
class PlateMemory:
    c0: float
    c1: float
    lam: float

    def __post_init__(self):
        if not self.c0 > 0 or self.c1 < 0 or not self.lam > 0:
            raise ValueError("memory needs C0 > 0, C1 >= 0, lam > 0")

    def deriv(self, s):
        """``C'(s)``."""
        return -self.c1 * np.exp(-self.lam * np.asarray(s, dtype=float))


@dataclass(frozen=True)
class PlateParams:
    rho: float = 1.0
    a: float = 1.0
    b: float = 0.0
    c_th: float = 0.0
    memory: PlateMemory | None = None

    def __post_init__(self):
        if not self.rho > 0 or not self.a > 0:
            raise ValueError("rho and a must be positive")
        if self.b < 0 or self.c_th < 0:
            raise ValueError("b and c_th must be non-negative")
        if self.memory is not None and self.b != 0:
            raise ValueError("the memory plate has no rotary-inertia term; set b = 0")


@dataclass(frozen=True)
class PlateState:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    # Delta u at past times s_j = j dt, j = 0..m (slot 0 is the present)
    history: np.ndarray | None = None

    def __post_init__(self):
        for name in ("u", "v", "theta"):
            if rank_of(getattr(self, name), self.grid) != 0:
                raise ValueError(f"{name} must be a scalar field")


def with_static_history(s: PlateState, m: int) -> PlateState:
    """Attach a history in which the plate has always sat at its current shape."""
    lap = laplacian(s.u, s.grid)
    return replace(s, history=np.repeat(lap[None], m + 1, axis=0))


def _weights(m: int, ds: float) -> np.ndarray:
    w = np.full(m + 1, ds)
    w[0] = w[-1] = 0.5 * ds
    return w


def memory_convolution(history: np.ndarray, mem: PlateMemory, ds: float) -> np.ndarray:
    """Trapezoid ``int C'(s) D u(t - s) ds`` over the stored window."""
    m = history.shape[0] - 1
    wk = _weights(m, ds) * mem.deriv(ds * np.arange(m + 1))
    return np.tensordot(wk, history, axes=(0, 0))


def _forcing(f, t, grid):
    if f is None:
        return np.zeros(grid.shape)
    return np.asarray(f(t) if callable(f) else f, dtype=float)


def _moment(u, grid, p: PlateParams, history, ds):
    """Bending moment whose Laplacian drives the plate: ``a D u`` or the memory form."""
    lap = laplacian(u, grid)
    if p.memory is None:
        return p.a * lap, lap
    hist = history.copy()
    hist[0] = lap
    return memory_convolution(hist, p.memory, ds) + p.memory.c0 * lap, lap


def _accel(u, theta, grid, p: PlateParams, f, history=None, ds=None, x0=None):
    moment, _ = _moment(u, grid, p, history, ds)
    rhs = -laplacian(moment, grid) + p.c_th * laplacian(theta, grid) + p.rho * f
    if p.b == 0:
        return rhs / p.rho

    def apply(x):
        return p.rho * x - p.b * laplacian(x, grid)

    return cg(apply, rhs, x0=x0, rtol=1e-12, maxiter=10 * max(grid.n))


def plate_accel(s: PlateState, p: PlateParams, f=None, dt: float | None = None) -> np.ndarray:
    """Acceleration at ``s`` (``dt`` is the history spacing for the memory plate)."""
    if p.memory is not None and (s.history is None or dt is None):
        raise ValueError("the memory plate needs a history buffer and its spacing dt")
    return _accel(s.u, s.theta, s.grid, p, _forcing(f, s.t, s.grid), s.history, dt)


def plate_step(s: PlateState, p: PlateParams, f=None, dt: float = 1e-3) -> PlateState:
    """One RK4 step on ``(u, v)``.

    For the memory plate the present slot of the history follows the RK
    stage while past slots stay frozen; afterwards the buffer shifts by one.
    """
    grid = s.grid
    if p.memory is not None and s.history is None:
        raise ValueError("the memory plate needs a history buffer")

    def rhs(y, t):
        u, v = y
        return v, _accel(u, s.theta, grid, p, _forcing(f, t, grid), s.history, dt)

    u, v = rk4_step(rhs, (s.u, s.v), s.t, dt)
    history = s.history
    if history is not None:
        history = np.concatenate([laplacian(u, grid)[None], history[:-1]])
    return replace(s, u=u, v=v, t=s.t + dt, history=history)


def plate_energy_density(s: PlateState, p: PlateParams) -> dict[str, np.ndarray]:
    grid = s.grid
    lap = laplacian(s.u, grid)
    stiff = p.a if p.memory is None else p.memory.c0
    kinetic = 0.5 * p.rho * s.v**2
    rotary = 0.5 * p.b * (grad_forward(s.v, grid) ** 2).sum(axis=0)
    potential = 0.5 * stiff * lap**2
    # coupling to the prescribed (time-independent) temperature
    thermal = -p.c_th * s.theta * lap
    return {"kinetic": kinetic + rotary, "potential": potential + thermal}


def plate_energy(s: PlateState, p: PlateParams) -> float:
    d = plate_energy_density(s, p)
    return volume_integral(d["kinetic"] + d["potential"], s.grid)


def stable_dt(p: PlateParams, grid: Grid, safety: float = 0.5) -> float:
    """``safety * 2.83 / omega_max`` with the largest discrete frequency."""
    lam = sum(4.0 / h**2 for h in grid.spacing)
    stiff = p.a if p.memory is None else p.memory.c0 + p.memory.c1 / p.memory.lam
    omega = np.sqrt(stiff * lam**2 / (p.rho + p.b * lam))
    return safety * 2.83 / omega


def mode_frequency(k: float, p: PlateParams, h: float | None = None) -> float:
    """Angular frequency of ``sin(k x)``; with ``h`` the discrete symbol is used."""
    lam = k**2 if h is None else (2.0 * np.sin(0.5 * k * h) / h) ** 2
    return float(np.sqrt(p.a * lam**2 / (p.rho + p.b * lam)))


def plate_powers(
    s_prev: PlateState, s_now: PlateState, p: PlateParams, f=None, dt: float | None = None
) -> PowerBreakdown:
    """Mechanical powers of the instantaneous plate over one step.

    internal: ``d/dt[a/2 (Du)^2 + b/2 |D+ v|^2 - c_th theta Du]`` (theta fixed in time)
    external: ``-div N' + rho f v``
    ``terms['classical']`` is ``T . grad v`` on faces, ``terms['dual']`` the
    classical form minus ``div N``; ``terms['kinetic_rate']`` is ``1/2 d(rho v^2)/dt``.
    """
    if p.memory is not None:
        raise ValueError("use plate_memory_powers for the memory plate")
    grid = s_now.grid
    dt = s_now.t - s_prev.t if dt is None else dt
    lap0, lap1 = laplacian(s_prev.u, grid), laplacian(s_now.u, grid)
    lapm = midpoint(lap0, lap1)
    vm = midpoint(s_prev.v, s_now.v)
    th = midpoint(s_prev.theta, s_now.theta)
    acc = (s_now.v - s_prev.v) / dt
    Dv0, Dv1 = grad_forward(s_prev.v, grid), grad_forward(s_now.v, grid)
    Dvm = midpoint(Dv0, Dv1)

    stored = 0.5 * p.a * (lap1**2 - lap0**2) / dt + 0.5 * p.b * ((Dv1**2 - Dv0**2).sum(axis=0)) / dt
    internal = stored - p.c_th * th * (lap1 - lap0) / dt
    kinetic_rate = 0.5 * p.rho * (s_now.v**2 - s_prev.v**2) / dt
    fm = midpoint(_forcing(f, s_prev.t, grid), _forcing(f, s_now.t, grid))

    # Face stress and fluxes.  With S+ the one-node shift along each axis the
    # product rule v div_b(F) + F . D+ v = div_b(F S+ v) is exact, so the
    # balances below hold pointwise up to the time discretisation.
    moment = p.a * lapm - p.c_th * th
    T = -grad_forward(moment, grid) + p.b * grad_forward(acc, grid)
    N = -_shift(moment, grid) * Dvm
    N_prime = -(T * _shift(vm, grid)) + N
    classical = (T * Dvm).sum(axis=0)
    external = -div_backward(N_prime, grid) + p.rho * fm * vm
    return PowerBreakdown(
        grid,
        internal,
        external,
        extra_flux=N,
        terms={
            "kinetic_rate": kinetic_rate,
            "classical": classical,
            "dual": classical - div_backward(N, grid),
            "N_prime": N_prime,
            "N_printed": -_shift(p.a * lapm, grid) * Dvm,
            "stored_rate": stored,
        },
    )


def _shift(f, grid):
    """``f`` at the next node along each axis (one component per axis)."""
    return np.stack([np.roll(f, -1, axis=a) for a in range(grid.dims)])


def plate_memory_powers(s_prev: PlateState, s_now: PlateState, p: PlateParams, dt: float) -> PowerBreakdown:
    """Mechanical powers of the memory plate over one step.

    internal: ``[int C' Du^t ds - c_th theta] D v + C0/2 d(Du)^2/dt``
    """
    if p.memory is None:
        raise ValueError("plate_memory_powers needs memory parameters")
    grid = s_now.grid
    lap0, lap1 = s_prev.history[0], s_now.history[0]
    conv = midpoint(
        memory_convolution(s_prev.history, p.memory, dt), memory_convolution(s_now.history, p.memory, dt)
    )
    th = midpoint(s_prev.theta, s_now.theta)
    vm = midpoint(s_prev.v, s_now.v)
    lap_v = laplacian(vm, grid)
    stored = 0.5 * p.memory.c0 * (lap1**2 - lap0**2) / dt
    internal = (conv - p.c_th * th) * lap_v + stored
    moment = conv + p.memory.c0 * midpoint(lap0, lap1) - p.c_th * th
    Dvm = grad_forward(vm, grid)
    T = -grad_forward(moment, grid)
    N = -_shift(moment, grid) * Dvm
    N_prime = -(T * _shift(vm, grid)) + N
    classical = (T * Dvm).sum(axis=0)
    return PowerBreakdown(
        grid,
        internal,
        -div_backward(N_prime, grid),
        extra_flux=N,
        terms={
            "kinetic_rate": 0.5 * p.rho * (s_now.v**2 - s_prev.v**2) / dt,
            "convolution": conv,
            "classical": classical,
            "dual": classical - div_backward(N, grid),
            "N_prime": N_prime,
        },
    )


def second_grade_parts(s: PlateState, p: PlateParams, f=None) -> dict[str, np.ndarray]:
    """Stress decomposition ``T2 = c grad theta + b grad udd``, ``T3 = a Du I`` (central operators).

    Used by the virtual-power balance; ``rho_udd`` is the actual inertia.
    """
    if p.memory is not None:
        raise ValueError("virtual balance is implemented for the instantaneous plate")
    grid = s.grid
    acc = plate_accel(s, p, f)
    lap = laplacian(s.u, grid)
    eye = np.zeros(grid.field_shape(2))
    for i in range(grid.dims):
        eye[i, i] = 1.0
    T2 = p.c_th * grad(s.theta, grid) + p.b * grad(acc, grid)
    T3 = p.a * lap * eye
    return {"rho_udd": p.rho * acc, "T2": T2, "T3": T3, "rho_f": p.rho * _forcing(f, s.t, grid)}


def single_mode(grid: Grid, k: int = 1, amp: float = 0.1, theta: float = 0.0) -> PlateState:
    x = grid.coords()[0]
    L = grid.length[0]
    u = amp * np.sin(2 * np.pi * k * x / L)
    return PlateState(grid, u, np.zeros(grid.shape), np.full(grid.shape, theta))


def measured_frequency(ts: np.ndarray, signal: np.ndarray) -> float:
    """Angular frequency from linearly interpolated zero crossings."""
    sgn = np.sign(signal)
    idx = np.where(sgn[:-1] * sgn[1:] < 0)[0]
    if len(idx) < 3:
        raise ValueError("need at least three zero crossings")
    tc = ts[idx] - signal[idx] * (ts[idx + 1] - ts[idx]) / (signal[idx + 1] - signal[idx])
    half = np.mean(np.diff(tc))
    return float(np.pi / half)
