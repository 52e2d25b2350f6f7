"""Second-grade heat conductor with an integrated-history constitutive law.

The memory variable is the integrated history of the temperature gradient,
``gbar^t(s) = int_{t-s}^t grad theta``, sampled on past-time nodes
``s_j = j ds`` with ``ds`` locked to the time step.  The flux is::

    q  = q1 - div q2
    q1 = -theta int K1'(s) gbar^t(s) ds
    q2 = -theta int K2'(s) grad gbar^t(s) ds

Kernels are exponential, ``K'(s) = k exp(-lam s)``.  With ``k > 0`` the
kernel ``K(s) = (k/lam)(1 - exp(-lam s))`` is positive and the quadratic
functional ``psi2 = 1/2 int K1' |gbar|^2 + 1/2 int K2' |grad gbar|^2`` is
non-negative.  A negative amplitude is accepted so that falsification runs
can flip the sign.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .fields import Grid, div, grad, grad2, inner, matvec, rank_of, volume_integral


@dataclass(frozen=True)
class Kernel:
    amplitude: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("kernel decay rate must be positive")
        if not np.isfinite(self.amplitude):
            raise ValueError("kernel amplitude must be finite")

    @property
    def admissible(self) -> bool:
        return self.amplitude >= 0

    def deriv(self, s):
        """``K'(s)``."""
        return self.amplitude * np.exp(-self.lam * np.asarray(s, dtype=float))

    def second(self, s):
        """``K''(s)``."""
        return -self.lam * self.deriv(s)

    def value(self, s):
        return (self.amplitude / self.lam) * (1.0 - np.exp(-self.lam * np.asarray(s, dtype=float)))

    def moment(self, order: int = 1) -> float:
        """``int_0^inf K'(s) s^order ds`` in closed form."""
        from math import factorial

        return self.amplitude * factorial(order) / self.lam ** (order + 1)

    def span(self, cover: float = 5.0) -> float:
        """Past-time window holding all but ``exp(-cover)`` of the kernel mass."""
        return cover / self.lam


@dataclass(frozen=True)
class HistoryBuffer:
    """``gbar`` has shape ``(m + 1, dims) + grid.shape``; ``ggrad`` adds one more component axis."""

    grid: Grid
    ds: float
    gbar: np.ndarray
    ggrad: np.ndarray
    g_last: np.ndarray

    @property
    def m(self) -> int:
        return self.gbar.shape[0] - 1

    @property
    def s(self) -> np.ndarray:
        return self.ds * np.arange(self.m + 1)

    @classmethod
    def at_rest(cls, grid: Grid, ds: float, m: int) -> "HistoryBuffer":
        """No gradient ever applied."""
        if m < 1 or not ds > 0:
            raise ValueError("need m >= 1 and ds > 0")
        z = np.zeros((m + 1,) + grid.field_shape(1))
        zg = np.zeros((m + 1,) + grid.field_shape(2))
        return cls(grid, float(ds), z, zg, grid.zeros(1))

    @classmethod
    def steady(cls, grid: Grid, ds: float, m: int, g0: np.ndarray) -> "HistoryBuffer":
        """History of a gradient ``g0`` held forever: ``gbar(s) = g0 s``."""
        g0 = np.asarray(g0, dtype=float)
        if rank_of(g0, grid) != 1:
            raise ValueError("g0 must be a vector field")
        s = ds * np.arange(m + 1)
        shape = (-1,) + (1,) * (g0.ndim)
        gbar = s.reshape(shape) * g0
        ggrad = s.reshape((-1,) + (1,) * (g0.ndim + 1)) * grad(g0, grid)
        return cls(grid, float(ds), gbar, ggrad, g0.copy())

    def covers(self, k: Kernel, cover: float = 5.0) -> bool:
        return self.m * self.ds >= k.span(cover) * (1 - 1e-12)


def update_history(buf: HistoryBuffer, g_now: np.ndarray, dt: float) -> HistoryBuffer:
    """Advance the buffer by one step of length ``dt``.

    ``gbar^{t+dt}(s_j) = gbar^t(s_{j-1}) + int_t^{t+dt} g``, with the step
    integral taken by the trapezoid rule on the stored previous gradient and
    ``g_now``.  Slot 0 stays zero; the oldest slot falls off the end.
    """
    if not np.isclose(dt, buf.ds, rtol=1e-12, atol=0.0):
        raise ValueError(f"history spacing {buf.ds} is locked to the time step, got dt = {dt}")
    g_now = np.asarray(g_now, dtype=float)
    if rank_of(g_now, buf.grid) != 1:
        raise ValueError("g_now must be a vector field")
    inc = 0.5 * dt * (buf.g_last + g_now)
    gbar = np.empty_like(buf.gbar)
    gbar[0] = 0.0
    gbar[1:] = buf.gbar[:-1] + inc
    ggrad = np.empty_like(buf.ggrad)
    ggrad[0] = 0.0
    ggrad[1:] = buf.ggrad[:-1] + grad(inc, buf.grid)
    return replace(buf, gbar=gbar, ggrad=ggrad, g_last=g_now.copy())


def _weights(buf: HistoryBuffer) -> np.ndarray:
    w = np.full(buf.m + 1, buf.ds)
    w[0] = w[-1] = 0.5 * buf.ds
    return w


def kernel_integral(buf: HistoryBuffer, k: Kernel, which: str = "gbar") -> np.ndarray:
    """Trapezoid value of ``int K'(s) X(s) ds`` for ``X`` = gbar or its gradient."""
    data = buf.gbar if which == "gbar" else buf.ggrad
    wk = _weights(buf) * k.deriv(buf.s)
    return np.tensordot(wk, data, axes=(0, 0))


def _check(buf: HistoryBuffer, theta: np.ndarray) -> None:
    if buf.m < 1:
        raise ValueError("history buffer is empty")
    if not np.all(theta > 0):
        raise DomainError("temperature must stay positive")


def memory_flux_parts(buf, theta, k1: Kernel, k2: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """``(q1, q2)``: the vector and rank-2 flux constituents."""
    _check(buf, theta)
    q1 = -theta * kernel_integral(buf, k1, "gbar")
    q2 = -theta * kernel_integral(buf, k2, "ggrad")
    return q1, q2


def memory_flux(buf, theta, k1: Kernel, k2: Kernel) -> np.ndarray:
    q1, q2 = memory_flux_parts(buf, theta, k1, k2)
    return q1 - div(q2, buf.grid)


def memory_entropy_action(buf, theta, h, k1: Kernel, k2: Kernel) -> np.ndarray:
    """Internal entropy action of the memory conductor, evaluated directly."""
    _check(buf, theta)
    grid = buf.grid
    I1 = kernel_integral(buf, k1, "gbar")
    I2 = kernel_integral(buf, k2, "ggrad")
    g = grad(theta, grid)
    H = grad2(theta, grid)
    bracket = h - inner(I1, g, grid) - inner(I2, H, grid)
    return bracket / theta + (2.0 / theta**2) * inner(matvec(I2, g, grid), g, grid)


def psi2(buf: HistoryBuffer, k1: Kernel, k2: Kernel) -> np.ndarray:
    """Pointwise ``1/2 int K1'|gbar|^2 + 1/2 int K2'|grad gbar|^2``."""
    w = _weights(buf)
    a1 = w * k1.deriv(buf.s)
    a2 = w * k2.deriv(buf.s)
    sq1 = (buf.gbar**2).reshape((buf.m + 1, -1) + buf.grid.shape).sum(axis=1)
    sq2 = (buf.ggrad**2).reshape((buf.m + 1, -1) + buf.grid.shape).sum(axis=1)
    return 0.5 * (np.tensordot(a1, sq1, axes=(0, 0)) + np.tensordot(a2, sq2, axes=(0, 0)))


def psi2_rate_bound(buf, theta, k1: Kernel, k2: Kernel) -> np.ndarray:
    """Pointwise right-hand side of the rate inequality for ``psi2``."""
    _check(buf, theta)
    grid = buf.grid
    I1 = kernel_integral(buf, k1, "gbar")
    I2 = kernel_integral(buf, k2, "ggrad")
    g = grad(theta, grid)
    H = grad2(theta, grid)
    return inner(I1, g, grid) + inner(I2, H, grid) - (2.0 / theta) * inner(matvec(I2, g, grid), g, grid)


def psi2_rate_residual(
    buf_prev: HistoryBuffer,
    buf_now: HistoryBuffer,
    theta_prev: np.ndarray,
    theta_now: np.ndarray,
    k1: Kernel,
    k2: Kernel,
    dt: float,
) -> float:
    """``int [d psi2/dt - bound] dx`` over one step; the inequality asks for ``<= 0``.

    The rate is a backward difference; the bound is averaged over both ends.
    """
    grid = buf_now.grid
    rate = (psi2(buf_now, k1, k2) - psi2(buf_prev, k1, k2)) / dt
    bound = 0.5 * (
        psi2_rate_bound(buf_prev, theta_prev, k1, k2) + psi2_rate_bound(buf_now, theta_now, k1, k2)
    )
    return volume_integral(rate - bound, grid)


# --------------------------------------------------------------------------
# driven trajectories


@dataclass(frozen=True)
class MemoryParams:
    k1: Kernel
    k2: Kernel
    c_heat: float = 1.0

    def __post_init__(self):
        if not self.c_heat > 0:
            raise ValueError("c_heat must be positive")


def switch_on_profile(grid: Grid, theta_bar: float = 1.0, amp: float = 0.05, mode: int = 1):
    """Temperature held at ``theta_bar`` for ``t < 0`` and at ``theta_bar + amp sin`` afterwards."""
    x = grid.coords()[0]
    L = grid.length[0]
    prof = theta_bar + amp * np.sin(2 * np.pi * mode * x / L)

    def theta(t: float) -> np.ndarray:
        return prof if t >= 0 else np.full(grid.shape, theta_bar)

    def theta_dot(t: float) -> np.ndarray:
        return np.zeros(grid.shape)

    return theta, theta_dot


def oscillating_profile(grid: Grid, theta_bar=1.0, amp=0.05, omega=1.0, mode: int = 1):
    """``theta = theta_bar + amp sin(x) sin(omega t)``."""
    x = grid.coords()[0]
    L = grid.length[0]
    shape = np.sin(2 * np.pi * mode * x / L)

    def theta(t):
        return theta_bar + amp * shape * np.sin(omega * t)

    def theta_dot(t):
        return amp * omega * shape * np.cos(omega * t)

    return theta, theta_dot


def run_memory(grid: Grid, p: MemoryParams, theta_fn, theta_dot_fn, dt: float, steps: int, m: int):
    """Drive the conductor with a prescribed temperature; yields one dict per step.

    Each dict carries ``t``, the buffer, ``theta``, the flux, the heat rate
    ``h = c_heat dtheta/dt``, the entropy action and the ``psi2`` step residual.
    """
    buf = HistoryBuffer.at_rest(grid, dt, m)
    theta = theta_fn(0.0)
    buf = replace(buf, g_last=grad(theta_fn(-dt), grid))
    out = []
    t = 0.0
    for n in range(steps + 1):
        if n > 0:
            prev, theta_prev = buf, theta
            t = n * dt
            theta = theta_fn(t)
            buf = update_history(buf, grad(theta, grid), dt)
            resid = psi2_rate_residual(prev, buf, theta_prev, theta, p.k1, p.k2, dt)
        else:
            resid = 0.0
        h = p.c_heat * theta_dot_fn(t)
        out.append(
            {
                "t": t,
                "buffer": buf,
                "theta": theta,
                "q": memory_flux(buf, theta, p.k1, p.k2),
                "h": h,
                "entropy_action": memory_entropy_action(buf, theta, h, p.k1, p.k2),
                "psi2": volume_integral(psi2(buf, p.k1, p.k2), grid),
                "psi2_residual": resid,
            }
        )
    return out


def history_to_csv(buf: HistoryBuffer, path=None) -> str:
    """Rows ``s, node, gbar components``."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    comps = buf.gbar.reshape((buf.m + 1, buf.grid.dims, -1))
    w.writerow(["s", "node"] + [f"g{i}" for i in range(buf.grid.dims)])
    for j, s in enumerate(buf.s):
        for node in range(comps.shape[2]):
            w.writerow([repr(float(s)), node] + [repr(float(v)) for v in comps[j, :, node]])
    text = out.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
