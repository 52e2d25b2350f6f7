"""Explicit RK4, matrix-free conjugate gradients and a blow-up guard."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import BlowUpError, ConvergenceError

State = tuple  # tuple of ndarrays


def rk4_step(rhs: Callable[[State, float], State], y: State, t: float, dt: float) -> State:
    """Classical fourth-order Runge-Kutta on a tuple of arrays."""
    k1 = rhs(y, t)
    y2 = tuple(a + 0.5 * dt * k for a, k in zip(y, k1))
    k2 = rhs(y2, t + 0.5 * dt)
    y3 = tuple(a + 0.5 * dt * k for a, k in zip(y, k2))
    k3 = rhs(y3, t + 0.5 * dt)
    y4 = tuple(a + dt * k for a, k in zip(y, k3))
    k4 = rhs(y4, t + dt)
    return tuple(
        a + (dt / 6.0) * (p + 2.0 * q + 2.0 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)
    )


def cg(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray | None = None,
    rtol: float = 1e-10,
    maxiter: int | None = None,
) -> np.ndarray:
    """Conjugate gradients for a symmetric positive-definite operator.

    Stops when ``|b - A x| <= rtol * |b|``.  Raises ConvergenceError after
    ``maxiter`` iterations (default ``10 * b.size``).
    """
    if maxiter is None:
        maxiter = 10 * b.size
    bnorm = np.sqrt(np.vdot(b, b).real)
    if bnorm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    for _ in range(maxiter):
        if np.sqrt(rr) <= rtol * bnorm:
            return x
        Ap = apply(p)
        alpha = rr / np.vdot(p, Ap).real
        x += alpha * p
        r -= alpha * Ap
        rr_new = np.vdot(r, r).real
        p = r + (rr_new / rr) * p
        rr = rr_new
    if np.sqrt(rr) <= rtol * bnorm:
        return x
    raise ConvergenceError(
        f"CG stalled after {maxiter} iterations, relative residual {np.sqrt(rr) / bnorm:.3e}"
    )


class BlowUpGuard:
    """Aborts once any sample exceeds ``factor`` times the initial scale."""

    def __init__(self, arrays: Sequence[np.ndarray], factor: float = 1e6, floor: float = 1.0):
        self.limit = factor * max([floor] + [float(np.max(np.abs(a))) for a in arrays if a.size])

    def check(self, arrays: Sequence[np.ndarray], step: int | None = None) -> None:
        for a in arrays:
            if not np.all(np.isfinite(a)) or np.max(np.abs(a)) > self.limit:
                where = f" at step {step}" if step is not None else ""
                raise BlowUpError(
                    f"solution exceeded {self.limit:.3g}{where}; reduce dt or check parameters"
                )
