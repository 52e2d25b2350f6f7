"""Power / entropy-action bookkeeping shared by all models.

Time derivatives inside a breakdown are two-point backward differences over
one step; every other factor is evaluated at the step midpoint.  With that
convention quadratic energies telescope exactly, so global balances are
limited by the integrator and the spatial stencils only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Grid, volume_integral


@dataclass
class PowerBreakdown:
    """Pointwise internal/external power (or entropy action) at one step."""

    grid: Grid
    internal: np.ndarray
    external: np.ndarray
    extra_flux: np.ndarray | None = None
    terms: dict[str, np.ndarray] = field(default_factory=dict)

    def integral(self, name: str = "internal") -> float:
        if name in ("internal", "external"):
            return volume_integral(getattr(self, name), self.grid)
        return volume_integral(self.terms[name], self.grid)

    def balance(self) -> float:
        """``int (internal - external) dx``."""
        return volume_integral(self.internal - self.external, self.grid)


def rate(now: np.ndarray, prev: np.ndarray, dt: float) -> np.ndarray:
    return (now - prev) / dt


def midpoint(now: np.ndarray, prev: np.ndarray) -> np.ndarray:
    return 0.5 * (now + prev)


def inv_log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``log(b/a) / (b - a)``, the reciprocal logarithmic mean of two positive fields.

    Multiplying ``(b - a)`` by this gives ``log(b/a)`` exactly, which is what
    makes ``(1/theta) de/dt`` cancel against ``d(log theta)/dt`` step by step.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = (b - a) / a
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    out = np.log1p(xs) / (xs * a)
    # series of log1p(x)/x for tiny x
    series = (1.0 - x / 2.0 + x * x / 3.0) / a
    return np.where(small, series, out)
