"""Periodic finite-difference stencils.

Every stencil exists twice: a numba ``@njit`` loop and a numpy ``np.roll``
expression performing the same floating point operations in the same order,
so both backends agree bit for bit. Set ``NLT_DISABLE_NUMBA=1`` (or run
without numba installed) to force the numpy path.

All kernels take arrays whose trailing one or two axes are the grid axes;
leading axes are component axes and are flattened before the loop.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _numba_requested() -> bool:
    flag = os.environ.get("NLT_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


USE_NUMBA = _numba_requested()


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_backend(name: str) -> None:
    """Switch backend at runtime (used by the benchmark and the tests)."""
    global USE_NUMBA
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not importable")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")


# --------------------------------------------------------------------------
# numpy reference path


def _np_central(f, axis, scale):
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) * scale


def _np_forward(f, axis, scale):
    return (np.roll(f, -1, axis=axis) - f) * scale


def _np_backward(f, axis, scale):
    return (f - np.roll(f, 1, axis=axis)) * scale


def _np_second(f, axis, scale):
    return ((np.roll(f, -1, axis=axis) - 2.0 * f) + np.roll(f, 1, axis=axis)) * scale


# --------------------------------------------------------------------------
# numba path; op codes: 0 central, 1 forward, 2 backward, 3 second difference

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_diff_1d(f, op, scale):
        m, n = f.shape
        out = np.empty_like(f)
        for c in range(m):
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i > 0 else n - 1
                if op == 0:
                    out[c, i] = (f[c, ip] - f[c, im]) * scale
                elif op == 1:
                    out[c, i] = (f[c, ip] - f[c, i]) * scale
                elif op == 2:
                    out[c, i] = (f[c, i] - f[c, im]) * scale
                else:
                    out[c, i] = ((f[c, ip] - 2.0 * f[c, i]) + f[c, im]) * scale
        return out

    @njit(cache=True)
    def _nb_diff_2d(f, axis, op, scale):
        m, nx, ny = f.shape
        out = np.empty_like(f)
        for c in range(m):
            for i in range(nx):
                for j in range(ny):
                    if axis == 0:
                        ip = i + 1 if i + 1 < nx else 0
                        im = i - 1 if i > 0 else nx - 1
                        fp = f[c, ip, j]
                        fm = f[c, im, j]
                    else:
                        jp = j + 1 if j + 1 < ny else 0
                        jm = j - 1 if j > 0 else ny - 1
                        fp = f[c, i, jp]
                        fm = f[c, i, jm]
                    f0 = f[c, i, j]
                    if op == 0:
                        out[c, i, j] = (fp - fm) * scale
                    elif op == 1:
                        out[c, i, j] = (fp - f0) * scale
                    elif op == 2:
                        out[c, i, j] = (f0 - fm) * scale
                    else:
                        out[c, i, j] = ((fp - 2.0 * f0) + fm) * scale
        return out

    @njit(cache=True)
    def _nb_lap_2d(f, sx, sy):
        m, nx, ny = f.shape
        out = np.empty_like(f)
        for c in range(m):
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i > 0 else nx - 1
                for j in range(ny):
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j > 0 else ny - 1
                    f0 = f[c, i, j]
                    ax = ((f[c, ip, j] - 2.0 * f0) + f[c, im, j]) * sx
                    ay = ((f[c, i, jp] - 2.0 * f0) + f[c, i, jm]) * sy
                    out[c, i, j] = ax + ay
        return out


_NP_OPS = (_np_central, _np_forward, _np_backward, _np_second)


def diff(f: np.ndarray, axis: int, op: int, scale: float, dims: int) -> np.ndarray:
    """Apply stencil ``op`` along grid axis ``axis`` of a field with ``dims`` grid axes."""
    f = np.asarray(f, dtype=np.float64)
    grid_shape = f.shape[f.ndim - dims:]
    if not USE_NUMBA:
        return _NP_OPS[op](f, f.ndim - dims + axis, scale)
    flat = np.ascontiguousarray(f.reshape((-1,) + grid_shape))
    if dims == 1:
        out = _nb_diff_1d(flat, op, scale)
    else:
        out = _nb_diff_2d(flat, axis, op, scale)
    return out.reshape(f.shape)


def laplacian(f: np.ndarray, scales: tuple[float, ...]) -> np.ndarray:
    """Compact three-point Laplacian, summed over grid axes in order."""
    f = np.asarray(f, dtype=np.float64)
    dims = len(scales)
    if dims == 1:
        return diff(f, 0, 3, scales[0], 1)
    if not USE_NUMBA:
        ax = f.ndim - 2
        return _np_second(f, ax, scales[0]) + _np_second(f, ax + 1, scales[1])
    grid_shape = f.shape[-2:]
    flat = np.ascontiguousarray(f.reshape((-1,) + grid_shape))
    return _nb_lap_2d(flat, scales[0], scales[1]).reshape(f.shape)
