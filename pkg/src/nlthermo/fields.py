"""Fields on uniform periodic grids and their difference operators.

A field of rank ``r`` on a ``d``-dimensional grid is a float array of shape
``(d,) * r + grid.shape``: component axes lead, grid axes trail.  ``grad``
prepends the derivative index, so for a vector ``q`` the gradient has
``G[j, i] = d_j q_i`` and ``div`` contracts the *first* index.  With that
convention ``(grad q) @ q`` is ``sum_i G[:, i] q_i``.

Central differences are used for ``grad``/``div``; they are exact adjoints
of each other on a periodic grid, so every discrete divergence integrates
to zero up to round-off.  The staggered pair ``grad_forward`` /
``div_backward`` is provided for energies that must match the compact
Laplacian exactly (``laplacian == div_backward(grad_forward(.))``).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in one or two dimensions."""

    n: tuple[int, ...]
    length: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        length = tuple(float(x) for x in np.atleast_1d(self.length))
        if len(length) == 1 and len(n) > 1:
            length = length * len(n)
        if len(n) not in (1, 2):
            raise ValueError(f"grids are 1D or 2D, got {len(n)} axes")
        if len(length) != len(n):
            raise ValueError("n and length must have the same number of axes")
        if any(k < 8 for k in n):
            raise ValueError(f"need at least 8 nodes per axis, got {n}")
        if any(not np.isfinite(x) or x <= 0 for x in length):
            raise ValueError(f"axis lengths must be positive, got {length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

    @classmethod
    def regular(cls, n: int, length: float = 2 * np.pi, dims: int = 1) -> "Grid":
        return cls((n,) * dims, (length,) * dims)

    @property
    def dims(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / k for L, k in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return prod(self.spacing)

    @property
    def volume(self) -> float:
        return prod(self.length)

    @property
    def hmin(self) -> float:
        return min(self.spacing)

    def axes(self) -> list[np.ndarray]:
        return [np.arange(k) * h for k, h in zip(self.n, self.spacing)]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one array of ``grid.shape`` per axis."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def zeros(self, rank: int = 0) -> np.ndarray:
        return np.zeros((self.dims,) * rank + self.shape)

    def field_shape(self, rank: int) -> tuple[int, ...]:
        return (self.dims,) * rank + self.shape


def rank_of(f: np.ndarray, grid: Grid) -> int:
    """Rank of ``f`` on ``grid``; raises if the shape does not fit."""
    f = np.asarray(f)
    r = f.ndim - grid.dims
    if r < 0 or f.shape != grid.field_shape(r):
        raise ValueError(f"array of shape {f.shape} is not a field on grid {grid.shape}")
    return r


def check_finite(f: np.ndarray, name: str = "field") -> None:
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} has non-finite samples")


# --------------------------------------------------------------------------
# differential operators


def partial(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Central difference along one grid axis, applied componentwise."""
    return _kernels.diff(f, axis, 0, 0.5 / grid.spacing[axis], grid.dims)


def grad(f: np.ndarray, grid: Grid) -> np.ndarray:
    r = rank_of(f, grid)
    if r > 2:
        raise ValueError("grad of a rank-3 field would exceed the supported rank")
    return np.stack([partial(f, grid, a) for a in range(grid.dims)])


def div(F: np.ndarray, grid: Grid) -> np.ndarray:
    r = rank_of(F, grid)
    if r < 1:
        raise ValueError("div needs a field of rank >= 1")
    out = partial(F[0], grid, 0)
    for a in range(1, grid.dims):
        out = out + partial(F[a], grid, a)
    return out


def grad_forward(f: np.ndarray, grid: Grid) -> np.ndarray:
    """One-sided forward differences (values live on the upper cell faces)."""
    r = rank_of(f, grid)
    if r > 2:
        raise ValueError("grad of a rank-3 field would exceed the supported rank")
    return np.stack(
        [_kernels.diff(f, a, 1, 1.0 / h, grid.dims) for a, h in enumerate(grid.spacing)]
    )


def div_backward(F: np.ndarray, grid: Grid) -> np.ndarray:
    """Negative adjoint of :func:`grad_forward`."""
    r = rank_of(F, grid)
    if r < 1:
        raise ValueError("div needs a field of rank >= 1")
    h = grid.spacing
    out = _kernels.diff(F[0], 0, 2, 1.0 / h[0], grid.dims)
    for a in range(1, grid.dims):
        out = out + _kernels.diff(F[a], a, 2, 1.0 / h[a], grid.dims)
    return out


def face_average(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Average of ``f`` onto the upper faces along every axis (rank grows by one)."""
    rank_of(f, grid)
    ax0 = f.ndim - grid.dims
    return np.stack([0.5 * (f + np.roll(f, -1, axis=ax0 + a)) for a in range(grid.dims)])


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Compact second-difference Laplacian, componentwise for any rank."""
    rank_of(f, grid)
    return _kernels.laplacian(f, tuple(1.0 / h**2 for h in grid.spacing))


def grad2(f: np.ndarray, grid: Grid) -> np.ndarray:
    if rank_of(f, grid) > 1:
        raise ValueError("grad2 takes rank 0 or 1")
    return grad(grad(f, grid), grid)


def biharmonic(f: np.ndarray, grid: Grid) -> np.ndarray:
    if rank_of(f, grid) != 0:
        raise ValueError("biharmonic takes a scalar field")
    return laplacian(laplacian(f, grid), grid)


# --------------------------------------------------------------------------
# integrals and contractions


def volume_integral(f: np.ndarray, grid: Grid):
    """Periodic trapezoid rule.  Scalars give a float, higher ranks one value per component."""
    r = rank_of(f, grid)
    total = np.asarray(f).reshape(f.shape[:r] + (-1,)).sum(axis=-1) * grid.cell_volume
    return float(total) if r == 0 else total


def inner(A: np.ndarray, B: np.ndarray, grid: Grid) -> np.ndarray:
    """Pointwise full contraction of two fields of equal rank."""
    ra, rb = rank_of(A, grid), rank_of(B, grid)
    if ra != rb:
        raise ValueError(f"rank mismatch: {ra} vs {rb}")
    prodAB = np.asarray(A) * np.asarray(B)
    return prodAB.reshape((-1,) + grid.shape).sum(axis=0) if ra else prodAB


def contract_last(T: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    """``(T v)_I = sum_i T[I, i] v[i]`` for a rank-k tensor and a vector."""
    rank_of(T, grid)
    if rank_of(v, grid) != 1:
        raise ValueError("second argument must be a vector field")
    sp = "xy"[: grid.dims]
    return np.einsum(f"...i{sp},i{sp}->...{sp}", T, v)


def matvec(T: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    """``(T v)_j = sum_i T[j, i] v[i]`` for a rank-2 field ``T``."""
    if rank_of(T, grid) != 2:
        raise ValueError("matvec needs a rank-2 field")
    return contract_last(T, v, grid)


def norm_sup(f: np.ndarray) -> float:
    return float(np.max(np.abs(f))) if np.size(f) else 0.0


# --------------------------------------------------------------------------
# identity checkers


def second_grade_identity_residual(T3: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Max-norm of ``T3 . grad grad v - [div(T3 grad v) - div(T3) . grad v]``.

    ``T3 grad v`` is the vector ``N_k = sum_{ji} T3[k, j, i] (grad v)[j, i]``.
    """
    if rank_of(T3, grid) != 3 or rank_of(v, grid) != 1:
        raise ValueError("expects a rank-3 tensor and a vector field")
    gv = grad(v, grid)
    lhs = inner(T3, grad(gv, grid), grid)
    N = np.stack([inner(T3[k], gv, grid) for k in range(grid.dims)])
    rhs = div(N, grid) - inner(div(T3, grid), gv, grid)
    return norm_sup(lhs - rhs)


def gk_flux(q: np.ndarray, grid: Grid) -> np.ndarray:
    """``(grad q) q + 2 q div q``, the vector whose divergence appears in the GK identity."""
    return matvec(grad(q, grid), q, grid) + 2.0 * q * div(q, grid)


def gk_identity_terms(q: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``q.(lap q + 2 grad div q) = div[(grad q)q + 2 q div q] - |grad q|^2 - 2 (div q)^2``."""
    if rank_of(q, grid) != 1:
        raise ValueError("expects a vector field")
    gq = grad(q, grid)
    dq = div(q, grid)
    lhs = inner(q, laplacian(q, grid) + 2.0 * grad(dq, grid), grid)
    rhs = div(gk_flux(q, grid), grid) - inner(gq, gq, grid) - 2.0 * dq**2
    return lhs, rhs


def gk_identity_residual(q: np.ndarray, grid: Grid, globally: bool = False) -> float:
    """Pointwise max-norm residual, or the volume-integrated one with ``globally=True``."""
    lhs, rhs = gk_identity_terms(q, grid)
    if globally:
        return abs(volume_integral(lhs - rhs, grid))
    return norm_sup(lhs - rhs)


# --------------------------------------------------------------------------
# CSV


def field_to_csv(f: np.ndarray, grid: Grid, path=None) -> str:
    """One row per node: coordinates, then components in C order.  Returns the text."""
    r = rank_of(f, grid)
    coords = [c.ravel() for c in grid.coords()]
    comps = np.asarray(f).reshape((-1,) + (int(np.prod(grid.shape)),))
    names = ["x", "y"][: grid.dims]
    idx = list(np.ndindex(*((grid.dims,) * r)))
    header = names + (["value"] if r == 0 else ["c" + "".join(map(str, i)) for i in idx])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k in range(comps.shape[1]):
        w.writerow([repr(float(c[k])) for c in coords] + [repr(float(v)) for v in comps[:, k]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def field_from_csv(text: str, grid: Grid) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(v) for v in row[grid.dims:]] for row in rows[1:]])
    first = rows[0][grid.dims]
    r = 0 if first == "value" else len(first) - 1
    return data.T.reshape(grid.field_shape(r))
