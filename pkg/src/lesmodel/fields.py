"""Uniform grids, nodal fields and second-order finite-difference stencils.

Every array is stored row-major with one axis per spatial dimension.  Two
boundary modes are supported by the stencils:

``"periodic"``
    The last node duplicates the first one (``x[-1] == x[0] + L``), so the
    stencils wrap over the ``n - 1`` distinct nodes and copy the result back
    onto the duplicate.
``"one-sided"``
    Second-order one-sided differences at both ends.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

BOUNDARY_MODES = ("periodic", "one-sided")


class GridError(ValueError):
    pass


class InsufficientHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceTimeGrid:
    origin: tuple[float, ...]
    extent: tuple[float, ...]
    n_points: tuple[int, ...]
    dt: float
    n_time_levels: int = 3

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "extent", tuple(float(v) for v in self.extent))
        object.__setattr__(self, "n_points", tuple(int(v) for v in self.n_points))
        if not (len(self.origin) == len(self.extent) == len(self.n_points)):
            raise GridError("origin, extent and n_points must have one entry per axis")
        if any(n < 3 for n in self.n_points):
            raise GridError(f"need at least 3 points per axis, got {self.n_points}")
        if any(e <= 0 for e in self.extent):
            raise GridError("extent must be positive on every axis")
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.n_time_levels < 2:
            raise GridError("at least two time levels must be retained")

    @classmethod
    def from_spacing(cls, lo: float, hi: float, dx: float, dt: float, **kw) -> "SpaceTimeGrid":
        """1D grid on ``[lo, hi]`` with spacing ``dx``; ``hi - lo`` must be a multiple of ``dx``."""
        n_cells = (hi - lo) / dx
        if abs(n_cells - round(n_cells)) > 1e-9 * max(1.0, n_cells):
            raise GridError(f"domain length {hi - lo} is not a multiple of dx={dx}")
        return cls((lo,), (hi - lo,), (int(round(n_cells)) + 1,), dt, **kw)

    @classmethod
    def cube(cls, lo: float, hi: float, n: int, dt: float = 1.0) -> "SpaceTimeGrid":
        return cls((lo,) * 3, (hi - lo,) * 3, (n,) * 3, dt)

    @property
    def ndim(self) -> int:
        return len(self.n_points)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(e / (n - 1) for e, n in zip(self.extent, self.n_points))

    @property
    def size(self) -> int:
        return int(np.prod(self.n_points))

    def coords(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.dx[axis] * np.arange(self.n_points[axis])

    def mesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*(self.coords(a) for a in range(self.ndim)), indexing="ij")

    def same_space(self, other: "SpaceTimeGrid") -> bool:
        return (self.n_points == other.n_points
                and np.allclose(self.origin, other.origin)
                and np.allclose(self.extent, other.extent))


@dataclass(frozen=True)
class ScalarField:
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} values, got {values.size}")
        values = values.reshape(self.grid.n_points)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: SpaceTimeGrid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.mesh()))


_TRI = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_TRI_INDEX = {}
for _k, (_i, _j) in enumerate(_TRI):
    _TRI_INDEX[(_i, _j)] = _TRI_INDEX[(_j, _i)] = _k


@dataclass(frozen=True)
class TensorField3:
    """Symmetric 3x3 tensor per node, stored as the six upper-triangular components."""

    grid: SpaceTimeGrid
    components: np.ndarray  # shape (6, *n_points), order of _TRI

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float).reshape((6,) + self.grid.n_points)
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_full(cls, grid: SpaceTimeGrid, full: np.ndarray) -> "TensorField3":
        """Build from a ``(3, 3, *n)`` array; the upper triangle is kept."""
        return cls(grid, np.stack([full[i, j] for i, j in _TRI]))

    def __getitem__(self, ij: tuple[int, int]) -> np.ndarray:
        return self.components[_TRI_INDEX[ij]]

    def full(self) -> np.ndarray:
        out = np.empty((3, 3) + self.grid.n_points)
        for i in range(3):
            for j in range(3):
                out[i, j] = self[i, j]
        return out

    def trace(self) -> np.ndarray:
        return self[0, 0] + self[1, 1] + self[2, 2]

    def frobenius_norm(self) -> np.ndarray:
        c = self.components
        sq = c[0] ** 2 + c[3] ** 2 + c[5] ** 2 + 2.0 * (c[1] ** 2 + c[2] ** 2 + c[4] ** 2)
        return np.sqrt(sq)


class FieldHistory:
    """Ring buffer of the most recent time levels of a field.

    Levels may be scalar arrays or stacks of components (any array shape);
    only the time stamps are checked.
    """

    def __init__(self, maxlen: int = 3, dt: float | None = None):
        if maxlen < 2:
            raise ValueError("history must retain at least two levels")
        self._levels: deque[tuple[float, np.ndarray]] = deque(maxlen=maxlen)
        self.dt = dt

    def push(self, t: float, values) -> None:
        values = np.asarray(values, dtype=float)
        if self._levels:
            t_prev = self._levels[-1][0]
            if not t > t_prev:
                raise ValueError(f"time stamps must increase: {t} after {t_prev}")
            step = t - t_prev
            if self.dt is None:
                self.dt = step
            elif not np.isclose(step, self.dt, rtol=1e-9, atol=0.0):
                raise ValueError(f"non-uniform time spacing {step} (dt={self.dt})")
        self._levels.append((float(t), values))

    def copy(self) -> "FieldHistory":
        h = FieldHistory(self._levels.maxlen, self.dt)
        h._levels.extend(self._levels)
        return h

    def with_level(self, t: float, values) -> "FieldHistory":
        h = self.copy()
        h.push(t, values)
        return h

    def __len__(self) -> int:
        return len(self._levels)

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(self._levels)

    @property
    def newest(self) -> np.ndarray:
        return self._levels[-1][1]

    @property
    def time(self) -> float:
        return self._levels[-1][0]

    def level(self, back: int) -> np.ndarray:
        """``level(0)`` is the newest level, ``level(1)`` the one before, ..."""
        return self._levels[-1 - back][1]

    def map(self, fn) -> "FieldHistory":
        """Apply ``fn`` to every level, keeping the time stamps."""
        h = FieldHistory(self._levels.maxlen, self.dt)
        h._levels.extend((t, np.asarray(fn(v))) for t, v in self._levels)
        return h


# -- stencils -------------------------------------------------------------

def _check_mode(mode: str) -> None:
    if mode not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary mode {mode!r}; expected one of {BOUNDARY_MODES}")


def diff1(a: np.ndarray, dx: float, axis: int = 0, mode: str = "one-sided") -> np.ndarray:
    """Second-order first derivative of a raw array along ``axis``."""
    _check_mode(mode)
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    if a.shape[0] < 3:
        raise GridError("need at least 3 points along the differentiation axis")
    out = np.empty_like(a)
    if mode == "periodic":
        core = a[:-1]
        d = (np.roll(core, -1, axis=0) - np.roll(core, 1, axis=0)) / (2.0 * dx)
        out[:-1] = d
        out[-1] = d[0]
    else:
        out[1:-1] = (a[2:] - a[:-2]) / (2.0 * dx)
        out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dx)
        out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * dx)
    return np.moveaxis(out, 0, axis)


def diff2(a: np.ndarray, dx: float, axis: int = 0, mode: str = "one-sided") -> np.ndarray:
    """Second-order second derivative of a raw array along ``axis``."""
    _check_mode(mode)
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    n = a.shape[0]
    if n < 3:
        raise GridError("need at least 3 points along the differentiation axis")
    out = np.empty_like(a)
    if mode == "periodic":
        core = a[:-1]
        d = (np.roll(core, -1, axis=0) - 2.0 * core + np.roll(core, 1, axis=0)) / dx**2
        out[:-1] = d
        out[-1] = d[0]
    else:
        out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / dx**2
        if n >= 4:
            # 4-point one-sided formula keeps second order at the ends
            out[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / dx**2
            out[-1] = (2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]) / dx**2
        else:
            out[0] = out[1]
            out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def central_derivative(f: ScalarField, axis: int = 0, order: int = 1,
                       mode: str = "one-sided") -> ScalarField:
    if not 0 <= axis < f.grid.ndim:
        raise GridError(f"axis {axis} out of range for a {f.grid.ndim}D grid")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    op = diff1 if order == 1 else diff2
    return ScalarField(f.grid, op(f.values, f.grid.dx[axis], axis, mode))


def backward_time_derivative(levels: Sequence[np.ndarray], dt: float, order: int) -> np.ndarray:
    """Backward difference at the newest level; ``levels`` is newest first."""
    if order == 1:
        return (levels[0] - levels[1]) / dt
    return (3.0 * levels[0] - 4.0 * levels[1] + levels[2]) / (2.0 * dt)


def time_derivative(h: FieldHistory, order: int = 1):
    """d/dt at the newest level of ``h``.

    ``order=1`` uses two levels, ``order=2`` the three-level second-order
    backward formula.  Returns an array of the level shape.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if len(h) < order + 1:
        raise InsufficientHistoryError(
            f"order-{order} time derivative needs {order + 1} levels, history has {len(h)}")
    return backward_time_derivative([h.level(k) for k in range(order + 1)], h.dt, order)


# -- norms ----------------------------------------------------------------

def _trapezoid_weights(grid: SpaceTimeGrid) -> np.ndarray:
    w = np.ones(grid.n_points)
    for axis, (n, dx) in enumerate(zip(grid.n_points, grid.dx)):
        wa = np.full(n, dx)
        wa[0] = wa[-1] = 0.5 * dx
        shape = [1] * grid.ndim
        shape[axis] = n
        w = w * wa.reshape(shape)
    return w


def norm(f: ScalarField, which: str = "L2") -> float:
    if which == "Linf":
        return float(np.max(np.abs(f.values)))
    if which == "L2":
        return float(np.sqrt(np.sum(_trapezoid_weights(f.grid) * f.values**2)))
    raise ValueError(f"unknown norm {which!r}")


def error_norm(a: ScalarField, b: ScalarField, which: str = "L2") -> float:
    if not a.grid.same_space(b.grid):
        raise GridError("fields live on different grids")
    return norm(ScalarField(a.grid, a.values - b.values), which)


def l2_norm_1d(values: np.ndarray, dx: float) -> float:
    """Trapezoid-weighted L2 norm of a raw 1D nodal array."""
    w = np.full(values.shape[-1], dx)
    w[0] = w[-1] = 0.5 * dx
    return float(np.sqrt(np.sum(w * np.asarray(values) ** 2)))


# -- strain rate ----------------------------------------------------------

def velocity_gradient(u: Sequence[ScalarField], mode: str = "one-sided") -> np.ndarray:
    """``G[i, j] = d u_i / d x_j`` as an array of shape ``(3, 3, *n)``."""
    grid = u[0].grid
    return np.stack([
        np.stack([diff1(u[i].values, grid.dx[j], j, mode) for j in range(3)])
        for i in range(3)
    ])


def strain_rate(u: Sequence[ScalarField], mode: str = "one-sided") -> TensorField3:
    """D = (grad u + grad u^T) / 2 for a 3-component velocity on a 3D grid."""
    if len(u) != 3 or any(c.grid.ndim != 3 for c in u):
        raise GridError("strain_rate needs three components on a 3D grid")
    g = velocity_gradient(u, mode)
    return TensorField3.from_full(u[0].grid, 0.5 * (g + np.swapaxes(g, 0, 1)))
