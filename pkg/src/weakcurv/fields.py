"""Uniform-grid fields, finite-difference calculus and analytic test functions.

Arrays are stored with shape ``(ny, nx)``: ``values[j, i]`` is the sample at
``(x0 + i h, y0 + j h)``, so rows run along x and the y index is outermost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import exp1

# int_0^1 exp(-1/(1 - t)) dt; the unit bump has mass pi times this
_BUMP_RADIAL_MASS = math.exp(-1.0) - float(exp1(1.0))


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    x0: float
    y0: float
    h: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3x3 nodes, got {self.nx}x{self.ny}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"spacing must be positive, got {self.h}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "y0", float(self.y0))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def square(cls, lo: float, hi: float, n: int) -> "Grid2D":
        """``n x n`` nodes spanning ``[lo, hi]^2``."""
        return cls(n, n, lo, lo, (hi - lo) / (n - 1))

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def x1(self):
        return self.x0 + (self.nx - 1) * self.h

    @property
    def y1(self):
        return self.y0 + (self.ny - 1) * self.h

    @property
    def xs(self):
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self):
        return self.y0 + self.h * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys)

    def contains_box(self, xmin, xmax, ymin, ymax, margin=0.0) -> bool:
        return (xmin > self.x0 + margin and xmax < self.x1 - margin
                and ymin > self.y0 + margin and ymax < self.y1 - margin)

    def eroded(self, cells: int) -> "Grid2D":
        return Grid2D(self.nx - 2 * cells, self.ny - 2 * cells,
                      self.x0 + cells * self.h, self.y0 + cells * self.h, self.h)

    def window(self, i0: int, i1: int, j0: int, j1: int) -> "Grid2D":
        """Sub-grid of x-indices ``[i0, i1)`` and y-indices ``[j0, j1)``."""
        return Grid2D(i1 - i0, j1 - j0, self.x0 + i0 * self.h, self.y0 + j0 * self.h, self.h)

    def offset_in(self, other: "Grid2D") -> tuple[int, int]:
        """Index offset ``(di, dj)`` of this grid's origin inside ``other``."""
        di = (self.x0 - other.x0) / other.h
        dj = (self.y0 - other.y0) / other.h
        ri, rj = round(di), round(dj)
        if abs(di - ri) > 1e-6 or abs(dj - rj) > 1e-6 or abs(self.h - other.h) > 1e-12 * other.h:
            raise ValueError("grids are not aligned")
        return int(ri), int(rj)

    def index_box(self, xmin, xmax, ymin, ymax):
        """Slices covering all nodes inside the closed box (clipped to the grid)."""
        i0 = max(int(math.floor((xmin - self.x0) / self.h)), 0)
        i1 = min(int(math.ceil((xmax - self.x0) / self.h)) + 1, self.nx)
        j0 = max(int(math.floor((ymin - self.y0) / self.h)), 0)
        j1 = min(int(math.ceil((ymax - self.y0) / self.h)) + 1, self.ny)
        return slice(j0, j1), slice(i0, i1)

    def coarsened(self) -> "Grid2D":
        return Grid2D((self.nx + 1) // 2, (self.ny + 1) // 2, self.x0, self.y0, 2 * self.h)


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    grid: Grid2D
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            if v.size == self.grid.nx * self.grid.ny:
                v = v.reshape(self.grid.shape)
            else:
                raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        bad = ~np.isfinite(v)
        if bad.any():
            j, i = np.argwhere(bad)[0]
            raise ValueError(
                f"non-finite value at node ({i}, {j}) = "
                f"({self.grid.x0 + i * self.grid.h}, {self.grid.y0 + j * self.grid.h})")
        object.__setattr__(self, "values", _frozen(v))

    def __add__(self, other):
        if isinstance(other, ScalarField2D):
            _same_grid(self, other)
            return ScalarField2D(self.grid, self.values + other.values)
        return ScalarField2D(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return ScalarField2D(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField2D):
            _same_grid(self, other)
            return ScalarField2D(self.grid, self.values * other.values)
        return ScalarField2D(self.grid, self.values * other)

    __rmul__ = __mul__

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def integral(self) -> float:
        """Node-rule quadrature ``h^2 * sum``."""
        return float(self.values.sum() * self.grid.h ** 2)

    def restrict(self, sub: Grid2D) -> "ScalarField2D":
        di, dj = sub.offset_in(self.grid)
        return ScalarField2D(sub, self.values[dj:dj + sub.ny, di:di + sub.nx])

    def subsample(self) -> "ScalarField2D":
        """Every other node; the grid keeps its origin and doubles its spacing."""
        return ScalarField2D(self.grid.coarsened(), self.values[::2, ::2])


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class VectorField2D:
    u1: ScalarField2D
    u2: ScalarField2D

    def __post_init__(self):
        _same_grid(self.u1, self.u2)

    @classmethod
    def from_arrays(cls, grid, a1, a2):
        return cls(ScalarField2D(grid, a1), ScalarField2D(grid, a2))

    @property
    def grid(self):
        return self.u1.grid

    def components(self):
        return self.u1.values, self.u2.values

    def __add__(self, other):
        return VectorField2D(self.u1 + other.u1, self.u2 + other.u2)

    def __mul__(self, c):
        return VectorField2D(self.u1 * c, self.u2 * c)

    __rmul__ = __mul__

    def restrict(self, sub):
        return VectorField2D(self.u1.restrict(sub), self.u2.restrict(sub))

    def interpolate(self, x, y):
        """Bilinear interpolation of both components at arbitrary points."""
        return bilinear(self.u1.values, self.grid, x, y), bilinear(self.u2.values, self.grid, x, y)


@dataclass(frozen=True, eq=False)
class SymMatrixField2D:
    """Symmetric 2x2 field; with ``metric=True`` it must be positive definite."""

    g11: ScalarField2D
    g12: ScalarField2D
    g22: ScalarField2D
    metric: bool = False
    lam: float = 0.0

    def __post_init__(self):
        _same_grid(self.g11, self.g12)
        _same_grid(self.g11, self.g22)
        if self.metric:
            d = self.det()
            dmin = float(d.min())
            if not (self.g11.values.min() > 0 and dmin > 0):
                raise ValueError(f"metric is not positive definite (min det {dmin:.3e})")
            if self.lam <= 0:
                object.__setattr__(self, "lam", dmin)
            elif dmin < self.lam * (1 - 1e-12):
                raise ValueError(f"det {dmin:.6e} below recorded lambda {self.lam:.6e}")

    @classmethod
    def from_arrays(cls, grid, a11, a12, a22, metric=False, lam=0.0):
        return cls(ScalarField2D(grid, a11), ScalarField2D(grid, a12),
                   ScalarField2D(grid, a22), metric, lam)

    @property
    def grid(self):
        return self.g11.grid

    def arrays(self):
        return self.g11.values, self.g12.values, self.g22.values

    def det(self):
        return self.g11.values * self.g22.values - self.g12.values ** 2

    def restrict(self, sub):
        return SymMatrixField2D(self.g11.restrict(sub), self.g12.restrict(sub),
                                self.g22.restrict(sub), self.metric, self.lam)


# ----------------------------------------------------------------------------
# sampling and calculus


def sample(f: Callable, grid: Grid2D) -> ScalarField2D:
    """Evaluate ``f(X, Y)`` (vectorized) at every node of ``grid``."""
    X, Y = grid.mesh()
    vals = np.broadcast_to(np.asarray(f(X, Y), dtype=np.float64), grid.shape)
    return ScalarField2D(grid, vals)


def grad_arrays(a: np.ndarray, h: float):
    """Second-order differences: centered inside, one-sided on the frame."""
    dy, dx = np.gradient(a, h, edge_order=2)
    return dx, dy


def gradient(v: ScalarField2D) -> VectorField2D:
    dx, dy = grad_arrays(v.values, v.grid.h)
    return VectorField2D.from_arrays(v.grid, dx, dy)


def bilinear(a: np.ndarray, grid: Grid2D, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    fx = (x - grid.x0) / grid.h
    fy = (y - grid.y0) / grid.h
    if (fx.min(initial=0) < -1e-9 or fy.min(initial=0) < -1e-9
            or fx.max(initial=0) > grid.nx - 1 + 1e-9 or fy.max(initial=0) > grid.ny - 1 + 1e-9):
        raise ValueError("interpolation point outside grid rectangle")
    i = np.clip(np.floor(fx).astype(np.int64), 0, grid.nx - 2)
    j = np.clip(np.floor(fy).astype(np.int64), 0, grid.ny - 2)
    tx = fx - i
    ty = fy - j
    return ((1 - ty) * ((1 - tx) * a[j, i] + tx * a[j, i + 1])
            + ty * ((1 - tx) * a[j + 1, i] + tx * a[j + 1, i + 1]))


def _dyadic_offsets(nx, ny):
    offs = [(1, 0), (0, 1), (1, 1), (1, -1)]
    k = 2
    while k < max(nx, ny):
        for o in ((k, 0), (0, k), (k, k), (k, -k)):
            offs.append(o)
        k *= 2
    # full-extent separations catch monotone fields
    for o in ((nx - 1, 0), (0, ny - 1), (nx - 1, ny - 1), (nx - 1, -(ny - 1))):
        if o not in offs:
            offs.append(o)
    return [(di, dj) for di, dj in offs if abs(di) < nx and abs(dj) < ny]


def holder_seminorm(f: ScalarField2D, alpha: float, pair_budget: int | None = None) -> float:
    """Sampled lower bound for ``sup |f(x) - f(y)| / |x - y|^alpha``.

    Pairs are taken offset by offset (all neighbor offsets, then dyadic
    axis and diagonal offsets, then full-extent offsets) until
    ``pair_budget`` pairs have been examined. A larger budget examines a
    superset of pairs, so the estimate is monotone in the budget.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    g = f.grid
    if pair_budget is None:
        pair_budget = 64 * g.nx * g.ny
    if pair_budget < g.nx * g.ny:
        raise ValueError("pair_budget must be at least nx*ny")
    v = f.values
    best = 0.0
    left = pair_budget
    for di, dj in _dyadic_offsets(g.nx, g.ny):
        if left <= 0:
            break
        if dj >= 0:
            a = v[dj:, di:]
            b = v[:g.ny - dj, :g.nx - di]
        else:
            a = v[:g.ny + dj, di:]
            b = v[-dj:, :g.nx - di]
        inc = np.abs(a - b).ravel()[:left]
        left -= inc.size
        dist = g.h * math.hypot(di, dj)
        best = max(best, float(inc.max(initial=0.0)) / dist ** alpha)
    return best


# ----------------------------------------------------------------------------
# test functions


class TestFunction:
    """Smooth compactly supported function with analytic derivatives.

    Subclasses implement :meth:`evaluate` returning value, gradient pair and
    Hessian triple ``(hxx, hxy, hyy)`` up to the requested order, and
    :meth:`support_box`.
    """

    __test__ = False  # keep pytest from collecting this class

    def evaluate(self, x, y, order=2):
        raise NotImplementedError

    def support_box(self):
        raise NotImplementedError

    def value(self, x, y):
        return self.evaluate(x, y, 0)[0]

    def gradient(self, x, y):
        return self.evaluate(x, y, 1)[1]

    def hessian(self, x, y):
        return self.evaluate(x, y, 2)[2]


@dataclass(frozen=True)
class Bump(TestFunction):
    """``scale * exp(-1 / (1 - |(x - c) / r|^2))`` inside the disk, 0 outside."""

    center: tuple
    radius: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def mass(self) -> float:
        return self.scale * math.pi * self.radius ** 2 * _BUMP_RADIAL_MASS

    def normalized(self) -> "Bump":
        return Bump(self.center, self.radius, self.scale / (math.pi * self.radius ** 2 * _BUMP_RADIAL_MASS))

    def support_box(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def evaluate(self, x, y, order=2):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        r2 = self.radius ** 2
        dx = x - self.center[0]
        dy = y - self.center[1]
        s = (dx * dx + dy * dy) / r2
        inside = s < 1.0
        q = 1.0 / (1.0 - np.where(inside, s, 0.0))
        val = np.where(inside, self.scale * np.exp(-q), 0.0)
        out = [val, None, None]
        if order >= 1:
            ds = -q * q * val  # d phi / ds
            out[1] = (ds * 2 * dx / r2, ds * 2 * dy / r2)
            if order >= 2:
                dss = val * (q ** 4 - 2 * q ** 3)
                c = 4.0 / r2 ** 2
                out[2] = (dss * c * dx * dx + ds * 2 / r2,
                          dss * c * dx * dy,
                          dss * c * dy * dy + ds * 2 / r2)
        return tuple(out)


def bump(center, radius, normalize=False) -> Bump:
    b = Bump(tuple(center), float(radius))
    return b.normalized() if normalize else b


def sample_test(phi, grid: Grid2D, order=2, box=None):
    """Evaluate a test function on the nodes of ``grid`` inside its support box.

    Returns ``(sl, vals)`` where ``sl`` is the ``(rows, cols)`` slice pair
    and ``vals`` the ``evaluate`` tuple on that block. ``phi`` may also be a
    :class:`SampledTest` already living on ``grid``.
    """
    if isinstance(phi, SampledTest):
        if phi.grid != grid:
            raise ValueError("sampled test function lives on a different grid")
        return phi.block(order)
    xmin, xmax, ymin, ymax = box if box is not None else phi.support_box()
    sl = grid.index_box(xmin, xmax, ymin, ymax)
    X, Y = grid.mesh()
    return sl, phi.evaluate(X[sl], Y[sl], order)


@dataclass(frozen=True, eq=False)
class SampledTest:
    """Test function known only through node arrays on a grid.

    Used for composites whose derivatives come partly from discrete data;
    ``box`` is the closed support rectangle used for boundary checks.
    """

    grid: Grid2D
    value: np.ndarray
    grad: tuple | None = None
    hess: tuple | None = None
    box: tuple | None = None

    def support_box(self):
        if self.box is not None:
            return self.box
        g = self.grid
        nz = np.argwhere(self.value != 0)
        if nz.size == 0:
            return (g.x0, g.x0, g.y0, g.y0)
        (j0, i0), (j1, i1) = nz.min(axis=0), nz.max(axis=0)
        return (g.x0 + i0 * g.h, g.x0 + i1 * g.h, g.y0 + j0 * g.h, g.y0 + j1 * g.h)

    def block(self, order):
        sl = (slice(0, self.grid.ny), slice(0, self.grid.nx))
        if order >= 1 and self.grad is None:
            raise ValueError("sampled test function carries no gradient")
        if order >= 2 and self.hess is None:
            raise ValueError("sampled test function carries no Hessian")
        return sl, (self.value, self.grad if order >= 1 else None, self.hess if order >= 2 else None)


def smooth_step(t, order=2):
    """C-infinity step on [0, 1]: ``e(t) / (e(t) + e(1 - t))`` with ``e(t) = exp(-1/t)``.

    Returns value and the first ``order`` derivatives.
    """
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    a_in = t > 0
    b_in = t < 1
    ts = np.where(a_in, t, 1.0)
    us = np.where(b_in, 1.0 - t, 1.0)
    a = np.where(a_in, np.exp(-1.0 / ts), 0.0)
    b = np.where(b_in, np.exp(-1.0 / us), 0.0)
    s = a + b
    val = a / s
    out = [val]
    if order >= 1:
        a1 = a / ts ** 2
        b1 = -b / us ** 2  # d/dt e(1 - t)
        n = a1 * b - a * b1
        out.append(n / s ** 2)
        if order >= 2:
            a2 = a * (1.0 / ts ** 4 - 2.0 / ts ** 3)
            b2 = b * (1.0 / us ** 4 - 2.0 / us ** 3)
            dn = a2 * b - a * b2
            out.append(dn / s ** 2 - 2.0 * n * (a1 + b1) / s ** 3)
    return out
