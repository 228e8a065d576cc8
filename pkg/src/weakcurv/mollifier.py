"""Standard mollification on grids and commutator-rate diagnostics."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .fields import (Grid2D, ScalarField2D, SymMatrixField2D, VectorField2D,
                     bump, grad_arrays)

_PSI = bump((0.0, 0.0), 1.0, normalize=True)


def eps_ladder(e0: float, rungs: int) -> list[float]:
    return [e0 * 2.0 ** (-k) for k in range(rungs)]


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """Discrete ``psi_eps`` on a grid of spacing ``h``.

    ``weights`` sum to one exactly (renormalized after sampling).
    """

    eps: float
    h: float
    radius_cells: int
    weights: np.ndarray
    norm: float

    @classmethod
    def build(cls, eps: float, h: float) -> "MollifierKernel":
        return _kernel(float(eps), float(h))

    def offsets(self):
        r = self.radius_cells
        d = self.h * np.arange(-r, r + 1)
        return np.meshgrid(d, d)

    def derivative_stencils(self):
        """Centered second differences ``(d11, d12, d22)`` of the discrete kernel.

        Each stencil has radius ``radius_cells + 1``. By summation by parts,
        correlating with them reproduces second derivatives of quadratics
        exactly and annihilates affine functions, which sampling the
        analytic kernel Hessian does not do at small ``eps / h``.
        """
        w = np.pad(self.weights, 2)
        h2 = self.h * self.h
        d11 = (w[1:-1, 2:] - 2.0 * w[1:-1, 1:-1] + w[1:-1, :-2]) / h2
        d22 = (w[2:, 1:-1] - 2.0 * w[1:-1, 1:-1] + w[:-2, 1:-1]) / h2
        d12 = (w[2:, 2:] - w[2:, :-2] - w[:-2, 2:] + w[:-2, :-2]) / (4.0 * h2)
        return d11, d12, d22


@lru_cache(maxsize=64)
def _kernel(eps, h):
    if eps < 2 * h * (1 - 1e-12):
        raise ValueError(f"kernel under-resolved: eps={eps:g} < 2h={2 * h:g}")
    r = int(math.floor(eps / h + 1e-9))
    d = h * np.arange(-r, r + 1)
    X, Y = np.meshgrid(d, d)
    vals = _PSI.value(X / eps, Y / eps) / eps ** 2
    norm = float(vals.sum() * h * h)
    w = vals * h * h / norm
    w.setflags(write=False)
    return MollifierKernel(eps, h, r, w, norm)


def _convolve_block(a, grid: Grid2D, k: MollifierKernel, out: Grid2D):
    """Mollified values of node array ``a`` (on ``grid``) at the nodes of ``out``."""
    di, dj = out.offset_in(grid)
    r = k.radius_cells
    if di < r or dj < r or di + out.nx + r > grid.nx or dj + out.ny + r > grid.ny:
        raise ValueError("output window too close to the grid boundary for this eps")
    blk = a[dj - r:dj + out.ny + r, di - r:di + out.nx + r]
    return kernels.correlate_valid(blk, k.weights)


def mollify(f, eps: float):
    """``f * psi_eps`` on the eps-eroded interior sub-grid.

    Vector and matrix fields are mollified componentwise. The output
    carries ``meta = {"eps": eps, "erosion_cells": r}``.
    """
    if isinstance(f, VectorField2D):
        return VectorField2D(mollify(f.u1, eps), mollify(f.u2, eps))
    if isinstance(f, SymMatrixField2D):
        out = SymMatrixField2D(mollify(f.g11, eps), mollify(f.g12, eps), mollify(f.g22, eps))
        if f.metric:
            out = SymMatrixField2D(out.g11, out.g12, out.g22, metric=True)
        return out
    g = f.grid
    k = MollifierKernel.build(eps, g.h)
    r = k.radius_cells
    if g.nx - 2 * r < 3 or g.ny - 2 * r < 3:
        raise ValueError("grid too small for this eps")
    out = g.eroded(r)
    vals = kernels.correlate_valid(f.values, k.weights)
    return ScalarField2D(out, vals, meta={"eps": eps, "erosion_cells": r})


# ----------------------------------------------------------------------------
# rate fits


@dataclass(frozen=True)
class RateFit:
    pairs: tuple
    slope: float
    residual: float
    degenerate: bool = False

    @property
    def n(self):
        return len(self.pairs)

    def meets(self, min_slope: float) -> bool:
        """True when the fitted decay is at least ``min_slope`` (zero norms always pass)."""
        return self.degenerate or self.slope >= min_slope

    def to_dict(self):
        return {"slope": self.slope, "residual": self.residual, "n": self.n,
                "degenerate": self.degenerate,
                "pairs": [[e, v] for e, v in self.pairs]}


def check_ladder(eps_list, h: float):
    eps = [float(e) for e in eps_list]
    if len(eps) < 4:
        raise ValueError(f"need at least 4 eps values, got {len(eps)}")
    for a, b in zip(eps, eps[1:]):
        if abs(b / a - 0.5) > 1e-9:
            raise ValueError("eps ladder must be dyadic and strictly decreasing")
    if min(eps) < 2 * h * (1 - 1e-12):
        raise ValueError(f"smallest eps {min(eps):g} below 2h = {2 * h:g}")
    return eps


def fit_rate(eps, norms, zero_tol=0.0) -> RateFit:
    """Least-squares slope of ``log(norm)`` against ``log(eps)``."""
    eps = np.asarray(eps, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if eps.size < 4:
        raise ValueError("need at least 4 (eps, norm) pairs")
    if (norms < 0).any():
        raise ValueError("norms must be nonnegative")
    pairs = tuple((float(e), float(v)) for e, v in zip(eps, norms))
    if (norms <= zero_tol).all():
        return RateFit(pairs, float("nan"), 0.0, degenerate=True)
    if (norms <= 0).any():
        raise ValueError("mixed zero and nonzero norms: cannot fit a power law")
    le, ln = np.log(eps), np.log(norms)
    slope, icpt = np.polyfit(le, ln, 1)
    resid = float(np.abs(ln - (slope * le + icpt)).max())
    return RateFit(pairs, float(slope), resid)


def cnorm(arrs, h: float, j: int, interior=1):
    """C^0 or C^1 norm of node arrays; derivatives by centered differences.

    For ``j = 1`` the arrays must carry a one-node ring around the region of
    interest; the ring is trimmed after differencing. The C^1 norm is
    ``max|f| + max|grad f|`` (max over components).
    """
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    s = (slice(interior, -interior),) * 2 if interior else (slice(None),) * 2
    c0 = max(float(np.abs(a[s]).max()) for a in arrs)
    if j == 0:
        return c0
    c1 = 0.0
    for a in arrs:
        dx, dy = grad_arrays(a, h)
        c1 = max(c1, float(np.hypot(dx[s], dy[s]).max()))
    return c0 + c1


def norm_window(grid: Grid2D, eps_max: float, window: Grid2D | None = None) -> Grid2D:
    """Fixed evaluation domain: the grid eroded by ``eps_max`` plus one ring node.

    The returned grid already includes the one-node ring needed for
    differencing; norms are taken on its interior.
    """
    r = int(math.floor(eps_max / grid.h + 1e-9))
    full = grid.eroded(r)
    if window is None:
        return full
    window.offset_in(grid)
    wi = Grid2D(window.nx + 2, window.ny + 2, window.x0 - grid.h, window.y0 - grid.h, grid.h)
    di, dj = wi.offset_in(full)
    if di < 0 or dj < 0 or di + wi.nx > full.nx or dj + wi.ny > full.ny:
        raise ValueError("window does not fit inside the eps-eroded domain")
    return wi


def _components(f):
    if isinstance(f, ScalarField2D):
        return f.grid, [f.values]
    if isinstance(f, VectorField2D):
        return f.grid, [c for c in f.components()]
    raise TypeError("expected a ScalarField2D or VectorField2D")


def _index_tuples(fields, sizes):
    """Component index tuples; repeated identical arguments only need sorted tuples."""
    if all(f is fields[0] for f in fields):
        return list(itertools.combinations_with_replacement(range(sizes[0]), len(fields)))
    return list(itertools.product(*(range(n) for n in sizes)))


def _product_commutator_rate(fields, j, eps_list, window):
    parts = [_components(f) for f in fields]
    grid = parts[0][0]
    if any(p[0] != grid for p in parts):
        raise ValueError("fields live on different grids")
    eps = check_ladder(eps_list, grid.h)
    out = norm_window(grid, max(eps), window)
    tuples = _index_tuples(fields, [len(p[1]) for p in parts])
    prods = {t: np.prod([parts[n][1][i] for n, i in enumerate(t)], axis=0) for t in tuples}
    norms = []
    for e in eps:
        k = MollifierKernel.build(e, grid.h)
        moll = [[_convolve_block(c, grid, k, out) for c in p[1]] for p in parts]
        worst = 0.0
        for t in tuples:
            d = _convolve_block(prods[t], grid, k, out)
            m = moll[0][t[0]]
            for n in range(1, len(t)):
                m = m * moll[n][t[n]]
            worst = max(worst, cnorm([d - m], grid.h, j))
        norms.append(worst)
    return fit_rate(eps, norms)


def commutator_rate(a, b, j: int, eps_list, window=None) -> RateFit:
    """Fit of ``||(ab)_eps - a_eps b_eps||_j`` over a dyadic eps ladder.

    ``a`` and ``b`` are scalar or vector fields. For vector fields the norm
    is the largest over component products, i.e. the norm of the tensor
    ``(a (x) b)_eps - a_eps (x) b_eps``.
    """
    return _product_commutator_rate([a, b], j, eps_list, window)


def triple_commutator_rate(f, g, h, eps_list, j: int = 1, window=None) -> RateFit:
    """Fit of ``||(fgh)_eps - f_eps g_eps h_eps||_j`` (C^1 by default).

    Vector arguments are handled as in :func:`commutator_rate`, with the
    norm taken over all component triples.
    """
    return _product_commutator_rate([f, g, h], j, eps_list, window)
