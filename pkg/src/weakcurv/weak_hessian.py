"""Very weak Hessian determinant ``Det D^2 v = -1/2 curl curl (grad v (x) grad v)``.

The distribution is evaluated against test functions in its by-parts form

    Det D^2 v [phi] = -1/2 int (v_1^2 phi_22 + v_2^2 phi_11 - 2 v_1 v_2 phi_12) dx,

which needs only first derivatives of ``v``. For smooth ``v`` this equals
``int det(Hess v) phi dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import (Grid2D, SampledTest, ScalarField2D, VectorField2D, bump,
                     gradient, sample_test)
from .mollifier import (MollifierKernel, _convolve_block, check_ladder, cnorm,
                        fit_rate, norm_window)


@dataclass(frozen=True)
class DistributionPairing:
    """``f[phi]`` together with a Richardson error estimate."""

    value: float
    error_estimate: float
    grid: Grid2D

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("pairing value is not finite")
        if not self.error_estimate >= 0:
            raise ValueError("error estimate must be nonnegative")

    def to_dict(self):
        g = self.grid
        return {"value": self.value, "error_estimate": self.error_estimate,
                "grid": {"nx": g.nx, "ny": g.ny, "x0": g.x0, "y0": g.y0, "h": g.h}}


def _check_support(phi, grid: Grid2D):
    xmin, xmax, ymin, ymax = phi.support_box()
    if not grid.contains_box(xmin, xmax, ymin, ymax, margin=0.5 * grid.h):
        raise ValueError("test function support touches the grid boundary")


def _grad_pair(v: ScalarField2D, grad):
    if grad is None:
        return gradient(v).components()
    if isinstance(grad, VectorField2D):
        if grad.grid != v.grid:
            raise ValueError("gradient lives on a different grid")
        return grad.components()
    return grad


def pairing_sum(v1, v2, grid: Grid2D, phi) -> float:
    """Node-rule quadrature of the by-parts integrand (no error estimate).

    The gradient is first shifted by its ``|phi|``-weighted mean over the
    support. The distribution is unchanged by adding an affine function to
    ``v``, but the shift removes the large constant part that would
    otherwise multiply the quadrature error of ``int D^2 phi``.
    """
    sl, (val, _, (pxx, pxy, pyy)) = sample_test(phi, grid, 2)
    a = v1[sl]
    b = v2[sl]
    w = np.abs(val)
    ws = w.sum()
    if ws > 0:
        a = a - (a * w).sum() / ws
        b = b - (b * w).sum() / ws
    s = (a * a * pyy + b * b * pxx - 2.0 * a * b * pxy).sum()
    return float(-0.5 * grid.h ** 2 * s)


def _coarse_test(phi, grid: Grid2D):
    if isinstance(phi, SampledTest):
        c = lambda t: None if t is None else tuple(x[::2, ::2] for x in t)
        return SampledTest(grid.coarsened(), phi.value[::2, ::2], c(phi.grad), c(phi.hess), phi.box)
    return phi


def det_hessian_pairing(v: ScalarField2D, phi, grad=None, estimate_error=True) -> DistributionPairing:
    """``Det D^2 v [phi]`` with ``grad v`` from finite differences (or ``grad``).

    ``phi`` is a :class:`~weakcurv.fields.TestFunction` (exact second
    derivatives) or a :class:`~weakcurv.fields.SampledTest` on ``v.grid``.
    The error estimate is ``|P_h - P_2h| / 3`` with ``P_2h`` computed from
    every other node.
    """
    g = v.grid
    _check_support(phi, g)
    v1, v2 = _grad_pair(v, grad)
    val = pairing_sum(v1, v2, g, phi)
    err = 0.0
    if estimate_error:
        cg = g.coarsened()
        try:
            _check_support(phi, cg)
            if grad is None:
                c1, c2 = gradient(v.subsample()).components()
            else:
                c1, c2 = v1[::2, ::2], v2[::2, ::2]
            coarse = pairing_sum(c1, c2, cg, _coarse_test(phi, g))
            err = abs(val - coarse) / 3.0
        except ValueError:
            err = float("inf")
    return DistributionPairing(val, err, g)


def besov_decay_probe(v: ScalarField2D, eps_list, grad=None, window: Grid2D | None = None):
    """Fit of ``||(Det D^2 v) * psi_eps||_0`` over a dyadic eps ladder.

    The mollified distribution at node x is the pairing against
    ``psi_eps(x - .)``; all nodes are evaluated at once as correlations of
    the products ``v_i v_j`` with the second-derivative stencils of the
    discrete kernel. The norm domain is fixed by the largest eps.
    """
    g = v.grid
    eps = check_ladder(eps_list, g.h)
    v1, v2 = _grad_pair(v, grad)
    # difference stencils reach one cell past the kernel support
    out = norm_window(g, max(eps) + g.h, window)
    a11, a22, a12 = v1 * v1, v2 * v2, v1 * v2
    norms = []
    for e in eps:
        k = MollifierKernel.build(e, g.h)
        d11, d12, d22 = k.derivative_stencils()
        p = -0.5 * (_corr(a11, g, d22, out) + _corr(a22, g, d11, out) - 2.0 * _corr(a12, g, d12, out))
        norms.append(cnorm([p], g.h, 0))
    return fit_rate(eps, norms)


def _corr(a, grid, stencil, out):
    di, dj = out.offset_in(grid)
    r = stencil.shape[0] // 2
    if di < r or dj < r or di + out.nx + r > grid.nx or dj + out.ny + r > grid.ny:
        raise ValueError("stencil reaches outside the grid")
    blk = a[dj - r:dj + out.ny + r, di - r:di + out.nx + r]
    return kernels.correlate_valid(blk, stencil)


@dataclass(frozen=True)
class NonnegReport:
    verdict: bool
    min_pairing: float
    witness_center: tuple
    witness_radius: float
    tol: float
    n_evaluated: int

    def to_dict(self):
        return {"verdict": "nonnegative" if self.verdict else "negative",
                "min_pairing": self.min_pairing, "witness_center": list(self.witness_center),
                "witness_radius": self.witness_radius, "tol": self.tol,
                "n_evaluated": self.n_evaluated}


def probe_radii(region: Grid2D, h: float):
    """Dyadic radii from a quarter of the region's short side down to 4h."""
    r = 0.25 * min(region.x1 - region.x0, region.y1 - region.y0)
    out = []
    while r >= 4 * h * (1 - 1e-12):
        out.append(r)
        r /= 2
    if not out:
        raise ValueError("region too small for probes of radius >= 4h")
    return out


def probe_centers(region: Grid2D, r: float, n_probes: int):
    """``m x m`` lattice (``m = ceil(sqrt(n_probes))``) of centers keeping the bump inside."""
    m = max(1, int(math.ceil(math.sqrt(n_probes))))
    if m == 1:
        return [(0.5 * (region.x0 + region.x1), 0.5 * (region.y0 + region.y1))]
    xs = np.linspace(region.x0 + r, region.x1 - r, m)
    ys = np.linspace(region.y0 + r, region.y1 - r, m)
    return [(float(x), float(y)) for y in ys for x in xs]


def nonnegativity_check(v: ScalarField2D, region: Grid2D, n_probes: int = 16, grad=None) -> NonnegReport:
    """Falsification test for ``Det D^2 v >= 0`` on a family of normalized bumps.

    For every dyadic radius the bumps are centered on an evenly spaced
    sub-lattice of ``region`` (about ``n_probes`` centers). The verdict is
    positive iff the smallest pairing is at least ``-tol`` where ``tol`` is
    the witness's Richardson error estimate plus a 1e-10 relative floor.
    A pass is a necessary condition only.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be at least 1")
    g = v.grid
    v1, v2 = _grad_pair(v, grad)
    best = None
    count = 0
    for r in probe_radii(region, g.h):
        for c in probe_centers(region, r, n_probes):
            phi = bump(c, r, normalize=True)
            val = pairing_sum(v1, v2, g, phi) if g.contains_box(*phi.support_box(), margin=0.5 * g.h) else None
            if val is None:
                continue
            count += 1
            if best is None or val < best[0]:
                best = (val, c, r)
    if best is None:
        raise ValueError("no probe bump fits inside the grid")
    val, c, r = best
    wit = det_hessian_pairing(v, bump(c, r, normalize=True), grad=grad)
    tol = wit.error_estimate + 1e-10 * max(1.0, abs(val))
    return NonnegReport(bool(val >= -tol), float(val), c, float(r), float(tol), count)
