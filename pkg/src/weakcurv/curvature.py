"""Distributional Gaussian curvature of C^1 metrics and its coordinate behaviour.

For a metric ``g`` with ``w`` the row-wise curl of ``g``
(``w_1 = d1 g12 - d2 g11``, ``w_2 = d1 g22 - d2 g21``) and
``perp grad = (-d2, d1)``, the curvature distribution is

    kappa_g[phi] = int 1/2 (1/det g) w . perp grad phi
                      + 1/2 (w . perp grad (1/det g)) phi + L(g) phi dx,

    L(g) = (1/det g) (-d1 g_1m G^m_22 + d2 g_1m G^m_21
                      + g_1m (G^m_1s G^s_22 - G^m_2s G^s_21)).

For C^2 metrics this is ``int R_1212 / det g * phi``, i.e. the Gaussian
curvature integrated against Lebesgue measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import (Grid2D, ScalarField2D, SymMatrixField2D, TestFunction,
                     bilinear, grad_arrays, sample_test)
from .generators import AnalyticField, lacunary_sum
from .mollifier import (MollifierKernel, _convolve_block, check_ladder, fit_rate)
from .weak_hessian import DistributionPairing, _grad_pair, det_hessian_pairing
from .fields import SampledTest

# Calibrated once on smooth metric families (see tests/test_curvature.py);
# doubled from the largest observed ratio gap / (bound with C = 1), 0.0091.
C_CAL = 0.02


# ----------------------------------------------------------------------------
# diffeomorphisms


@dataclass(frozen=True, eq=False)
class Diffeo2D:
    """Planar diffeomorphism given by vectorized closed-form callables.

    ``jacobian(x, y)`` returns ``(a11, a12, a21, a22)`` with
    ``a_ij = d xi_i / d x_j``. ``second(x, y)`` (optional) returns the six
    second derivatives ``(xi1_xx, xi1_xy, xi1_yy, xi2_xx, xi2_xy, xi2_yy)``.
    ``min_det`` is a recorded lower bound for ``det grad xi``.
    """

    forward: Callable
    jacobian: Callable
    inverse: Callable
    second: Callable | None = None
    min_det: float = 1.0
    name: str = "diffeo"

    def det(self, x, y):
        a11, a12, a21, a22 = self.jacobian(x, y)
        return a11 * a22 - a12 * a21

    def det_gradient(self, x, y):
        if self.second is None:
            raise ValueError(f"{self.name}: second derivatives not available")
        a11, a12, a21, a22 = self.jacobian(x, y)
        p_xx, p_xy, p_yy, q_xx, q_xy, q_yy = self.second(x, y)
        # det = p_x q_y - p_y q_x
        dx = p_xx * a22 + a11 * q_xy - p_xy * a21 - a12 * q_xx
        dy = p_xy * a22 + a11 * q_yy - p_yy * a21 - a12 * q_xy
        return dx, dy

    def then(self, other: "Diffeo2D") -> "Diffeo2D":
        """``other o self`` (apply ``self`` first)."""
        def fwd(x, y):
            return other.forward(*self.forward(x, y))

        def jac(x, y):
            b11, b12, b21, b22 = self.jacobian(x, y)
            a11, a12, a21, a22 = other.jacobian(*self.forward(x, y))
            return (a11 * b11 + a12 * b21, a11 * b12 + a12 * b22,
                    a21 * b11 + a22 * b21, a21 * b12 + a22 * b22)

        def inv(X, Y):
            return self.inverse(*other.inverse(X, Y))

        return Diffeo2D(fwd, jac, inv, None, self.min_det * other.min_det,
                        f"{other.name}o{self.name}")

    @classmethod
    def identity(cls):
        z = lambda x: 0.0 * np.asarray(x, dtype=np.float64)
        return cls(lambda x, y: (x + z(x), y + z(y)),
                   lambda x, y: (1.0 + z(x), z(x), z(x), 1.0 + z(x)),
                   lambda X, Y: (X + z(X), Y + z(Y)),
                   lambda x, y: (z(x),) * 6, 1.0, "identity")

    @classmethod
    def rotation(cls, theta):
        c, s = math.cos(theta), math.sin(theta)
        if abs(c) < 1e-15:
            c = 0.0
        if abs(s) < 1e-15:
            s = 0.0
        z = lambda x: 0.0 * np.asarray(x, dtype=np.float64)
        return cls(lambda x, y: (c * x - s * y, s * x + c * y),
                   lambda x, y: (c + z(x), -s + z(x), s + z(x), c + z(x)),
                   lambda X, Y: (c * X + s * Y, -s * X + c * Y),
                   lambda x, y: (z(x),) * 6, 1.0, f"rotation({theta:g})")

    @classmethod
    def shear(cls, s=0.2):
        """``(x1 + s x2, x2)``."""
        z = lambda x: 0.0 * np.asarray(x, dtype=np.float64)
        return cls(lambda x, y: (x + s * y, y + z(x)),
                   lambda x, y: (1.0 + z(x), s + z(x), z(x), 1.0 + z(x)),
                   lambda X, Y: (X - s * Y, Y + z(X)),
                   lambda x, y: (z(x),) * 6, 1.0, f"shear({s:g})")

    @classmethod
    def sine_shear(cls, s=0.1):
        """``(x1 + s sin x2, x2)``."""
        z = lambda x: 0.0 * np.asarray(x, dtype=np.float64)
        return cls(lambda x, y: (x + s * np.sin(y), y + z(x)),
                   lambda x, y: (1.0 + z(x), s * np.cos(y) + z(x), z(x), 1.0 + z(x)),
                   lambda X, Y: (X - s * np.sin(Y), Y + z(X)),
                   lambda x, y: (z(x), z(x), -s * np.sin(y) + z(x), z(x), z(x), z(x)),
                   1.0, f"sine_shear({s:g})")

    @classmethod
    def rough(cls, alpha=0.8, eta=0.2, K=4):
        """``x + eta (W1, W2)`` with lacunary ``W_i`` in ``C^{1,alpha}``.

        ``W1`` and ``W2`` use direction schedules offset by half a golden
        angle. The map is inverted by fixed-point iteration.
        """
        w1 = lacunary_sum(alpha, K, 0.0)
        w2 = lacunary_sum(alpha, K, 0.5)
        S = float(sum(4.0 ** (-alpha * k) for k in range(1, K + 1)))
        if eta * S * math.sqrt(2) >= 0.5:
            raise ValueError("eta too large: map may fail to be a diffeomorphism")
        lo = (1 - eta * S) ** 2 - (eta * S) ** 2

        def fwd(x, y):
            return x + eta * w1.value(x, y), y + eta * w2.value(x, y)

        def jac(x, y):
            p = w1.grad(x, y)
            q = w2.grad(x, y)
            return 1.0 + eta * p[0], eta * p[1], eta * q[0], 1.0 + eta * q[1]

        def sec(x, y):
            p = w1.hess(x, y)
            q = w2.hess(x, y)
            return tuple(eta * t for t in (*p, *q))

        def inv(X, Y):
            X = np.asarray(X, dtype=np.float64)
            Y = np.asarray(Y, dtype=np.float64)
            x, y = X.copy(), Y.copy()
            for _ in range(200):
                nx = X - eta * w1.value(x, y)
                ny = Y - eta * w2.value(x, y)
                d = max(float(np.abs(nx - x).max(initial=0)), float(np.abs(ny - y).max(initial=0)))
                x, y = nx, ny
                if d < 1e-15:
                    break
            return x, y

        return cls(fwd, jac, inv, sec, lo, f"rough({alpha:g},{eta:g},{K})")

    def sample(self, grid: Grid2D):
        X, Y = grid.mesh()
        return self.forward(X, Y)


# ----------------------------------------------------------------------------
# metric calculus


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    """``Gamma^i_{jk}`` stored as an array of shape ``(2, 2, 2, ny, nx)``."""

    grid: Grid2D
    gamma: np.ndarray

    def component(self, i, j, k) -> ScalarField2D:
        """1-based access ``Gamma^i_{jk}``."""
        return ScalarField2D(self.grid, self.gamma[i - 1, j - 1, k - 1])


def _metric_arrays(g: SymMatrixField2D):
    if not g.metric:
        raise ValueError("field is not flagged as a metric")
    g11, g12, g22 = g.arrays()
    det = g11 * g22 - g12 * g12
    if float(det.min()) < g.lam * (1 - 1e-12) or float(det.min()) <= 0:
        raise ValueError(f"metric determinant {det.min():.3e} below lambda {g.lam:.3e}")
    return g11, g12, g22, det


def _derivs(g11, g12, g22, h):
    """``dg[m][i][j] = d_m g_ij`` (0-based)."""
    d11 = grad_arrays(g11, h)
    d12 = grad_arrays(g12, h)
    d22 = grad_arrays(g22, h)
    return [[[d11[m], d12[m]], [d12[m], d22[m]]] for m in range(2)]


def _gamma(g11, g12, g22, det, dg):
    ginv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]]
    out = np.empty((2, 2, 2) + g11.shape)
    for j in range(2):
        for k in range(j, 2):
            low = [0.5 * (dg[k][j][m] + dg[j][k][m] - dg[m][j][k]) for m in range(2)]
            for i in range(2):
                out[i, j, k] = ginv[i][0] * low[0] + ginv[i][1] * low[1]
                out[i, k, j] = out[i, j, k]
    return out


def christoffel(g: SymMatrixField2D) -> ChristoffelField:
    g11, g12, g22, det = _metric_arrays(g)
    dg = _derivs(g11, g12, g22, g.grid.h)
    return ChristoffelField(g.grid, _gamma(g11, g12, g22, det, dg))


def _lower_order(g11, g12, g22, det, dg, G):
    gm = [[g11, g12], [g12, g22]]
    t = 0.0
    for m in range(2):
        t = t - dg[0][0][m] * G[m, 1, 1] + dg[1][0][m] * G[m, 1, 0]
        quad = 0.0
        for s in range(2):
            quad = quad + G[m, 0, s] * G[s, 1, 1] - G[m, 1, s] * G[s, 1, 0]
        t = t + gm[0][m] * quad
    return t / det


def lower_order_term(g: SymMatrixField2D) -> ScalarField2D:
    g11, g12, g22, det = _metric_arrays(g)
    dg = _derivs(g11, g12, g22, g.grid.h)
    G = _gamma(g11, g12, g22, det, dg)
    return ScalarField2D(g.grid, _lower_order(g11, g12, g22, det, dg, G))


def _kappa_sum(g: SymMatrixField2D, phi) -> float:
    grid = g.grid
    h = grid.h
    g11, g12, g22, det = _metric_arrays(g)
    dg = _derivs(g11, g12, g22, h)
    G = _gamma(g11, g12, g22, det, dg)
    L = _lower_order(g11, g12, g22, det, dg, G)
    w1 = dg[0][0][1] - dg[1][0][0]
    w2 = dg[0][1][1] - dg[1][1][0]
    idet = 1.0 / det
    ix, iy = grad_arrays(idet, h)
    sl, (val, (px, py), _) = sample_test(phi, grid, 1)
    w1, w2, idet, ix, iy, L = (a[sl] for a in (w1, w2, idet, ix, iy, L))
    perp_phi = w1 * (-py) + w2 * px
    perp_idet = w1 * (-iy) + w2 * ix
    s = 0.5 * idet * perp_phi + 0.5 * perp_idet * val + L * val
    return float(s.sum() * h * h)


def _check_support(phi, grid):
    if not grid.contains_box(*phi.support_box(), margin=0.5 * grid.h):
        raise ValueError("test function support touches the grid boundary")


def kappa_pairing(g: SymMatrixField2D, phi, estimate_error=True) -> DistributionPairing:
    """``kappa_g[phi]``; metric derivatives by finite differences."""
    grid = g.grid
    _check_support(phi, grid)
    val = _kappa_sum(g, phi)
    err = 0.0
    if estimate_error:
        cg = grid.coarsened()
        try:
            _check_support(phi, cg)
            gc = SymMatrixField2D(g.g11.subsample(), g.g12.subsample(), g.g22.subsample(), True)
            coarse = _kappa_sum(gc, _coarse(phi))
            err = abs(val - coarse) / 3.0
        except ValueError:
            err = float("inf")
    return DistributionPairing(val, err, grid)


def _coarse(phi):
    if isinstance(phi, SampledTest):
        c = lambda t: None if t is None else tuple(x[::2, ::2] for x in t)
        return SampledTest(phi.grid.coarsened(), phi.value[::2, ::2], c(phi.grad), c(phi.hess), phi.box)
    return phi


# ----------------------------------------------------------------------------
# analytic metrics, pullbacks and transported tests


def metric_from_fn(fn: Callable, grid: Grid2D) -> SymMatrixField2D:
    X, Y = grid.mesh()
    a, b, c = (np.broadcast_to(t, grid.shape) for t in fn(X, Y))
    return SymMatrixField2D.from_arrays(grid, a, b, c, metric=True)


def graph_metric_fn(f: AnalyticField) -> Callable:
    """``Id + grad f (x) grad f`` as a closed-form metric."""
    def fn(x, y):
        p, q = f.grad(x, y)
        return 1.0 + p * p, p * q, 1.0 + q * q
    return fn


def conformal_metric_fn(f: Callable, df: Callable) -> Callable:
    """``exp(2 f) Id`` given ``f`` and its gradient (``df`` unused, kept for symmetry)."""
    def fn(x, y):
        e = np.exp(2.0 * f(x, y))
        return e, 0.0 * e, e
    return fn


def graph_metric(v: ScalarField2D, grad=None) -> SymMatrixField2D:
    """``Id + grad v (x) grad v``; always a metric with ``det = 1 + |grad v|^2``."""
    p, q = _grad_pair(v, grad)
    return SymMatrixField2D.from_arrays(v.grid, 1.0 + p * p, p * q, 1.0 + q * q, metric=True)


def pullback_arrays(G, J):
    """``J^T G J`` componentwise for ``G = (g11, g12, g22)``, ``J = (a11, a12, a21, a22)``."""
    g11, g12, g22 = G
    a11, a12, a21, a22 = J
    # columns of J: c1 = (a11, a21), c2 = (a12, a22)
    p11 = a11 * (g11 * a11 + g12 * a21) + a21 * (g12 * a11 + g22 * a21)
    p12 = a11 * (g11 * a12 + g12 * a22) + a21 * (g12 * a12 + g22 * a22)
    p22 = a12 * (g11 * a12 + g12 * a22) + a22 * (g12 * a12 + g22 * a22)
    return p11, p12, p22


def pullback_metric_fn(gfn: Callable, xi: Diffeo2D) -> Callable:
    def fn(x, y):
        return pullback_arrays(gfn(*xi.forward(x, y)), xi.jacobian(x, y))
    return fn


def pullback_metric(g, xi: Diffeo2D, target_grid: Grid2D) -> SymMatrixField2D:
    """``xi^* g = (grad xi)^T (g o xi) grad xi`` sampled on ``target_grid``.

    ``g`` is a closed-form metric callable or a :class:`SymMatrixField2D`
    (bilinearly interpolated at ``xi(x)``).
    """
    X, Y = target_grid.mesh()
    U1, U2 = xi.forward(X, Y)
    lam = 0.0
    if callable(g):
        G = g(U1, U2)
    else:
        src = g.grid
        if (U1.min() < src.x0 - 1e-12 or U1.max() > src.x1 + 1e-12
                or U2.min() < src.y0 - 1e-12 or U2.max() > src.y1 + 1e-12):
            raise ValueError("xi maps the target grid outside the metric's domain")
        G = tuple(bilinear(a, src, U1, U2) for a in g.arrays())
        if g.metric:
            dj = xi.det(X, Y)
            lam = g.lam * float(np.min(dj * dj))
    G = tuple(np.broadcast_to(t, target_grid.shape) for t in G)
    P = pullback_arrays(G, xi.jacobian(X, Y))
    return SymMatrixField2D.from_arrays(target_grid, *P, metric=True, lam=lam)


class TransportedTest(TestFunction):
    """``|J(xi)|^-1 phi o xi^-1``: the push-forward density of ``phi``.

    Value and gradient are exact (chain rule through the closed-form map).
    """

    def __init__(self, phi, xi: Diffeo2D, n_boundary=512):
        self.phi = phi
        self.xi = xi
        xmin, xmax, ymin, ymax = phi.support_box()
        if hasattr(phi, "center") and hasattr(phi, "radius"):
            t = 2 * np.pi * np.arange(n_boundary) / n_boundary
            bx = phi.center[0] + phi.radius * np.cos(t)
            by = phi.center[1] + phi.radius * np.sin(t)
        else:
            s = np.linspace(0.0, 1.0, n_boundary // 4, endpoint=False)
            bx = np.concatenate([xmin + (xmax - xmin) * s, np.full_like(s, xmax),
                                 xmax - (xmax - xmin) * s, np.full_like(s, xmin)])
            by = np.concatenate([np.full_like(s, ymin), ymin + (ymax - ymin) * s,
                                 np.full_like(s, ymax), ymax - (ymax - ymin) * s])
        X, Y = xi.forward(bx, by)
        pad = 1e-9 + 2.0 * (max(np.ptp(X), np.ptp(Y)) / n_boundary)
        self._box = (float(X.min()) - pad, float(X.max()) + pad,
                     float(Y.min()) - pad, float(Y.max()) + pad)

    def support_box(self):
        return self._box

    def evaluate(self, X, Y, order=1):
        if order > 1:
            raise ValueError("transported tests provide value and gradient only")
        x, y = self.xi.inverse(X, Y)
        val, (gx, gy), _ = self.phi.evaluate(x, y, 1)
        J = np.abs(self.xi.det(x, y))
        out = [val / J, None, None]
        if order >= 1:
            sgn = np.sign(self.xi.det(x, y))
            jx, jy = self.xi.det_gradient(x, y)
            jx, jy = sgn * jx, sgn * jy
            fx = gx / J - val * jx / J ** 2
            fy = gy / J - val * jy / J ** 2
            a11, a12, a21, a22 = self.xi.jacobian(x, y)
            det = a11 * a22 - a12 * a21
            # grad_y = (grad xi)^{-T} grad_x
            out[1] = ((a22 * fx - a21 * fy) / det, (-a12 * fx + a11 * fy) / det)
        return tuple(out)


def invariance_residual(gfn: Callable, xi: Diffeo2D, phi, target_grid: Grid2D,
                        source_grid: Grid2D | None = None):
    """``kappa_{xi^* g}[phi]`` against ``kappa_g[|J|^-1 phi o xi^-1]``.

    ``gfn`` is a closed-form metric. The left side lives on
    ``target_grid`` (coordinates of ``phi``); the right side on
    ``source_grid`` (defaults to ``target_grid``).
    """
    source_grid = target_grid if source_grid is None else source_grid
    lhs = kappa_pairing(pullback_metric(gfn, xi, target_grid), phi)
    tphi = TransportedTest(phi, xi)
    rhs = kappa_pairing(metric_from_fn(gfn, source_grid), tphi)
    return {"lhs": lhs.value, "rhs": rhs.value, "residual": abs(lhs.value - rhs.value),
            "error_estimate": lhs.error_estimate + rhs.error_estimate}


# ----------------------------------------------------------------------------
# stability and rates


def _box_norms(arrs, grid, box, j):
    sl = grid.index_box(*box)
    c0 = max(float(np.abs(a[sl]).max()) for a in arrs)
    if j == 0:
        return c0
    c1 = 0.0
    for a in arrs:
        dx, dy = grad_arrays(a, grid.h)
        c1 = max(c1, float(np.hypot(dx[sl], dy[sl]).max()))
    return c0 + c1


def w11_norm(phi, grid: Grid2D) -> float:
    sl, (val, (gx, gy), _) = sample_test(phi, grid, 1)
    return float((np.abs(val) + np.hypot(gx, gy)).sum() * grid.h ** 2)


def kappa_stability_check(g1: SymMatrixField2D, g2: SymMatrixField2D, phi, C=None):
    """Gap ``|kappa_g1[phi] - kappa_g2[phi]|`` against the stability bound.

    The bound is ``C ||phi||_{W^{1,1}} sum_j (||g1||_1 + ||g2||_1)^{2-j} ||g1 - g2||_j``
    with norms over the support box of ``phi`` and ``C`` defaulting to the
    frozen calibration constant ``C_CAL``.
    """
    if g1.grid != g2.grid:
        raise ValueError("metrics live on different grids")
    C = C_CAL if C is None else float(C)
    grid = g1.grid
    box = phi.support_box()
    k1 = kappa_pairing(g1, phi, estimate_error=False).value
    k2 = kappa_pairing(g2, phi, estimate_error=False).value
    gap = abs(k1 - k2)
    A = [a for a in g1.arrays()]
    B = [b for b in g2.arrays()]
    D = [a - b for a, b in zip(A, B)]
    s = _box_norms(A, grid, box, 1) + _box_norms(B, grid, box, 1)
    rhs = sum(s ** (2 - j) * _box_norms(D, grid, box, j) for j in (0, 1))
    bound = C * w11_norm(phi, grid) * rhs
    return {"gap": gap, "bound": bound, "verdict": bool(gap <= bound), "C": C,
            "kappa_1": k1, "kappa_2": k2}


def _select_ball(xi: Diffeo2D, grid: Grid2D, center, eps, r_cap):
    X, Y = grid.mesh()
    J = xi.jacobian(X, Y)
    det0 = J[0] * J[3] - J[1] * J[2]
    r = 2.0 ** math.floor(math.log2(r_cap))
    while r >= 4 * grid.h:
        sub = _disk_window(grid, center, r, max(eps))
        if sub is not None:
            di, dj = sub.offset_in(grid)
            m0 = float(det0[dj:dj + sub.ny, di:di + sub.nx].min())
            ok = True
            for e in eps:
                k = MollifierKernel.build(e, grid.h)
                Je = [_convolve_block(a, grid, k, sub) for a in J]
                if float((Je[0] * Je[3] - Je[1] * Je[2]).min()) < 0.5 * m0:
                    ok = False
                    break
            if ok:
                return r, sub
        r /= 2
    raise ValueError("no admissible ball where every mollified map stays a diffeomorphism")


def _disk_window(grid, center, r, eps_max):
    """Square node window (with one ring) around the disk, or None if it does not fit."""
    R = int(math.floor(eps_max / grid.h + 1e-9))
    i0 = int(math.floor((center[0] - r - grid.x0) / grid.h)) - 1
    i1 = int(math.ceil((center[0] + r - grid.x0) / grid.h)) + 2
    j0 = int(math.floor((center[1] - r - grid.y0) / grid.h)) - 1
    j1 = int(math.ceil((center[1] + r - grid.y0) / grid.h)) + 2
    if i0 < R or j0 < R or i1 > grid.nx - R or j1 > grid.ny - R:
        return None
    return grid.window(i0, i1, j0, j1)


def pullback_mollification_rate(gfn: Callable, xi: Diffeo2D, j: int, eps_list, grid: Grid2D,
                                center=(0.0, 0.0), radius=None):
    """Fit of ``||(xi^* g)_eps - xi_eps^* g||_{j; B'}`` over a dyadic ladder.

    ``xi_eps`` is the componentwise mollification of ``xi`` (its Jacobian is
    the mollified Jacobian). ``B'`` is the largest dyadic-radius disk around
    ``center`` (at most ``radius``) on which every ``xi_eps`` keeps
    ``det >= 1/2 min det grad xi``; the norm is the max over the three
    metric components on the nodes of ``B'``.
    """
    eps = check_ladder(eps_list, grid.h)
    R = int(math.floor(max(eps) / grid.h + 1e-9))
    if radius is None:
        radius = 0.5 * min(grid.nx - 2 * R - 4, grid.ny - 2 * R - 4) * grid.h
    r, sub = _select_ball(xi, grid, center, eps, radius)
    X, Y = grid.mesh()
    J = xi.jacobian(X, Y)
    U1, U2 = xi.forward(X, Y)
    P = pullback_arrays(gfn(U1, U2), J)
    SX, SY = sub.mesh()
    inside = (SX - center[0]) ** 2 + (SY - center[1]) ** 2 <= r * r
    core = np.zeros_like(inside)
    core[1:-1, 1:-1] = inside[1:-1, 1:-1]
    norms = []
    for e in eps:
        k = MollifierKernel.build(e, grid.h)
        Pe = [_convolve_block(np.ascontiguousarray(np.broadcast_to(p, grid.shape)), grid, k, sub) for p in P]
        Je = [_convolve_block(np.ascontiguousarray(np.broadcast_to(a, grid.shape)), grid, k, sub) for a in J]
        Ue = [_convolve_block(a, grid, k, sub) for a in (U1, U2)]
        Q = pullback_arrays(gfn(*Ue), Je)
        D = [p - q for p, q in zip(Pe, Q)]
        c = max(float(np.abs(d[core]).max()) for d in D)
        if j == 1:
            c1 = 0.0
            for d in D:
                dx, dy = grad_arrays(d, grid.h)
                c1 = max(c1, float(np.hypot(dx, dy)[core].max()))
            c += c1
        norms.append(c)
    fit = fit_rate(eps, norms)
    return fit, r


def mollified_graph_det_min(v: ScalarField2D, eps_list, grad=None) -> float:
    """Smallest ``det`` of the mollified graph metric over all nodes and eps."""
    from .mollifier import mollify

    gm = graph_metric(v, grad)
    best = math.inf
    for e in eps_list:
        m = mollify(gm, e)
        best = min(best, float(m.det().min()))
    return best


def graph_bridge_residual(v: ScalarField2D, phi, grad=None):
    """``kappa_{g'}[phi]`` for ``g' = Id + grad v (x) grad v`` against
    ``Det D^2 v[(1 + |grad v|^2)^-2 phi]``.

    The weight's derivatives are finite differences of its node values.
    """
    grid = v.grid
    h = grid.h
    p, q = _grad_pair(v, grad)
    lhs = kappa_pairing(graph_metric(v, grad), phi)
    w = (1.0 + p * p + q * q) ** -2
    wx, wy = grad_arrays(w, h)
    wxx, wxy = grad_arrays(wx, h)
    wyx, wyy = grad_arrays(wy, h)
    wxy = 0.5 * (wxy + wyx)
    X, Y = grid.mesh()
    val, (fx, fy), (fxx, fxy, fyy) = phi.evaluate(X, Y, 2)
    box = phi.support_box()
    test = SampledTest(
        grid, w * val, (w * fx + val * wx, w * fy + val * wy),
        (w * fxx + 2 * wx * fx + val * wxx, w * fxy + wx * fy + wy * fx + val * wxy,
         w * fyy + 2 * wy * fy + val * wyy), box)
    rhs = det_hessian_pairing(v, test, grad=grad)
    return {"lhs": lhs.value, "rhs": rhs.value, "residual": abs(lhs.value - rhs.value),
            "error_estimate": lhs.error_estimate + rhs.error_estimate}
