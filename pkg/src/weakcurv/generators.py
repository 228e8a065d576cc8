"""Synthetic surfaces and coordinate changes with known analytic structure.

Every generator is deterministic: the same spec gives bit-identical output.
Scalar kinds come with closed-form gradient and Hessian so finite-difference
results can be checked against them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import Grid2D, ScalarField2D, sample

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
BASE = 4.0

KINDS = ("quadratic", "sphere_cap", "smoothed_cone", "saddle", "monkey_saddle",
         "weierstrass", "ridge", "diffeo_shear", "diffeo_rough")


@dataclass(frozen=True)
class AnalyticField:
    """Closed-form scalar function with first and second derivatives."""

    value: Callable
    grad: Callable
    hess: Callable
    holder: float = 1.0  # Hoelder exponent of the gradient (1.0 = Lipschitz or better)

    def det_hessian(self, x, y):
        hxx, hxy, hyy = self.hess(x, y)
        return hxx * hyy - hxy * hxy

    def __add__(self, other: "AnalyticField") -> "AnalyticField":
        return AnalyticField(
            lambda x, y: self.value(x, y) + other.value(x, y),
            lambda x, y: tuple(a + b for a, b in zip(self.grad(x, y), other.grad(x, y))),
            lambda x, y: tuple(a + b for a, b in zip(self.hess(x, y), other.hess(x, y))),
            min(self.holder, other.holder))

    def scaled(self, c: float) -> "AnalyticField":
        return AnalyticField(
            lambda x, y: c * self.value(x, y),
            lambda x, y: tuple(c * a for a in self.grad(x, y)),
            lambda x, y: tuple(c * a for a in self.hess(x, y)),
            self.holder)


def quadratic(scale=1.0, quartic=0.0) -> AnalyticField:
    """``scale (x^2 + y^2) / 2 + quartic (x^4 + y^4)``."""
    s, c = float(scale), float(quartic)
    return AnalyticField(
        lambda x, y: s * (x * x + y * y) / 2 + c * (x ** 4 + y ** 4),
        lambda x, y: (s * x + 4 * c * x ** 3, s * y + 4 * c * y ** 3),
        lambda x, y: (s + 12 * c * x * x, 0.0 * x, s + 12 * c * y * y))


def sphere_cap(R=2.0) -> AnalyticField:
    """Upper hemisphere ``sqrt(R^2 - |x|^2)`` (defined for ``|x| < R``)."""
    R2 = float(R) ** 2

    def root(x, y):
        w = R2 - x * x - y * y
        if np.any(w <= 0):
            raise ValueError("sphere cap evaluated outside |x| < R")
        return np.sqrt(w)

    def hess(x, y):
        w = root(x, y)
        w3 = w ** 3
        return (-(R2 - y * y) / w3, -x * y / w3, -(R2 - x * x) / w3)

    return AnalyticField(root, lambda x, y: (-x / root(x, y), -y / root(x, y)), hess)


def smoothed_cone(a=0.2) -> AnalyticField:
    """``sqrt(|x|^2 + a^2)``; ``det Hess = a^2 / (|x|^2 + a^2)^2``."""
    a2 = float(a) ** 2

    def hess(x, y):
        w = np.sqrt(x * x + y * y + a2)
        w3 = w ** 3
        return ((y * y + a2) / w3, -x * y / w3, (x * x + a2) / w3)

    def grad(x, y):
        w = np.sqrt(x * x + y * y + a2)
        return x / w, y / w

    return AnalyticField(lambda x, y: np.sqrt(x * x + y * y + a2), grad, hess)


def saddle(scale=1.0) -> AnalyticField:
    s = float(scale)
    return AnalyticField(lambda x, y: s * x * y, lambda x, y: (s * y, s * x),
                         lambda x, y: (0.0 * x, s + 0.0 * x, 0.0 * x))


def monkey_saddle() -> AnalyticField:
    """``x^3 - 3 x y^2``; its gradient map has degree -2 around the origin."""
    return AnalyticField(
        lambda x, y: x ** 3 - 3 * x * y * y,
        lambda x, y: (3 * x * x - 3 * y * y, -6 * x * y),
        lambda x, y: (6 * x, -6 * y, -6 * x))


def ridge(a=0.1) -> AnalyticField:
    """Smoothed maximum of the planes ``x`` and ``-x``: ``sqrt(x^2 + a^2)``.

    The gradient is constant along every vertical line, so gradient
    collisions along those segments are the degenerate convex case.
    """
    a2 = float(a) ** 2
    z = lambda x, y: 0.0 * x + 0.0 * y
    return AnalyticField(
        lambda x, y: np.sqrt(x * x + a2) + z(x, y),
        lambda x, y: (x / np.sqrt(x * x + a2) + z(x, y), z(x, y)),
        lambda x, y: (a2 / (x * x + a2) ** 1.5 + z(x, y), z(x, y), z(x, y)))


def lacunary_directions(K: int, turn: float = 0.0):
    """Unit directions ``b_k`` at angles ``(k + turn) * golden angle``, k = 1..K."""
    ang = (np.arange(1, K + 1) + turn) * GOLDEN_ANGLE
    return np.cos(ang), np.sin(ang)


def lacunary_sum(alpha: float, K: int, turn: float = 0.0) -> AnalyticField:
    """``sum_k lam_k^-(1+alpha) cos(lam_k <b_k, x>)`` with ``lam_k = 4^k``.

    The partial sums are smooth, and uniformly in K the gradient has
    Hoelder exponent exactly ``alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if K < 1:
        raise ValueError("K must be at least 1")
    lam = BASE ** np.arange(1, K + 1)
    bx, by = lacunary_directions(K, turn)

    def phases(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        for k in range(K):
            yield k, lam[k] * (bx[k] * x + by[k] * y)

    def value(x, y):
        out = 0.0
        for k, t in phases(x, y):
            out = out + lam[k] ** (-1 - alpha) * np.cos(t)
        return out

    def grad(x, y):
        gx = gy = 0.0
        for k, t in phases(x, y):
            s = -lam[k] ** (-alpha) * np.sin(t)
            gx = gx + s * bx[k]
            gy = gy + s * by[k]
        return gx, gy

    def hess(x, y):
        hxx = hxy = hyy = 0.0
        for k, t in phases(x, y):
            c = -lam[k] ** (1 - alpha) * np.cos(t)
            hxx = hxx + c * bx[k] * bx[k]
            hxy = hxy + c * bx[k] * by[k]
            hyy = hyy + c * by[k] * by[k]
        return hxx, hxy, hyy

    return AnalyticField(value, grad, hess, holder=float(alpha))


def default_levels(h: float) -> int:
    """Smallest K with ``4^K >= 1/h``, dropped by one if that breaks ``4^K <= pi/h``."""
    K = max(1, int(math.ceil(math.log(1.0 / h) / math.log(BASE) - 1e-12)))
    if BASE ** K > math.pi / h:
        K -= 1
    if K < 1:
        raise ValueError(f"grid spacing {h:g} too coarse for any lacunary level")
    return K


def weierstrass(alpha, grid: Grid2D | None = None, K=None, eta=1.0, q=0.0) -> AnalyticField:
    """``q |x|^2 / 2 + eta * lacunary_sum(alpha, K)``.

    With ``K=None`` the level count follows the grid (see :func:`default_levels`).
    An explicit K whose top frequency exceeds the grid Nyquist bound ``pi/h``
    is rejected.
    """
    if K is None:
        if grid is None:
            raise ValueError("need a grid or an explicit K")
        K = default_levels(grid.h)
    elif grid is not None and BASE ** K > math.pi / grid.h:
        raise ValueError(f"lambda_K = 4^{K} under-resolved by grid spacing {grid.h:g}")
    f = lacunary_sum(alpha, int(K)).scaled(eta)
    if q:
        f = quadratic(q) + f
    return f


# ----------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    grid: Grid2D | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_dict(cls, d):
        g = d.get("grid")
        if isinstance(g, dict):
            g = Grid2D(g["nx"], g["ny"], g["x0"], g["y0"], g["h"])
        elif isinstance(g, (list, tuple)):
            g = Grid2D(*g)
        return cls(d["kind"], dict(d.get("params", {})), g)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        out = {"kind": self.kind, "params": dict(self.params)}
        if self.grid is not None:
            g = self.grid
            out["grid"] = {"nx": g.nx, "ny": g.ny, "x0": g.x0, "y0": g.y0, "h": g.h}
        return out


@dataclass(frozen=True, eq=False)
class Generated:
    """Output of :func:`generate`: the sampled object plus analytic metadata."""

    field: object
    analytic: object
    meta: dict


def analytic_field(kind: str, params: dict, grid: Grid2D | None = None) -> AnalyticField:
    p = dict(params)
    if kind == "quadratic":
        return quadratic(p.get("scale", 1.0), p.get("quartic", 0.0))
    if kind == "sphere_cap":
        return sphere_cap(p.get("R", 2.0))
    if kind == "smoothed_cone":
        return smoothed_cone(p.get("a", 0.2))
    if kind == "saddle":
        return saddle(p.get("scale", 1.0))
    if kind == "monkey_saddle":
        return monkey_saddle()
    if kind == "ridge":
        return ridge(p.get("a", 0.1))
    if kind == "weierstrass":
        return weierstrass(p.get("alpha", 0.8), grid, p.get("K"), p.get("eta", 1.0), p.get("q", 0.0))
    raise ValueError(f"{kind!r} is not a scalar generator")


def generate(spec: GeneratorSpec) -> Generated:
    """Instantiate a spec on its grid.

    Scalar kinds return a :class:`ScalarField2D`; ``diffeo_*`` kinds return a
    :class:`~weakcurv.curvature.Diffeo2D` (and ignore the grid).
    """
    p = spec.params
    if spec.kind.startswith("diffeo_"):
        from .curvature import Diffeo2D

        if spec.kind == "diffeo_shear":
            xi = Diffeo2D.shear(p.get("s", 0.2))
            return Generated(xi, xi, {"kind": spec.kind, "holder": 1.0, "min_det": 1.0})
        xi = Diffeo2D.rough(p.get("alpha", 0.8), p.get("eta", 0.2), p.get("K", 4))
        return Generated(xi, xi, {"kind": spec.kind, "holder": p.get("alpha", 0.8),
                                  "min_det": xi.min_det})
    if spec.grid is None:
        raise ValueError("scalar generators need a grid")
    f = analytic_field(spec.kind, p, spec.grid)
    v = sample(f.value, spec.grid)
    meta = {"kind": spec.kind, "params": dict(p), "exact_gradient": True,
            "exact_det_hessian": True, "holder": f.holder}
    if spec.kind == "weierstrass":
        meta["K"] = int(p["K"]) if p.get("K") is not None else default_levels(spec.grid.h)
    return Generated(ScalarField2D(spec.grid, v.values, meta=meta), f, meta)


def sample_gradient(f: AnalyticField, grid: Grid2D):
    """Exact gradient components sampled at the nodes."""
    X, Y = grid.mesh()
    gx, gy = f.grad(X, Y)
    return (ScalarField2D(grid, np.broadcast_to(gx, grid.shape)),
            ScalarField2D(grid, np.broadcast_to(gy, grid.shape)))
