"""Brouwer degree of planar maps from boundary winding numbers.

Also hosts the degree identities relating gradient maps to the very weak
Hessian determinant, and the index-based classification of surface points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fields import (Grid2D, ScalarField2D, TestFunction, VectorField2D, bilinear,
                     grad_arrays, gradient, smooth_step)
from .mollifier import mollify
from .weak_hessian import _grad_pair, det_hessian_pairing, nonnegativity_check

TWO_PI = 2.0 * math.pi
MAX_SAMPLES = 1 << 18

# Hoelder exponents of grad v under which each identity is asserted.
# The mass identity needs alpha > 1/2; the lower bound deg >= 1 on the
# gradient image and the L^1 bound need alpha > 2/3. Nothing is claimed in
# between for the latter.
ALPHA_RANGES = {
    "degree_formula": (0.5, 1.0),
    "mass_identity": (0.5, 1.0),
    "positive_degree": (2.0 / 3.0, 1.0),
    "degree_l1_bound": (2.0 / 3.0, 1.0),
}


def asserted_identities(alpha: float):
    """Names of the degree identities whose hypothesis covers ``grad v in C^{0,alpha}``.

    Smooth inputs (``alpha >= 1``) satisfy every hypothesis.
    """
    return sorted(k for k, (lo, hi) in ALPHA_RANGES.items() if alpha > lo and (alpha < hi or alpha >= 1))


class DegreeUndefined(ValueError):
    """Raised when the target point is too close to the boundary image."""


class PreconditionError(ValueError):
    """Raised when a check's hypothesis is not met."""


@dataclass(frozen=True)
class DomainU:
    """Disk ``(cx, cy, r)`` or rectangle ``(xmin, xmax, ymin, ymax)``."""

    shape: str
    params: tuple
    boundary_samples: int = 1024

    def __post_init__(self):
        if self.shape not in ("disk", "rect"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        p = tuple(float(t) for t in self.params)
        if self.shape == "disk" and (len(p) != 3 or p[2] <= 0):
            raise ValueError("disk needs (cx, cy, r) with r > 0")
        if self.shape == "rect" and (len(p) != 4 or p[1] <= p[0] or p[3] <= p[2]):
            raise ValueError("rect needs (xmin, xmax, ymin, ymax) with positive extent")
        if self.boundary_samples < 64:
            raise ValueError("boundary_samples must be at least 64")
        object.__setattr__(self, "params", p)

    @classmethod
    def disk(cls, center, r, boundary_samples=1024):
        return cls("disk", (center[0], center[1], r), boundary_samples)

    @classmethod
    def rect(cls, xmin, xmax, ymin, ymax, boundary_samples=1024):
        return cls("rect", (xmin, xmax, ymin, ymax), boundary_samples)

    @classmethod
    def parse(cls, text: str, boundary_samples=1024):
        """``disk:cx,cy,r`` or ``rect:xmin,xmax,ymin,ymax``."""
        shape, _, rest = text.partition(":")
        return cls(shape.strip(), tuple(float(t) for t in rest.split(",")), boundary_samples)

    def bbox(self):
        p = self.params
        if self.shape == "disk":
            return p[0] - p[2], p[0] + p[2], p[1] - p[2], p[1] + p[2]
        return p

    @property
    def area(self):
        p = self.params
        if self.shape == "disk":
            return math.pi * p[2] ** 2
        return (p[1] - p[0]) * (p[3] - p[2])

    @property
    def min_extent(self):
        xmin, xmax, ymin, ymax = self.bbox()
        return min(xmax - xmin, ymax - ymin)

    def contains(self, x, y):
        p = self.params
        if self.shape == "disk":
            return (x - p[0]) ** 2 + (y - p[1]) ** 2 < p[2] ** 2
        return (x > p[0]) & (x < p[1]) & (y > p[2]) & (y < p[3])

    def boundary(self, n=None):
        """Counter-clockwise boundary samples (closing segment implicit)."""
        n = self.boundary_samples if n is None else int(n)
        p = self.params
        if self.shape == "disk":
            t = TWO_PI * np.arange(n) / n
            return p[0] + p[2] * np.cos(t), p[1] + p[2] * np.sin(t)
        xmin, xmax, ymin, ymax = p
        w, hgt = xmax - xmin, ymax - ymin
        s = 2 * (w + hgt) * np.arange(n) / n
        x = np.empty(n)
        y = np.empty(n)
        e1 = s < w
        e2 = (s >= w) & (s < w + hgt)
        e3 = (s >= w + hgt) & (s < 2 * w + hgt)
        e4 = s >= 2 * w + hgt
        x[e1], y[e1] = xmin + s[e1], ymin
        x[e2], y[e2] = xmax, ymin + (s[e2] - w)
        x[e3], y[e3] = xmax - (s[e3] - w - hgt), ymax
        x[e4], y[e4] = xmin, ymax - (s[e4] - 2 * w - hgt)
        return x, y

    def inside_grid(self, grid: Grid2D, margin=0.0):
        return grid.contains_box(*self.bbox(), margin=margin)

    def to_dict(self):
        return {"shape": self.shape, "params": list(self.params),
                "boundary_samples": self.boundary_samples}


def _image_of_boundary(u, U: DomainU, n):
    bx, by = U.boundary(n)
    if callable(u):
        return u(bx, by)
    if not U.inside_grid(u.grid):
        raise ValueError("domain closure is not inside the map's grid")
    return u.interpolate(bx, by)


def _delta_safe(cx, cy):
    step = np.hypot(np.diff(np.append(cx, cx[0])), np.diff(np.append(cy, cy[0])))
    return 2.0 * float(step.max())


def _windings(px, py, u, U, base):
    """Winding numbers of the image curve around each point, with refinement.

    Returns ``(winding, dist, inc)`` from the first sampling level at which
    every point's largest angle increment is below pi/4 (or the cap).
    """
    cx, cy = base
    tot, dist, inc = kernels.winding_sums(px, py, cx, cy)
    n = cx.size
    todo = np.flatnonzero(inc >= math.pi / 4)
    while todo.size and n < MAX_SAMPLES:
        n *= 2
        cx, cy = _image_of_boundary(u, U, n)
        t2, _, i2 = kernels.winding_sums(px[todo], py[todo], cx, cy)
        tot[todo] = t2
        inc[todo] = i2
        todo = todo[i2 >= math.pi / 4]
    return tot / TWO_PI, dist, inc


def winding_degree(u, U: DomainU, y) -> int:
    """Degree of ``u`` on ``U`` at ``y`` as the winding number of ``u(dU)``.

    ``u`` is a :class:`VectorField2D` (bilinearly interpolated on the
    boundary) or a vectorized callable ``(x, y) -> (u1, u2)``.
    """
    base = _image_of_boundary(u, U, U.boundary_samples)
    ds = _delta_safe(*base)
    px = np.array([float(y[0])])
    py = np.array([float(y[1])])
    xmin, xmax = base[0].min() - ds, base[0].max() + ds
    ymin, ymax = base[1].min() - ds, base[1].max() + ds
    if not (xmin <= px[0] <= xmax and ymin <= py[0] <= ymax):
        return 0
    w, dist, _ = _windings(px, py, u, U, base)
    if dist[0] <= ds:
        raise DegreeUndefined(
            f"degree undefined near boundary image: dist {dist[0]:.3e} <= delta_safe {ds:.3e}")
    return _to_int(w[0])


def _to_int(w):
    n = round(float(w))
    if abs(w - n) > 1e-6:
        raise ArithmeticError(f"winding sum {w} is not an integer")
    return int(n)


@dataclass(frozen=True, eq=False)
class DegreeMap:
    """Integer degree on a target grid.

    ``deg`` holds the winding number of the sampled image curve at every
    node, including nodes flagged in ``excluded`` (within ``band`` of the
    curve) where the continuous degree is not asserted.
    """

    y_grid: Grid2D
    deg: np.ndarray
    excluded: np.ndarray
    band: float
    curve_area: float = 0.0

    def integral(self, include_excluded=True, weight=None) -> float:
        d = self.deg.astype(np.float64)
        if weight is not None:
            d = d * weight
        if not include_excluded:
            d = np.where(self.excluded, 0.0, d)
        return float(d.sum() * self.y_grid.h ** 2)

    def as_field(self) -> ScalarField2D:
        return ScalarField2D(self.y_grid, self.deg.astype(np.float64))

    def mask_field(self) -> ScalarField2D:
        return ScalarField2D(self.y_grid, self.excluded.astype(np.float64))


def degree_map(u, U: DomainU, y_grid: Grid2D) -> DegreeMap:
    base = _image_of_boundary(u, U, U.boundary_samples)
    ds = _delta_safe(*base)
    Y1, Y2 = y_grid.mesh()
    deg = np.zeros(y_grid.shape, dtype=np.int64)
    excl = np.zeros(y_grid.shape, dtype=bool)
    near = ((Y1 >= base[0].min() - ds) & (Y1 <= base[0].max() + ds)
            & (Y2 >= base[1].min() - ds) & (Y2 <= base[1].max() + ds))
    if near.any():
        w, dist, _ = _windings(Y1[near], Y2[near], u, U, base)
        n = np.rint(w)
        # points on or next to the sampled curve are excluded anyway
        if (np.abs(w - n)[dist > ds] > 1e-6).any():
            raise ArithmeticError("non-integer winding sum in degree map")
        deg[near] = n.astype(np.int64)
        excl[near] = dist <= ds
    cx, cy = base
    area = 0.5 * float(np.sum(cx * np.roll(cy, -1) - np.roll(cx, -1) * cy))
    return DegreeMap(y_grid, deg, excl, ds, area)


def perturbed_map(v: ScalarField2D, delta: float, grad=None) -> VectorField2D:
    """``grad v + delta * (-x2, x1)``."""
    g1, g2 = _grad_pair(v, grad)
    X, Y = v.grid.mesh()
    return VectorField2D.from_arrays(v.grid, g1 - delta * Y, g2 + delta * X)


def target_grid(curve_x, curve_y, spacing, margin=0.0) -> Grid2D:
    xmin, xmax = curve_x.min() - margin, curve_x.max() + margin
    ymin, ymax = curve_y.min() - margin, curve_y.max() + margin
    nx = max(3, int(math.ceil((xmax - xmin) / spacing)) + 1)
    ny = max(3, int(math.ceil((ymax - ymin) / spacing)) + 1)
    return Grid2D(nx, ny, xmin, ymin, spacing)


# ----------------------------------------------------------------------------
# smoothed indicators


@dataclass(frozen=True)
class DiskIndicator(TestFunction):
    """Smooth ``chi`` of a disk with a transition layer of width ``w`` centered on ``|x - c| = R``.

    The step is antisymmetric about the circle, so the pairing with a smooth
    density differs from the sharp indicator by ``O(w^2)``.
    """

    center: tuple
    R: float
    width: float

    def support_box(self):
        cx, cy = self.center
        r = self.R + 0.5 * self.width
        return cx - r, cx + r, cy - r, cy + r

    def evaluate(self, x, y, order=2):
        dx = np.asarray(x, dtype=np.float64) - self.center[0]
        dy = np.asarray(y, dtype=np.float64) - self.center[1]
        rho = np.hypot(dx, dy)
        w = self.width
        H = smooth_step((self.R - rho) / w + 0.5, order)
        out = [H[0], None, None]
        if order >= 1:
            rs = np.where(rho > 0, rho, 1.0)
            s1 = -H[1] / w  # dS / drho
            ex, ey = dx / rs, dy / rs
            out[1] = (s1 * ex, s1 * ey)
            if order >= 2:
                s2 = H[2] / w ** 2
                t = s1 / rs
                out[2] = (s2 * ex * ex + t * (1 - ex * ex), (s2 - t) * ex * ey,
                          s2 * ey * ey + t * (1 - ey * ey))
        return tuple(out)


@dataclass(frozen=True)
class RectIndicator(TestFunction):
    """Smooth ``chi`` of a rectangle with transition layers of width ``w`` centered on its sides."""

    box: tuple
    width: float

    def support_box(self):
        xmin, xmax, ymin, ymax = self.box
        p = 0.5 * self.width
        return xmin - p, xmax + p, ymin - p, ymax + p

    def evaluate(self, x, y, order=2):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        xmin, xmax, ymin, ymax = self.box
        w = self.width

        def side(t, lo, hi):
            a = smooth_step((t - lo) / w + 0.5, order)
            b = smooth_step((hi - t) / w + 0.5, order)
            f = [a[0] * b[0]]
            if order >= 1:
                f.append((a[1] * b[0] - a[0] * b[1]) / w)
            if order >= 2:
                f.append((a[2] * b[0] - 2 * a[1] * b[1] + a[0] * b[2]) / w ** 2)
            return f

        sx = side(x, xmin, xmax)
        sy = side(y, ymin, ymax)
        out = [sx[0] * sy[0], None, None]
        if order >= 1:
            out[1] = (sx[1] * sy[0], sx[0] * sy[1])
        if order >= 2:
            out[2] = (sx[2] * sy[0], sx[1] * sy[1], sx[0] * sy[2])
        return tuple(out)


def smoothed_indicator(U: DomainU, width: float) -> TestFunction:
    if U.shape == "disk":
        p = U.params
        return DiskIndicator((p[0], p[1]), p[2], width)
    return RectIndicator(U.params, width)


def measure_of(v: ScalarField2D, U: DomainU, grad=None, widths=None):
    """``mu_f(U)`` from smoothed indicators extrapolated to zero width.

    The centered transition layers make the width error even in ``w``, so
    two widths are combined linearly in ``w^2``.

    Returns ``(value, pairings)`` where ``pairings`` lists ``(w, value)``.
    """
    h = v.grid.h
    w1, w2 = widths if widths is not None else (8 * h, 16 * h)
    if w2 >= 0.5 * U.min_extent or w1 == w2:
        raise ValueError("indicator width too large for the domain")
    p1 = det_hessian_pairing(v, smoothed_indicator(U, w1), grad=grad, estimate_error=False).value
    p2 = det_hessian_pairing(v, smoothed_indicator(U, w2), grad=grad, estimate_error=False).value
    # mu(w) ~ mu(0) + c w^2
    val = (w2 * w2 * p1 - w1 * w1 * p2) / (w2 * w2 - w1 * w1)
    return val, [(w1, p1), (w2, p2)]


# ----------------------------------------------------------------------------
# identities


def _support_clear_of_curve(gfun, cx, cy, band):
    xmin, xmax, ymin, ymax = gfun.support_box()
    if hasattr(gfun, "center") and hasattr(gfun, "radius"):
        d = np.hypot(cx - gfun.center[0], cy - gfun.center[1]).min()
        return d > gfun.radius + band
    inside = (cx > xmin - band) & (cx < xmax + band) & (cy > ymin - band) & (cy < ymax + band)
    return not inside.any()


def degree_formula_residual(v: ScalarField2D, delta: float, U: DomainU, g, grad=None,
                            eps=None, y_spacing=None):
    """Both sides of ``int g deg(u^delta, U, .) = Det D^2 v [g o u^delta] + delta^2 int_U g o u^delta``.

    The left side integrates ``g`` against the degree map of ``u^delta``.
    The right side equals ``int_U (det Hess v_eps + delta^2) g(u^delta_eps)``
    for the mollified field; it is evaluated at two scales ``eps`` and
    ``2 eps`` and Richardson-extrapolated to ``eps -> 0``.
    """
    grid = v.grid
    h = grid.h
    u = perturbed_map(v, delta, grad)
    base = _image_of_boundary(u, U, U.boundary_samples)
    band = _delta_safe(*base)
    if not _support_clear_of_curve(g, base[0], base[1], band):
        raise ValueError("support of g meets the excluded band around u(dU)")
    xmin, xmax, ymin, ymax = g.support_box()
    if y_spacing is None:
        y_spacing = min(xmax - xmin, ymax - ymin) / 128
    yg = Grid2D(int(math.ceil((xmax - xmin) / y_spacing)) + 1,
                int(math.ceil((ymax - ymin) / y_spacing)) + 1, xmin, ymin, y_spacing)
    dm = degree_map(u, U, yg)
    Y1, Y2 = yg.mesh()
    lhs = dm.integral(weight=g.value(Y1, Y2))

    e1 = 2 * h if eps is None else float(eps)
    r1 = _rhs_mollified(v, delta, U, g, grad, e1)
    r2 = _rhs_mollified(v, delta, U, g, grad, 2 * e1)
    rhs = (4 * r1 - r2) / 3
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs),
            "rhs_eps": [[e1, r1], [2 * e1, r2]], "band": band, "degree_values": sorted(set(dm.deg[g.value(Y1, Y2) > 0].tolist()))}


def _rhs_mollified(v, delta, U, g, grad, eps):
    g1, g2 = _grad_pair(v, grad)
    m1 = mollify(ScalarField2D(v.grid, g1), eps)
    m2 = mollify(ScalarField2D(v.grid, g2), eps)
    sub = m1.grid
    if not U.inside_grid(sub, margin=sub.h):
        raise ValueError("domain too close to the grid boundary for mollification")
    h = sub.h
    a11, a12 = grad_arrays(m1.values, h)
    a21, a22 = grad_arrays(m2.values, h)
    off = 0.5 * (a12 + a21)
    det = a11 * a22 - off * off
    X, Y = sub.mesh()
    inside = U.contains(X, Y)
    gval = g.value(m1.values - delta * Y, m2.values + delta * X)
    return float(((det + delta ** 2) * gval)[inside].sum() * h * h)


def degree_mass_identity(v: ScalarField2D, U: DomainU, grad=None, y_spacing=None,
                         check=True, n_probes=16):
    """``int deg(grad v, U, y) dy`` against ``mu_f(U)``.

    Requires ``Det D^2 v >= 0`` near ``U`` (checked with
    :func:`~weakcurv.weak_hessian.nonnegativity_check` unless ``check`` is False).
    """
    grid = v.grid
    h = grid.h
    if not U.inside_grid(grid, margin=h):
        raise ValueError("domain closure must lie inside the grid")
    if check:
        xmin, xmax, ymin, ymax = U.bbox()
        pad = 0.125 * U.min_extent
        region = _clip_region(grid, xmin - pad, xmax + pad, ymin - pad, ymax + pad)
        rep = nonnegativity_check(v, region, n_probes, grad=grad)
        if not rep.verdict:
            raise PreconditionError(
                f"Det D^2 v is not nonnegative near U (min pairing {rep.min_pairing:.3e})")
    gv = VectorField2D.from_arrays(grid, *_grad_pair(v, grad))
    base = _image_of_boundary(gv, U, U.boundary_samples)
    ext = max(np.ptp(base[0]), np.ptp(base[1]))
    mu, pairs = measure_of(v, U, grad)
    if ext == 0.0:
        return {"deg_integral": 0.0, "mu_f_U": mu, "gap": abs(mu), "rel_gap": _rel(0.0, mu),
                "curve_area": 0.0, "indicator_pairings": pairs}
    if y_spacing is None:
        y_spacing = ext / 512
    band = _delta_safe(*base)
    yg = target_grid(base[0], base[1], y_spacing, margin=band + 2 * y_spacing)
    dm = degree_map(gv, U, yg)
    di = dm.integral()
    return {"deg_integral": di, "mu_f_U": mu, "gap": abs(di - mu), "rel_gap": _rel(di, mu),
            "curve_area": dm.curve_area, "excluded_fraction": float(dm.excluded.mean()),
            "indicator_pairings": pairs}


def _rel(a, b):
    s = max(abs(a), abs(b))
    return abs(a - b) / s if s > 0 else 0.0


def _clip_region(grid: Grid2D, xmin, xmax, ymin, ymax) -> Grid2D:
    sl_y, sl_x = grid.index_box(max(xmin, grid.x0), min(xmax, grid.x1),
                                max(ymin, grid.y0), min(ymax, grid.y1))
    return grid.window(sl_x.start, sl_x.stop, sl_y.start, sl_y.stop)


def positive_degree_check(v: ScalarField2D, U: DomainU, n_points=256, grad=None):
    """Count interior points ``x`` with ``deg(grad v, U, grad v(x)) < 1``.

    Sample points form a deterministic lattice clipped to ``U``. Points whose
    image lies in the excluded band are skipped and counted separately.
    """
    gv = VectorField2D.from_arrays(v.grid, *_grad_pair(v, grad))
    xmin, xmax, ymin, ymax = U.bbox()
    m = int(math.ceil(math.sqrt(n_points * 4 / math.pi))) + 2
    while True:
        xs = np.linspace(xmin, xmax, m + 2)[1:-1]
        ys = np.linspace(ymin, ymax, m + 2)[1:-1]
        X, Y = np.meshgrid(xs, ys)
        keep = U.contains(X, Y)
        if keep.sum() >= n_points:
            break
        m += 2
    px, py = X[keep], Y[keep]
    yx, yy = gv.interpolate(px, py)
    base = _image_of_boundary(gv, U, U.boundary_samples)
    band = _delta_safe(*base)
    w, dist, _ = _windings(yx, yy, gv, U, base)
    deg = np.rint(w).astype(np.int64)
    ok = dist > band
    viol = ok & (deg < 1)
    return {"n_points": int(px.size), "n_checked": int(ok.sum()), "n_excluded": int((~ok).sum()),
            "violations": int(viol.sum()), "min_degree": int(deg[ok].min()) if ok.any() else None}


CLASSES = {1: "elliptic", 0: "parabolic", -1: "hyperbolic"}


def classify_point(v: ScalarField2D, x, radii=None, grad=None, boundary_samples=256):
    """Index of the gradient map at ``x`` and the resulting point class.

    The index is the degree of ``grad v`` on ``B_r(x)`` at ``grad v(x)``; it is
    accepted at the smallest radius whose value agrees with the next
    larger one.
    """
    grid = v.grid
    gv = VectorField2D.from_arrays(grid, *_grad_pair(v, grad))
    if radii is None:
        radii = [grid.h * 2 ** k for k in range(6, 1, -1)]
    radii = sorted((float(r) for r in radii), reverse=True)
    y = tuple(float(t[0]) for t in gv.interpolate(np.array([x[0]]), np.array([x[1]])))
    idx = []
    for r in radii:
        U = DomainU.disk(x, r, boundary_samples)
        if not U.inside_grid(grid):
            idx.append(None)
            continue
        try:
            idx.append(winding_degree(gv, U, y))
        except DegreeUndefined:
            idx.append(None)
    found = None
    for k in range(len(radii) - 1, 0, -1):  # smallest radius first
        a, b = idx[k], idx[k - 1]
        if a is not None and a == b:
            found = a
            break
    if found is None:
        cls = "unresolved"
    elif found <= -2:
        cls = "flat"
    else:
        cls = CLASSES.get(found, "unresolved")
    return {"class": cls, "index": found, "radii": radii, "indices": idx}
