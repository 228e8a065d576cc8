"""Gradient images, the Gauss map, spherical-image areas and convexity tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .degree import DomainU, PreconditionError, degree_mass_identity
from .fields import Grid2D, ScalarField2D, bilinear, grad_arrays
from .weak_hessian import _grad_pair, nonnegativity_check


@dataclass(frozen=True)
class ImageAreaResult:
    area: float
    raster_resolution: float
    boundary_image_area: float
    n_triangles: int = 0
    mask: ScalarField2D | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.area >= 0:
            raise ValueError("area must be nonnegative")

    def to_dict(self):
        return {"area": self.area, "raster_resolution": self.raster_resolution,
                "boundary_image_area": self.boundary_image_area, "n_triangles": self.n_triangles}


@dataclass(frozen=True)
class PartitionTV:
    parts: list
    areas: list
    total: float
    raster_resolution: float = 0.0

    def to_dict(self):
        return {"parts": [p.to_dict() for p in self.parts], "areas": list(self.areas),
                "total": self.total, "raster_resolution": self.raster_resolution}


# ----------------------------------------------------------------------------
# triangulated sampling of U


def _project(U: DomainU, X, Y):
    """Nearest points of the closed domain (identity inside)."""
    if U.shape == "disk":
        cx, cy, r = U.params
        dx, dy = X - cx, Y - cy
        rho = np.hypot(dx, dy)
        s = np.where(rho > r, r / np.where(rho > 0, rho, 1.0), 1.0)
        return cx + dx * s, cy + dy * s
    xmin, xmax, ymin, ymax = U.params
    return np.clip(X, xmin, xmax), np.clip(Y, ymin, ymax)


def _lattice_triangles(U: DomainU, spacing: float):
    """Triangles of a lattice covering ``U``; outside corners snapped onto ``dU``.

    Returns the vertex arrays ``(PX, PY)`` of shape ``(m, n)`` and the index
    lists of cells to keep.
    """
    xmin, xmax, ymin, ymax = U.bbox()
    nx = int(math.ceil((xmax - xmin) / spacing)) + 1
    ny = int(math.ceil((ymax - ymin) / spacing)) + 1
    xs = xmin + spacing * np.arange(nx)
    ys = ymin + spacing * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    inside = U.contains(X, Y)
    PX, PY = _project(U, X, Y)
    cell = inside[:-1, :-1] | inside[1:, :-1] | inside[:-1, 1:] | inside[1:, 1:]
    return PX, PY, cell


def _triangles_from_lattice(AX, AY, cell):
    """Two triangles per kept cell from lattice-shaped image coordinates."""
    a = (AX[:-1, :-1][cell], AY[:-1, :-1][cell])
    b = (AX[:-1, 1:][cell], AY[:-1, 1:][cell])
    c = (AX[1:, 1:][cell], AY[1:, 1:][cell])
    d = (AX[1:, :-1][cell], AY[1:, :-1][cell])
    t1 = np.stack([a[0], a[1], b[0], b[1], c[0], c[1]], axis=1)
    t2 = np.stack([a[0], a[1], c[0], c[1], d[0], d[1]], axis=1)
    return np.concatenate([t1, t2])


def _raster_area(tri, pts_x, pts_y, raster, pad=2):
    x0 = float(pts_x.min()) - pad * raster
    y0 = float(pts_y.min()) - pad * raster
    mx = int(math.ceil((float(pts_x.max()) - x0) / raster)) + pad + 1
    my = int(math.ceil((float(pts_y.max()) - y0) / raster)) + pad + 1
    if mx * my > 64_000_000:
        raise ValueError("raster too fine for the image extent")
    mask = kernels.raster_triangles(tri, x0, y0, raster, mx, my)
    return mask, (x0, y0, mx, my)


def _gradient_sampler(v: ScalarField2D, grad):
    g1, g2 = _grad_pair(v, grad)
    grid = v.grid

    def at(x, y):
        return bilinear(g1, grid, x, y), bilinear(g2, grid, x, y)

    return at


def gradient_image_area(v: ScalarField2D, U: DomainU, raster=None, grad=None,
                        refine: int = 2, keep_mask: bool = False) -> ImageAreaResult:
    """``|grad v(U)|`` by forward rasterization.

    A lattice of spacing ``h / refine`` covering ``U`` (outside corners
    snapped to the boundary) is mapped through the bilinearly interpolated
    gradient; each lattice cell contributes two image triangles, and the
    area is the number of target pixels whose centers are covered times
    ``raster^2``. Folded or non-injective images are handled naturally.
    """
    grid = v.grid
    if not U.inside_grid(grid):
        raise ValueError("domain must lie inside the grid")
    at = _gradient_sampler(v, grad)
    PX, PY, cell = _lattice_triangles(U, grid.h / refine)
    AX, AY = at(PX, PY)
    bx, by = U.boundary(U.boundary_samples)
    BX, BY = at(bx, by)
    ext = max(float(np.ptp(AX)), float(np.ptp(AY)))
    if raster is None:
        raster = ext / 1024 if ext > 0 else grid.h
    raster = float(raster)
    if ext == 0.0:
        return ImageAreaResult(0.0, raster, 0.0, 0)
    tri = _triangles_from_lattice(AX, AY, cell)
    mask, (x0, y0, mx, my) = _raster_area(tri, AX, AY, raster)
    area = float(mask.sum()) * raster * raster
    # boundary image: pixels hit by densely resampled boundary samples
    n = max(U.boundary_samples, int(4 * np.hypot(np.diff(BX), np.diff(BY)).sum() / raster))
    bx, by = U.boundary(n)
    BX, BY = at(bx, by)
    bi = np.floor((BY - y0) / raster).astype(np.int64)
    bj = np.floor((BX - x0) / raster).astype(np.int64)
    ok = (bi >= 0) & (bi < my) & (bj >= 0) & (bj < mx)
    bmask = np.zeros((my, mx), dtype=bool)
    bmask[bi[ok], bj[ok]] = True
    b_area = float(bmask.sum()) * raster * raster
    m = None
    if keep_mask:
        m = ScalarField2D(Grid2D(mx, my, x0 + 0.5 * raster, y0 + 0.5 * raster, raster),
                          mask.astype(np.float64))
    return ImageAreaResult(area, raster, b_area, int(tri.shape[0]), m)


# ----------------------------------------------------------------------------
# Gauss map and spherical images


@dataclass(frozen=True)
class GaussMap:
    """Unit normal ``N = (grad v, -1) / sqrt(1 + |grad v|^2)`` at every node."""

    grid: Grid2D
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray

    def components(self):
        return self.n1, self.n2, self.n3


def normal_from_gradient(p, q):
    s = 1.0 / np.sqrt(1.0 + p * p + q * q)
    return p * s, q * s, -s


def gauss_map(v: ScalarField2D, grad=None) -> GaussMap:
    p, q = _grad_pair(v, grad)
    return GaussMap(v.grid, *normal_from_gradient(p, q))


def lambert_lower(n1, n2, n3):
    """Equal-area (Lambert azimuthal) chart of the lower hemisphere, centered at the south pole."""
    k = np.sqrt(2.0 / np.maximum(1.0 - n3, 1e-300))
    return n1 * k, n2 * k


def _as_domain(part):
    if isinstance(part, DomainU):
        return part
    if isinstance(part, str):
        return DomainU.parse(part)
    return DomainU.rect(*part)


def _overlap(a: DomainU, b: DomainU, tol):
    if a.shape == "rect" and b.shape == "rect":
        ax0, ax1, ay0, ay1 = a.params
        bx0, bx1, by0, by1 = b.params
        return min(ax1, bx1) - max(ax0, bx0) > tol and min(ay1, by1) - max(ay0, by0) > tol
    if a.shape == "disk" and b.shape == "disk":
        return math.hypot(a.params[0] - b.params[0], a.params[1] - b.params[1]) < a.params[2] + b.params[2] - tol
    d, r = (a, b) if a.shape == "disk" else (b, a)
    cx, cy, rad = d.params
    x0, x1, y0, y1 = r.params
    return math.hypot(cx - min(max(cx, x0), x1), cy - min(max(cy, y0), y1)) < rad - tol


def check_disjoint(parts, tol=0.0):
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            if _overlap(parts[i], parts[j], tol):
                raise ValueError(f"parts {i} and {j} overlap")


def partition_rect(box, nx=2, ny=2):
    """Split a rectangle into ``nx * ny`` closed sub-rectangles."""
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    return [DomainU.rect(xs[i], xs[i + 1], ys[j], ys[j + 1]) for j in range(ny) for i in range(nx)]


def spherical_image_area(v: ScalarField2D, E: DomainU, raster=None, grad=None, refine=2) -> float:
    """``H^2(N(E))``, rasterized in the Lambert chart (pixels are equal-area bins)."""
    grid = v.grid
    if not E.inside_grid(grid):
        raise ValueError("part must lie inside the grid")
    at = _gradient_sampler(v, grad)
    PX, PY, cell = _lattice_triangles(E, grid.h / refine)
    AX, AY = lambert_lower(*normal_from_gradient(*at(PX, PY)))
    ext = max(float(np.ptp(AX)), float(np.ptp(AY)))
    if ext == 0.0:
        return 0.0
    raster = ext / 1024 if raster is None else float(raster)
    tri = _triangles_from_lattice(AX, AY, cell)
    mask, _ = _raster_area(tri, AX, AY, raster)
    return float(mask.sum()) * raster * raster


def spherical_image_tv(v: ScalarField2D, parts, raster=None, grad=None, refine=2) -> PartitionTV:
    """Per-part spherical-image areas and their sum (one extrinsic TV sample)."""
    parts = [_as_domain(p) for p in parts]
    check_disjoint(parts, tol=1e-12)
    areas = [spherical_image_area(v, E, raster, grad, refine) for E in parts]
    return PartitionTV(parts, areas, float(sum(areas)), 0.0 if raster is None else float(raster))


# ----------------------------------------------------------------------------
# convexity, Alexandrov triple, injectivity


def _domain_mask(grid, domain):
    if domain is None:
        return np.ones(grid.shape, dtype=bool)
    X, Y = grid.mesh()
    return domain.contains(X, Y)


def convexity_check(v: ScalarField2D, domain: DomainU | None = None, budget: int = 4, tol=None):
    """Midpoint convexity on node pairs ``(x, x + 2d)`` with ``|d|_inf <= budget``.

    Midpoints are nodes, so sampled convex functions pass exactly up to
    rounding. ``tol`` defaults to ``1e-3 h^2 H + 1e-12 max|v|`` where ``H``
    is the largest finite-difference Hessian entry.
    """
    g = v.grid
    a = v.values
    m = _domain_mask(g, domain)
    if tol is None:
        dx, dy = grad_arrays(a, g.h)
        hxx, hxy = grad_arrays(dx, g.h)
        _, hyy = grad_arrays(dy, g.h)
        H = float(max(np.abs(t[m]).max() for t in (hxx, hxy, hyy)))
        tol = 1e-3 * g.h ** 2 * H + 1e-12 * max(1.0, float(np.abs(a[m]).max()))
    worst = -math.inf
    where = None
    offsets = [(i, j) for j in range(0, budget + 1) for i in range(-budget, budget + 1)
               if (j > 0 or i > 0)]
    ny, nx = g.shape
    for i, j in offsets:
        si, sj = 2 * i, 2 * j
        if abs(si) >= nx or sj >= ny:
            continue
        x0 = max(0, -si)
        x1 = nx - max(0, si)
        y1 = ny - sj
        A = (slice(0, y1), slice(x0, x1))
        B = (slice(sj, sj + y1), slice(x0 + si, x1 + si))
        M = (slice(j, j + y1), slice(x0 + i, x1 + i))
        ok = m[A] & m[B] & m[M]
        if not ok.any():
            continue
        viol = np.where(ok, a[M] - 0.5 * (a[A] + a[B]), -np.inf)
        k = int(np.argmax(viol))
        if viol.flat[k] > worst:
            r, c = np.unravel_index(k, viol.shape)
            worst = float(viol.flat[k])
            where = {"x": [g.x0 + (c + x0) * g.h, g.y0 + r * g.h], "direction": [i, j]}
    if where is None:
        raise ValueError("no admissible node pairs in the domain")
    return {"convex": bool(worst <= tol), "worst_violation": worst, "tol": float(tol), "witness": where}


def _region_for(grid, domains, pad_frac=0.125):
    xmin = min(d.bbox()[0] for d in domains)
    xmax = max(d.bbox()[1] for d in domains)
    ymin = min(d.bbox()[2] for d in domains)
    ymax = max(d.bbox()[3] for d in domains)
    pad = pad_frac * min(d.min_extent for d in domains)
    sl_y, sl_x = grid.index_box(max(xmin - pad, grid.x0), min(xmax + pad, grid.x1),
                                max(ymin - pad, grid.y0), min(ymax + pad, grid.y1))
    return grid.window(sl_x.start, sl_x.stop, sl_y.start, sl_y.stop)


def _hull_domain(domains):
    xmin = min(d.bbox()[0] for d in domains)
    xmax = max(d.bbox()[1] for d in domains)
    ymin = min(d.bbox()[2] for d in domains)
    ymax = max(d.bbox()[3] for d in domains)
    return DomainU.rect(xmin, xmax, ymin, ymax)


def alexandrov_verify(v: ScalarField2D, U_list, grad=None, tol=0.03, raster=None, n_probes=16):
    """Image area, degree integral and ``mu_f(U)`` on each domain.

    Preconditions: ``Det D^2 v >= 0`` near the domains and convexity of
    ``v`` or ``-v`` (the sign flip is recorded). Raises
    :class:`~weakcurv.degree.PreconditionError` when either fails.
    """
    U_list = [_as_domain(U) for U in U_list]
    grid = v.grid
    p, q = _grad_pair(v, grad)
    region = _region_for(grid, U_list)
    rep = nonnegativity_check(v, region, n_probes, grad=(p, q))
    if not rep.verdict:
        raise PreconditionError(f"nonnegativity check failed (min pairing {rep.min_pairing:.3e})")
    hull = _hull_domain(U_list)
    flipped = False
    cv = convexity_check(v, hull)
    if not cv["convex"]:
        cneg = convexity_check(-v, hull)
        if not cneg["convex"]:
            raise PreconditionError(
                f"neither v nor -v is convex (worst violation {cv['worst_violation']:.3e})")
        v, p, q, cv, flipped = -v, -p, -q, cneg, True
    rows = []
    ok = True
    for U in U_list:
        img = gradient_image_area(v, U, raster=raster, grad=(p, q))
        dm = degree_mass_identity(v, U, grad=(p, q), check=False)
        vals = {"image_area": img.area, "deg_integral": dm["deg_integral"], "mu_f": dm["mu_f_U"]}
        names = list(vals)
        gaps = {}
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = vals[names[i]], vals[names[j]]
                s = max(abs(a), abs(b))
                gaps[f"{names[i]}~{names[j]}"] = abs(a - b) / s if s > 0 else 0.0
        passed = all(g <= tol for g in gaps.values())
        ok &= passed
        rows.append({"U": U.to_dict(), **vals, "rel_gaps": gaps, "pass": passed,
                     "raster": img.raster_resolution})
    return {"verdict": bool(ok), "sign_flipped": flipped, "tol": tol,
            "convexity": cv, "nonnegativity": rep.to_dict(), "domains": rows}


def injectivity_check(v: ScalarField2D, U: DomainU, raster=None, grad=None, seg_samples=16,
                      check=True):
    """Gradient collisions between distant nodes of ``U``.

    Node gradients are hashed into buckets of size ``raster`` (default
    ``1e-6`` of the image extent). A colliding pair further apart than
    ``4h`` is degenerate when the gradient is constant along the segment
    joining them (within ``1e-9`` of the gradient scale); otherwise it is a
    violation. Only pairs formed with each bucket's first node are examined.
    """
    g = v.grid
    if check:
        cv = convexity_check(v, U)
        if not cv["convex"]:
            raise PreconditionError("v is not convex on U")
    p, q = _grad_pair(v, grad)
    X, Y = g.mesh()
    m = U.contains(X, Y)
    xs, ys, ps, qs = X[m], Y[m], p[m], q[m]
    scale = max(1.0, float(np.abs(ps).max()), float(np.abs(qs).max()))
    ext = max(float(np.ptp(ps)), float(np.ptp(qs)))
    if raster is None:
        raster = 1e-6 * ext if ext > 0 else 1.0
    keys = np.stack([np.floor(ps / raster), np.floor(qs / raster)], axis=1).astype(np.int64)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    n_coll = n_deg = 0
    worst = 0.0
    tol = 1e-9 * scale
    t = np.linspace(0.0, 1.0, seg_samples)
    for b in np.nonzero(counts > 1)[0]:
        idx = order[starts[b]:starts[b] + counts[b]]
        i0 = idx[0]
        for k in idx[1:]:
            d = math.hypot(xs[k] - xs[i0], ys[k] - ys[i0])
            if d <= 4 * g.h:
                continue
            n_coll += 1
            sx = xs[i0] + t * (xs[k] - xs[i0])
            sy = ys[i0] + t * (ys[k] - ys[i0])
            dev = max(float(np.abs(bilinear(p, g, sx, sy) - ps[i0]).max()),
                      float(np.abs(bilinear(q, g, sx, sy) - qs[i0]).max()))
            if dev <= tol:
                n_deg += 1
            else:
                worst = max(worst, d)
    return {"max_collision_distance": worst, "n_collisions": n_coll, "n_degenerate": n_deg,
            "raster": float(raster)}
