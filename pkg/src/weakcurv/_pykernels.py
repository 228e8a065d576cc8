"""Pure-numpy reference versions of the grid kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same results up to floating-point summation order.
"""
import numpy as np


def correlate_valid(f, k, threads=1):
    """Valid-mode correlation ``out[i, j] = sum_ab k[a, b] f[i + a, j + b]``.

    Accumulates one shifted slice per nonzero tap, which keeps the inner
    work vectorized over the whole output block.
    """
    f = np.asarray(f, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    ky, kx = k.shape
    oy, ox = f.shape[0] - ky + 1, f.shape[1] - kx + 1
    if oy <= 0 or ox <= 0:
        raise ValueError("kernel larger than field")
    out = np.zeros((oy, ox))
    for a, b in np.argwhere(k != 0.0):
        out += k[a, b] * f[a:a + oy, b:b + ox]
    return out


def winding_sums(px, py, cx, cy, threads=1, chunk=2048):
    """Angle sums of a closed polyline around many points.

    Returns ``(total_angle, min_distance, max_abs_increment)`` per point;
    the polyline is closed implicitly (last vertex joins the first).
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    ax0 = np.asarray(cx, dtype=np.float64)
    ay0 = np.asarray(cy, dtype=np.float64)
    bx0 = np.roll(ax0, -1)
    by0 = np.roll(ay0, -1)
    n = px.size
    total = np.empty(n)
    dmin = np.empty(n)
    dmax = np.empty(n)
    for s in range(0, n, chunk):
        qx = px[s:s + chunk, None]
        qy = py[s:s + chunk, None]
        ax = ax0[None, :] - qx
        ay = ay0[None, :] - qy
        bx = bx0[None, :] - qx
        by = by0[None, :] - qy
        ang = np.arctan2(ax * by - ay * bx, ax * bx + ay * by)
        total[s:s + chunk] = ang.sum(axis=1)
        dmax[s:s + chunk] = np.abs(ang).max(axis=1)
        ex = bx - ax
        ey = by - ay
        ll = ex * ex + ey * ey
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(ll > 0, -(ax * ex + ay * ey) / np.where(ll > 0, ll, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        dx = ax + t * ex
        dy = ay + t * ey
        dmin[s:s + chunk] = np.sqrt((dx * dx + dy * dy).min(axis=1))
    return total, dmin, dmax


def raster_triangles(tri, x0, y0, pix, mx, my):
    """Mark pixels of an ``my x mx`` raster whose centers lie in any triangle.

    ``tri`` rows are ``(ax, ay, bx, by, cx, cy)``. Pixel ``(i, j)`` has its
    center at ``(x0 + (j + 0.5) pix, y0 + (i + 0.5) pix)``; edges count as
    inside and zero-area triangles cover nothing.
    """
    tri = np.asarray(tri, dtype=np.float64)
    mask = np.zeros((my, mx), dtype=np.uint8)
    if tri.size == 0:
        return mask
    ax, ay, bx, by, qx, qy = tri.T
    area = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
    keep = area != 0.0
    ax, ay, bx, by, qx, qy, area = (c[keep] for c in (ax, ay, bx, by, qx, qy, area))
    sgn = np.sign(area)
    xmin = np.minimum(ax, np.minimum(bx, qx))
    xmax = np.maximum(ax, np.maximum(bx, qx))
    ymin = np.minimum(ay, np.minimum(by, qy))
    ymax = np.maximum(ay, np.maximum(by, qy))
    j0 = np.ceil((xmin - x0) / pix - 0.5).astype(np.int64)
    j1 = np.floor((xmax - x0) / pix - 0.5).astype(np.int64)
    i0 = np.ceil((ymin - y0) / pix - 0.5).astype(np.int64)
    i1 = np.floor((ymax - y0) / pix - 0.5).astype(np.int64)
    j0c = np.maximum(j0, 0)
    i0c = np.maximum(i0, 0)
    j1c = np.minimum(j1, mx - 1)
    i1c = np.minimum(i1, my - 1)
    span_j = int(max((j1c - j0c).max(initial=-1) + 1, 0))
    span_i = int(max((i1c - i0c).max(initial=-1) + 1, 0))
    for di in range(span_i):
        i = i0c + di
        row_ok = i <= i1c
        py = y0 + (i + 0.5) * pix
        for dj in range(span_j):
            j = j0c + dj
            ok = row_ok & (j <= j1c)
            if not ok.any():
                continue
            px = x0 + (j + 0.5) * pix
            e0 = sgn * ((bx - ax) * (py - ay) - (by - ay) * (px - ax))
            e1 = sgn * ((qx - bx) * (py - by) - (qy - by) * (px - bx))
            e2 = sgn * ((ax - qx) * (py - qy) - (ay - qy) * (px - qx))
            hit = ok & (e0 >= 0) & (e1 >= 0) & (e2 >= 0)
            mask[i[hit], j[hit]] = 1
    return mask
