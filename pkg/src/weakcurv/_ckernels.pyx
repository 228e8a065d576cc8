# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels.

Same contracts as :mod:`weakcurv._pykernels`; see that module for the
reference semantics.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport atan2, sqrt, floor, ceil, fabs


def correlate_valid(const double[:, ::1] f, const double[:, ::1] k, int threads=1):
    cdef Py_ssize_t ny = f.shape[0], nx = f.shape[1]
    cdef Py_ssize_t ky = k.shape[0], kx = k.shape[1]
    cdef Py_ssize_t oy = ny - ky + 1, ox = nx - kx + 1
    if oy <= 0 or ox <= 0:
        raise ValueError("kernel larger than field")
    out = np.zeros((oy, ox), dtype=np.float64)
    cdef double[:, ::1] o = out

    # compress the kernel to its nonzero taps
    taps = np.argwhere(np.asarray(k) != 0.0).astype(np.intp)
    cdef Py_ssize_t[:, ::1] tp = np.ascontiguousarray(taps)
    cdef Py_ssize_t nt = tp.shape[0]
    wts = np.ascontiguousarray(np.asarray(k)[taps[:, 0], taps[:, 1]])
    cdef const double[::1] w = wts

    cdef Py_ssize_t i, j, t, a, b
    cdef double c
    for i in prange(oy, nogil=True, num_threads=max(threads, 1), schedule="static"):
        for t in range(nt):
            a = tp[t, 0]
            b = tp[t, 1]
            c = w[t]
            for j in range(ox):
                o[i, j] += c * f[i + a, j + b]
    return out


def winding_sums(const double[::1] px, const double[::1] py,
                 const double[::1] cx, const double[::1] cy, int threads=1):
    cdef Py_ssize_t n = px.shape[0], m = cx.shape[0]
    total = np.zeros(n, dtype=np.float64)
    dmin = np.empty(n, dtype=np.float64)
    dmax = np.zeros(n, dtype=np.float64)
    cdef double[::1] tot = total, dm = dmin, am = dmax
    cdef Py_ssize_t i, s, s1
    cdef double ax, ay, bx, by, cr, dt, ang, ex, ey, ll, t, qx, qy, d2, best, big, s_ang
    for i in prange(n, nogil=True, num_threads=max(threads, 1), schedule="static"):
        s_ang = 0.0
        best = 1e300
        big = 0.0
        for s in range(m):
            s1 = s + 1
            if s1 == m:
                s1 = 0
            ax = cx[s] - px[i]
            ay = cy[s] - py[i]
            bx = cx[s1] - px[i]
            by = cy[s1] - py[i]
            cr = ax * by - ay * bx
            dt = ax * bx + ay * by
            ang = atan2(cr, dt)
            s_ang = s_ang + ang
            if fabs(ang) > big:
                big = fabs(ang)
            ex = bx - ax
            ey = by - ay
            ll = ex * ex + ey * ey
            if ll > 0.0:
                t = -(ax * ex + ay * ey) / ll
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            else:
                t = 0.0
            qx = ax + t * ex
            qy = ay + t * ey
            d2 = qx * qx + qy * qy
            if d2 < best:
                best = d2
        tot[i] = s_ang
        dm[i] = sqrt(best)
        am[i] = big
    return total, dmin, dmax


def raster_triangles(const double[:, ::1] tri, double x0, double y0, double pix,
                     Py_ssize_t mx, Py_ssize_t my):
    mask = np.zeros((my, mx), dtype=np.uint8)
    cdef unsigned char[:, ::1] mk = mask
    cdef Py_ssize_t n = tri.shape[0], t, i, j, i0, i1, j0, j1
    cdef double ax, ay, bx, by, qx, qy, area, xmin, xmax, ymin, ymax
    cdef double px, py, e0, e1, e2, sgn
    for t in range(n):
        ax = tri[t, 0]; ay = tri[t, 1]
        bx = tri[t, 2]; by = tri[t, 3]
        qx = tri[t, 4]; qy = tri[t, 5]
        area = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        if area == 0.0:
            continue
        sgn = 1.0 if area > 0.0 else -1.0
        xmin = min(ax, min(bx, qx)); xmax = max(ax, max(bx, qx))
        ymin = min(ay, min(by, qy)); ymax = max(ay, max(by, qy))
        # pixel (i, j) has center (x0 + (j + 0.5) pix, y0 + (i + 0.5) pix)
        j0 = <Py_ssize_t> ceil((xmin - x0) / pix - 0.5)
        j1 = <Py_ssize_t> floor((xmax - x0) / pix - 0.5)
        i0 = <Py_ssize_t> ceil((ymin - y0) / pix - 0.5)
        i1 = <Py_ssize_t> floor((ymax - y0) / pix - 0.5)
        if j0 < 0: j0 = 0
        if i0 < 0: i0 = 0
        if j1 > mx - 1: j1 = mx - 1
        if i1 > my - 1: i1 = my - 1
        for i in range(i0, i1 + 1):
            py = y0 + (i + 0.5) * pix
            for j in range(j0, j1 + 1):
                if mk[i, j]:
                    continue
                px = x0 + (j + 0.5) * pix
                e0 = sgn * ((bx - ax) * (py - ay) - (by - ay) * (px - ax))
                e1 = sgn * ((qx - bx) * (py - by) - (qy - by) * (px - bx))
                e2 = sgn * ((ax - qx) * (py - qy) - (ay - qy) * (px - qx))
                if e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0:
                    mk[i, j] = 1
    return mask
