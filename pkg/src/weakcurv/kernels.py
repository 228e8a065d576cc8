"""Backend selection for the hot grid kernels.

The compiled extension is used when it imports; otherwise the numpy
versions take over. Set ``WEAKCURV_PURE=1`` to force the fallback and
``WEAKCURV_THREADS`` to cap the compiled kernels' thread count.
"""
import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("WEAKCURV_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def threads():
    try:
        n = int(os.environ.get("WEAKCURV_THREADS", "1"))
    except ValueError:
        n = 1
    return max(n, 1)


def backend_module(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def correlate_valid(f, k):
    return _impl.correlate_valid(
        np.ascontiguousarray(f, dtype=np.float64),
        np.ascontiguousarray(k, dtype=np.float64),
        threads(),
    )


def winding_sums(px, py, cx, cy):
    c = [np.ascontiguousarray(a, dtype=np.float64).ravel() for a in (px, py, cx, cy)]
    return _impl.winding_sums(*c, threads())


def raster_triangles(tri, x0, y0, pix, mx, my):
    tri = np.ascontiguousarray(tri, dtype=np.float64).reshape(-1, 6)
    return _impl.raster_triangles(tri, float(x0), float(y0), float(pix), int(mx), int(my))
