"""Hot loops with a numba path and a pure-numpy path.

The numba path is used unless ``MTP_NUMBA=0`` is set (or numba is missing).
Both paths can be called explicitly through ``backend=`` for cross-checks.
"""
from dataclasses import dataclass

import numpy as np

from .. import _env
from . import numpy_impl

if _env.HAVE_NUMBA:
    import numba

    from . import numba_impl
    if _env.PARALLEL:
        numba.set_num_threads(min(_env.THREADS, numba.config.NUMBA_NUM_THREADS))
else:  # pragma: no cover
    numba_impl = None

DEFAULT_BACKEND = "numba" if _env.USE_NUMBA else "numpy"


def _resolve(backend):
    b = backend or DEFAULT_BACKEND
    if b == "numba" and numba_impl is None:  # pragma: no cover
        b = "numpy"
    if b not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return b


@dataclass(frozen=True)
class PolygonIndex:
    """Closed polygon with edges bucketed into horizontal bands.

    ``vx``/``vy`` repeat the first vertex at the end. An edge belongs to every
    band its y-range (widened by ``tol``) touches, so the crossing test and the
    near-boundary test for a point only need the edges of the point's band.
    """
    vx: np.ndarray
    vy: np.ndarray
    y0: float
    hb: float
    nb: int
    ptr: np.ndarray
    edges: np.ndarray
    pad: np.ndarray
    tol: float

    @classmethod
    def build(cls, vertices, tol=1e-10, n_bands=None):
        v = np.asarray(vertices, dtype=float)
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        vx = np.ascontiguousarray(np.append(v[:, 0], v[0, 0]))
        vy = np.ascontiguousarray(np.append(v[:, 1], v[0, 1]))
        ne = v.shape[0]
        ymin, ymax = vy.min(), vy.max()
        nb = int(n_bands or max(1, ne // 4))
        hb = max((ymax - ymin) / nb, 1e-300)
        lo = np.minimum(vy[:-1], vy[1:]) - tol
        hi = np.maximum(vy[:-1], vy[1:]) + tol
        k0 = np.clip(np.floor((lo - ymin) / hb).astype(np.int64), 0, nb - 1)
        k1 = np.clip(np.floor((hi - ymin) / hb).astype(np.int64), 0, nb - 1)
        counts = np.bincount(np.concatenate([np.arange(a, b + 1) for a, b in zip(k0, k1)]),
                             minlength=nb)
        ptr = np.zeros(nb + 1, dtype=np.int64)
        ptr[1:] = np.cumsum(counts)
        edges = np.empty(ptr[-1], dtype=np.int64)
        fill = ptr[:-1].copy()
        for e in range(ne):
            for k in range(k0[e], k1[e] + 1):
                edges[fill[k]] = e
                fill[k] += 1
        pad = -np.ones((nb, max(1, counts.max())), dtype=np.int64)
        for k in range(nb):
            pad[k, :counts[k]] = edges[ptr[k]:ptr[k + 1]]
        return cls(vx, vy, float(ymin), float(hb), nb, ptr, edges, pad, float(tol))


def contains(index, px, py, backend=None):
    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    if _resolve(backend) == "numba":
        return numba_impl.contains(px, py, index.vx, index.vy, index.y0, index.hb,
                                   index.nb, index.ptr, index.edges, index.tol)
    return numpy_impl.contains(px, py, index.vx, index.vy, index.y0, index.hb,
                               index.nb, index.pad, index.tol)


def min_edge_distance(index, px, py, backend=None):
    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    impl = numba_impl if _resolve(backend) == "numba" else numpy_impl
    return impl.min_edge_distance(px, py, index.vx, index.vy)


def trace_batch(index, px, py, m, mu, a, source, ds_max, s_max, exit_tol=1e-10,
                backend=None):
    """Trace the flow of (m x, mu y) from each point to the boundary.

    ``source`` is ``(x0, y0, h, values)`` describing a node-based grid field
    sampled bilinearly (zero outside the grid). Returns
    ``(integral, exit_s, qx, qy, status)`` with ``integral`` the integral of
    ``exp(a s) u`` along the path and status 0 = exited, 1 = time cap,
    2 = start point outside.
    """
    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    gx0, gy0, gh, vals = source
    vals = np.ascontiguousarray(vals, dtype=float)
    args = (float(m), float(mu), float(a), float(gx0), float(gy0), float(gh), vals)
    if _resolve(backend) == "numba":
        return numba_impl.trace_batch(px, py, *args, index.vx, index.vy, index.y0,
                                      index.hb, index.nb, index.ptr, index.edges,
                                      index.tol, float(ds_max), float(s_max),
                                      float(exit_tol))
    return numpy_impl.trace_batch(px, py, *args, index.vx, index.vy, index.y0,
                                  index.hb, index.nb, index.pad, index.tol,
                                  float(ds_max), float(s_max), float(exit_tol))
