"""Compiled loop kernels. Signatures mirror ``numpy_impl``."""
import math

import numpy as np
from numba import njit, prange

from .._env import PARALLEL


@njit(cache=True, inline="always")
def _seg_dist2(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    t = 0.0
    if den > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return qx * qx + qy * qy


@njit(cache=True)
def _contains_one(px, py, vx, vy, y0, hb, nb, ptr, edges, tol2):
    k = int(math.floor((py - y0) / hb))
    if k < 0:
        k = 0
    elif k > nb - 1:
        k = nb - 1
    wn = 0
    for q in range(ptr[k], ptr[k + 1]):
        e = edges[q]
        ax = vx[e]
        ay = vy[e]
        bx = vx[e + 1]
        by = vy[e + 1]
        if _seg_dist2(px, py, ax, ay, bx, by) <= tol2:
            return True
        cr = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        if ay <= py:
            if by > py and cr > 0.0:
                wn += 1
        elif by <= py and cr < 0.0:
            wn -= 1
    return wn != 0


@njit(cache=True, parallel=PARALLEL)
def contains(px, py, vx, vy, y0, hb, nb, ptr, edges, tol):
    n = px.shape[0]
    out = np.empty(n, dtype=np.bool_)
    tol2 = tol * tol
    for i in prange(n):
        out[i] = _contains_one(px[i], py[i], vx, vy, y0, hb, nb, ptr, edges, tol2)
    return out


@njit(cache=True, parallel=PARALLEL)
def min_edge_distance(px, py, vx, vy):
    n = px.shape[0]
    ne = vx.shape[0] - 1
    out = np.empty(n)
    for i in prange(n):
        best = np.inf
        for e in range(ne):
            d = _seg_dist2(px[i], py[i], vx[e], vy[e], vx[e + 1], vy[e + 1])
            if d < best:
                best = d
        out[i] = math.sqrt(best)
    return out


@njit(cache=True, inline="always")
def _bilinear(x, y, gx0, gy0, gh, vals):
    fx = (x - gx0) / gh
    fy = (y - gy0) / gh
    i = int(math.floor(fx))
    j = int(math.floor(fy))
    if i < 0 or j < 0 or i >= vals.shape[0] - 1 or j >= vals.shape[1] - 1:
        return 0.0
    tx = fx - i
    ty = fy - j
    return ((1.0 - tx) * (1.0 - ty) * vals[i, j] + tx * (1.0 - ty) * vals[i + 1, j]
            + (1.0 - tx) * ty * vals[i, j + 1] + tx * ty * vals[i + 1, j + 1])


@njit(cache=True)
def _rk4(x, y, s, h, m, mu, a, gx0, gy0, gh, vals):
    # state (x, y, I); I' = exp(a s) u(x, y)
    k1x = m * x
    k1y = mu * y
    k1i = math.exp(a * s) * _bilinear(x, y, gx0, gy0, gh, vals)
    x2 = x + 0.5 * h * k1x
    y2 = y + 0.5 * h * k1y
    k2x = m * x2
    k2y = mu * y2
    k2i = math.exp(a * (s + 0.5 * h)) * _bilinear(x2, y2, gx0, gy0, gh, vals)
    x3 = x + 0.5 * h * k2x
    y3 = y + 0.5 * h * k2y
    k3x = m * x3
    k3y = mu * y3
    k3i = math.exp(a * (s + 0.5 * h)) * _bilinear(x3, y3, gx0, gy0, gh, vals)
    x4 = x + h * k3x
    y4 = y + h * k3y
    k4x = m * x4
    k4y = mu * y4
    k4i = math.exp(a * (s + h)) * _bilinear(x4, y4, gx0, gy0, gh, vals)
    w = h / 6.0
    return (x + w * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            y + w * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
            w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i))


@njit(cache=True, parallel=PARALLEL)
def trace_batch(px, py, m, mu, a, gx0, gy0, gh, vals,
                vx, vy, y0, hb, nb, ptr, edges, tol,
                ds_max, s_max, exit_tol):
    n = px.shape[0]
    integral = np.zeros(n)
    exit_s = np.zeros(n)
    qx = np.empty(n)
    qy = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    tol2 = tol * tol
    for i in prange(n):
        x = px[i]
        y = py[i]
        if not _contains_one(x, y, vx, vy, y0, hb, nb, ptr, edges, tol2):
            status[i] = 2
            qx[i] = x
            qy[i] = y
            continue
        s = 0.0
        acc = 0.0
        done = False
        while not done:
            speed = math.sqrt((m * x) ** 2 + (mu * y) ** 2)
            h = ds_max
            if speed > 0.0 and 0.1 / speed < h:
                h = 0.1 / speed
            if s + h > s_max:
                h = s_max - s
            if h <= 0.0:
                status[i] = 1
                break
            nx_, ny_, di = _rk4(x, y, s, h, m, mu, a, gx0, gy0, gh, vals)
            if _contains_one(nx_, ny_, vx, vy, y0, hb, nb, ptr, edges, tol2):
                x = nx_
                y = ny_
                acc += di
                s += h
                continue
            lo = 0.0
            hi = h
            while hi - lo > exit_tol:
                mid = 0.5 * (lo + hi)
                tx, ty, _ = _rk4(x, y, s, mid, m, mu, a, gx0, gy0, gh, vals)
                if _contains_one(tx, ty, vx, vy, y0, hb, nb, ptr, edges, tol2):
                    lo = mid
                else:
                    hi = mid
            if lo > 0.0:
                x, y, di = _rk4(x, y, s, lo, m, mu, a, gx0, gy0, gh, vals)
                acc += di
                s += lo
            done = True
        integral[i] = acc
        exit_s[i] = s
        qx[i] = x
        qy[i] = y
    return integral, exit_s, qx, qy, status
