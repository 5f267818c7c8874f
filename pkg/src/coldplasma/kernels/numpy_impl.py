"""Vectorized numpy kernels used when numba is disabled or missing."""
import numpy as np


def _seg_dist2(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, ((px - ax) * dx + (py - ay) * dy) / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return qx * qx + qy * qy


def contains(px, py, vx, vy, y0, hb, nb, pad, tol):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    k = np.clip(np.floor((py - y0) / hb).astype(np.int64), 0, nb - 1)
    e = pad[k]                      # (n, w), -1 padded
    valid = e >= 0
    ee = np.where(valid, e, 0)
    ax, ay = vx[ee], vy[ee]
    bx, by = vx[ee + 1], vy[ee + 1]
    X = px[:, None]
    Y = py[:, None]
    near = (_seg_dist2(X, Y, ax, ay, bx, by) <= tol * tol) & valid
    cr = (bx - ax) * (Y - ay) - (X - ax) * (by - ay)
    up = (ay <= Y) & (by > Y) & (cr > 0) & valid
    down = (ay > Y) & (by <= Y) & (cr < 0) & valid
    wn = up.sum(axis=1) - down.sum(axis=1)
    return (wn != 0) | near.any(axis=1)


def min_edge_distance(px, py, vx, vy, chunk=2048):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    out = np.empty(px.shape[0])
    ax, ay, bx, by = vx[:-1], vy[:-1], vx[1:], vy[1:]
    for s in range(0, px.shape[0], chunk):
        X = px[s:s + chunk, None]
        Y = py[s:s + chunk, None]
        out[s:s + chunk] = np.sqrt(_seg_dist2(X, Y, ax, ay, bx, by).min(axis=1))
    return out


def _bilinear(x, y, gx0, gy0, gh, vals):
    fx = (x - gx0) / gh
    fy = (y - gy0) / gh
    i = np.floor(fx).astype(np.int64)
    j = np.floor(fy).astype(np.int64)
    ok = (i >= 0) & (j >= 0) & (i < vals.shape[0] - 1) & (j < vals.shape[1] - 1)
    i = np.where(ok, i, 0)
    j = np.where(ok, j, 0)
    tx = fx - i
    ty = fy - j
    v = ((1 - tx) * (1 - ty) * vals[i, j] + tx * (1 - ty) * vals[i + 1, j]
         + (1 - tx) * ty * vals[i, j + 1] + tx * ty * vals[i + 1, j + 1])
    return np.where(ok, v, 0.0)


def _rk4(x, y, s, h, m, mu, a, gx0, gy0, gh, vals):
    def f(t, px, py):
        return m * px, mu * py, np.exp(a * t) * _bilinear(px, py, gx0, gy0, gh, vals)

    k1 = f(s, x, y)
    k2 = f(s + h / 2, x + h / 2 * k1[0], y + h / 2 * k1[1])
    k3 = f(s + h / 2, x + h / 2 * k2[0], y + h / 2 * k2[1])
    k4 = f(s + h, x + h * k3[0], y + h * k3[1])
    w = h / 6
    return (x + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def trace_batch(px, py, m, mu, a, gx0, gy0, gh, vals,
                vx, vy, y0, hb, nb, pad, tol,
                ds_max, s_max, exit_tol):
    """Lockstep version of the per-node tracer."""
    x = np.array(px, dtype=float)
    y = np.array(py, dtype=float)
    n = x.shape[0]
    integral = np.zeros(n)
    s = np.zeros(n)
    status = np.zeros(n, dtype=np.int64)
    inside = contains(x, y, vx, vy, y0, hb, nb, pad, tol)
    status[~inside] = 2
    active = inside.copy()
    while active.any():
        idx = np.nonzero(active)[0]
        xa, ya, sa = x[idx], y[idx], s[idx]
        speed = np.hypot(m * xa, mu * ya)
        with np.errstate(divide="ignore"):
            h = np.minimum(ds_max, np.where(speed > 0, 0.1 / np.where(speed > 0, speed, 1.0), ds_max))
        h = np.minimum(h, s_max - sa)
        capped = h <= 0
        if capped.any():
            status[idx[capped]] = 1
            active[idx[capped]] = False
            keep = ~capped
            idx, xa, ya, sa, h = idx[keep], xa[keep], ya[keep], sa[keep], h[keep]
            if idx.size == 0:
                continue
        nx_, ny_, di = _rk4(xa, ya, sa, h, m, mu, a, gx0, gy0, gh, vals)
        ok = contains(nx_, ny_, vx, vy, y0, hb, nb, pad, tol)
        acc = idx[ok]
        x[acc], y[acc] = nx_[ok], ny_[ok]
        integral[acc] += di[ok]
        s[acc] += h[ok]
        out = ~ok
        if out.any():
            bi = idx[out]
            bx, by, bs = xa[out], ya[out], sa[out]
            lo = np.zeros(bi.size)
            hi = h[out].copy()
            while True:
                todo = hi - lo > exit_tol
                if not todo.any():
                    break
                mid = 0.5 * (lo + hi)
                tx, ty, _ = _rk4(bx, by, bs, mid, m, mu, a, gx0, gy0, gh, vals)
                inn = contains(tx, ty, vx, vy, y0, hb, nb, pad, tol)
                lo = np.where(todo & inn, mid, lo)
                hi = np.where(todo & ~inn, mid, hi)
            fx, fy, fi = _rk4(bx, by, bs, lo, m, mu, a, gx0, gy0, gh, vals)
            x[bi], y[bi] = fx, fy
            integral[bi] += fi
            s[bi] += lo
            active[bi] = False
    return integral, s, x.copy(), y.copy(), status
