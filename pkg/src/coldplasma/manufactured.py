"""Smooth compactly supported test functions with analytic derivatives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Bump:
    """amp * exp(1 - 1/(1 - q)), q = |p - center|**2 / radius**2, zero for q >= 1."""
    center: tuple
    radius: float
    amp: float = 1.0

    def _q(self, x, y):
        dx = (np.asarray(x, float) - self.center[0]) / self.radius
        dy = (np.asarray(y, float) - self.center[1]) / self.radius
        return dx, dy, dx * dx + dy * dy

    def __call__(self, x, y):
        _, _, q = self._q(x, y)
        inside = q < 1
        s = np.where(inside, 1.0 - q, 1.0)
        return np.where(inside, self.amp * np.exp(1.0 - 1.0 / s), 0.0)

    def derivatives(self, x, y):
        """(u, u_x, u_y, u_xx, u_yy)."""
        dx, dy, q = self._q(x, y)
        inside = q < 1
        s = np.where(inside, 1.0 - q, 1.0)
        u = np.where(inside, self.amp * np.exp(1.0 - 1.0 / s), 0.0)
        r = self.radius
        # g(q) = exp(1 - 1/(1 - q)); g' = -g/s^2, g'' = g (1 - 2 s)/s^4
        g1 = -u / s ** 2
        g2 = u * (1.0 - 2.0 * s) / s ** 4
        qx, qy = 2 * dx / r, 2 * dy / r
        qxx = qyy = 2.0 / r ** 2
        ux = g1 * qx
        uy = g1 * qy
        uxx = g2 * qx * qx + g1 * qxx
        uyy = g2 * qy * qy + g1 * qyy
        return u, ux, uy, uxx, uyy

    def forcing(self, tc):
        """f = (K u_x)_x + u_yy = K u_xx + K_x u_x + u_yy."""
        def f(x, y):
            u, ux, uy, uxx, uyy = self.derivatives(x, y)
            Kx, _ = tc.grad(x, y)
            return tc.K(x, y) * uxx + Kx * ux + uyy
        return f


@dataclass(frozen=True)
class BumpSum:
    bumps: tuple

    def __call__(self, x, y):
        return sum(b(x, y) for b in self.bumps)

    def derivatives(self, x, y):
        parts = [b.derivatives(x, y) for b in self.bumps]
        return tuple(sum(p[k] for p in parts) for k in range(5))


def zero_function(x, y):
    return 0.0 * np.asarray(x, float) * np.asarray(y, float)


def random_bumps(dom, seed, n_bumps=3, radius=(0.15, 0.3), margin=0.05, max_tries=10000):
    """Seeded sum of bumps whose supports lie inside the domain."""
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = dom.bbox
    out = []
    for _ in range(max_tries):
        if len(out) == n_bumps:
            break
        r = rng.uniform(*radius) * min(1.0, dom.scale)
        c = rng.uniform([xmin, ymin], [xmax, ymax])
        if dom.signed_distance(c[None, :])[0] <= -(r + margin * dom.scale):
            out.append(Bump((float(c[0]), float(c[1])), float(r), float(rng.uniform(0.5, 1.5))))
    if len(out) < n_bumps:
        raise RuntimeError("could not place bumps inside the domain")
    return BumpSum(tuple(out))
