"""The auxiliary transport problem H v = a v + b v_x + c v_y = u.

With b = m x, c = mu y the flow of (b, c) leaves a domain that is
star-shaped for the contracting flow, so v is obtained by integrating along
the forward trajectory from p to its exit point q at time S:

    v(p) = exp(a S) g(q) - int_0^S exp(a s) u(Phi_s p) ds

where g is the boundary datum (zero unless given).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .coefficients import parabolic
from .errors import GeometryError, HypothesisError
from .geometry import DilationExponents, check_star_shaped
from .grids import Field, make_grid


@dataclass(frozen=True)
class TransportProblem:
    mf: object
    source: object
    domain: object
    boundary_data: Callable | None = None
    check_domain: bool = True

    def __post_init__(self):
        if self.mf.kind != "dilation":
            raise HypothesisError("transport needs a dilation multiplier b = m x, c = mu y",
                                  condition="dilation")
        if not self.mf.a < 0:
            raise HypothesisError("transport needs a < 0", condition="a<0")
        if self.check_domain:
            rep = check_star_shaped(self.domain, DilationExponents(self.mf.m, self.mf.mu))
            if not rep.ok:
                raise GeometryError(f"domain is not star-shaped for the flow: {rep.escape}")


def characteristic_constant(m, mu, x, y):
    """x**mu / y**m, constant along trajectories of (m x, mu y)."""
    return np.asarray(x, float) ** mu / np.asarray(y, float) ** m


@dataclass
class TrajectoryPath:
    points: np.ndarray
    s: np.ndarray
    status: str

    @property
    def exit_point(self):
        return self.points[-1] if self.status == "exited" else None

    @property
    def exit_param(self):
        return float(self.s[-1]) if self.status == "exited" else None


def _rk4_step(m, mu, p, h):
    def f(q):
        return np.array([m * q[0], mu * q[1]])
    k1 = f(p)
    k2 = f(p + 0.5 * h * k1)
    k3 = f(p + 0.5 * h * k2)
    k4 = f(p + h * k3)
    return p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def trace_trajectory(mf, p0, direction="forward", domain=None, s_max=50.0, ds_max=2e-3,
                     exit_tol=1e-10, origin_tol=1e-12):
    """RK4 trajectory of +(b, c) (forward) or -(b, c) (backward).

    Step h = min(ds_max, 0.1/|(b, c)|). Forward paths with a domain stop at
    the boundary, located by bisection of the last step to ``exit_tol``.
    """
    m, mu = float(mf.m), float(mf.mu)
    sgn = 1.0 if direction == "forward" else -1.0
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    p = np.asarray(p0, dtype=float).copy()
    if m * p[0] == 0.0 and mu * p[1] == 0.0:
        return TrajectoryPath(p[None, :], np.zeros(1), "stationary")
    inside = (lambda q: bool(domain.contains(q[None, :])[0])) if domain is not None else None
    if inside is not None and not inside(p):
        raise GeometryError("trajectory start point lies outside the domain")
    pts, ss = [p.copy()], [0.0]
    s = 0.0
    while True:
        speed = math.hypot(m * p[0], mu * p[1])
        if direction == "backward" and math.hypot(p[0], p[1]) < origin_tol:
            return TrajectoryPath(np.array(pts), np.array(ss), "origin")
        h = min(ds_max, 0.1 / speed if speed > 0 else ds_max, s_max - s)
        if h <= 0:
            return TrajectoryPath(np.array(pts), np.array(ss), "time-cap")
        q = _rk4_step(sgn * m, sgn * mu, p, h)
        if inside is not None and direction == "forward" and not inside(q):
            lo, hi = 0.0, h
            while hi - lo > exit_tol:
                mid = 0.5 * (lo + hi)
                if inside(_rk4_step(m, mu, p, mid)):
                    lo = mid
                else:
                    hi = mid
            p = _rk4_step(m, mu, p, lo)
            pts.append(p.copy())
            ss.append(s + lo)
            return TrajectoryPath(np.array(pts), np.array(ss), "exited")
        p = q
        s += h
        pts.append(p.copy())
        ss.append(s)


@dataclass
class TransportSolution:
    values: np.ndarray
    exit_points: np.ndarray
    exit_params: np.ndarray
    status: np.ndarray
    field: Field | None = None


def _source_grid(tp, grid):
    src = tp.source
    if isinstance(src, Field):
        return src.grid, np.where(src.mask, src.values, 0.0)
    if grid is None:
        grid = make_grid(tp.domain, 1.0 / 64)
    if src is None:
        return grid, np.zeros((grid.nx, grid.ny))
    return grid, grid.sample(src)


def solve_transport(tp, grid=None, points=None, ds_max=None, s_max=60.0, backend=None):
    """Values of v at the masked grid nodes (or at ``points``)."""
    sgrid, svals = _source_grid(tp, grid)
    if ds_max is None:
        ds_max = min(sgrid.h, 5e-3)
    if points is None:
        g = grid if grid is not None else sgrid
        pts = g.points()
    else:
        g = None
        pts = np.atleast_2d(np.asarray(points, dtype=float))
    I, S, qx, qy, status = kernels.trace_batch(tp.domain.index, pts[:, 0], pts[:, 1],
                                               tp.mf.m, tp.mf.mu, tp.mf.a,
                                               sgrid.source(svals), ds_max, s_max,
                                               backend=backend)
    v = -I
    if tp.boundary_data is not None:
        ok = status == 0
        gq = np.zeros_like(v)
        gq[ok] = tp.boundary_data(qx[ok], qy[ok])
        v = v + np.exp(tp.mf.a * S) * gq
    v = np.where(status == 2, 0.0, v)
    sol = TransportSolution(v, np.stack([qx, qy], axis=1), S, status)
    if g is not None:
        vals = np.zeros((g.nx, g.ny))
        vals[g.inside] = v
        sol.field = Field(g, vals, g.inside.copy())
    return sol


def homogeneous_closed_form(phi, m, mu, a, x, y):
    """v = phi(x**mu / y**m) * y**(|a|/mu), solving m x v_x + mu y v_y = |a| v."""
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise ValueError("closed form requires y != 0")
    x = np.asarray(x, dtype=float)
    return phi(x ** mu / y ** m) * y ** (abs(a) / mu)


def apply_H(field, mf):
    """Central-difference a v + b v_x + c v_y at nodes whose four neighbours
    carry values; returns (values, mask)."""
    g, V = field.grid, np.where(field.mask, field.values, 0.0)
    h = g.h
    X, Y = g.mesh()
    out = np.zeros_like(V)
    M = field.mask
    ok = np.zeros_like(M)
    ok[1:-1, 1:-1] = (M[1:-1, 1:-1] & M[2:, 1:-1] & M[:-2, 1:-1] & M[1:-1, 2:]
                      & M[1:-1, :-2])
    vx = np.zeros_like(V)
    vy = np.zeros_like(V)
    vx[1:-1, :] = (V[2:, :] - V[:-2, :]) / (2 * h)
    vy[:, 1:-1] = (V[:, 2:] - V[:, :-2]) / (2 * h)
    mv = mf.evaluate(X, Y)
    out = mv.a * V + mv.b * vx + mv.c * vy
    return np.where(ok, out, 0.0), ok


def transport_residual(tp, sol_field):
    """Discrete L2 ratio |H v - u| / |u| over support nodes of u."""
    Hv, ok = apply_H(sol_field, tp.mf)
    g = sol_field.grid
    u = g.sample(tp.source) if callable(tp.source) else tp.source.values
    umax = np.abs(u).max()
    supp = ok & (np.abs(u) > 1e-12 * umax)
    nu = np.sqrt(np.sum(u[supp] ** 2))
    if nu == 0:
        return 0.0
    return float(np.sqrt(np.sum((Hv[supp] - u[supp]) ** 2)) / nu)


def verify_origin_limit(v, m, mu, curves=(0.25, 0.5, 1.0, 2.0), r0=0.5, n_shells=6,
                        n_per_shell=8, tol=1e-3, min_exponent=0.05):
    """Max |v| on shells r0/2**(k+1) < r <= r0/2**k along y = C x**(mu/m).

    Passes when the shell maxima decrease monotonically and either the last
    one is below ``tol`` or the fitted power law |v| ~ r**p has p >= min_exponent.
    """
    shells = []
    pts_all = []
    for k in range(n_shells):
        r_hi = r0 / 2 ** k
        radii = r_hi * 2.0 ** (-np.linspace(0, 1, n_per_shell, endpoint=False))
        pts = []
        for C in curves:
            for r in radii:
                f = lambda x: math.hypot(x, C * x ** (mu / m)) - r
                x = brentq(f, 1e-300, r, xtol=1e-15 * r)
                pts.append((x, C * x ** (mu / m)))
        pts = np.array(pts)
        pts_all.append(pts)
        shells.append(float(np.max(np.abs(v(pts[:, 0], pts[:, 1])))))
    shells = np.array(shells)
    monotone = bool(np.all(np.diff(shells) <= 1e-12 * max(1.0, shells.max())))
    radii = np.array([r0 / 2 ** k for k in range(n_shells)])
    pos = shells > 0
    p = float(np.polyfit(np.log(radii[pos]), np.log(shells[pos]), 1)[0]) if pos.sum() > 1 \
        else math.inf
    passed = monotone and bool(shells[-1] < tol or p >= min_exponent)
    return {"passed": passed, "monotone": monotone, "decay_exponent": p,
            "shell_max": shells.tolist(), "radii": radii.tolist()}


# ---------------------------------------------------------------------------
# the energy identity

def _gradients(V, h):
    vx = np.zeros_like(V)
    vy = np.zeros_like(V)
    vx[1:-1, :] = (V[2:, :] - V[:-2, :]) / (2 * h)
    vy[:, 1:-1] = (V[:, 2:] - V[:, :-2]) / (2 * h)
    return vx, vy


def energy_identity_terms(v, coeffs, dom, grid, tc=None):
    """Terms of the identity  int v L(Hv) = boundary + int (alpha v_x**2 + gamma v_y**2).

    L w = (K w_x)_x + w_yy uses the conservative five-point stencil and H uses
    b = m x, c = mu y, a = -M from ``coeffs``. Area integrals are node sums
    (midpoint rule on the dual cells); the boundary term
    1/2 int (K v_x**2 + v_y**2)(c dx - b dy) is a midpoint sum over the
    polygonized boundary with bilinearly interpolated gradients.
    """
    tc = tc or parabolic()
    h = grid.h
    X, Y = grid.mesh()
    if callable(v):
        V = grid.sample(v)
    else:
        V = np.where(grid.inside, np.asarray(v, dtype=float), 0.0)
    m, mu, M = coeffs.m, coeffs.mu, coeffs.M_const
    vx, vy = _gradients(V, h)
    HV = -M * V + m * X * vx + mu * Y * vy
    Kxh = tc.K(X[:-1, :] + 0.5 * h, Y[:-1, :])
    flux = Kxh * (HV[1:, :] - HV[:-1, :]) / h
    LHV = np.zeros_like(V)
    LHV[1:-1, :] += (flux[1:, :] - flux[:-1, :]) / h
    LHV[:, 1:-1] += (HV[:, 2:] - 2 * HV[:, 1:-1] + HV[:, :-2]) / h ** 2
    w = grid.inside.astype(float) * h * h
    lhs = float(np.sum(w * V * LHV))
    alpha = coeffs.alpha_e(X, Y, tc)
    interior = float(np.sum(w * (alpha * vx ** 2 + coeffs.gamma_e * vy ** 2)))

    poly = np.vstack([dom.polygon, dom.polygon[:1]])
    mid = 0.5 * (poly[1:] + poly[:-1])
    dxy = np.diff(poly, axis=0)
    gx = grid.interpolate(vx, mid[:, 0], mid[:, 1])
    gy = grid.interpolate(vy, mid[:, 0], mid[:, 1])
    Kb = tc.K(mid[:, 0], mid[:, 1])
    bb, cb = m * mid[:, 0], mu * mid[:, 1]
    integrand = 0.5 * (Kb * gx ** 2 + gy ** 2) * (cb * dxy[:, 0] - bb * dxy[:, 1])
    ds = np.hypot(dxy[:, 0], dxy[:, 1])
    boundary = float(np.sum(integrand))
    defect = abs(lhs - boundary - interior)
    return {"lhs": lhs, "boundary": boundary, "interior": interior, "defect": defect,
            "relative_defect": defect / abs(interior) if interior != 0 else 0.0,
            "min_boundary_integrand": float(np.min(integrand / ds))}


def sonic_boundary_form(m, mu, y, dy, sigma=None, sigma_prime=None):
    """c dx - b dy along the sonic curve x = sigma(y) (default sigma = y**2)."""
    y = np.asarray(y, float)
    sig = y ** 2 if sigma is None else sigma(y)
    dsig = 2 * y if sigma_prime is None else sigma_prime(y)
    return mu * y * dsig * dy - m * sig * dy
