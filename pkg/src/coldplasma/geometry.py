"""Oriented domains with classified boundary arcs.

Arcs are parametrized on t in [0, 1] and traversed counterclockwise, so the
outward normal is n = (dy/ds, -dx/ds).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .coefficients import CLASSIFY_TOL, ConditionResult, Report, parabolic
from .errors import GeometryError

ARC_CLASSES = ("elliptic", "elliptic-smoothing", "sonic", "characteristic",
               "hyperbolic-noncharacteristic")
ELLIPTIC_CLASSES = ("elliptic", "elliptic-smoothing")


def _t(t):
    return np.atleast_1d(np.asarray(t, dtype=float))


class ArcBase:
    """Shared behaviour; subclasses define point(t), derivative(t), to_dict()."""

    def tangent(self, t):
        d = self.derivative(t)
        n = np.hypot(d[:, 0], d[:, 1])
        if np.any(n <= 1e-14):
            raise GeometryError(f"zero tangent on arc {self.label or self.kind}")
        return d / n[:, None]

    def normal(self, t):
        u = self.tangent(t)
        return np.stack([u[:, 1], -u[:, 0]], axis=1)

    def start(self):
        return self.point(0.0)[0]

    def end(self):
        return self.point(1.0)[0]

    def length(self, n=64):
        t, w = gauss_nodes(n)
        d = self.derivative(t)
        return float(np.sum(w * np.hypot(d[:, 0], d[:, 1])))

    def sample(self, n):
        return self.point(np.linspace(0.0, 1.0, n + 1)[:-1])


@dataclass(frozen=True)
class SegmentArc(ArcBase):
    p0: tuple
    p1: tuple
    tag: str = "elliptic"
    label: str = ""
    kind = "segment"

    def point(self, t):
        t = _t(t)[:, None]
        return (1 - t) * np.asarray(self.p0, float) + t * np.asarray(self.p1, float)

    def derivative(self, t):
        t = _t(t)
        return np.tile(np.subtract(self.p1, self.p0).astype(float), (t.size, 1))

    def to_dict(self):
        return {"type": "segment", "p0": list(self.p0), "p1": list(self.p1),
                "class": self.tag, "label": self.label}


@dataclass(frozen=True)
class CircleArc(ArcBase):
    center: tuple
    radius: float
    theta0: float
    theta1: float
    tag: str = "elliptic"
    label: str = ""
    kind = "circle"

    def point(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * _t(t)
        return np.stack([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)], axis=1)

    def derivative(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * _t(t)
        w = (self.theta1 - self.theta0) * self.radius
        return np.stack([-w * np.sin(th), w * np.cos(th)], axis=1)

    def to_dict(self):
        return {"type": "circle", "center": list(self.center), "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1,
                "class": self.tag, "label": self.label}


def _hermite_basis(t):
    t2 = t * t
    t3 = t2 * t
    h = (2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2)
    dh = (6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t)
    ddh = (12 * t - 6, 6 * t - 4, -12 * t + 6, 6 * t - 2)
    return h, dh, ddh


@dataclass(frozen=True)
class HermiteArc(ArcBase):
    """Cubic Hermite curve matching positions p0, p1 and derivatives m0, m1."""
    p0: tuple
    p1: tuple
    m0: tuple
    m1: tuple
    tag: str = "elliptic-smoothing"
    label: str = ""
    kind = "hermite"

    def _combine(self, coeffs):
        P = np.array([self.p0, self.m0, self.p1, self.m1], dtype=float)
        return sum(c[:, None] * P[i] for i, c in enumerate(coeffs))

    def point(self, t):
        return self._combine(_hermite_basis(_t(t))[0])

    def derivative(self, t):
        return self._combine(_hermite_basis(_t(t))[1])

    def second_derivative(self, t):
        return self._combine(_hermite_basis(_t(t))[2])

    def to_dict(self):
        return {"type": "hermite", "p0": list(self.p0), "p1": list(self.p1),
                "m0": list(self.m0), "m1": list(self.m1),
                "class": self.tag, "label": self.label}


@dataclass(frozen=True)
class CharacteristicArc(ArcBase):
    """Closed-form characteristic of K = x: points (-r**2, s*2(r - 2)).

    s = +1 gives the lower curve y = 2(sqrt(-x) - 2), s = -1 the upper one.
    r runs linearly from r0 to r1.
    """
    branch: int
    r0: float
    r1: float
    tag: str = "characteristic"
    label: str = ""
    kind = "characteristic-sqrt"

    def point(self, t):
        r = self.r0 + (self.r1 - self.r0) * _t(t)
        return np.stack([-r * r, self.branch * 2.0 * (r - 2.0)], axis=1)

    def derivative(self, t):
        dr = self.r1 - self.r0
        r = self.r0 + dr * _t(t)
        return np.stack([-2.0 * r * dr, np.full_like(r, self.branch * 2.0 * dr)], axis=1)

    def to_dict(self):
        return {"type": "characteristic-sqrt", "branch": self.branch, "r0": self.r0,
                "r1": self.r1, "class": self.tag, "label": self.label}


@dataclass(frozen=True)
class TipArc(ArcBase):
    """Smoothing of the corner where the two characteristics of K = x meet.

    Points (-rho(y)**2, y) with y running from d1 down to -d1; rho is an even
    cubic Hermite in |y|/d1 with rho(0) = sqrt(4 - d0), rho'(0) = 0 and
    value/slope matching the characteristics (rho = 2 - |y|/2) at |y| = d1.
    """
    delta0: float
    delta1: float
    tag: str = "hyperbolic-noncharacteristic"
    label: str = ""
    kind = "tip"

    def _rho(self, y):
        d1 = self.delta1
        r0 = math.sqrt(4.0 - self.delta0)
        r1 = 2.0 - d1 / 2.0
        tau = np.abs(y) / d1
        (h00, _, h01, h11), (d00, _, d01, d11), _ = _hermite_basis(tau)
        rho = h00 * r0 + h01 * r1 + h11 * (-d1 / 2.0)
        drho = (d00 * r0 + d01 * r1 + d11 * (-d1 / 2.0)) / d1 * np.sign(y)
        return rho, drho

    def point(self, t):
        y = self.delta1 * (1.0 - 2.0 * _t(t))
        rho, _ = self._rho(y)
        return np.stack([-rho * rho, y], axis=1)

    def derivative(self, t):
        y = self.delta1 * (1.0 - 2.0 * _t(t))
        rho, drho = self._rho(y)
        dy = -2.0 * self.delta1
        return np.stack([-2.0 * rho * drho * dy, np.full_like(y, dy)], axis=1)

    def slope(self, t):
        """d rho / d y along the arc."""
        return self._rho(self.delta1 * (1.0 - 2.0 * _t(t)))[1]

    def to_dict(self):
        return {"type": "tip", "delta0": self.delta0, "delta1": self.delta1,
                "class": self.tag, "label": self.label}


@dataclass(frozen=True)
class SubArc(ArcBase):
    base: object
    t0: float
    t1: float
    tag: str = "elliptic"
    label: str = ""
    kind = "sub"

    def point(self, t):
        return self.base.point(self.t0 + (self.t1 - self.t0) * _t(t))

    def derivative(self, t):
        return (self.t1 - self.t0) * self.base.derivative(self.t0 + (self.t1 - self.t0) * _t(t))

    def to_dict(self):
        return {"type": "sub", "base": self.base.to_dict(), "t0": self.t0, "t1": self.t1,
                "class": self.tag, "label": self.label}


@dataclass(frozen=True)
class PolylineArc(ArcBase):
    """Piecewise-linear arc parametrized by normalized chord length."""
    points: tuple
    tag: str = "characteristic"
    label: str = ""
    kind = "polyline"

    @cached_property
    def _cum(self):
        p = np.asarray(self.points, dtype=float)
        s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
        return p, s / s[-1]

    def _seg(self, t):
        p, s = self._cum
        k = np.clip(np.searchsorted(s, _t(t), side="right") - 1, 0, len(s) - 2)
        return p, s, k

    def point(self, t):
        p, s, k = self._seg(t)
        w = ((_t(t) - s[k]) / (s[k + 1] - s[k]))[:, None]
        return (1 - w) * p[k] + w * p[k + 1]

    def derivative(self, t):
        p, s, k = self._seg(t)
        return (p[k + 1] - p[k]) / (s[k + 1] - s[k])[:, None]

    def chord_midpoints(self):
        p, _ = self._cum
        mid = 0.5 * (p[1:] + p[:-1])
        d = np.diff(p, axis=0)
        d = d / np.hypot(d[:, 0], d[:, 1])[:, None]
        return mid, np.stack([d[:, 1], -d[:, 0]], axis=1)

    def to_dict(self):
        return {"type": "polyline", "points": np.asarray(self.points, float).tolist(),
                "class": self.tag, "label": self.label}


def arc_from_dict(d):
    kind = d["type"]
    common = {"tag": d.get("class", "elliptic"), "label": d.get("label", "")}
    if kind not in ("segment", "circle", "hermite", "characteristic-sqrt", "tip", "sub",
                    "polyline"):
        raise GeometryError(f"unknown arc type {kind!r}")
    if common["tag"] not in ARC_CLASSES:
        raise GeometryError(f"unknown arc class {common['tag']!r}")
    if kind == "segment":
        return SegmentArc(tuple(d["p0"]), tuple(d["p1"]), **common)
    if kind == "circle":
        return CircleArc(tuple(d["center"]), float(d["radius"]), float(d["theta0"]),
                         float(d["theta1"]), **common)
    if kind == "hermite":
        return HermiteArc(tuple(d["p0"]), tuple(d["p1"]), tuple(d["m0"]), tuple(d["m1"]),
                          **common)
    if kind == "characteristic-sqrt":
        return CharacteristicArc(int(d["branch"]), float(d["r0"]), float(d["r1"]), **common)
    if kind == "tip":
        return TipArc(float(d["delta0"]), float(d["delta1"]), **common)
    if kind == "sub":
        return SubArc(arc_from_dict(d["base"]), float(d["t0"]), float(d["t1"]), **common)
    return PolylineArc(tuple(map(tuple, d["points"])), **common)


def gauss_nodes(n):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def outward_normal(arc, t):
    return arc.normal(t)[0] if np.isscalar(t) else arc.normal(t)


# ---------------------------------------------------------------------------
# domain

@dataclass(frozen=True)
class Domain:
    arcs: tuple
    resolution: int = 4096
    closure_tol: float = 1e-10
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        if not self.arcs:
            raise GeometryError("domain has no arcs")
        for i, arc in enumerate(self.arcs):
            if arc.tag not in ARC_CLASSES:
                raise GeometryError(f"arc {i} has no valid class tag")
            nxt = self.arcs[(i + 1) % len(self.arcs)]
            gap = float(np.hypot(*(arc.end() - nxt.start())))
            if gap > 1e-10:
                raise GeometryError(f"arcs {i} and {(i + 1) % len(self.arcs)} do not join "
                                    f"(gap {gap:.3e})")
        if self.signed_area <= 0:
            raise GeometryError("boundary is not counterclockwise")

    @cached_property
    def _poly(self):
        lengths = np.array([a.length() for a in self.arcs])
        counts = np.maximum(8, np.round(self.resolution * lengths / lengths.sum())).astype(int)
        verts, ids = [], []
        for i, (arc, n) in enumerate(zip(self.arcs, counts)):
            verts.append(arc.sample(n))
            ids.append(np.full(n, i))
        return np.vstack(verts), np.concatenate(ids)

    @property
    def polygon(self):
        """Vertices (N, 2) of the polygonization, without repeating the first."""
        return self._poly[0]

    @property
    def polygon_arc_ids(self):
        return self._poly[1]

    @cached_property
    def index(self):
        return kernels.PolygonIndex.build(self.polygon, tol=self.closure_tol * max(1.0, self.scale))

    @cached_property
    def signed_area(self):
        v = self._poly[0]
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def area(self):
        return self.signed_area

    @cached_property
    def bbox(self):
        v = self.polygon
        return (float(v[:, 0].min()), float(v[:, 0].max()),
                float(v[:, 1].min()), float(v[:, 1].max()))

    @property
    def scale(self):
        b = self.bbox
        return max(b[1] - b[0], b[3] - b[2])

    def contains(self, points, backend=None):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return kernels.contains(self.index, p[:, 0], p[:, 1], backend=backend)

    def signed_distance(self, points, backend=None):
        """Distance to the polygonized boundary, negative inside."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d = kernels.min_edge_distance(self.index, p[:, 0], p[:, 1], backend=backend)
        inside = kernels.contains(self.index, p[:, 0], p[:, 1], backend=backend)
        return np.where(inside, -d, d)

    def sample_interior(self, n, seed=0):
        rng = np.random.default_rng(seed)
        xmin, xmax, ymin, ymax = self.bbox
        out = []
        got = 0
        while got < n:
            p = rng.uniform([xmin, ymin], [xmax, ymax], size=(2 * n, 2))
            p = p[self.contains(p)]
            out.append(p)
            got += len(p)
        return np.vstack(out)[:n]

    def arcs_with_tag(self, *tags):
        return [(i, a) for i, a in enumerate(self.arcs) if a.tag in tags]

    def to_dict(self):
        return {"arcs": [a.to_dict() for a in self.arcs], "resolution": self.resolution,
                "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(arc_from_dict(a) for a in d["arcs"]),
                   resolution=int(d.get("resolution", 4096)), meta=d.get("meta", {}))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def polygon_rows(self):
        """Rows (x, y, arc_id, class) of the polygonization."""
        tags = [self.arcs[i].tag for i in self.polygon_arc_ids]
        return [(float(x), float(y), int(i), t)
                for (x, y), i, t in zip(self.polygon, self.polygon_arc_ids, tags)]


def point_in_domain(dom, p):
    return bool(dom.contains(np.asarray(p, dtype=float)[None, :])[0])


def arc_nodes(arc, n):
    """Gauss nodes on an arc: (t, points, outward normals, arclength weights)."""
    t, w = gauss_nodes(n)
    d = arc.derivative(t)
    speed = np.hypot(d[:, 0], d[:, 1])
    return t, arc.point(t), arc.normal(t), w * speed


def audit_arc_classes(dom, tc, tol=CLASSIFY_TOL):
    """Check each arc tag against the sign of K at the arc midpoint."""
    conds = []
    for i, arc in enumerate(dom.arcs):
        p = arc.point(0.5)[0]
        k = float(tc.K(p[0], p[1]))
        if arc.tag in ELLIPTIC_CLASSES:
            ok = k > tol
        elif arc.tag == "sonic":
            ok = abs(k) <= max(tol, 1e-9)
        else:
            ok = k < -tol
        conds.append(ConditionResult(f"class[{i}:{arc.label or arc.kind}]", ok, k, p,
                                     f"tag {arc.tag}"))
    return Report(conds)


# ---------------------------------------------------------------------------
# dilation flows and star-shapedness

@dataclass(frozen=True)
class DilationExponents:
    alpha_d: float
    beta_d: float

    def __post_init__(self):
        if not (self.alpha_d > 0 and self.beta_d > 0):
            raise GeometryError("dilation exponents must be positive")


def flow_map(exp, t, p, source=(0.0, 0.0)):
    if np.any(np.asarray(t) < 0):
        raise ValueError("flow time must be non-negative")
    p = np.asarray(p, dtype=float)
    s = np.asarray(source, dtype=float)
    q = p - s
    return s + np.stack([q[..., 0] * np.exp(-exp.alpha_d * np.asarray(t)),
                         q[..., 1] * np.exp(-exp.beta_d * np.asarray(t))], axis=-1)


@dataclass
class StarShapedReport:
    ok: bool
    worst_distance: float
    worst_point: np.ndarray
    escape: dict | None

    def to_dict(self):
        return {"passed": bool(self.ok), "worst_signed_distance": float(self.worst_distance),
                "worst_point": self.worst_point.tolist(), "escape": self.escape}


def check_star_shaped(dom, exp, n_boundary_samples=256, n_time_samples=64,
                      source=(0.0, 0.0), tol=None):
    """Sample F_t(p) for boundary samples p and flow times t in [0, inf]."""
    tol = 1e-9 * max(1.0, dom.scale) if tol is None else tol
    poly = dom.polygon
    idx = np.linspace(0, len(poly), n_boundary_samples, endpoint=False).astype(int)
    pb = poly[idx]
    tmax = math.log(1e8) / min(exp.alpha_d, exp.beta_d)
    times = np.append(np.linspace(0.0, tmax, n_time_samples - 1), np.inf)
    P = np.stack([flow_map(exp, t, pb, source) for t in times], axis=1)
    sd = dom.signed_distance(P.reshape(-1, 2)).reshape(P.shape[:2])
    k = np.unravel_index(int(np.argmax(sd)), sd.shape)
    worst = float(sd[k])
    escape = None
    bad = sd > tol
    if bad.any():
        rows = np.nonzero(bad.any(axis=1))[0]
        r = int(rows[0])
        c = int(np.argmax(bad[r]))
        escape = {"boundary_point": pb[r].tolist(), "exit_time": float(times[c]),
                  "exit_point": P[r, c].tolist()}
    return StarShapedReport(not bad.any(), worst, P[k], escape)


@dataclass
class StarlikeResult:
    margin: float
    t: float
    point: np.ndarray
    values: np.ndarray

    @property
    def ok(self):
        return self.margin >= 0


def _bc_values(bc, x, y):
    if hasattr(bc, "bc"):
        return bc.bc(x, y)
    b, c = bc
    return np.asarray(b(x, y), float) + 0 * x, np.asarray(c(x, y), float) + 0 * x


def starlike_form(b, c, n, sense):
    if sense == "geq":
        return b * n[:, 0] + c * n[:, 1]
    if sense == "leq":
        return -(b * n[:, 0] + c * n[:, 1])
    if sense == "flipped-b":
        return -b * n[:, 0] + c * n[:, 1]
    raise ValueError(f"unknown sense {sense!r}")


def check_starlike_arc(arc, bc, sense="geq", n_quad=64):
    """Minimum of the starlike boundary form at Gauss nodes of the arc.

    sense "geq": b n1 + c n2 (must be >= 0); "leq": -(b n1 + c n2), i.e. the
    margin of b n1 + c n2 <= 0; "flipped-b": -b n1 + c n2.
    """
    t, p, n, _ = arc_nodes(arc, n_quad)
    b, c = _bc_values(bc, p[:, 0], p[:, 1])
    v = starlike_form(b, c, n, sense)
    k = int(np.argmin(v))
    return StarlikeResult(float(v[k]), float(t[k]), p[k], v)


# ---------------------------------------------------------------------------
# characteristic curves

@dataclass
class CharacteristicPath:
    points: np.ndarray
    status: str

    @property
    def tangents(self):
        d = np.gradient(self.points, axis=0)
        return d / np.hypot(d[:, 0], d[:, 1])[:, None]


def characteristic_curve(tc, p0, branch=1, ds=1e-3, bbox=None, sonic_tol=1e-13,
                         min_step=1e-15, max_steps=1_000_000):
    """Integrate (dx, dy)/ds = (sqrt(-K), -branch) from p0 until K reaches 0.

    Branch +1 moves toward decreasing y; for K = x from (-4, 0) it traces
    y = 2(sqrt(-x) - 2) down to (0, -4). Steps that would overshoot into
    K > 0 are halved, which drives the last vertex onto the sonic curve.
    """
    p = np.asarray(p0, dtype=float)
    if not tc.K(p[0], p[1]) < 0:
        raise GeometryError("characteristic start point must be hyperbolic")

    def f(q):
        return np.array([math.sqrt(max(-float(tc.K(q[0], q[1])), 0.0)), -float(branch)])

    pts = [p.copy()]
    h = ds
    status = "max-steps"
    for _ in range(max_steps):
        if -float(tc.K(p[0], p[1])) <= sonic_tol:
            status = "sonic"
            break
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        q = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if float(tc.K(q[0], q[1])) > 0:
            h *= 0.5
            if h < min_step:
                status = "underflow"
                break
            continue
        p = q
        pts.append(p.copy())
        if bbox is not None and not (bbox[0] <= p[0] <= bbox[1] and bbox[2] <= p[1] <= bbox[3]):
            status = "bbox"
            break
    return CharacteristicPath(np.array(pts), status)


# ---------------------------------------------------------------------------
# builders

def _tip_feasible(d0, d1):
    tip = TipArc(d0, d1)
    t = np.linspace(0, 1, 2001)
    rho = np.sqrt(-tip.point(t)[:, 0])
    slope = np.abs(tip.slope(t))
    return float(rho.max()), float(slope.max())


def _split_roots(arc, bc, n=801):
    """Parameters where b n1 + c n2 changes sign on an arc."""
    def g(t):
        p = arc.point(t)
        d = arc.derivative(t)
        b, c = _bc_values(bc, p[:, 0], p[:, 1])
        return (b * d[:, 1] - c * d[:, 0])

    ts = np.linspace(0, 1, n)
    sign = np.sign(g(ts))
    roots = []
    for k in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        roots.append(brentq(lambda t: float(g(t)[0]), ts[k], ts[k + 1], xtol=1e-15))
    return roots, bool(sign[0] >= 0)


def _split_pieces(arc, bc, label):
    """Sub-arcs tagged elliptic where b n1 + c n2 >= 0, else elliptic-smoothing."""
    roots, first_main = _split_roots(arc, bc)
    cuts = [0.0] + roots + [1.0]
    out = []
    main = first_main
    for j, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        tag = "elliptic" if main else "elliptic-smoothing"
        name = ("blend-" if main else "smooth-") + label
        out.append(SubArc(arc, a, b, tag, name if len(cuts) == 3 else f"{name}{j}"))
        main = not main
    return out


def build_cc_example_domain(M=10.0, eps=0.1, delta0=0.05, delta1=0.05, blend_x=1.0,
                            blend_tangent=0.3, resolution=4096):
    """The degenerate example domain bounded by the characteristics of K = x.

    Boundary (counterclockwise): lower characteristic from the tip to (0, -4),
    lower blend (smoothing part, then main elliptic part), a circle of radius 4
    about the origin, the upper blend (main, then smoothing), the upper
    characteristic back toward the tip, and the noncharacteristic tip arc.
    The blends are cubic Hermite curves from the circle point with abscissa
    ``blend_x`` to (0, +-4) with a vertical end tangent; each is split where
    b n1 + c n2 changes sign for b = x + M, c = eps y.
    """
    if not (0 < delta0 < 1 and 0 < delta1 < 1):
        raise GeometryError("smoothing sizes must lie in (0, 1)")
    if not 0 < blend_x < 4:
        raise GeometryError("blend_x must lie in (0, 4)")
    rho_max, slope_max = _tip_feasible(delta0, delta1)
    if rho_max > 2.0 + 1e-12 or slope_max > 0.5 + 1e-12:
        raise GeometryError("smoothing parameters too large to keep the tip arc "
                            f"noncharacteristic and inside x >= -4 (max|rho'|={slope_max:.4f})")
    r1 = 2.0 - delta1 / 2.0
    R = 4.0
    th = math.acos(blend_x / R)
    P1 = (R * math.cos(th), R * math.sin(th))
    T0 = (-math.sin(th), math.cos(th))
    L = blend_tangent
    up = HermiteArc(P1, (0.0, R), (L * T0[0], L * T0[1]), (0.0, -L))
    lo = HermiteArc((0.0, -R), (P1[0], -P1[1]), (0.0, -L), (-L * T0[0], L * T0[1]))

    t = np.linspace(0, 1, 2001)
    for arc in (up, lo):
        d = arc.derivative(t)
        dd = arc.second_derivative(t)
        turn = d[:, 0] * dd[:, 1] - d[:, 1] * dd[:, 0]
        if turn.min() < -1e-12 or arc.point(t[1:-1])[:, 0].min() <= 0:
            raise GeometryError("blend parameters give a non-convex or non-elliptic blend")

    bc = (lambda x, y: x + M, lambda x, y: eps * y)
    arcs = (
        CharacteristicArc(+1, r1, 0.0, "characteristic", "Gamma+"),
        *_split_pieces(lo, bc, "lower"),
        CircleArc((0.0, 0.0), R, -th, th, "elliptic", "circle"),
        *_split_pieces(up, bc, "upper"),
        CharacteristicArc(-1, 0.0, r1, "characteristic", "Gamma-"),
        TipArc(delta0, delta1, "hyperbolic-noncharacteristic", "tip"),
    )
    meta = {"builtin": "cc-example", "M": M, "eps": eps, "delta0": delta0,
            "delta1": delta1, "blend_x": blend_x, "blend_tangent": blend_tangent}
    return Domain(arcs, resolution=resolution, meta=meta)


def _sonic_angle(tc, R):
    f = lambda th: float(tc.K(R * math.cos(th), R * math.sin(th)))
    if f(math.pi / 2 - 1e-12) > 0:
        return None
    return brentq(f, 0.0, math.pi / 2, xtol=1e-15)


def build_half_disk(radius=1.0, tc=None, resolution=4096):
    """{x >= 0, x**2 + y**2 <= R**2}: origin on the boundary, mixed type for
    K = x - y**2, star-shaped for every dilation flow toward the origin."""
    tc = tc or parabolic()
    R = float(radius)
    ths = _sonic_angle(tc, R)
    arcs = []
    if ths is None:
        arcs.append(CircleArc((0.0, 0.0), R, -math.pi / 2, math.pi / 2, "elliptic", "circle"))
    else:
        arcs += [
            CircleArc((0.0, 0.0), R, -math.pi / 2, -ths, "hyperbolic-noncharacteristic",
                      "circle-lower"),
            CircleArc((0.0, 0.0), R, -ths, ths, "elliptic", "circle"),
            CircleArc((0.0, 0.0), R, ths, math.pi / 2, "hyperbolic-noncharacteristic",
                      "circle-upper"),
        ]
    k_axis = float(tc.K(0.0, R / 2))
    axis_tag = "hyperbolic-noncharacteristic" if k_axis < -CLASSIFY_TOL else (
        "sonic" if abs(k_axis) <= CLASSIFY_TOL else "elliptic")
    arcs += [SegmentArc((0.0, R), (0.0, 0.0), axis_tag, "axis-upper"),
             SegmentArc((0.0, 0.0), (0.0, -R), axis_tag, "axis-lower")]
    return Domain(tuple(arcs), resolution=resolution,
                  meta={"builtin": "half-disk", "radius": R})


def build_box(x0, x1, y0, y1, tc=None, resolution=4096):
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    arcs = []
    for i in range(4):
        p, q = corners[i], corners[(i + 1) % 4]
        tag = "elliptic"
        if tc is not None:
            k = float(tc.K(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])))
            tag = "elliptic" if k > CLASSIFY_TOL else (
                "hyperbolic-noncharacteristic" if k < -CLASSIFY_TOL else "sonic")
        arcs.append(SegmentArc(p, q, tag, f"side{i}"))
    return Domain(tuple(arcs), resolution=resolution,
                  meta={"builtin": "box", "bounds": [x0, x1, y0, y1]})


def build_annular_sector(r_in=1.0, r_out=2.0, gap=0.2, resolution=4096):
    """Annulus r_in <= r <= r_out with a thin radial slit at angle pi, so the
    region is simply connected yet surrounds the origin."""
    a0, a1 = -math.pi + gap / 2, math.pi - gap / 2
    arcs = (
        CircleArc((0.0, 0.0), r_out, a0, a1, "elliptic", "outer"),
        SegmentArc((r_out * math.cos(a1), r_out * math.sin(a1)),
                   (r_in * math.cos(a1), r_in * math.sin(a1)), "elliptic", "cut-upper"),
        CircleArc((0.0, 0.0), r_in, a1, a0, "elliptic", "inner"),
        SegmentArc((r_in * math.cos(a0), r_in * math.sin(a0)),
                   (r_out * math.cos(a0), r_out * math.sin(a0)), "elliptic", "cut-lower"),
    )
    return Domain(arcs, resolution=resolution, meta={"builtin": "annular-sector"})


def domain_from_config(d, tc=None):
    """Build a domain from ``{"builtin": ...}`` or ``{"path": ...}`` or an arc list."""
    if "arcs" in d:
        return Domain.from_dict(d)
    if "path" in d:
        return Domain.from_json(d["path"])
    name = d.get("builtin", "cc-example")
    res = int(d.get("resolution", 4096))
    if name == "cc-example":
        keys = ("M", "eps", "delta0", "delta1", "blend_x", "blend_tangent")
        return build_cc_example_domain(**{k: float(d[k]) for k in keys if k in d},
                                       resolution=res)
    if name == "half-disk":
        return build_half_disk(float(d.get("radius", 1.0)), tc, resolution=res)
    if name == "unit-square":
        return build_box(0.0, 1.0, 0.0, 1.0, tc, resolution=res)
    if name == "box":
        return build_box(*map(float, d["bounds"]), tc=tc, resolution=res)
    if name == "annular-sector":
        keys = ("r_in", "r_out", "gap")
        return build_annular_sector(**{k: float(d[k]) for k in keys if k in d}, resolution=res)
    raise GeometryError(f"unknown builtin domain {name!r}")
