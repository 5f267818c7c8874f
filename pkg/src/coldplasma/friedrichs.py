"""Symmetric-positive first-order systems and their boundary conditions.

The second-order equation K u_xx + u_yy = f is written for u = (u_x, u_y)
as A1 u_x + A2 u_y + B u = f, multiplied by E = [[b, -cK], [c, b]], and
audited for symmetric positivity and admissible boundary conditions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coefficients import ConditionResult, Report
from .errors import HypothesisError, SingularMultiplierError
from .geometry import ELLIPTIC_CLASSES, arc_nodes

PSD_TOL = 1e-12


def _xy(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.broadcast_arrays(x, y)


def _mat(a11, a12, a21, a22):
    a = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a11, a12, a21, a22)))
    return np.stack([np.stack([a[0], a[1]], -1), np.stack([a[2], a[3]], -1)], -2)


@dataclass(frozen=True)
class FirstOrderSystem:
    """Matrix fields A1, A2, B, each mapping (x, y) arrays to (n, 2, 2)."""
    A1: Callable
    A2: Callable
    B: Callable
    A1_x: Callable | None = None
    A2_y: Callable | None = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def derivatives(self, x, y, mode="analytic", h=None):
        x, y = _xy(x, y)
        if mode == "analytic" and self.A1_x is not None and self.A2_y is not None:
            return self.A1_x(x, y), self.A2_y(x, y)
        h = h or 1e-5 * np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        hh = np.asarray(h)[..., None, None]
        return ((self.A1(x + h, y) - self.A1(x - h, y)) / (2 * hh),
                (self.A2(x, y + h) - self.A2(x, y - h)) / (2 * hh))


def build_cold_plasma_system(tc, kappa1=1.0, kappa2=0.0, variant="standard"):
    """standard: A1 = diag(K, -1), A2 = [[0, 1], [1, 0]];
    PF: A1 = diag(K, 1), A2 = [[0, -1], [-1, 0]]; B = [[k1, k2], [0, 0]]."""
    if variant not in ("standard", "pf"):
        raise ValueError(f"unknown variant {variant!r}")
    s = -1.0 if variant == "standard" else 1.0
    o = 1.0 if variant == "standard" else -1.0

    def A1(x, y):
        x, y = _xy(x, y)
        return _mat(tc.K(x, y), 0.0 * x, 0.0 * x, s + 0.0 * x)

    def A1_x(x, y):
        x, y = _xy(x, y)
        Kx, _ = tc.grad(x, y)
        return _mat(Kx, 0.0 * x, 0.0 * x, 0.0 * x)

    def A2(x, y):
        x, y = _xy(x, y)
        return _mat(0.0 * x, o + 0.0 * x, o + 0.0 * x, 0.0 * x)

    def A2_y(x, y):
        x, y = _xy(x, y)
        return np.zeros(x.shape + (2, 2))

    def B(x, y):
        x, y = _xy(x, y)
        return _mat(kappa1 + 0.0 * x, kappa2 + 0.0 * x, 0.0 * x, 0.0 * x)

    return FirstOrderSystem(A1, A2, B, A1_x, A2_y, name=variant,
                            meta={"tc": tc, "kappa1": kappa1, "kappa2": kappa2,
                                  "variant": variant})


@dataclass(frozen=True)
class MultiplierMatrix:
    """E = [[b, -cK], [c, b]] (sign "minus") or [[b, cK], [c, b]] ("plus")."""
    mf: object
    tc: object
    sign: str = "minus"

    @property
    def _s(self):
        return -1.0 if self.sign == "minus" else 1.0

    def matrices(self, x, y):
        x, y = _xy(x, y)
        v = self.mf.evaluate(x, y)
        K = self.tc.K(x, y)
        Kx, Ky = self.tc.grad(x, y)
        s = self._s
        E = _mat(v.b, s * v.c * K, v.c, v.b)
        Ex = _mat(v.b_x, s * (v.c_x * K + v.c * Kx), v.c_x, v.b_x)
        Ey = _mat(v.b_y, s * (v.c_y * K + v.c * Ky), v.c_y, v.b_y)
        return E, Ex, Ey

    def det(self, x, y):
        x, y = _xy(x, y)
        v = self.mf.evaluate(x, y)
        return v.b ** 2 - self._s * v.c ** 2 * self.tc.K(x, y)


def apply_multiplier(E, sys, points=None, tol=1e-14):
    """Return the system with coefficients E A1, E A2, E B.

    The derivative fields include the product-rule terms E_x A1 and E_y A2.
    If ``points`` is given, E is checked for invertibility there.
    """
    if points is not None:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d = E.det(p[:, 0], p[:, 1])
        v = E.mf.evaluate(p[:, 0], p[:, 1])
        scale = 1.0 + v.b ** 2 + v.c ** 2
        bad = np.abs(d) <= tol * scale
        if bad.any():
            raise SingularMultiplierError(
                f"multiplier singular at {int(bad.sum())} point(s)", p[bad])

    def A1(x, y):
        return E.matrices(x, y)[0] @ sys.A1(x, y)

    def A2(x, y):
        return E.matrices(x, y)[0] @ sys.A2(x, y)

    def B(x, y):
        return E.matrices(x, y)[0] @ sys.B(x, y)

    def A1_x(x, y):
        Em, Ex, _ = E.matrices(x, y)
        a1x, _ = sys.derivatives(x, y)
        return Ex @ sys.A1(x, y) + Em @ a1x

    def A2_y(x, y):
        Em, _, Ey = E.matrices(x, y)
        _, a2y = sys.derivatives(x, y)
        return Ey @ sys.A2(x, y) + Em @ a2y

    analytic = E.mf.kind != "custom"
    meta = dict(sys.meta, multiplier=E)
    return FirstOrderSystem(A1, A2, B, A1_x if analytic else None,
                            A2_y if analytic else None, name=sys.name + "*E", meta=meta)


def friedrichs_q(sys, x, y, derivative="analytic", h=None):
    """Q = B* - (A1_x + A2_y)/2 with B* the symmetric part of B."""
    x, y = _xy(x, y)
    B = sys.B(x, y)
    a1x, a2y = sys.derivatives(x, y, derivative, h)
    return 0.5 * (B + np.swapaxes(B, -1, -2)) - 0.5 * (a1x + a2y)


def check_symmetric_positive(sys, points, derivative="analytic", h=None):
    """Positivity audit of the condition matrix P = 2Q.

    The entries of P are the left-hand sides of (Q1) (P11) and, through
    det P, of (Q2); P is positive definite exactly when Q is.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    Q = friedrichs_q(sys, p[:, 0], p[:, 1], derivative, h)
    P = 2.0 * Q
    ev = np.linalg.eigvalsh(P)
    k = int(np.argmin(ev[:, 0]))
    q1 = P[:, 0, 0]
    q2 = P[:, 0, 0] * P[:, 1, 1] - P[:, 0, 1] * P[:, 1, 0]
    k1 = int(np.argmin(q1))
    k2 = int(np.argmin(q2))
    rep = Report([ConditionResult("(Q1)", q1[k1] > 0, float(q1[k1]), p[k1]),
                  ConditionResult("(Q2)", q2[k2] > 0, float(q2[k2]), p[k2])],
                 extra={"min_eigenvalue": float(ev[k, 0]), "location": p[k].tolist()})
    rep.condition_matrix = P
    rep.eigenvalues = ev
    return rep


def boundary_matrix(sys, n, x, y):
    """beta = n1 (E A1) + n2 (E A2) for a multiplied system."""
    x, y = _xy(x, y)
    n = np.atleast_2d(np.asarray(n, dtype=float))
    return n[:, 0, None, None] * sys.A1(x, y) + n[:, 1, None, None] * sys.A2(x, y)


def boundary_matrix_formula(b, c, K, n):
    n = np.atleast_2d(np.asarray(n, dtype=float))
    n1, n2 = n[:, 0], n[:, 1]
    off = c * K * n1 + b * n2
    return _mat(K * (b * n1 - c * n2), off, off, -(b * n1 - c * n2))


@dataclass
class BoundarySplit:
    beta: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray
    side: str
    K: float
    n: np.ndarray
    verdicts: dict

    @property
    def mu(self):
        return self.beta_plus - self.beta_minus

    @property
    def mu_star(self):
        m = self.mu
        return 0.5 * (m + m.T)


def _rank(A, tol=1e-12):
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s.max() if s.size else 0.0)))


def _null_basis(A, tol=1e-12):
    u, s, vt = np.linalg.svd(A)
    r = int(np.sum(s > tol * max(1.0, s.max())))
    return vt[r:].T


def _range_basis(A, tol=1e-12):
    u, s, vt = np.linalg.svd(A)
    r = int(np.sum(s > tol * max(1.0, s.max())))
    return u[:, :r]


def psd(A, tol=PSD_TOL):
    S = 0.5 * (A + A.T)
    return bool(np.linalg.eigvalsh(S).min() >= -tol * (1.0 + np.linalg.norm(S)))


def decompose_boundary(b, c, K, n, side, strict=True, tol=1e-12):
    """Split beta into beta_plus + beta_minus on one side of the boundary."""
    n = np.asarray(n, dtype=float)
    n1, n2 = float(n[0]), float(n[1])
    b, c, K = float(b), float(c), float(K)
    if strict:
        if side in ("elliptic-main", "elliptic-smoothing") and not K > -tol:
            raise HypothesisError(f"side {side} at a point with K={K:.3g} < 0",
                                  condition="side")
        if side == "nonelliptic" and not K < tol:
            raise HypothesisError(f"side {side} at a point with K={K:.3g} > 0",
                                  condition="side")
    beta = boundary_matrix_formula(b, c, K, n[None, :])[0]
    p = np.array([[K * b * n1, b * n2], [K * c * n1, c * n2]])
    m = np.array([[-K * c * n2, K * c * n1], [b * n2, -b * n1]])
    if side == "elliptic-main":
        bp, bm = p, m
    elif side == "elliptic-smoothing":
        bp, bm = m, p
    elif side == "nonelliptic":
        bp, bm = beta.copy(), np.zeros((2, 2))
    else:
        raise ValueError(f"unknown side {side!r}")
    split = BoundarySplit(beta, bp, bm, side, K, n, {})
    split.verdicts = {
        "mu_star_psd": psd(split.mu_star),
        "null_spaces_span": _spans(bp, bm, tol),
        "ranges_trivial_intersection": _ranges_trivial(bp, bm, tol),
    }
    return split


def _spans(bp, bm, tol):
    N = np.hstack([_null_basis(bp, tol), _null_basis(bm, tol)])
    return N.shape[1] > 0 and _rank(N, 1e-10) == 2


def _ranges_trivial(bp, bm, tol):
    Rp, Rm = _range_basis(bp, tol), _range_basis(bm, tol)
    if Rp.shape[1] == 0 or Rm.shape[1] == 0:
        return True
    return _rank(np.hstack([Rp, Rm]), 1e-10) == Rp.shape[1] + Rm.shape[1]


def condition_row(u_condition, K, n):
    """Row vector l with l . u = 0 expressing the boundary condition."""
    n1, n2 = float(n[0]), float(n[1])
    if u_condition == "dirichlet":
        return np.array([-n2, n1])
    if u_condition == "neumann":
        return np.array([K * n1, n2])
    raise ValueError(f"unknown condition {u_condition!r}")


def check_semi_admissible(split, u_condition="none", tol=1e-12):
    """mu* >= 0 and beta_minus u = 0 implied by the imposed condition."""
    psd_ok = psd(split.mu_star)
    bm = split.beta_minus
    scale = 1.0 + np.linalg.norm(bm)
    if u_condition == "none":
        implied = bool(np.linalg.norm(bm) <= tol * scale)
    else:
        row = condition_row(u_condition, split.K, split.n)
        if np.linalg.norm(row) <= tol:
            implied = False
        else:
            u = np.array([row[1], -row[0]])          # spans {l . u = 0}
            implied = bool(np.linalg.norm(bm @ u) <= tol * scale * np.linalg.norm(u))
    return {"mu_star_psd": psd_ok, "condition_implies_beta_minus": implied,
            "semi_admissible": psd_ok and implied}


def spanning_determinant(K, n):
    n = np.atleast_2d(np.asarray(n, dtype=float))
    return n[:, 1] ** 2 + K * n[:, 0] ** 2


def check_admissible(split, K=None, n=None, tol=1e-12):
    """Null-space spanning and range triviality of an elliptic or nonelliptic split."""
    K = split.K if K is None else K
    n = split.n if n is None else n
    if split.side == "nonelliptic":
        return {"spans": True, "ranges_trivial": True, "spanning_determinant": None}
    det = float(spanning_determinant(K, n)[0])
    return {"spans": det > tol, "ranges_trivial": split.verdicts["ranges_trivial_intersection"],
            "spanning_determinant": det}


def subcharacteristic_residual(b, c, K, n):
    """Left side of (bQ2): K (b n1 - c n2)**2 + (c K n1 + b n2)**2."""
    n = np.atleast_2d(np.asarray(n, dtype=float))
    n1, n2 = n[:, 0], n[:, 1]
    return K * (b * n1 - c * n2) ** 2 + (c * K * n1 + b * n2) ** 2


def _normalized_residual(b, c, K, n):
    return subcharacteristic_residual(b, c, K, n) / ((b * b + c * c) * (1.0 + np.abs(K)) ** 2)


def prop4_audit(arc, mf, tc, n_quad=200, normals="analytic"):
    """Max normalized |(bQ2) left side| over nodes of a characteristic arc.

    normals "analytic" uses Gauss nodes of the parametrization; "chord" uses
    chord midpoints and chord normals of a polyline arc.
    """
    if arc.tag != "characteristic":
        raise HypothesisError(f"arc {arc.label or arc.kind} is tagged {arc.tag}, "
                              "not characteristic", condition="characteristic")
    if normals == "chord":
        p, n = arc.chord_midpoints()
    else:
        _, p, n, _ = arc_nodes(arc, n_quad)
    b, c = mf.bc(p[:, 0], p[:, 1])
    K = tc.K(p[:, 0], p[:, 1])
    r = np.abs(_normalized_residual(b, c, K, n))
    return float(r.max())


# ---------------------------------------------------------------------------
# aggregate hypothesis audit

SIDE_OF_TAG = {"elliptic": "elliptic-main", "elliptic-smoothing": "elliptic-smoothing",
               "characteristic": "nonelliptic", "hyperbolic-noncharacteristic": "nonelliptic",
               "sonic": "nonelliptic"}
COND_OF_SIDE = {"elliptic-main": "dirichlet", "elliptic-smoothing": "neumann",
                "nonelliptic": "none"}


@dataclass
class Theorem3Report:
    conditions: list
    arcs: list
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(c.passed for c in self.conditions)

    @property
    def failed(self):
        return [c.label for c in self.conditions if not c.passed]

    def __getitem__(self, label):
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_dict(self):
        d = {"passed": bool(self.ok), "failed": self.failed,
             "conditions": [c.to_dict() for c in self.conditions], "arcs": self.arcs}
        d.update(self.extra)
        return d


def _worst(label, vals, pts, passed_fn, arc_labels=None):
    k = int(np.argmin(vals))
    c = ConditionResult(label, bool(passed_fn(vals[k])), float(vals[k]), pts[k])
    if arc_labels is not None:
        c.detail = f"arc {arc_labels[k]}"
    return c


def verify_theorem3(dom, tc, kappa1, kappa2, mf, n_quad=64, n_interior=10000, seed=0,
                    variant="standard", tol=1e-12):
    """Audit every hypothesis of the strong-solvability theorem on a domain.

    Interior conditions (Q0)-(Q2) use seeded random interior samples; boundary
    conditions use n_quad Gauss nodes per arc. Margins are minima of the
    quantity that must be positive (bQ2 is reported as minus the maximum of
    its normalized left side, so a zero margin is the characteristic case).
    """
    if variant != "standard":
        raise NotImplementedError("boundary audit is implemented for the standard system")
    for i, a in enumerate(dom.arcs):
        if a.tag not in SIDE_OF_TAG:
            raise HypothesisError(f"arc {i} has no class tag", condition="class")
    sys = build_cold_plasma_system(tc, kappa1, kappa2, variant)
    E = MultiplierMatrix(mf, tc, "minus")
    msys = apply_multiplier(E, sys)
    pts = dom.sample_interior(n_interior, seed)
    conds = []

    x, y = pts[:, 0], pts[:, 1]
    v = mf.evaluate(x, y)
    detE = np.abs(E.det(x, y))
    Kin = tc.K(x, y)
    c0 = _worst("(Q0)", detE / (1.0 + v.b ** 2 + v.c ** 2), pts, lambda m: m > tol)
    ell = Kin > 0
    if ell.any():
        both = np.maximum(np.abs(v.b), np.abs(v.c))[ell]
        if both.min() <= tol:
            c0.passed = False
            c0.detail = "b and c vanish together in the elliptic region"
    conds.append(c0)
    spd = check_symmetric_positive(msys, pts)
    conds += [spd["(Q1)"], spd["(Q2)"]]

    groups = {k: ([], [], []) for k in ("(starlike1)", "(starlike2)", "(starlike3)", "(bQ2)",
                                         "spanning", "range-triviality", "semi-admissible",
                                         "class")}
    arcs_out = []
    for i, arc in enumerate(dom.arcs):
        label = arc.label or f"arc{i}"
        side = SIDE_OF_TAG[arc.tag]
        _, p, n, _ = arc_nodes(arc, n_quad)
        b, c = mf.bc(p[:, 0], p[:, 1])
        K = tc.K(p[:, 0], p[:, 1])
        form = b * n[:, 0] + c * n[:, 1]
        per = {"label": label, "class": arc.tag, "side": side}

        def add(key, vals):
            groups[key][0].append(vals)
            groups[key][1].append(p)
            groups[key][2].extend([label] * len(vals))
            per[key] = float(np.min(vals))

        if side == "elliptic-main":
            add("(starlike1)", form)
            add("class", K)
        elif side == "elliptic-smoothing":
            add("(starlike2)", -form)
            add("class", K)
        else:
            add("(starlike3)", -b * n[:, 0] + c * n[:, 1])
            add("(bQ2)", -_normalized_residual(b, c, K, n))
            add("class", -K if arc.tag != "sonic" else -np.abs(K) + 1e-9)

        span_v, range_v, semi_v = [], [], []
        for j in range(len(p)):
            sp = decompose_boundary(b[j], c[j], K[j], n[j], side, strict=False)
            ad = check_admissible(sp)
            semi = check_semi_admissible(sp, COND_OF_SIDE[side])
            if side == "nonelliptic":
                span_v.append(np.inf)
            else:
                span_v.append(ad["spanning_determinant"])
            range_v.append(1.0 if ad["ranges_trivial"] else -1.0)
            semi_v.append(1.0 if semi["semi_admissible"] else -1.0)
        span_v = np.array(span_v)
        if side != "nonelliptic":
            add("spanning", span_v)
        add("range-triviality", np.array(range_v))
        add("semi-admissible", np.array(semi_v))
        arcs_out.append(per)

    rules = {"(starlike1)": lambda m: m >= -tol, "(starlike2)": lambda m: m >= -tol,
             "(starlike3)": lambda m: m >= -tol, "(bQ2)": lambda m: m >= -1e-10,
             "spanning": lambda m: m > tol, "range-triviality": lambda m: m > 0,
             "semi-admissible": lambda m: m > 0, "class": lambda m: m > 0}
    for key, (vals, ps, labels) in groups.items():
        if not vals:
            continue
        conds.append(_worst(key, np.concatenate(vals), np.vstack(ps), rules[key], labels))
    return Theorem3Report(conds, arcs_out,
                          extra={"n_interior": int(len(pts)), "n_quad": int(n_quad)})
