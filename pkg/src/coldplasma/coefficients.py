"""Type-change function, multiplier fields and the energy coefficients.

The type-change function is K(x, y) = x - sigma(y); its sign decides the
local type of the equation (K > 0 elliptic, K < 0 hyperbolic, K = 0 sonic).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import HypothesisError

CLASSIFY_TOL = 1e-12


def _arr(v):
    return np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# type-change function

def _zero(y):
    return 0.0 * _arr(y)


def _square(y):
    return _arr(y) ** 2


def _twice(y):
    return 2.0 * _arr(y)


@dataclass(frozen=True)
class TypeChangeCoefficient:
    """K(x, y) = x - sigma(y), supplied as the closure pair (sigma, sigma')."""
    sigma: Callable
    sigma_prime: Callable
    form: str = "custom"

    def K(self, x, y):
        return _arr(x) - self.sigma(y)

    def grad(self, x, y):
        x = _arr(x)
        return np.ones_like(x + 0.0 * _arr(y)), -_arr(self.sigma_prime(y)) + 0.0 * x

    def to_dict(self):
        if self.form == "custom":
            raise ValueError("custom sigma cannot be serialized")
        return {"form": self.form}


def parabolic():
    """sigma(y) = y**2, the formally self-adjoint case K = x - y**2."""
    return TypeChangeCoefficient(_square, _twice, "parabolic")


def zero_sigma():
    """sigma = 0, so K = x."""
    return TypeChangeCoefficient(_zero, _zero, "zero-sigma")


def custom(sigma, sigma_prime):
    return TypeChangeCoefficient(sigma, sigma_prime, "custom")


@dataclass(frozen=True)
class ConstantCoefficient:
    """K identically equal to a constant. Not a type-change function; used for
    constant-coefficient sanity checks of the solver."""
    value: float = 1.0
    form: str = "constant"

    def K(self, x, y):
        return np.full(np.broadcast(_arr(x), _arr(y)).shape, float(self.value))

    def grad(self, x, y):
        z = np.zeros(np.broadcast(_arr(x), _arr(y)).shape)
        return z, z.copy()

    def to_dict(self):
        return {"form": "constant", "value": self.value}


def coefficient_from_dict(d):
    form = d.get("form", "parabolic")
    if form == "parabolic":
        return parabolic()
    if form in ("zero-sigma", "linear-degenerate"):
        return zero_sigma()
    if form == "constant":
        return ConstantCoefficient(float(d.get("value", 1.0)))
    raise HypothesisError(f"unknown K form {form!r}", condition="K-form")


def eval_type_change(tc, p):
    """Return (K, (K_x, K_y)) at a point or an (n, 2) array of points."""
    p = _arr(p)
    x, y = p[..., 0], p[..., 1]
    return tc.K(x, y), tc.grad(x, y)


def classify_point(tc, p, tol=CLASSIFY_TOL):
    k = float(tc.K(p[0], p[1]))
    if k > tol:
        return "elliptic"
    if k < -tol:
        return "hyperbolic"
    return "sonic"


def classify(tc, x, y, tol=CLASSIFY_TOL):
    """Vectorized classification: +1 elliptic, -1 hyperbolic, 0 sonic."""
    k = tc.K(x, y)
    return np.where(k > tol, 1, np.where(k < -tol, -1, 0))


@dataclass
class ConditionResult:
    label: str
    passed: bool
    margin: float
    location: object = None
    detail: str = ""

    def to_dict(self):
        d = {"label": self.label, "passed": bool(self.passed), "margin": float(self.margin)}
        if self.location is not None:
            d["location"] = np.asarray(self.location, dtype=float).tolist()
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class Report:
    conditions: list = field(default_factory=list)
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

    def raise_if_failed(self):
        if not self.ok:
            worst = self.failed[0]
            raise HypothesisError(f"condition {worst} violated", condition=worst)

    def to_dict(self):
        d = {"passed": bool(self.ok), "failed": self.failed,
             "conditions": [c.to_dict() for c in self.conditions]}
        d.update(self.extra)
        return d


def validate_sigma(tc, interval=(-2.0, 2.0), n_samples=401, tol=1e-12):
    """Sample the three standing conditions on sigma.

    (sig1) sigma(0) = sigma'(0) = 0, (sig2) sigma' >= 0 for y >= 0,
    (sig3) sigma' <= 0 for y <= 0.
    """
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    y = np.unique(np.append(np.linspace(interval[0], interval[1], n_samples), 0.0))
    sp = _arr(tc.sigma_prime(y)) + 0.0 * y
    s0 = float(tc.sigma(0.0))
    sp0 = float(tc.sigma_prime(0.0))
    worst0 = max(abs(s0), abs(sp0))
    conds = [ConditionResult("(sig1)", worst0 <= tol, -worst0, (0.0,),
                             f"sigma(0)={s0:.3g}, sigma'(0)={sp0:.3g}")]
    pos = y >= 0
    neg = y <= 0
    for label, mask, vals in (("(sig2)", pos, sp), ("(sig3)", neg, -sp)):
        if mask.any():
            v = vals[mask]
            k = int(np.argmin(v))
            conds.append(ConditionResult(label, v[k] >= -tol, float(v[k]), (float(y[mask][k]),)))
        else:
            conds.append(ConditionResult(label, True, np.inf))
    return Report(conds)


# ---------------------------------------------------------------------------
# multiplier fields

class MultiplierValues(NamedTuple):
    a: object
    b: object
    c: object
    b_x: object
    b_y: object
    c_x: object
    c_y: object


@dataclass(frozen=True)
class MultiplierField:
    """Coefficients (a, b, c) of H v = a v + b v_x + c v_y.

    kind "dilation": b = m x, c = mu y, a = -M (the energy-estimate choice).
    kind "cc-example": b = x + M, c = eps y, a = 0.
    kind "custom": user callables, derivatives by central differences.
    """
    kind: str
    a: float = 0.0
    m: float | None = None
    mu: float | None = None
    delta: float | None = None
    M_const: float | None = None
    eps: float | None = None
    b_func: Callable | None = None
    c_func: Callable | None = None
    fd_h: float = 1e-5

    def evaluate(self, x, y):
        x = _arr(x)
        y = _arr(y)
        one = np.ones(np.broadcast(x, y).shape)
        zero = 0.0 * one
        if self.kind == "dilation":
            return MultiplierValues(self.a * one, self.m * x * one, self.mu * y * one,
                                    self.m * one, zero, zero, self.mu * one)
        if self.kind == "cc-example":
            return MultiplierValues(zero, (x + self.M_const) * one, self.eps * y * one,
                                    one, zero, zero, self.eps * one)
        b, c = self.b_func, self.c_func
        h = self.fd_h * np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        bx = (b(x + h, y) - b(x - h, y)) / (2 * h)
        by = (b(x, y + h) - b(x, y - h)) / (2 * h)
        cx = (c(x + h, y) - c(x - h, y)) / (2 * h)
        cy = (c(x, y + h) - c(x, y - h)) / (2 * h)
        return MultiplierValues(self.a * one, _arr(b(x, y)) * one, _arr(c(x, y)) * one,
                                bx * one, by * one, cx * one, cy * one)

    def bc(self, x, y):
        v = self.evaluate(x, y)
        return v.b, v.c

    def to_dict(self):
        if self.kind == "dilation":
            return {"kind": "dilation", "m": self.m, "mu": self.mu, "delta": self.delta}
        if self.kind == "cc-example":
            return {"kind": "cc-example", "M": self.M_const, "eps": self.eps}
        raise ValueError("custom multipliers cannot be serialized")


def dilation_multiplier(m, mu, delta=None):
    ec = lemma1_coefficients(m, mu, delta)
    return MultiplierField("dilation", a=-ec.M_const, m=float(m), mu=float(mu),
                           delta=ec.delta)


def cc_example_multiplier(M=10.0, eps=0.1):
    if not eps > 0:
        raise HypothesisError("eps must be positive", condition="eps>0")
    if not M >= 0:
        raise HypothesisError("M must be non-negative", condition="M>=0")
    return MultiplierField("cc-example", a=0.0, M_const=float(M), eps=float(eps))


def custom_multiplier(b, c, a=0.0, fd_h=1e-5):
    return MultiplierField("custom", a=float(a), b_func=b, c_func=c, fd_h=fd_h)


def multiplier_from_dict(d):
    kind = d.get("kind", "cc-example")
    if kind == "dilation":
        return dilation_multiplier(float(d.get("m", 4.0)), float(d.get("mu", 1.0)),
                                   None if d.get("delta") is None else float(d["delta"]))
    if kind == "cc-example":
        return cc_example_multiplier(float(d.get("M", 10.0)), float(d.get("eps", 0.1)))
    raise HypothesisError(f"unknown multiplier kind {kind!r}", condition="multiplier-kind")


def eval_multiplier(mf, p):
    p = _arr(p)
    return mf.evaluate(p[..., 0], p[..., 1])


def cc_largeness(mf, bbox):
    """Check the explicit reading of "M sufficiently large" on a bounding box.

    Returns a Report with b > 0 on the box closure and M > eps * sup(-x).
    """
    xmin, xmax, ymin, ymax = bbox
    bmin = xmin + mf.M_const
    q1 = mf.M_const - mf.eps * max(0.0, -xmin)
    return Report([
        ConditionResult("b-positive", bmin > 0, bmin, (xmin, 0.0)),
        ConditionResult("M-large", q1 > 0, q1, (xmin, 0.0)),
    ])


# ---------------------------------------------------------------------------
# energy coefficients

@dataclass(frozen=True)
class EnergyCoefficients:
    m: float
    mu: float
    delta: float
    M_const: float
    gamma_e: float

    def alpha_e(self, x, y, tc=None):
        """alpha = K((c_y - b_x)/2 - a) + b/2 + K_y c/2 with b = m x, c = mu y,
        a = -M. Reduces to (m/2 - mu - delta) x + delta y**2 for K = x - y**2."""
        tc = tc or parabolic()
        x = _arr(x)
        y = _arr(y)
        K = tc.K(x, y)
        _, Ky = tc.grad(x, y)
        return K * ((self.mu - self.m) / 2 + self.M_const) + self.m * x / 2 + Ky * self.mu * y / 2


def lemma1_coefficients(m, mu, delta=None):
    m = float(m)
    mu = float(mu)
    if not mu > 0:
        raise HypothesisError("need mu > 0", condition="mu>0")
    if not m > 3 * mu:
        raise HypothesisError(f"need m > 3 mu, got m={m}, mu={mu}", condition="m>3mu")
    delta = mu / 4 if delta is None else float(delta)
    if not 0 < delta <= mu / 4:
        raise HypothesisError(f"need 0 < delta <= mu/4, got {delta}", condition="delta<=mu/4")
    M = (m - 3 * mu) / 2 - delta
    if not M > 0:
        raise HypothesisError(f"M = (m - 3 mu)/2 - delta = {M} is not positive",
                              condition="M>0")
    return EnergyCoefficients(m, mu, delta, M, m - 2 * mu - delta)


def check_energy_coercivity(coeffs, tc, points, tol=1e-12):
    """Report min(alpha - delta |K|) and gamma - (mu - delta) over samples."""
    p = np.atleast_2d(_arr(points))
    x, y = p[:, 0], p[:, 1]
    if np.any(x < 0):
        raise HypothesisError("coercivity samples must have x >= 0", condition="x>=0")
    g = coeffs.alpha_e(x, y, tc) - coeffs.delta * np.abs(tc.K(x, y))
    k = int(np.argmin(g))
    gm = coeffs.gamma_e - (coeffs.mu - coeffs.delta)
    return Report([
        ConditionResult("alpha>=delta|K|", g[k] >= -tol, float(g[k]), p[k]),
        ConditionResult("gamma>mu-delta", gm >= -tol, float(gm)),
    ])
