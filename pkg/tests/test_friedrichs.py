import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from coldplasma.coefficients import (cc_example_multiplier, custom_multiplier, parabolic,
                                     zero_sigma)
from coldplasma.errors import HypothesisError, SingularMultiplierError
from coldplasma.friedrichs import (MultiplierMatrix, apply_multiplier,
                                   boundary_matrix, boundary_matrix_formula,
                                   build_cold_plasma_system, check_admissible,
                                   check_semi_admissible, check_symmetric_positive,
                                   decompose_boundary, friedrichs_q, prop4_audit,
                                   spanning_determinant, subcharacteristic_residual,
                                   verify_theorem3)
from coldplasma.geometry import PolylineArc, arc_nodes, characteristic_curve

coef = st.floats(-2, 2, allow_nan=False)


def cc_system(M=10.0, eps=0.1, tc=None):
    tc = tc or zero_sigma()
    mf = cc_example_multiplier(M, eps)
    sys_ = build_cold_plasma_system(tc, 1.0, 0.0)
    return apply_multiplier(MultiplierMatrix(mf, tc, "minus"), sys_), mf


def test_cc_condition_matrix_is_diagonal(cc_domain):
    msys, _ = cc_system()
    pts = cc_domain.sample_interior(2000, seed=5)
    rep = check_symmetric_positive(msys, pts)
    P = rep.condition_matrix
    assert np.allclose(P[:, 0, 0], 10.0 + 0.1 * pts[:, 0], atol=1e-12, rtol=0)
    assert np.allclose(P[:, 1, 1], 0.9, atol=1e-12, rtol=0)
    assert np.allclose(P[:, 0, 1], 0.0, atol=1e-12) and np.allclose(P[:, 1, 0], 0.0, atol=1e-12)
    Q = friedrichs_q(msys, pts[:, 0], pts[:, 1])
    assert np.allclose(2 * Q, P, atol=1e-14)
    assert rep.ok


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=8, max_size=8), coef, coef,
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_condition_matrix_matches_closed_form_inequalities(p, k1, k2, x, y):
    """P11 and det P against the closed forms of (Q1) and (Q2) for K = x - y**2."""
    b = lambda x, y: p[0] + p[1] * x + p[2] * y + p[3] * x * y
    c = lambda x, y: p[4] + p[5] * x + p[6] * y + p[7] * x * y
    tc = parabolic()
    mf = custom_multiplier(b, c)
    msys = apply_multiplier(MultiplierMatrix(mf, tc, "minus"),
                            build_cold_plasma_system(tc, k1, k2))
    P = check_symmetric_positive(msys, [[x, y]]).condition_matrix[0]
    K, sp_ = x - y * y, 2 * y
    bv, cv = b(x, y), c(x, y)
    bx, by = p[1] + p[3] * y, p[2] + p[3] * x
    cx, cy = p[5] + p[7] * y, p[6] + p[7] * x
    q1 = 2 * bv * k1 - bx * K - bv + cy * K - cv * sp_
    q2 = q1 * (2 * cv * k2 + bx - cy) - (bv * k2 + cv * k1 - cx * K - cv - by) ** 2
    scale = 1 + abs(q1) + sum(abs(t) for t in p) ** 2 * 10
    assert P[0, 0] == pytest.approx(q1, abs=1e-6 * scale)
    assert np.linalg.det(P) == pytest.approx(q2, abs=1e-6 * scale ** 2)


def test_pf_variant_against_symbolic_oracle():
    x, y, M, eps = sp.symbols("x y M eps", real=True)
    K = x - y ** 2
    b, c = x + M, eps * y
    E = sp.Matrix([[b, c * K], [c, b]])
    A1 = sp.Matrix([[K, 0], [0, 1]])
    A2 = sp.Matrix([[0, -1], [-1, 0]])
    B = sp.Matrix([[1, 0], [0, 0]])
    EB = E * B
    Q = (EB + EB.T) / 2 - ((E * A1).diff(x) + (E * A2).diff(y)) / 2
    f = sp.lambdify((x, y), Q.subs({M: 3.0, eps: 0.2}), "numpy")
    tc = parabolic()
    msys = apply_multiplier(MultiplierMatrix(cc_example_multiplier(3.0, 0.2), tc, "plus"),
                            build_cold_plasma_system(tc, 1.0, 0.0, "pf"))
    rng = np.random.default_rng(2)
    for px, py in rng.uniform(-2, 2, (20, 2)):
        assert np.allclose(friedrichs_q(msys, px, py)[0], np.array(f(px, py), float),
                           atol=1e-12)


def test_singular_multiplier_detected():
    msys_pts = np.array([[-2.0, 0.0], [1.0, 1.0]])
    tc = zero_sigma()
    E = MultiplierMatrix(cc_example_multiplier(2.0, 0.1), tc)
    with pytest.raises(SingularMultiplierError) as ei:
        apply_multiplier(E, build_cold_plasma_system(tc), msys_pts)
    assert ei.value.condition == "(Q0)"
    assert np.allclose(ei.value.points, [[-2.0, 0.0]])


def test_small_M_fails_Q1_near_left_end(cc_domain):
    msys, _ = cc_system(M=0.01)
    rep = check_symmetric_positive(msys, cc_domain.sample_interior(5000, seed=0))
    assert "(Q1)" in rep.failed
    assert rep["(Q1)"].location[0] <= -3


@settings(max_examples=50, deadline=None)
@given(st.floats(-3.5, 3.5), st.floats(-3.5, 3.5), st.floats(0, 2 * np.pi))
def test_boundary_matrix_formula(x, y, th):
    msys, mf = cc_system()
    n = np.array([[np.cos(th), np.sin(th)]])
    b, c = mf.bc(x, y)
    beta = boundary_matrix(msys, n, x, y)[0]
    assert np.allclose(beta, boundary_matrix_formula(b, c, float(x), n)[0], atol=1e-12)
    assert np.allclose(beta, beta.T, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3), st.floats(0, 2 * np.pi),
       st.sampled_from(["elliptic-main", "elliptic-smoothing", "nonelliptic"]))
def test_split_sums_to_beta(b, c, K, th, side):
    n = np.array([np.cos(th), np.sin(th)])
    s = decompose_boundary(b, c, K, n, side, strict=False)
    assert np.allclose(s.beta_plus + s.beta_minus, s.beta, atol=1e-12)


def test_split_side_mismatch_raises():
    with pytest.raises(HypothesisError):
        decompose_boundary(1.0, 1.0, -0.5, np.array([1.0, 0.0]), "elliptic-main")


def test_elliptic_nodes_admissible(cc_domain, tc_cc):
    _, mf = cc_system()
    for arc in cc_domain.arcs:
        if arc.tag not in ("elliptic", "elliptic-smoothing"):
            continue
        side = "elliptic-main" if arc.tag == "elliptic" else "elliptic-smoothing"
        cond = "dirichlet" if side == "elliptic-main" else "neumann"
        _, p, n, _ = arc_nodes(arc, 16)
        b, c = mf.bc(p[:, 0], p[:, 1])
        for j in range(len(p)):
            s = decompose_boundary(b[j], c[j], p[j, 0], n[j], side)
            ad = check_admissible(s)
            assert ad["spans"] and ad["ranges_trivial"]
            assert check_semi_admissible(s, cond)["semi_admissible"]


def test_spanning_determinant_vanishes_on_characteristics(cc_domain, tc_cc):
    for arc in cc_domain.arcs:
        if arc.tag == "characteristic":
            _, p, n, _ = arc_nodes(arc, 200)
            assert np.max(np.abs(spanning_determinant(p[:, 0], n))) < 1e-10


def test_bq2_vanishes_on_characteristic_arcs(cc_domain, tc_cc):
    rng = np.random.default_rng(0)
    for arc in cc_domain.arcs:
        if arc.tag != "characteristic":
            continue
        for b0, c0 in rng.normal(size=(10, 2)) * 5:
            mf = custom_multiplier(lambda x, y: b0 + 0 * x, lambda x, y: c0 + 0 * x)
            assert prop4_audit(arc, mf, tc_cc, 200) < 1e-8


def test_bq2_chord_normals_on_traced_curve():
    tc = zero_sigma()
    path = characteristic_curve(tc, (-3.9, 0.02), branch=1, ds=1e-3)
    arc = PolylineArc(tuple(map(tuple, path.points[: len(path.points) // 2])))
    r = prop4_audit(arc, cc_example_multiplier(), tc, normals="chord")
    assert r < 1e-5


def test_bq2_audit_refuses_noncharacteristic_arc(cc_domain, tc_cc):
    with pytest.raises(HypothesisError):
        prop4_audit(cc_domain.arcs[-1], cc_example_multiplier(), tc_cc)


def test_subcharacteristic_residual_positive_in_elliptic_region():
    n = np.array([[0.6, 0.8]])
    assert subcharacteristic_residual(1.0, 0.5, 2.0, n)[0] > 0


def test_hypothesis_audit_default(cc_domain, tc_cc):
    rep = verify_theorem3(cc_domain, tc_cc, 1.0, 0.0, cc_example_multiplier(10.0, 0.1))
    assert rep.ok, rep.failed
    labels = {c.label for c in rep.conditions}
    assert {"(Q0)", "(Q1)", "(Q2)", "(starlike1)", "(starlike2)", "(starlike3)", "(bQ2)",
            "spanning", "range-triviality", "semi-admissible", "class"} <= labels
    d = rep.to_dict()
    assert len(d["arcs"]) == len(cc_domain.arcs)


def test_hypothesis_audit_rejects_pf_boundary_audit(cc_domain, tc_cc):
    with pytest.raises(NotImplementedError):
        verify_theorem3(cc_domain, tc_cc, 1.0, 0.0, cc_example_multiplier(), variant="pf")
