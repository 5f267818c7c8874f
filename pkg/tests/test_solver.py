import numpy as np
import pytest
import scipy.sparse.linalg as spl
import sympy as sy

from coldplasma import solver
from coldplasma.coefficients import ConstantCoefficient, lemma1_coefficients, parabolic
from coldplasma.errors import ConvergenceError, GeometryError, UniquenessFailure
from coldplasma.geometry import build_box, build_cc_example_domain
from coldplasma.grids import make_grid
from coldplasma.manufactured import Bump, zero_function
from coldplasma.transport import energy_identity_terms


@pytest.fixture(scope="module")
def dp_half(half_disk, tc_par):
    return solver.assemble(half_disk, tc_par, 1 / 16)


def test_matrices_symmetric_and_definite(dp_half):
    for M in (dp_half.A, dp_half.G, dp_half.M_w, dp_half.M_I, dp_half.G_t):
        assert abs(M - M.T).max() <= 1e-14 * max(1.0, abs(M).max())
    np.linalg.cholesky(dp_half.G.toarray())
    np.linalg.cholesky(dp_half.M_w.toarray())


def test_constant_elliptic_coefficient_gives_A_equal_G():
    dom = build_box(0.0, 1.0, 0.0, 1.0)
    dp = solver.assemble(dom, ConstantCoefficient(2.0), 1 / 8, 1)
    assert abs(dp.A - dp.G).max() < 1e-14


def test_hyperbolic_box_flips_x_block(tc_par):
    dom = build_box(-2.0, -1.0, -0.5, 0.5)
    dp = solver.assemble(dom, tc_par, 1 / 8, 1)
    Ay = solver.assemble(dom, ConstantCoefficient(0.0), 1 / 8, 1).A
    # A = -X + Y, G = X + Y with X the |K|-weighted x-block, Y the y-block
    assert abs((dp.A + dp.G) - 2 * Ay).max() < 1e-13
    X = 0.5 * (dp.G - dp.A)
    assert np.linalg.eigvalsh(X.toarray()).min() > -1e-12


def test_mixed_domain_A_indefinite():
    dom = build_cc_example_domain()
    dp = solver.assemble(dom, parabolic(), 0.25, 1)
    ev = np.linalg.eigvalsh(dp.A.toarray())
    assert ev.min() < 0 < ev.max()
    assert np.linalg.eigvalsh(dp.G.toarray()).min() > 0


def test_norms_zero_and_duality(dp_half):
    z = solver.norms(dp_half, u=np.zeros(dp_half.n), w=np.zeros(dp_half.n))
    assert all(v == 0 for v in z.values())
    rng = np.random.default_rng(0)
    u = rng.standard_normal(dp_half.n)
    n = solver.norms(dp_half, u=u, w=dp_half.G @ u)
    assert n["Hneg1_K"] == pytest.approx(n["H10_K"], rel=1e-12)


def test_weighted_L2_of_factored_data(tc_par):
    x, y = sy.symbols("x y")
    dom = build_box(1.0, 2.0, 0.0, 0.5, tc_par)
    exact_full = float(sy.integrate(x - y ** 2, (x, 1, 2), (y, 0, sy.Rational(1, 2))))
    assert exact_full == pytest.approx(0.75 - 1 / 24)
    f = solver.FactoredForcing(lambda x, y: 1.0 + 0 * x, tc_par)
    errs = []
    for h in (1 / 16, 1 / 32):
        dp = solver.assemble(dom, tc_par, h, 1)
        val = solver.norms(dp, f=f)["L2_wKinv"] ** 2
        # the active cells cover a rectangle of grid nodes; exact there too
        m = dp.mesh
        ci, cj = np.nonzero(m.cells)
        xa, xb = m.x0 + ci.min() * h, m.x0 + (ci.max() + 1) * h
        ya, yb = m.y0 + cj.min() * h, m.y0 + (cj.max() + 1) * h
        exact_covered = float(sy.integrate(x - y ** 2, (x, xa, xb), (y, ya, yb)))
        assert val == pytest.approx(exact_covered, rel=1e-12)
        errs.append(abs(val - exact_full))
    assert errs[1] < errs[0]


def test_unfactored_data_rejected(dp_half):
    with pytest.raises(ValueError):
        solver.norms(dp_half, f=lambda x, y: x)


def test_zero_forcing_gives_zero(dp_half):
    res = solver.solve_closed_dirichlet(dp_half, zero_function)
    assert not res.u.any() and res.residual_hneg1 == 0.0


def test_consistency_for_discrete_solution(dp_half):
    rng = np.random.default_rng(1)
    u_star = rng.standard_normal(dp_half.n)
    F = -(dp_half.B @ u_star)
    res = solver.solve_closed_dirichlet(dp_half, F)
    assert np.allclose(res.u, u_star, atol=1e-8 * np.abs(u_star).max())
    assert res.relative_residual < 1e-10


def test_kkt_and_cg_agree(dp_half, tc_par):
    f = Bump((0.5, 0.1), 0.2).forcing(tc_par)
    a = solver.solve_closed_dirichlet(dp_half, f, "kkt")
    b = solver.solve_closed_dirichlet(dp_half, f, "cg")
    assert np.allclose(a.u, b.u, atol=1e-7 * np.abs(a.u).max())
    assert a.optimality < 1e-10 and b.optimality < 1e-6


def test_elliptic_only_matches_galerkin(tc_par):
    dom = build_box(1.0, 2.0, -0.4, 0.4, tc_par)
    dp = solver.assemble(dom, tc_par, 1 / 16, 1)
    u_b = Bump((1.5, 0.0), 0.3)
    res = solver.solve_closed_dirichlet(dp, u_b.forcing(tc_par))
    F = dp.mesh.load(u_b.forcing(tc_par))
    u_gal = spl.spsolve(dp.A.tocsc(), -F)
    assert np.allclose(res.u, u_gal, atol=1e-10)


def test_elliptic_convergence_rate_two(tc_par):
    dom = build_box(1.0, 2.0, -0.5, 0.5, tc_par)
    rows = solver.convergence_study(dom, tc_par, Bump((1.5, 0.0), 0.35), [1 / 16, 1 / 32, 1 / 64],
                                    test_refinement=1)
    assert 1.7 < rows[-1]["rate"] < 2.3


def test_zero_exact_solution_study(half_disk, tc_par):
    rows = solver.convergence_study(half_disk, tc_par, zero_function, [1 / 8, 1 / 16])
    assert all(r["error_L2K"] == 0.0 for r in rows)


def test_apriori_random_bounded_by_exact_sup(dp_half):
    r1 = solver.estimate_lemma1_constant(dp_half, 10, seed=4)
    r2 = solver.estimate_lemma1_constant(dp_half, 10, seed=4)
    assert r1["ratios"] == r2["ratios"]
    ex = solver.estimate_lemma1_constant(dp_half, mode="eig")
    assert np.isfinite(ex["max"])
    assert r1["max"] <= ex["max"] * (1 + 1e-6)


def test_uniqueness_failure_reported(dp_half):
    B = dp_half.B.tolil()
    B[:, 0] = 0
    broken = solver.DiscreteProblem(**{**dp_half.__dict__, "B": B.tocsr(), "_cache": {}})
    with pytest.raises(UniquenessFailure) as ei:
        broken.kkt()
    w = ei.value.witness
    assert w is not None and np.linalg.norm(broken.B @ w) < 1e-8


def test_poincare_scaling_law():
    tc = ConstantCoefficient(1.0)
    big = solver.assemble(build_box(0, 1, 0, 1), tc, 1 / 16, 1)
    small = solver.assemble(build_box(0, 0.5, 0, 0.5), tc, 1 / 32, 1)
    lb = solver.estimate_poincare_constant(big)["lambda"]
    ls = solver.estimate_poincare_constant(small)["lambda"]
    assert ls / lb == pytest.approx(4.0, rel=1e-8)


def test_poincare_matches_eigsh(dp_half):
    lam = solver.estimate_poincare_constant(dp_half)["lambda"]
    ref = spl.eigsh(dp_half.G.tocsc(), k=1, M=dp_half.M_I.tocsc(), sigma=0, which="LM")[0][0]
    assert lam == pytest.approx(ref, rel=1e-9)


def test_poincare_degenerate_K_positive(half_disk, tc_par):
    lams = [solver.estimate_poincare_constant(solver.assemble(half_disk, tc_par, h, 1))["lambda"]
            for h in (1 / 16, 1 / 32)]
    assert min(lams) > 0


def test_poincare_iteration_cap(dp_half):
    with pytest.raises(ConvergenceError):
        solver.estimate_poincare_constant(dp_half, maxiter=1)


def test_empty_mesh_rejected(half_disk, tc_par):
    with pytest.raises(GeometryError):
        solver.assemble(half_disk, tc_par, 1.0)


def test_energy_pairing_matches_quadrature(half_disk, tc_par):
    """(v, L Hv) via the stiffness matrix against the quadrature of the identity."""
    coeffs = lemma1_coefficients(4.0, 1.0, 0.25)
    v = Bump((0.5, 0.1), 0.3)
    h = 1 / 64
    dp = solver.assemble(half_disk, tc_par, h, 1)
    X, Y = dp.nodes()
    u, ux, uy, _, _ = v.derivatives(X, Y)
    Hv = -coeffs.M_const * u + 4 * X * ux + Y * uy
    pairing = -(u @ (dp.A @ Hv))
    terms = energy_identity_terms(v, coeffs, half_disk, make_grid(half_disk, h), tc_par)
    assert pairing == pytest.approx(terms["boundary"] + terms["interior"], rel=0.05)


def test_nodal_forcing_close_to_analytic(half_disk, tc_par):
    # the bump forcing is steep; its nodal interpolant needs a fine grid
    dp = solver.assemble(half_disk, tc_par, 1 / 64)
    f = Bump((0.5, 0.1), 0.2).forcing(tc_par)
    vals = dp.grid.sample(f, mask=np.ones_like(dp.grid.inside))
    a = solver.solve_closed_dirichlet(dp, f)
    n = solver.solve_closed_dirichlet(dp, solver.NodalForcing(dp.grid, vals))
    assert np.linalg.norm(a.u - n.u) < 0.1 * np.linalg.norm(a.u)
