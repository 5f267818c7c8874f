import numpy as np
import pytest

from coldplasma.coefficients import MultiplierField, dilation_multiplier, lemma1_coefficients
from coldplasma.errors import GeometryError, HypothesisError
from coldplasma.geometry import build_annular_sector
from coldplasma.grids import make_grid
from coldplasma.manufactured import Bump, random_bumps
from coldplasma.transport import (TransportProblem, characteristic_constant,
                                  energy_identity_terms, homogeneous_closed_form,
                                  solve_transport, sonic_boundary_form, trace_trajectory,
                                  transport_residual, verify_origin_limit)

MF = dilation_multiplier(4.0, 1.0, 0.1)      # a = -0.4


def test_multiplier_constant():
    assert MF.a == pytest.approx(-0.4)


@pytest.mark.parametrize("p0", [(0.3, 0.2), (0.1, -0.4), (0.6, 0.05)])
def test_characteristic_constant_conserved(half_disk, p0):
    path = trace_trajectory(MF, p0, domain=half_disk)
    assert path.status == "exited"
    C = characteristic_constant(4.0, 1.0, path.points[:, 0], path.points[:, 1])
    assert np.max(np.abs(C / C[0] - 1)) < 1e-8
    assert abs(half_disk.signed_distance(path.exit_point[None, :])[0]) < 1e-6


def test_trajectory_special_cases(half_disk):
    assert trace_trajectory(MF, (0.0, 0.0)).status == "stationary"
    assert trace_trajectory(MF, (0.5, 0.5), "backward", s_max=100.0).status == "origin"
    with pytest.raises(GeometryError):
        trace_trajectory(MF, (2.0, 0.0), domain=half_disk)


def test_problem_preconditions(half_disk):
    with pytest.raises(HypothesisError):
        TransportProblem(MultiplierField("dilation", a=0.3, m=4.0, mu=1.0), None, half_disk)
    with pytest.raises(GeometryError):
        TransportProblem(MF, None, build_annular_sector())


def test_terminal_condition(half_disk):
    tp = TransportProblem(MF, Bump((0.5, 0.1), 0.3), half_disk)
    arc = half_disk.arcs[1]
    pts = arc.point(np.linspace(0.05, 0.95, 30)) * (1 - 1e-9)
    sol = solve_transport(tp, make_grid(half_disk, 1 / 32), points=pts)
    assert np.max(np.abs(sol.values)) < 1e-6


def test_linearity(half_disk):
    grid = make_grid(half_disk, 1 / 32)
    u1, u2 = Bump((0.5, 0.1), 0.2), Bump((0.3, -0.4), 0.15, 2.0)
    pts = grid.points()[::5]
    v = lambda src: solve_transport(TransportProblem(MF, src, half_disk), grid, points=pts).values
    both = v(lambda x, y: u1(x, y) + u2(x, y))
    assert np.allclose(both, v(u1) + v(u2), atol=1e-12)


def test_closed_form_solves_homogeneous_equation():
    x, y, h = 0.4, 0.3, 1e-6
    f = lambda x, y: homogeneous_closed_form(lambda s: s / (1 + s), 4.0, 1.0, -0.4, x, y)
    vx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    vy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    assert -0.4 * f(x, y) + 4 * x * vx + y * vy == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(ValueError):
        homogeneous_closed_form(lambda s: s, 4.0, 1.0, -0.4, 0.1, 0.0)


def test_boundary_datum_reproduces_closed_form(half_disk):
    phi = lambda s: s
    g = lambda x, y: homogeneous_closed_form(phi, 4.0, 1.0, -0.4, x, y)
    tp = TransportProblem(MF, None, half_disk, boundary_data=g)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0.1, 0.5, 40), rng.uniform(0.3, 0.6, 40)])
    sol = solve_transport(tp, make_grid(half_disk, 1 / 16), points=pts)
    exact = g(pts[:, 0], pts[:, 1])
    assert np.max(np.abs(sol.values / exact - 1)) < 1e-6


def test_residual_decreases(half_disk):
    tp = TransportProblem(MF, Bump((0.5, 0.1), 0.2), half_disk)
    res = [transport_residual(tp, solve_transport(tp, make_grid(half_disk, h)).field)
           for h in (1 / 16, 1 / 32, 1 / 64)]
    assert res[0] > res[1] > res[2]


def test_origin_limit():
    v = lambda x, y: homogeneous_closed_form(lambda s: s, 4.0, 1.0, -0.4, x, y)
    rep = verify_origin_limit(v, 4.0, 1.0)
    # along y = C x**(1/4), v = C**-4 y**0.4, approaching r**0.4 as r -> 0
    assert rep["passed"] and rep["monotone"]
    assert 0.2 < rep["decay_exponent"] < 0.5
    grow = verify_origin_limit(lambda x, y: 1 / np.hypot(x, y), 4.0, 1.0)
    assert not grow["passed"]


def test_energy_identity_single_seed(half_disk):
    coeffs = lemma1_coefficients(4.0, 1.0, 0.25)
    v = random_bumps(half_disk, 0)
    t32 = energy_identity_terms(v, coeffs, half_disk, make_grid(half_disk, 1 / 32))
    t64 = energy_identity_terms(v, coeffs, half_disk, make_grid(half_disk, 1 / 64))
    assert t64["relative_defect"] < t32["relative_defect"]
    assert t64["interior"] > 0
    assert t64["min_boundary_integrand"] >= -1e-8


def test_sonic_boundary_form_sign():
    # on x = y**2 traversed with dy < 0, c dx - b dy = (2 mu - m) y**2 dy >= 0 for m > 2 mu
    y = np.linspace(-1, 1, 21)
    assert np.all(sonic_boundary_form(4.0, 1.0, y, -1.0) >= 0)
