import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coldplasma.coefficients import (ConstantCoefficient, Report, ConditionResult,
                                     cc_example_multiplier, cc_largeness,
                                     check_energy_coercivity, classify, classify_point,
                                     coefficient_from_dict, custom, custom_multiplier,
                                     dilation_multiplier, eval_type_change,
                                     lemma1_coefficients, multiplier_from_dict, parabolic,
                                     validate_sigma, zero_sigma)
from coldplasma.errors import HypothesisError

finite = st.floats(-5, 5, allow_nan=False)


def test_parabolic_values():
    tc = parabolic()
    K, (Kx, Ky) = eval_type_change(tc, np.array([1.0, 0.5]))
    assert K == pytest.approx(0.75)
    assert Kx == 1.0 and Ky == pytest.approx(-1.0)


def test_classify_point_examples():
    tc = parabolic()
    assert classify_point(tc, (1.0, 0.0)) == "elliptic"
    assert classify_point(tc, (-1.0, 0.0)) == "hyperbolic"
    assert classify_point(tc, (0.25, 0.5)) == "sonic"
    assert classify_point(zero_sigma(), (0.0, 3.0)) == "sonic"


@given(finite, finite)
def test_classify_matches_sign_of_K(x, y):
    tc = parabolic()
    k = float(tc.K(x, y))
    t = int(classify(tc, x, y))
    assert t == (1 if k > 1e-12 else (-1 if k < -1e-12 else 0))


@pytest.mark.parametrize("tc", [parabolic(), zero_sigma()])
def test_builtin_sigma_conditions(tc):
    assert validate_sigma(tc).ok


def test_sigma_violation_is_labelled():
    tc = custom(lambda y: np.asarray(y, float) ** 3, lambda y: 3 * np.asarray(y, float) ** 2)
    rep = validate_sigma(tc)
    assert rep.failed == ["(sig3)"]
    tc2 = custom(lambda y: np.asarray(y, float) + 1.0, lambda y: 0 * np.asarray(y, float) + 1)
    assert "(sig1)" in validate_sigma(tc2).failed


def test_coefficient_dict_round_trip():
    for tc in (parabolic(), zero_sigma(), ConstantCoefficient(2.5)):
        tc2 = coefficient_from_dict(tc.to_dict())
        assert float(tc2.K(0.3, 0.7)) == pytest.approx(float(tc.K(0.3, 0.7)))
    with pytest.raises(HypothesisError):
        coefficient_from_dict({"form": "cubic"})


def test_cc_multiplier_values():
    mf = cc_example_multiplier(10.0, 0.1)
    v = mf.evaluate(np.array([-3.0]), np.array([2.0]))
    assert v.b[0] == 7.0 and v.c[0] == pytest.approx(0.2)
    assert (v.b_x[0], v.b_y[0], v.c_x[0], v.c_y[0]) == (1.0, 0.0, 0.0, pytest.approx(0.1))
    assert v.a[0] == 0.0
    assert multiplier_from_dict(mf.to_dict()) == mf


def test_dilation_multiplier_uses_energy_constant():
    mf = dilation_multiplier(4.0, 1.0, 0.25)
    assert mf.a == pytest.approx(-0.25)
    v = mf.evaluate(2.0, 3.0)
    assert float(v.b) == 8.0 and float(v.c) == 3.0


def test_custom_multiplier_fd_derivatives():
    mf = custom_multiplier(lambda x, y: x * x * y, lambda x, y: np.sin(x) + y)
    v = mf.evaluate(np.array([0.7]), np.array([-0.4]))
    assert v.b_x[0] == pytest.approx(2 * 0.7 * -0.4, abs=1e-8)
    assert v.b_y[0] == pytest.approx(0.49, abs=1e-8)
    assert v.c_x[0] == pytest.approx(np.cos(0.7), abs=1e-8)
    assert v.c_y[0] == pytest.approx(1.0, abs=1e-8)


def test_energy_coefficients_formula():
    ec = lemma1_coefficients(4.0, 1.0, 0.25)
    assert ec.M_const == pytest.approx(0.25)
    assert ec.gamma_e == pytest.approx(1.75)
    assert lemma1_coefficients(4.0, 1.0).delta == 0.25


@pytest.mark.parametrize("args,label", [((3.0, 1.0, 0.1), "m>3mu"),
                                        ((4.0, 1.0, 0.5), "delta<=mu/4"),
                                        ((4.0, -1.0, 0.1), "mu>0")])
def test_energy_hypotheses_named(args, label):
    with pytest.raises(HypothesisError) as ei:
        lemma1_coefficients(*args)
    assert ei.value.condition == label


@settings(max_examples=200)
@given(st.floats(0.2, 2.0), st.floats(0.01, 3.0), st.floats(0.01, 1.0),
       st.floats(-3, 3), st.floats(-3, 3))
def test_alpha_reduces_on_parabolic(mu, extra, frac, x, y):
    m = 3 * mu + mu / 2 + extra
    delta = frac * mu / 4
    ec = lemma1_coefficients(m, mu, delta)
    closed = (m / 2 - mu - delta) * x + delta * y * y
    assert float(ec.alpha_e(x, y)) == pytest.approx(closed, abs=1e-10 * (1 + abs(x) + y * y))


def test_coercivity_margins_formula():
    ec = lemma1_coefficients(4.0, 1.0, 0.25)
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.uniform(0, 2, 500), rng.uniform(-2, 2, 500)])
    rep = check_energy_coercivity(ec, parabolic(), pts)
    assert rep.ok
    assert rep["gamma>mu-delta"].margin == pytest.approx(1.0)
    with pytest.raises(HypothesisError):
        check_energy_coercivity(ec, parabolic(), [[-0.1, 0.0]])


def test_cc_largeness():
    bbox = (-4.0, 4.0, -4.0, 4.0)
    assert cc_largeness(cc_example_multiplier(10.0, 0.1), bbox).ok
    rep = cc_largeness(cc_example_multiplier(0.01, 0.1), bbox)
    assert set(rep.failed) == {"b-positive", "M-large"}


def test_report_raise_names_condition():
    rep = Report([ConditionResult("(Q1)", False, -1.0, (0.0, 0.0))])
    with pytest.raises(HypothesisError) as ei:
        rep.raise_if_failed()
    assert ei.value.condition == "(Q1)"
    d = rep.to_dict()
    assert d["failed"] == ["(Q1)"] and d["conditions"][0]["location"] == [0.0, 0.0]
