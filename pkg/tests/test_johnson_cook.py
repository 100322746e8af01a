import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowlaw.johnson_cook import (
    STEEL_42CRMO4 as P,
    DomainError,
    JohnsonCookLaw,
    JohnsonCookParams,
    ThermalElasticParams,
    jc_derivatives,
    jc_flow_stress,
)

# Frozen from a 40-digit mpmath evaluation of the closed form (sigma and
# mpmath.diff of each argument), independent of this package.
ORACLE = [
    ((0.5, 500.0, 300.0), 1205.3073467988315778,
     (163.64134937038244941, 0.020330017272189951199, -0.87216762394934986101)),
    ((0.1, 10.0, 100.0), 1199.1597319922051716,
     (686.93748112653702386, 1.045820161245262465, -0.67285463166934820374)),
    ((1.0, 50000.0, 500.0), 1118.6601840398731034,
     (81.261996693014781946, 0.00018163115427208467763, -1.0039337318965717917)),
]


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def test_reference_point_is_A():
    assert jc_flow_stress(P, 0.0, 1.0, 20.0) == 806.0


@pytest.mark.parametrize("eps_p, rate", [(0.0, 1.0), (0.3, 100.0), (2.0, 1e5)])
def test_zero_at_melt(eps_p, rate):
    assert jc_flow_stress(P, eps_p, rate, 1540.0) == 0.0
    assert jc_derivatives(P, eps_p, rate, 1540.0)[0] == 0.0


@pytest.mark.parametrize("point, sigma, derivs", ORACLE)
def test_against_high_precision_oracle(point, sigma, derivs):
    assert jc_flow_stress(P, *point) == pytest.approx(sigma, rel=1e-14)
    np.testing.assert_allclose(jc_derivatives(P, *point), derivs, rtol=1e-12)


def test_loose_reference_value():
    assert abs(jc_flow_stress(P, 0.5, 500.0, 300.0) - 1205.2) < 0.2


def test_temperature_derivative_vanishes_at_room_temperature():
    assert jc_derivatives(P, 0.3, 10.0, 20.0)[2] == 0.0
    # decays like (T - T0)^(m - 1), i.e. slowly for m = 1.1
    near = [abs(jc_derivatives(P, 0.3, 10.0, 20.0 + d)[2]) for d in (1e-12, 1e-6, 1.0)]
    assert near[0] < near[1] < near[2]


def test_clamping():
    assert jc_flow_stress(P, 0.2, 0.01, 100.0) == jc_flow_stress(P, 0.2, 1.0, 100.0)
    assert jc_flow_stress(P, 0.2, 10.0, -50.0) == jc_flow_stress(P, 0.2, 10.0, 20.0)
    assert jc_flow_stress(P, 0.2, 10.0, 2000.0) == 0.0
    assert np.isfinite(jc_derivatives(P, 0.0, 10.0, 100.0)[0])


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_input_rejected(bad):
    with pytest.raises(DomainError):
        jc_flow_stress(P, bad, 1.0, 20.0)
    with pytest.raises(DomainError):
        jc_derivatives(P, 0.1, bad, 20.0)


def test_negative_strain_rejected():
    with pytest.raises(DomainError):
        jc_flow_stress(P, -0.1, 1.0, 20.0)


def test_param_validation():
    with pytest.raises(ValueError, match="T_melt"):
        JohnsonCookParams(806, 614, 0.0089, 0.168, 1.1, T_ref=100, T_melt=50)
    with pytest.raises(ValueError):
        JohnsonCookParams(-1, 614, 0.0089, 0.168, 1.1)
    with pytest.raises(ValueError):
        ThermalElasticParams(206.9, 0.5, 7830, 460, 12.3e-6, 0.9)


def test_elastic_constants():
    mat = ThermalElasticParams(206.9, 0.29, 7830, 460, 12.3e-6, 0.9)
    assert mat.shear_modulus == pytest.approx(206900 / 2.58)
    assert mat.lame_lambda == pytest.approx(206900 * 0.29 / (1.29 * 0.42))


def test_broadcasting():
    eps = np.linspace(0.0, 1.0, 5)
    out = jc_flow_stress(P, eps[:, None], 10.0, np.array([20.0, 300.0]))
    assert out.shape == (5, 2)
    assert np.all(np.diff(out, axis=0) > 0)


def test_law_adapter():
    law = JohnsonCookLaw()
    sigma, *derivs = law(0.5, 500.0, 300.0)
    assert sigma == jc_flow_stress(P, 0.5, 500.0, 300.0)
    assert derivs == list(jc_derivatives(P, 0.5, 500.0, 300.0))


strain = st.floats(1e-3, 1.0)
rate = st.floats(1.01, 5e4)  # FD stencil must stay above the clamp
temp = st.floats(20.5, 500.0)


@settings(max_examples=300, deadline=None)
@given(strain, rate, temp)
def test_derivatives_match_central_differences(e, r, T):
    d_eps, d_rate, d_T = jc_derivatives(P, e, r, T)
    assert d_eps == pytest.approx(central_diff(lambda v: jc_flow_stress(P, v, r, T), e, 1e-6 * e),
                                  rel=1e-5)
    assert d_rate == pytest.approx(central_diff(lambda v: jc_flow_stress(P, e, v, T), r, 1e-6 * r),
                                   rel=1e-5)
    assert d_T == pytest.approx(central_diff(lambda v: jc_flow_stress(P, e, r, v), T, 1e-6 * T),
                                rel=1e-5)


@settings(max_examples=200, deadline=None)
@given(strain, rate, temp)
def test_monotonicity(e, r, T):
    d_eps, d_rate, d_T = jc_derivatives(P, e, r, T)
    assert d_eps > 0 and d_rate > 0 and d_T < 0
