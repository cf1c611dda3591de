import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qesmms import jets as J
from qesmms import profiles as P
from qesmms.quadrature import DivergentIntegral, fixed_rule, integrate

finite = st.floats(-2.0, 2.0, allow_nan=False)


# --------------------------------------------------------------------------
# jets
# --------------------------------------------------------------------------


@given(x=st.floats(0.1, 3.0))
def test_jet_chain_rule_against_closed_derivatives(x):
    t = J.Jet.variable(x, 3)
    f = J.exp(J.sin(t)) * t
    # d/dx [x e^{sin x}] = e^{sin x} (1 + x cos x)
    assert f.d(1) == pytest.approx(math.exp(math.sin(x)) * (1 + x * math.cos(x)), rel=1e-13)


@given(x=st.floats(0.2, 3.0))
def test_jet_log_sqrt_tanh(x):
    t = J.Jet.variable(x, 2)
    assert J.log(t).d(2) == pytest.approx(-1.0 / x**2, rel=1e-13)
    assert J.sqrt(t).d(1) == pytest.approx(0.5 / math.sqrt(x), rel=1e-13)
    assert J.tanh(t).d(1) == pytest.approx(1.0 / math.cosh(x) ** 2, rel=1e-12)


def test_jet_division_and_power():
    t = J.Jet.variable(2.0, 3)
    q = (t * t + 1.0) / t
    assert q.d(1) == pytest.approx(1 - 1 / 4)
    assert q.d(3) == pytest.approx(-6 / 16)
    p = t**2.5
    assert p.d(2) == pytest.approx(2.5 * 1.5 * 2.0**0.5)


def test_taylor_integrate_exponential():
    # y' = y, y(0) = 1: coefficients 1/k!
    ys = J.taylor_integrate(lambda y: [y[0]], [np.array(1.0)], 6)
    np.testing.assert_allclose(ys[0].derivatives(), np.ones(7), rtol=1e-14)


def test_taylor_integrate_harmonic_oscillator():
    ys = J.taylor_integrate(lambda y: [y[1], -y[0]], [np.array(0.0), np.array(1.0)], 5)
    # sin: 0, 1, 0, -1, 0, 1
    np.testing.assert_allclose(ys[0].derivatives(), [0, 1, 0, -1, 0, 1], atol=1e-15)


# --------------------------------------------------------------------------
# closed-form catalog
# --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "prof, f, df",
    [
        (P.sin(2.0, 3.0, 0.5), lambda x: 2 * np.sin(3 * x + 0.5), lambda x: 6 * np.cos(3 * x + 0.5)),
        (P.cosh(1.5, 0.5), lambda x: 1.5 * np.cosh(0.5 * x), lambda x: 0.75 * np.sinh(0.5 * x)),
        (P.sech2(1.0, 1.0), lambda x: 1 / np.cosh(x) ** 2, lambda x: -2 * np.tanh(x) / np.cosh(x) ** 2),
        (P.exp_quadratic(-0.5, 0.2, 0.1, 2.0), lambda x: 2 * np.exp(-0.5 * x**2 + 0.2 * x + 0.1),
         lambda x: 2 * (-x + 0.2) * np.exp(-0.5 * x**2 + 0.2 * x + 0.1)),
        (P.polynomial([1, -2, 3]), lambda x: 1 - 2 * x + 3 * x**2, lambda x: -2 + 6 * x),
    ],
)
def test_catalog_values_and_derivatives(prof, f, df):
    x = np.linspace(0.1, 2.0, 7)
    w, w1 = prof.derivatives(x, 1)
    np.testing.assert_allclose(w, f(x), rtol=1e-14)
    np.testing.assert_allclose(w1, df(x), rtol=1e-13, atol=1e-14)


@given(a=finite, b=finite, x=st.floats(0.1, 2.0))
def test_profile_algebra_is_pointwise(a, b, x):
    f, g = P.sin(1.0, 1.0, a), P.exp_quadratic(0.1, b)
    assert (f + g)(x) == pytest.approx(f(x) + g(x), abs=1e-14)
    assert (f * g)(x) == pytest.approx(f(x) * g(x), rel=1e-13, abs=1e-14)
    assert (f - 2.0)(x) == pytest.approx(f(x) - 2.0, abs=1e-14)
    assert (g / g)(x) == pytest.approx(1.0, rel=1e-14)


def test_derivative_profile_matches_jet():
    f = P.sin() * P.exp_quadratic(0.3)
    x = np.linspace(0.0, 1.0, 5)
    np.testing.assert_allclose(f.derivative()(x), f.derivatives(x, 1)[1], rtol=1e-14)


def test_restrict_enforces_domain():
    f = P.log(P.identity()).restrict(0.5, 2.0)
    assert f(1.0) == 0.0
    with pytest.raises(P.DomainError):
        f(3.0)


def test_spec_round_trip_of_composite():
    f = (P.sin(2.0, 0.5) + P.constant(1.0)) * P.cosh() ** 1.5 / P.exp(P.identity() * 0.3)
    g = P.profile_from_spec(f.to_spec())
    x = np.linspace(0.1, 2.0, 9)
    np.testing.assert_array_equal(f(x), g(x))
    assert g.to_spec() == f.to_spec()


def test_unknown_spec_kind_is_rejected():
    with pytest.raises(ValueError):
        P.profile_from_spec({"kind": "mystery"})


# --------------------------------------------------------------------------
# sampled profiles
# --------------------------------------------------------------------------


def test_sampled_profile_converges_at_documented_orders():
    errs = {0: [], 2: []}
    hs = []
    for N in (41, 81, 161):
        x = np.linspace(0.0, 2.0, N)
        sp = P.SampledProfile(x, np.sin(x))
        hs.append(x[1] - x[0])
        t = np.linspace(0.3, 1.7, 200)
        vals = sp.derivatives(t, 2)
        errs[0].append(np.max(np.abs(vals[0] - np.sin(t))))
        errs[2].append(np.max(np.abs(vals[2] + np.sin(t))))
    expected = P.SampledProfile(np.linspace(0, 1, 10), np.zeros(10)).error_orders
    for k in (0, 2):
        rate = math.log(errs[k][0] / errs[k][2]) / math.log(hs[0] / hs[2])
        assert rate >= expected[k] - 1.0


def test_sampled_profile_refuses_fourth_derivative():
    sp = P.SampledProfile(np.linspace(0, 1, 20), np.linspace(0, 1, 20) ** 2)
    with pytest.raises(P.InsufficientSmoothness):
        sp.derivatives(0.5, 4)


@pytest.mark.parametrize("grid, order", [([0, 1, 1, 2, 3, 4, 5], 5), ([0, 1, 2], 5), (list(range(10)), 3)])
def test_sampled_profile_validation(grid, order):
    with pytest.raises(ValueError):
        P.SampledProfile(np.array(grid, float), np.zeros(len(grid)), order)


def test_sampled_round_trip_is_exact_data():
    x = np.linspace(0, 1, 30)
    sp = P.SampledProfile(x, np.exp(x))
    back = P.profile_from_spec(sp.to_spec())
    np.testing.assert_array_equal(back.values, sp.values)
    np.testing.assert_array_equal(back(x[3:7] + 0.01), sp(x[3:7] + 0.01))


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


def test_quadrature_polynomial_and_endpoint_singularity():
    assert integrate(lambda x: x**3, 0.0, 2.0).value == pytest.approx(4.0, rel=1e-13)
    # nodes are stored as distances to the left end, so a singularity there is resolved to rounding
    assert integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0).value == pytest.approx(2.0, rel=1e-12)
    # written in terms of x, 1 - x cancels within ~1e-16 of the right end, which costs O(sqrt(eps))
    assert integrate(lambda x: 1 / np.sqrt(x * (1 - x)), 0.0, 1.0).value == pytest.approx(math.pi, rel=1e-7)


def test_quadrature_gaussian_tail():
    res = integrate(lambda x: np.exp(-0.5 * x * x), 0.0, math.inf)
    assert res.value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    full = integrate(lambda x: np.exp(-x * x), -math.inf, math.inf)
    assert full.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_quadrature_divergent_tail_is_refused():
    with pytest.raises(DivergentIntegral):
        integrate(lambda x: np.exp(0.1 * x), 0.0, math.inf)


def test_quadrature_error_estimate_shrinks_with_level():
    f = lambda x: np.cos(x) * np.exp(x)  # noqa: E731
    errs = [integrate(f, 0.0, 3.0, level=L).error for L in (3, 4, 5)]
    assert errs[0] > errs[1] > errs[2]


def test_fixed_rule_nodes_are_interior_and_nested():
    x3, _ = fixed_rule(0.0, 1.0, 3)
    x4, _ = fixed_rule(0.0, 1.0, 4)
    assert np.all((x3 > 0) & (x3 < 1))
    assert np.isin(x3, x4).mean() > 0.95
