import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import bohm, cigar, lpp
from qesmms import profiles as P
from qesmms.core import RadialSmms, qe_from_fields, qe_verify
from qesmms.families import (
    Fiber,
    LppParams,
    ber_flat_background_check,
    bohm_bryant_solve,
    bryant_asymptotics_check,
    cigar_mu,
    cigar_solve,
    elliptic_constants,
    elliptic_gaussian,
    epsilon_independence,
    fit_power,
    fixed_point_I,
    fixed_point_K,
    hyperbolic_space,
    linearization_eigenvalues,
    lyapunov_kappa,
    product_flat,
    product_warped,
)
from qesmms.families.bohm import bohm_field

# --------------------------------------------------------------------------
# elliptic Gaussians
# --------------------------------------------------------------------------


@pytest.mark.parametrize("n, m, sign, expected", [(3, 4.0, 1, (1.0, 0.5)), (2, 3.0, -1, (-1.0, -0.5)), (4, "+inf", 1, (1.0, None))])
def test_elliptic_constants(n, m, sign, expected):
    assert elliptic_constants(n, m, sign) == expected


def test_elliptic_gaussian_rejects_bad_input():
    with pytest.raises(ValueError):
        elliptic_gaussian(3, -2.5)
    with pytest.raises(ValueError):
        elliptic_gaussian(3, 2.0, sign=0)
    with pytest.raises(ValueError):
        elliptic_gaussian(3, "-inf")


@given(n=st.integers(1, 5), m=st.floats(0.5, 12.0), sign=st.sampled_from([1, -1]))
def test_elliptic_gaussians_are_quasi_einstein(n, m, sign):
    s = elliptic_gaussian(n, m, sign)
    lo = s.domain[0] if math.isfinite(s.domain[0]) else -3.0
    hi = s.domain[1] if math.isfinite(s.domain[1]) else 3.0
    span = hi - lo
    rep = qe_verify(s, np.linspace(lo + 0.02 * span, hi - 0.02 * span, 40), tol=1e-8)
    lam, mu = elliptic_constants(n, m, sign)
    assert rep.is_quasi_einstein
    assert rep.lambda_fit == pytest.approx(lam, abs=1e-9)
    if n >= 2:
        assert rep.mu_fit == pytest.approx(mu, abs=1e-8)


def test_hyperbolic_space_is_einstein():
    H = hyperbolic_space(3, 2.0)
    rep = qe_verify(H, np.linspace(0.1, 5.0, 30))
    assert rep.lambda_fit == pytest.approx(-2.0 / 4.0, abs=1e-12)


# --------------------------------------------------------------------------
# cigar
# --------------------------------------------------------------------------


@pytest.mark.parametrize("m, mu", [(2.0, 4.0), (5.0, 1.0), (101.0, 0.04), ("+inf", 4.0)])
def test_cigar_constant(m, mu):
    assert cigar_mu(m) == pytest.approx(mu, rel=1e-15)


@pytest.mark.parametrize("m", [1.0, 0.5, -2.0, "-inf"])
def test_cigar_needs_m_above_one(m):
    with pytest.raises(ValueError):
        cigar_solve(m)


def test_cigar_at_infinity_is_closed_form():
    t = cigar("+inf")
    r = t.columns["r"]
    np.testing.assert_allclose(t.columns["psi"], np.tanh(r), atol=1e-15)
    assert t.constants["mu_prime"] == 4.0


@pytest.mark.parametrize("m", [3.0, 10.0])
def test_cigar_is_ber_flat(m):
    t = cigar(m)
    assert np.max(np.abs(t.columns["integrability_residual"])) <= 1e-11
    chk = ber_flat_background_check(t.smms)
    assert chk["mu"] == pytest.approx(cigar_mu(m), rel=1e-10)
    assert chk["max_residual"] <= 1e-9
    assert chk["consistent"]


def test_ber_flat_on_trivial_and_non_flat_densities():
    flat = RadialSmms(2, 3.0, (0.5, 2.0), psi=P.identity(), density=P.constant(1.0))
    chk = ber_flat_background_check(flat, mu=0.0)
    assert chk["trivial"] and chk["consistent"] and chk["max_residual"] == 0.0
    g = elliptic_gaussian(2, 3.0, 1)
    assert ber_flat_background_check(g)["max_residual"] > 1.0
    with pytest.raises(ValueError):
        ber_flat_background_check(RadialSmms(2, 0, (0.5, 2.0), psi=P.identity()))


# --------------------------------------------------------------------------
# Bohm and Bryant
# --------------------------------------------------------------------------


def test_fixed_point_K_three_two():
    np.testing.assert_allclose(fixed_point_K(3, 2.0), np.full(3, 1 / math.sqrt(3)), rtol=1e-15)


@pytest.mark.parametrize("n, m", [(3, 2.0), (4, 3.0), (5, 10.0), (3, "+inf"), (6, "+inf")])
def test_fixed_points_lie_on_the_sphere_and_are_stationary(n, m):
    f = bohm_field(n, m)
    for p in (fixed_point_I(n, m), fixed_point_K(n, m)):
        assert np.linalg.norm(p) == pytest.approx(1.0, abs=1e-15)
        assert np.max(np.abs(f(p))) <= 1e-14


@pytest.mark.parametrize("n, m", [(3, 2.0), (5, 10.0), (4, "+inf")])
def test_linearization_spectrum(n, m):
    expected = np.sort([1 / (n - 1), 2 / (n - 1), -(n - 2) / (n - 1)])
    np.testing.assert_allclose(linearization_eigenvalues(n, m), expected, atol=1e-12)


def test_bohm_needs_valid_parameters():
    with pytest.raises(ValueError):
        fixed_point_I(2, 3.0)
    with pytest.raises(ValueError):
        fixed_point_I(3, 0.5)


def test_bohm_slope_and_lyapunov():
    t = bohm(4, 3.0, 0.05)
    assert t.family == "bohm"
    assert t.constants["predicted_slope_sq"] == pytest.approx(2 / 5, rel=1e-15)
    assert t.constants["asymptotic_slope_sq"] == pytest.approx(2 / 5, rel=1e-2)
    assert np.all(np.diff(t.columns["log_kappa"]) < 0)
    np.testing.assert_allclose(lyapunov_kappa(4, 3.0, t.state), t.columns["kappa"], rtol=1e-12)
    assert np.max(np.abs(t.columns["sphere_defect"])) <= 1e-12


def test_bohm_reconstruction_is_steady_soliton():
    t = bohm(3, 2.0)
    grid = t.extra["qe_grid"]
    rep = qe_verify(t.smms, grid, tol=1e-8)
    assert rep.is_quasi_einstein
    assert rep.lambda_fit == pytest.approx(0.0, abs=1e-10)
    assert rep.mu_fit == pytest.approx(t.constants["mu"], abs=1e-9)
    chk = ber_flat_background_check(t.smms, grid=grid)
    # the residual is absolute and m v^-2 is of order one on the grid
    assert chk["mu"] == pytest.approx(1.0, abs=1e-9) and chk["max_residual"] <= 1e-7


def test_bryant_tail():
    t = bohm(3, "+inf")
    assert t.family == "bryant"
    fit = bryant_asymptotics_check(t)
    assert 0.95 <= fit["exponent"] <= 1.05
    assert fit["ratio_X_over_Y2"] == pytest.approx(fit["ratio_limit"], rel=1e-3)
    chk = ber_flat_background_check(t.smms, grid=t.extra["qe_grid"])
    assert chk["mu"] == pytest.approx(1.0, abs=1e-9)


def test_short_span_does_not_converge():
    from qesmms.families import NonConvergence

    with pytest.raises(NonConvergence):
        bohm_bryant_solve(3, 2.0, t_span=(0.0, 5.0))
    partial = bohm_bryant_solve(3, 2.0, t_span=(0.0, 5.0), require_convergence=False)
    assert partial.status != "converged"


@pytest.mark.parametrize("n, m", [(3, 2.0), (3, "+inf")])
def test_offset_independence(n, m):
    assert epsilon_independence(n, m) <= 1e-6


@given(p=st.floats(-3, 3), c=st.floats(0.1, 10))
def test_fit_power_recovers_synthetic_law(p, c):
    x = np.geomspace(1.0, 1e3, 50)
    pp, cc = fit_power(x, c * x**p)
    assert pp == pytest.approx(p, abs=1e-6)
    assert cc == pytest.approx(c, rel=1e-6)


def test_fit_power_rejects_bad_data():
    with pytest.raises(ValueError):
        fit_power([1.0], [2.0])
    with pytest.raises(ValueError):
        fit_power([1.0, 2.0], [1.0, -1.0])


def test_finite_m_tail_is_quadratic():
    t = bohm(3, 2.0)
    r, psi = t.columns["r"], t.columns["psi"]
    sel = r >= 0.5 * r[-1]
    p, _ = fit_power(r[sel], psi[sel] ** 2)
    assert p == pytest.approx(2.0, abs=0.05)


# --------------------------------------------------------------------------
# LPP
# --------------------------------------------------------------------------


@pytest.mark.parametrize("n, s, q", [(3, 1, 2), (5, 1, 2), (4, 2, 2), (4, 0, 2)])
def test_lpp_parameters_validated(n, s, q):
    with pytest.raises(ValueError):
        LppParams(n, s, q)


def test_lpp_twist_constant():
    assert LppParams(4, 1, 2).c == pytest.approx(4.0)


@pytest.mark.slow
def test_lpp_soliton_at_infinity():
    t = lpp("+inf")
    assert t.constants["mu_prime"] == pytest.approx(0.0, abs=1e-10)
    assert t.constants["lambda"] == pytest.approx(1.0, abs=1e-12)
    assert t.constants["closure_defect"] <= 1e-9
    assert np.max(np.abs(t.columns["integrability_residual"])) <= 1e-9


@pytest.mark.slow
def test_lpp_finite_m_normalisation():
    t = lpp(3.0)
    assert t.constants["mu"] == pytest.approx(2.0)
    rep = qe_from_fields(t.smms.field_sample(t.smms.interior_grid(64)), tol=1e-8)
    assert rep.is_quasi_einstein


# --------------------------------------------------------------------------
# products
# --------------------------------------------------------------------------


def test_zero_dimensional_fiber_is_identity():
    g = elliptic_gaussian(2, 3.0)
    res = product_flat(g, Fiber(0, 0.0))
    assert res.product.n == 2 and res.product.m == g.m
    assert res.report.lambda_fit == pytest.approx(1.0, abs=1e-10)


def test_fiber_with_wrong_constant_warns():
    g = elliptic_gaussian(2, 3.0)
    with pytest.warns(UserWarning):
        res = product_flat(g, Fiber(2, 0.25))
    assert res.block_residuals["fiber"] == pytest.approx(0.75, abs=1e-10)
    assert not res.report.is_quasi_einstein


def test_warped_product_with_full_fiber_is_einstein():
    g = elliptic_gaussian(2, 3.0)
    _, mu = elliptic_constants(2, 3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = product_warped(g, Fiber(3, mu))
    assert res.product.m.is_zero
    assert res.product.n == 5
    assert res.report.is_quasi_einstein
    assert res.report.lambda_fit == pytest.approx(1.0, abs=1e-10)


def test_warped_product_refuses_infinite_m():
    with pytest.raises(ValueError):
        product_warped(elliptic_gaussian(2, "+inf"), Fiber(1, 0.0))


def test_fiber_dimension_validated():
    with pytest.raises(ValueError):
        Fiber(-1, 0.0)
