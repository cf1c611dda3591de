import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import M_CHOICES, random_smms
from qesmms import profiles as P
from qesmms.core import (
    DimParam,
    RadialSmms,
    bakry_emery_ricci,
    bianchi_operator_residual,
    bianchi_residual,
    curvature,
    field_sample,
    interior_grid,
    mu_limit_check,
    pole_limit,
    qe_verify,
    radial_hessian,
    weighted_laplacian,
    weighted_scalar,
)
from qesmms.families import cigar_mu, elliptic_constants, elliptic_gaussian

# --------------------------------------------------------------------------
# DimParam
# --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, variant",
    [(3, "Finite"), (0, "Finite"), ("+inf", "PosInfinity"), ("-inf", "NegInfinity"), (float("inf"), "PosInfinity"),
     (" Infinity", "PosInfinity"), (-0.5, "Finite")],
)
def test_dimparam_parse(raw, variant):
    assert DimParam.parse(raw).variant == variant
    assert DimParam.parse(0).is_zero


def test_dimparam_json_tokens_round_trip():
    for raw in (2.5, 0, "+inf", "-inf"):
        d = DimParam.parse(raw)
        assert DimParam.parse(d.to_json()) == d
    assert DimParam.parse("+inf").to_json() == "+inf"


@pytest.mark.parametrize("bad", [float("nan"), "many", True, None])
def test_dimparam_rejects_garbage(bad):
    with pytest.raises(ValueError):
        DimParam.parse(bad)


# --------------------------------------------------------------------------
# construction checks
# --------------------------------------------------------------------------


def test_psi_required_for_n_at_least_two():
    with pytest.raises(ValueError):
        RadialSmms(2, 1.0, (0.5, 1.5))


def test_infinite_m_needs_phi_form():
    with pytest.raises(ValueError):
        RadialSmms(2, "+inf", (0.5, 1.5), psi=P.identity(), density=P.constant(1.0), density_kind="v")


def test_bad_pole_is_rejected():
    with pytest.raises(ValueError):
        RadialSmms(2, 1.0, (0.0, 1.0), psi=P.identity() * 2.0, poles=("left",))


def test_nonpositive_density_is_rejected():
    with pytest.raises(ValueError):
        RadialSmms(2, 2.0, (0.5, 2.0), psi=P.identity(), density=P.polynomial([1.0, -1.0]))


def test_point_outside_domain_is_an_error():
    s = RadialSmms(3, 2.0, (0.5, 1.5), psi=P.identity())
    with pytest.raises(ValueError):
        bakry_emery_ricci(s, 2.0)


def test_spec_round_trip_is_exact():
    s = elliptic_gaussian(3, 4.0, 1)
    t = RadialSmms.from_spec(s.to_spec())
    r = interior_grid(s, 17)
    assert t.to_spec() == s.to_spec()
    np.testing.assert_array_equal(bakry_emery_ricci(s, r)[0], bakry_emery_ricci(t, r)[0])


# --------------------------------------------------------------------------
# weighted Laplacian
# --------------------------------------------------------------------------


def test_flat_r3_laplacian_of_r_squared():
    s = RadialSmms(3, 2.0, (0.0, 5.0), psi=P.identity(), poles=("left",))
    r = np.array([0.3, 1.0, 4.2])
    np.testing.assert_allclose(weighted_laplacian(s, P.polynomial([0, 0, 1]), r), 6.0, rtol=0, atol=1e-13)


def test_gaussian_drift_laplacian_value():
    s = RadialSmms(2, "+inf", (0.0, math.inf), psi=P.identity(), density=P.polynomial([0, 0, 0.5]),
                   density_kind="phi", poles=("left",))
    assert weighted_laplacian(s, P.polynomial([0, 0, 1]), 1.0) == pytest.approx(2.0, abs=1e-14)


def test_m_zero_ignores_density():
    w = P.sin(1.0, 1.3)
    a = RadialSmms(3, 0, (0.5, 1.5), psi=P.cosh(), density=P.exp_quadratic(0.3, 0.1))
    b = RadialSmms(3, 0, (0.5, 1.5), psi=P.cosh())
    r = interior_grid(a, 11)
    np.testing.assert_array_equal(weighted_laplacian(a, w, r), weighted_laplacian(b, w, r))
    np.testing.assert_array_equal(weighted_scalar(a, r), weighted_scalar(b, r))


def test_radial_hessian_of_r_squared_on_flat_space():
    s = RadialSmms(4, 0, (0.1, 2.0), psi=P.identity())
    rr, tan = radial_hessian(s, P.polynomial([0, 0, 1]), np.array([0.5, 1.5]))
    np.testing.assert_allclose(rr, 2.0, atol=1e-14)
    np.testing.assert_allclose(tan, 2.0, atol=1e-14)


# --------------------------------------------------------------------------
# Bakry-Emery Ricci and weighted scalar
# --------------------------------------------------------------------------


def test_positive_gaussian_n2_m3_is_unit_einstein():
    s = RadialSmms(2, 3.0, (0.0, math.pi), psi=P.sin(2.0, 0.5), density=P.cos(1.0, 0.5), poles=("left",))
    r = np.linspace(0.05, 3.0, 40)
    rr, tan = bakry_emery_ricci(s, r)
    np.testing.assert_allclose(rr, 1.0, atol=1e-13)
    np.testing.assert_allclose(tan, 1.0, atol=1e-13)


@pytest.mark.parametrize("m", [0, 2.0, -1.5, "+inf"])
def test_flat_space_with_constant_density_is_flat(m):
    kind = "phi" if m == "+inf" else "v"
    dens = P.constant(0.0 if kind == "phi" else 2.0)
    s = RadialSmms(3, m, (0.1, 3.0), psi=P.identity(), density=dens, density_kind=kind)
    rr, tan = bakry_emery_ricci(s, np.array([0.5, 2.0]))
    np.testing.assert_allclose(rr, 0.0, atol=1e-15)
    np.testing.assert_allclose(tan, 0.0, atol=1e-15)


def test_gaussian_first_integral_n3_m5():
    s = elliptic_gaussian(3, 5.0, 1)
    lam, mu = elliptic_constants(3, 5.0, 1)
    assert mu == pytest.approx(4.0 / 7.0)
    r = interior_grid(s, 50)
    np.testing.assert_allclose(weighted_scalar(s, r) + 5.0 * mu / s.v(r) ** 2, 8.0, atol=1e-11)


def test_unit_sphere_scalar_curvature():
    s = RadialSmms(2, 0, (0.0, math.pi), psi=P.sin(), poles=("left", "right"))
    np.testing.assert_allclose(weighted_scalar(s, np.linspace(0.1, 3.0, 9)), 2.0, atol=1e-13)


def test_m_continuity_towards_infinity():
    phi = P.sin(0.4, 1.2)
    psi = P.cosh(1.0, 0.5)
    big = RadialSmms(3, 1e6, (0.5, 1.5), psi=psi, density=phi, density_kind="phi")
    inf = RadialSmms(3, "+inf", (0.5, 1.5), psi=psi, density=phi, density_kind="phi")
    r = interior_grid(big, 20)
    for a, b in zip(bakry_emery_ricci(big, r) + (weighted_scalar(big, r),), bakry_emery_ricci(inf, r) + (weighted_scalar(inf, r),)):
        assert np.max(np.abs(a - b)) <= 1e-5 * max(1.0, np.max(np.abs(b)))


# --------------------------------------------------------------------------
# independent oracle: coordinate Ricci tensor with sympy
# --------------------------------------------------------------------------


def _coordinate_ricci(g, coords):
    n = len(coords)
    ginv = g.inv()
    gam = [[[sum(ginv[k, l] * (sp.diff(g[l, i], coords[j]) + sp.diff(g[l, j], coords[i]) - sp.diff(g[i, j], coords[l]))
                 for l in range(n)) / 2 for j in range(n)] for i in range(n)] for k in range(n)]
    ric = sp.zeros(n, n)
    for i in range(n):
        for j in range(n):
            ric[i, j] = sum(
                sp.diff(gam[k][i][j], coords[k]) - sp.diff(gam[k][i][k], coords[j])
                + sum(gam[k][k][p] * gam[p][i][j] - gam[k][j][p] * gam[p][i][k] for p in range(n))
                for k in range(n)
            )
    return ric, gam


@pytest.fixture(scope="module")
def sympy_oracle():
    r, th, ph = sp.symbols("r theta phi")
    psi = sp.sin(r) + r**2 / 5
    v = 1 + sp.cos(r) / 3
    e = 1 + r / 4
    g = sp.diag(e**2, psi**2, psi**2 * sp.sin(th) ** 2)
    ric, gam = _coordinate_ricci(g, [r, th, ph])
    coords = [r, th, ph]
    hess = sp.Matrix(3, 3, lambda i, j: sp.diff(v, coords[i], coords[j]) - sum(gam[k][i][j] * sp.diff(v, coords[k]) for k in range(3)))
    m = sp.Rational(7, 2)
    be = ric - m * hess / v
    R = sum(g.inv()[i, i] * ric[i, i] for i in range(3))
    lap_v = sum(g.inv()[i, i] * hess[i, i] for i in range(3))
    grad2 = sp.diff(v, r) ** 2 / e**2
    rw = R - 2 * m * lap_v / v - m * (m - 1) * grad2 / v**2
    pts = [0.6, 1.1, 1.7]
    vals = []
    for x in pts:
        sub = {r: x, th: 0.9}
        vals.append(
            (float((be[0, 0] / e**2).subs(sub)), float((be[1, 1] / psi**2).subs(sub)), float(rw.subs(sub)))
        )
    return np.array(pts), np.array(vals)


def test_bakry_emery_ricci_matches_sympy_coordinates(sympy_oracle):
    pts, vals = sympy_oracle
    s = RadialSmms(3, 3.5, (0.3, 2.0), psi=P.sin() + P.polynomial([0, 0, 0.2]), density=P.cos(1.0 / 3.0) + 1.0,
                   e=P.polynomial([1.0, 0.25]))
    rr, tan = bakry_emery_ricci(s, pts)
    np.testing.assert_allclose(rr, vals[:, 0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(tan, vals[:, 1], rtol=0, atol=1e-12)
    np.testing.assert_allclose(weighted_scalar(s, pts), vals[:, 2], rtol=0, atol=1e-11)


# --------------------------------------------------------------------------
# identities (property tests)
# --------------------------------------------------------------------------


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), m=st.sampled_from(M_CHOICES))
def test_bianchi_identities_hold(seed, n, m):
    s = random_smms(np.random.default_rng(seed), n=n, m=m)
    r = interior_grid(s, 24)
    assert np.max(np.abs(bianchi_residual(s, r))) <= 1e-9
    assert np.max(np.abs(bianchi_operator_residual(s, r))) <= 1e-9


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), m=st.sampled_from(M_CHOICES))
def test_trace_identity_holds(seed, n, m):
    s = random_smms(np.random.default_rng(seed), n=n, m=m)
    c = curvature(s, interior_grid(s, 24), with_bianchi=False)
    assert np.max(np.abs(c.trace_defect(n))) <= 1e-10


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_m_zero_equals_unweighted(seed, n):
    rng = np.random.default_rng(seed)
    s = random_smms(rng, n=n, m=0.0)
    bare = s.with_(density=None)
    r = interior_grid(s, 16)
    for a, b in zip(bakry_emery_ricci(s, r), bakry_emery_ricci(bare, r)):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("m", [2.0, 7.0, "+inf", 0])
def test_gaussian_identities(sign, m):
    s = elliptic_gaussian(3, m, sign)
    # keep 1% away from the equator, where v^-3 factors amplify rounding
    r = interior_grid(s, 40, margin=1e-2)
    assert np.max(np.abs(bianchi_residual(s, r))) <= 1e-9
    assert np.max(np.abs(bianchi_operator_residual(s, r))) <= 1e-9


def test_sampled_cigar_bianchi_within_interpolation_bound():
    from qesmms.families import cigar_solve

    traj = cigar_solve(3.0)
    t = traj.t
    sampled = traj.smms.with_(
        psi=P.SampledProfile(t, traj.columns["psi"]), density=P.SampledProfile(t, traj.columns["v"])
    )
    r = np.linspace(0.5, 9.0, 50)
    # third derivatives of a quintic spline through data spaced h apart carry an error of order h^2
    h = t[1] - t[0]
    assert np.max(np.abs(bianchi_residual(sampled, r))) <= 50 * h**2


# --------------------------------------------------------------------------
# qe_verify
# --------------------------------------------------------------------------


def test_negative_gaussian_constants():
    rep = qe_verify(elliptic_gaussian(2, 4.0, -1))
    assert rep.passed
    assert rep.lambda_fit == pytest.approx(-1.0, abs=1e-9)
    assert rep.mu_fit == pytest.approx(-0.6, abs=1e-9)


def test_round_s3_with_m2_has_mu_equal_lambda():
    s = RadialSmms(3, 2.0, (0.0, math.pi), psi=P.sin(), poles=("left", "right"), compact=True)
    rep = qe_verify(s)
    assert rep.is_quasi_einstein
    assert rep.lambda_fit == pytest.approx(2.0, abs=1e-12)
    assert rep.mu_fit == pytest.approx(2.0, abs=1e-12)


def test_non_quasi_einstein_is_detected():
    s = RadialSmms(2, 2.0, (0.1, 1.0), psi=P.identity(), density=P.polynomial([1, 0, 1]))
    rep = qe_verify(s)
    assert rep.max_residual > 0.1
    assert not rep.passed
    assert "quasi_einstein_residual" in rep.failing()


def test_qe_verify_grid_validation():
    s = elliptic_gaussian(2, 3.0)
    with pytest.raises(ValueError):
        qe_verify(s, grid=[])
    with pytest.raises(ValueError):
        qe_verify(s, grid=[0.1, 0.2])


def test_mu_prime_only_at_plus_infinity():
    with pytest.raises(ValueError):
        qe_verify(elliptic_gaussian(2, "-inf", 1), characteristic="mu_prime")
    rep = qe_verify(elliptic_gaussian(2, "+inf", 1), characteristic="mu_prime")
    assert rep.mu_prime == pytest.approx(0.0, abs=1e-12)


def test_report_serialises():
    d = qe_verify(elliptic_gaussian(2, 3.0)).to_dict()
    assert d["passed"] and d["m"] == 3.0 and "scalar_lower_bound" in d["inequality_checks"]


def test_field_sample_blocks_have_multiplicities():
    fs = field_sample(elliptic_gaussian(4, 3.0), np.linspace(0.1, 1.0, 8))
    assert [k for k, _ in fs.blocks] == [1, 3]


def test_pole_limit_of_scalar_curvature_on_sphere():
    s = RadialSmms(2, 0, (0.0, math.pi), psi=P.sin(), poles=("left", "right"))
    val, err = pole_limit(weighted_scalar, s, "left")
    assert val == pytest.approx(2.0, abs=1e-10)


# --------------------------------------------------------------------------
# mu_limit_check
# --------------------------------------------------------------------------


def test_mu_limit_gaussian_family():
    ms = [1e2, 1e3, 1e4, 1e5]
    fam = [(m, 1.0, (m - 1) / (m + 2)) for m in ms]
    tab = mu_limit_check(fam, (1.0, 0.0), n=3)
    assert tab.target_gap == -3.0
    assert tab.rows[-1].scaled_gap == pytest.approx(-3.0, abs=1e-3)
    assert tab.rates["scaled_gap"] == pytest.approx(1.0, abs=0.05)


def test_mu_limit_constant_family():
    tab = mu_limit_check([(m, 2.0, 2.0) for m in (10, 100, 1000)], (2.0, 6.0), n=3)
    assert all(r.gap_error == 0 for r in tab.rows)


def test_mu_limit_cigar_family():
    tab = mu_limit_check([(m, 0.0, cigar_mu(m)) for m in (1e2, 1e3, 1e4)], (0.0, 4.0), n=2)
    assert tab.rows[-1].scaled_gap == pytest.approx(4.0, rel=1e-3)


def test_mu_limit_from_reports_rejects_non_qe():
    bad = qe_verify(RadialSmms(2, 2.0, (0.1, 1.0), psi=P.identity(), density=P.polynomial([1, 0, 1])))
    with pytest.raises(ValueError):
        mu_limit_check([bad], (1.0, 0.0), n=2, tol=1e-9)
