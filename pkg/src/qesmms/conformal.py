"""Conformal changes of a radial SMMS, the quasi-Einstein scale system and duality.

A positive function ``u`` turns ``(g, v^m dvol_g)`` into
``(u^{-2} g, (v/u)^m dvol_{u^{-2} g})``.  For a radial ansatz the new metric is
again radial once ``r`` is replaced by the new arclength
``rhat(r) = int e/u dr``; the new warping and density are ``psi/u`` and
``v/u``.  At ``m = +-inf`` the change is the measure shift ``phi -> phi + f``
(the limit of ``u = exp(f/(m+n-2))``), and the metric is unchanged.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DimParam, RadialSmms, _Local
from .profiles import Profile, SampledProfile, constant, log, profile_from_spec

__all__ = [
    "ConformalDatum",
    "ScaleTuple",
    "Reparameterization",
    "reparameterize",
    "conformal_transform",
    "transformed_curvature",
    "scale_system_residuals",
    "scale_residuals",
    "duality_map",
    "four_equivalences_check",
    "FourEquivalences",
]


@dataclass(frozen=True)
class ConformalDatum:
    """A base SMMS and a conformal factor.

    For finite ``m`` the factor is ``u``; for ``m = +-inf`` it is the
    measure shift ``f``.  ``f = (m+n-2) log u`` is derived when only ``u``
    is given.
    """

    base: RadialSmms
    u: Optional[Profile] = None
    f: Optional[Profile] = None

    def __post_init__(self):
        if self.base.m.is_finite and self.u is None:
            raise ValueError("finite m needs the conformal factor u")
        if self.base.m.is_infinite and self.f is None:
            raise ValueError("m = +-inf needs the measure shift f")

    @property
    def shift(self) -> Profile:
        if self.f is not None:
            return self.f
        return log(self.u) * (self.base.m.value + self.base.n - 2)


def _check_positive(u: Profile, s: RadialSmms, r=None):
    from .core import interior_grid

    pts = interior_grid(s, 401, margin=0.0) if r is None else np.atleast_1d(r)
    if np.any(u(pts) <= 0):
        raise ValueError("conformal factor u must be positive on the domain")


# ---------------------------------------------------------------------------
# reparameterisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Reparameterization:
    """The map between old coordinate ``r`` and new arclength ``rhat``."""

    length: float
    r0: float
    _fwd: object
    _inv: object

    def rhat(self, r):
        return self._fwd(np.asarray(r, dtype=float))

    def r(self, rhat):
        return self._inv(np.asarray(rhat, dtype=float))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def reparameterize(c: ConformalDatum, nodes: int = 257, newton_iter: int = 8) -> Reparameterization:
    """Arclength ``rhat(r) = int e/u dr`` and its inverse.

    The integral is a composite 20-point Gauss-Legendre rule on ``nodes``
    panels, which is exact to rounding for the analytic integrands used
    here; the inverse is Newton's method started from linear
    interpolation.  Both maps are smooth to rounding, which matters because
    the transformed profiles are differentiated twice after resampling.
    """
    s = c.base
    lo, hi = s.domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("conformal_transform needs a finite domain; restrict the base first")
    u = c.u
    if np.any(u(np.array([lo, hi])) <= 0):
        raise ValueError("1/u is not integrable: u vanishes at an endpoint")
    e = s.e

    def speed(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        val = 1.0 / u(flat)
        if e is not None:
            val = val * e(flat)
        return np.reshape(val, r.shape)

    def panel(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = np.clip(mid[..., None] + half[..., None] * _GL_X, lo, hi)
        return half * (speed(pts) @ _GL_W)

    grid = np.linspace(lo, hi, nodes)
    cum = np.concatenate([[0.0], np.cumsum(panel(grid[:-1], grid[1:]))])
    L = float(cum[-1])

    def fwd(r):
        r = np.clip(r, lo, hi)
        i = np.clip(np.searchsorted(grid, r, side="right") - 1, 0, nodes - 2)
        return cum[i] + panel(grid[i], r)

    def inv(t):
        t = np.clip(t, 0.0, L)
        r = np.interp(t, cum, grid)
        for _ in range(newton_iter):
            r = np.clip(r - (fwd(r) - t) / speed(r), lo, hi)
        return r

    return Reparameterization(L, lo, fwd, inv)


def conformal_transform(c: ConformalDatum, npts: int = 257, order: int = 5) -> RadialSmms:
    """The SMMS ``(u^{-2} g, (v/u)^m dvol)`` as a radial ansatz in its own arclength.

    The new profiles are sampled on ``npts`` uniformly spaced values of the
    new arclength.  Second derivatives of a degree-5 spline amplify
    rounding in the samples by about ``h^-2``, so past a few hundred
    samples more points make the curvature worse, not better; the default
    sits near the optimum for profiles of moderate variation.  At
    ``m = +-inf`` the result is the base with ``phi -> phi + f`` and no
    resampling.
    """
    s = c.base
    if s.m.is_infinite:
        phi = c.f if s.density is None else s.density + c.f
        return s.with_(density=phi, density_kind="phi")
    _check_positive(c.u, s)
    rep = reparameterize(c)
    lo, hi = s.domain
    rhat = np.linspace(0.0, rep.length, npts)
    r = np.clip(rep.r(rhat), lo, hi)
    r[0], r[-1] = lo, hi
    uu = c.u(r)
    psi = None
    if s.n >= 2:
        psi = SampledProfile(rhat, s.psi(r) / uu, order)
    if s.density is None:
        vvals = 1.0 / uu
    else:
        vvals = s.v(r) / uu
    dens = SampledProfile(rhat, vvals, order)
    return RadialSmms(
        n=s.n,
        m=s.m,
        domain=(0.0, rep.length),
        psi=psi,
        density=dens,
        density_kind="v",
        poles=s.poles,
        compact=s.compact,
        label=(s.label + " (conformal)").strip(),
        check=False,
    )


def transformed_curvature(c: ConformalDatum, r):
    """Bakry-Emery Ricci and weighted scalar of the transformed SMMS, in old coordinates.

    Returns ``(ric_rr, ric_tan, R_f)`` where the Ricci components are taken
    on ``g``-unit vectors.  The transformed SMMS's own orthonormal
    components, and its weighted scalar curvature, are ``u^2`` times these.
    At ``m = +-inf``: ``Ric_phi + Hess f`` and ``R_phi + 2 Delta_phi f - |df|^2``.
    """
    s = c.base
    r = s.check_points(r)
    loc = _Local(s, r, 2)
    n = s.n
    if s.m.is_infinite:
        F = c.f._jet(r, 2)
        hrr, htan = loc.hessian(F)
        F1 = loc.D(F)
        lap = loc.laplacian(F)
        return (
            loc.ric_rr.value + hrr.value,
            loc.ric_tan.value + htan.value,
            loc.scalar_w.value + 2.0 * lap.value - F1.value ** 2,
        )
    _check_positive(c.u, s, r)
    m = s.m.value
    U = c.u._jet(r, 2)
    U1 = loc.D(U)
    hrr, htan = loc.hessian(U)
    lap = loc.laplacian(U)
    u = U.value
    g2 = U1.value ** 2
    iso = lap.value / u - (m + n - 1) * g2 / u**2
    ric_rr = loc.ric_rr.value + (m + n - 2) * hrr.value / u + iso
    ric_tan = loc.ric_tan.value + (m + n - 2) * htan.value / u + iso
    R = loc.scalar_w.value + 2 * (m + n - 1) * lap.value / u - (m + n) * (m + n - 1) * g2 / u**2
    return ric_rr, ric_tan, R


# ---------------------------------------------------------------------------
# scale system and duality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleTuple:
    """``(u, v, lambda, mu, m)`` together with the dimension ``n``."""

    u: Profile
    v: Profile
    lam: float
    mu: float
    m: DimParam
    n: int

    def __post_init__(self):
        object.__setattr__(self, "m", DimParam.parse(self.m))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))

    def to_spec(self) -> dict:
        return {
            "u": self.u.to_spec(),
            "v": self.v.to_spec(),
            "lambda": self.lam,
            "mu": self.mu,
            "m": self.m.to_json(),
            "n": self.n,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "ScaleTuple":
        try:
            return cls(
                u=profile_from_spec(spec["u"]),
                v=profile_from_spec(spec["v"]),
                lam=float(spec["lambda"]),
                mu=float(spec["mu"]),
                m=DimParam.parse(spec["m"]),
                n=int(spec["n"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed scale tuple: {exc}") from None


def duality_map(t: ScaleTuple, n: Optional[int] = None) -> ScaleTuple:
    """``(u, v, lambda, mu, m) -> (v, u, mu, lambda, 2 - m - n)``.

    At ``m = +-inf`` the tuple is returned unchanged, with a warning.
    """
    n = t.n if n is None else int(n)
    if t.m.is_infinite:
        warnings.warn("duality at m = +-inf is the identity (self-dual limit)", stacklevel=2)
        return t
    return ScaleTuple(u=t.v, v=t.u, lam=t.mu, mu=t.lam, m=DimParam(2.0 - t.m.value - n), n=n)


def scale_residuals(metric: RadialSmms, t: ScaleTuple, r):
    """Residuals of the three scale equations for ``t`` on the metric of ``metric``.

    Only the metric (``n``, ``psi``, ``e``) of ``metric`` is used.  Returns
    ``(res_tracefree, res_lambda, res_mu)``: the radial eigenvalue of the
    tracefree part of ``uv Ric + (m+n-2) v Hess u - m u Hess v``, and
    right-hand side minus left-hand side of the ``lambda`` and ``mu``
    equations.  ``u`` and ``v`` may vanish or change sign.
    """
    if t.m.is_infinite:
        raise ValueError("the scale system needs finite m")
    geo = metric.with_(density=None, m=0) if metric.density is not None or not metric.m.is_zero else metric
    r = geo.check_points(r)
    loc = _Local(geo, r, 2)
    n = geo.n
    m = t.m.value
    lam, mu = t.lam, t.mu
    U = t.u._jet(r, 2)
    V = t.v._jet(r, 2)
    u, v = U.value, V.value
    U1, V1 = loc.D(U).value, loc.D(V).value
    urr, utan = (x.value for x in loc.hessian(U))
    vrr, vtan = (x.value for x in loc.hessian(V))
    lap_u = loc.laplacian(U).value
    lap_v = loc.laplacian(V).value
    R = loc.R.value
    if n >= 2:
        Trr = u * v * loc.Ric_rr.value + (m + n - 2) * v * urr - m * u * vrr
        Ttan = u * v * loc.Ric_tan.value + (m + n - 2) * v * utan - m * u * vtan
        tf = (n - 1) / n * (Trr - Ttan)
    else:
        tf = np.zeros_like(u)
    du_dv = U1 * V1
    res_lam = (
        (u * v) ** 2 * R
        + (m + 2 * n - 2) * u * v**2 * lap_u
        - m * u**2 * v * lap_v
        - (m + n - 1) * n * v**2 * U1**2
        + m * n * u * v * du_dv
        - n * lam * v**2
    )
    res_mu = (
        (u * v) ** 2 * R
        + (m + n - 2) * u * v**2 * lap_u
        - (m - n) * u**2 * v * lap_v
        - (m + n - 2) * n * u * v * du_dv
        + (m - 1) * n * u**2 * V1**2
        - n * mu * u**2
    )
    return tf, res_lam, res_mu


def _v_profile(base: RadialSmms) -> Profile:
    if base.density is None:
        return constant(1.0)
    if base.density_kind == "v":
        return base.density
    from .profiles import exp

    return exp(base.density * (-1.0 / base.m.value))


def scale_system_residuals(base: RadialSmms, u: Profile, lam: float, mu: float, r):
    """Residuals of the scale system for ``u`` on ``base`` with characteristic constant ``mu``."""
    if base.m.is_infinite:
        raise ValueError("the scale system needs finite m")
    t = ScaleTuple(u=u, v=_v_profile(base), lam=lam, mu=mu, m=base.m, n=base.n)
    return scale_residuals(base, t, r)


# ---------------------------------------------------------------------------
# the four equivalent characterisations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourEquivalences:
    residuals: tuple
    band: float
    consistent: bool
    components: dict

    def to_dict(self) -> dict:
        return {
            "residuals": list(self.residuals),
            "band": self.band,
            "consistent": self.consistent,
            "components": {k: list(v) for k, v in self.components.items()},
        }


def _qe_triple(metric: RadialSmms, a: Profile, b: Profile, m: float, lam: float, mu: float, r):
    """Residuals of ``(a^{-2} g, (b/a)^m)`` being quasi-Einstein with ``(lam, mu)``.

    Evaluated through the conformal law in the coordinates of ``g``, in the
    orthonormal frame of the new metric: tracefree eigenvalue, pointwise
    ``lambda`` and pointwise ``mu`` minus their targets.
    """
    n = metric.n
    base = metric.with_(m=m, density=b, density_kind="v")
    ric_rr, ric_tan, Rf = transformed_curvature(ConformalDatum(base, u=a), r)
    a2 = a(r) ** 2
    rr, tan = a2 * ric_rr, a2 * ric_tan
    if n >= 2:
        tf = (n - 1) / n * (rr - tan)
        lam_pt = (rr + (n - 1) * tan) / n
    else:
        tf = np.zeros_like(rr)
        lam_pt = rr
    if m == 0:
        mu_res = np.zeros_like(rr)
    else:
        vhat2 = (b(r) / a(r)) ** 2
        mu_pt = ((m + n) * lam_pt - a2 * Rf) * vhat2 / m
        mu_res = mu_pt - mu
    return tf, lam_pt - lam, mu_res


def four_equivalences_check(metric: RadialSmms, u: Profile, v: Profile, m, lam: float, mu: float, grid, band: float = 10.0) -> FourEquivalences:
    """Evaluate the four equivalent descriptions of a quasi-Einstein scale.

    1. ``u`` is a scale on ``(g, v^m)`` (scale equations, normalised to the
       frame of ``u^{-2} g``).
    2. ``(u^{-2} g, (v/u)^m)`` is quasi-Einstein with ``(lam, mu)``.
    3. ``v`` is a scale on ``(g, u^{2-m-n})`` (dual scale equations,
       normalised to the frame of ``v^{-2} g``).
    4. ``(v^{-2} g, (u/v)^{2-m-n})`` is quasi-Einstein with ``(mu, lam)``.

    Each residual is the sup over the grid of the largest component divided
    by ``|lam| + |mu| + 1``.  ``consistent`` is true when all four are within
    a factor ``band`` of each other (or all at rounding level).
    """
    m = DimParam.parse(m)
    if m.is_infinite:
        raise ValueError("four_equivalences_check needs finite m")
    mv = m.value
    n = metric.n
    grid = metric.check_points(grid)
    if np.any(u(grid) <= 0) or np.any(v(grid) <= 0):
        raise ValueError("u and v must be positive")
    scale = abs(lam) + abs(mu) + 1.0
    uu, vv = u(grid), v(grid)
    geo = metric.with_(m=0, density=None)

    t = ScaleTuple(u=u, v=v, lam=lam, mu=mu, m=m, n=n)
    tf, rl, rm = scale_residuals(geo, t, grid)
    item1 = (tf * uu / vv, rl / (n * vv**2), rm / (n * uu**2))
    item2 = _qe_triple(geo, u, v, mv, lam, mu, grid)
    d = duality_map(t)
    tf, rl, rm = scale_residuals(geo, d, grid)
    item3 = (tf * vv / uu, rl / (n * uu**2), rm / (n * vv**2))
    item4 = _qe_triple(geo, v, u, d.m.value, mu, lam, grid)
    comps = {}
    res = []
    for i, item in enumerate((item1, item2, item3, item4), start=1):
        sups = [float(np.max(np.abs(x))) / scale for x in item]
        comps[f"item{i}"] = tuple(sups)
        res.append(max(sups))
    floor = 1e-12
    hi, lo = max(res), min(res)
    consistent = hi <= floor * band or (lo > 0 and hi <= band * max(lo, floor))
    return FourEquivalences(tuple(res), band, consistent, comps)
