"""Weighted volume, the (m, mu)-energy and its first variation.

All integrals are over the whole radial SMMS and include the area
``omega_{n-1}`` of the unit ``(n-1)``-sphere, so values are comparable
across runs.  For ``n = 1`` the factor is 1: the domain is integrated as
is, so a half-line counts one ray.

The energy is

    W = int (R_w + m mu v^{-2}) v^m dvol          (finite m != 0)
    W = int (R_w + 2 mu (phi - n)) e^{-phi} dvol   (m = +-inf)
    W = int R dvol                                 (m = 0)

A variation is a pair ``(h, psi)``: a radial diagonal metric perturbation
``h = h_rr e^2 dr^2 + h_tan psi^2 dtheta^2`` (orthonormal components
``h_rr``, ``h_tan``) together with a perturbation of ``phi``.  The
perturbation of ``phi`` is called ``psi_var`` to keep it apart from the
warping function.  The perturbed measure is ``e^{-(phi + s psi_var)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import profiles as P
from .core import RadialSmms, _Local
from .jets import Jet
from .profiles import Profile
from .quadrature import DivergentIntegral, integrate

__all__ = [
    "VariationDatum",
    "EnergyValue",
    "NonIntegrable",
    "sphere_area",
    "weighted_volume",
    "energy",
    "first_variation_analytic",
    "first_variation_fd",
    "perturb",
    "constraint_integral",
    "constrain_variation",
    "diffeomorphism_variation",
    "delta_R_check",
    "EnergyLimitTable",
    "energy_limit_check",
    "fd_convergence",
]


class NonIntegrable(DivergentIntegral):
    """The requested integral does not converge."""


def sphere_area(n: int) -> float:
    """``omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)``, with ``omega_0 = 1``."""
    if n == 1:
        return 1.0
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class EnergyValue:
    """Result of a weighted integral."""

    value: float
    integrable: bool
    error_estimate: float
    level: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "integrable": self.integrable, "error_est": self.error_estimate, **self.meta}


@dataclass(frozen=True)
class VariationDatum:
    """A variation ``(h, psi_var)``; missing components are zero.

    ``closed`` declares that no support condition applies (the variation
    lives on a closed manifold and is smooth there).
    """

    h_rr: Optional[Profile] = None
    h_tan: Optional[Profile] = None
    psi_var: Optional[Profile] = None
    closed: bool = False

    @property
    def is_zero(self) -> bool:
        return self.h_rr is None and self.h_tan is None and self.psi_var is None

    def parts(self):
        return [p for p in (self.h_rr, self.h_tan, self.psi_var) if p is not None]

    def scaled(self, c: float) -> "VariationDatum":
        f = lambda p: None if p is None else p * c  # noqa: E731
        return VariationDatum(f(self.h_rr), f(self.h_tan), f(self.psi_var), self.closed)

    def check_support(self, s: RadialSmms, tol: float = 1e-8):
        """Require the components and their first derivatives to vanish at finite ends."""
        if self.closed:
            return
        for r0 in s.domain:
            if not math.isfinite(r0):
                continue
            for p in self.parts():
                w, w1 = p.derivatives(r0, 1)
                if abs(w) > tol or abs(w1) > tol:
                    raise ValueError("variation must vanish with its first derivative at the domain ends")


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------


def _degenerate_ends(s: RadialSmms) -> list:
    """Finite, non-pole ends where the density ``v`` tends to zero."""
    out = []
    if not s.m.is_finite or s.m.is_zero or s.density is None or s.density_kind != "v":
        return out
    for side, r0 in zip(("left", "right"), s.domain):
        if side in s.poles or not math.isfinite(r0):
            continue
        lo, hi = s.density.domain
        if lo <= r0 <= hi and abs(float(s.density(r0))) < 1e-8:
            out.append(side)
    return out


def _area_factor(loc: _Local, s: RadialSmms, r) -> np.ndarray:
    w = np.ones_like(r)
    if s.n >= 2:
        w = w * loc.P.value ** (s.n - 1)
    if loc.E is not None:
        w = w * loc.E.value
    return w


def _integrate(s: RadialSmms, fn, tol: float, level: Optional[int]) -> EnergyValue:
    lo, hi = s.domain
    try:
        q = integrate(fn, lo, hi, tol=tol, level=level)
    except DivergentIntegral as exc:
        raise NonIntegrable(str(exc)) from None
    area = sphere_area(s.n)
    return EnergyValue(
        area * q.value,
        True,
        area * q.error,
        q.level,
        {"omega": area, "n": s.n, "m": s.m.to_json(), "nodes": q.nodes},
    )


def weighted_volume(s: RadialSmms, tol: float = 1e-12, level: Optional[int] = None) -> EnergyValue:
    """``Vol_phi = omega_{n-1} int psi^{n-1} v^m dr``.

    A density vanishing at a boundary end is integrable for ``m > -1`` and
    refused otherwise.
    """
    if _degenerate_ends(s) and s.m.value <= -1:
        raise NonIntegrable("v^m is not integrable at a degenerate end for m <= -1")

    def fn(r):
        loc = _Local(s, r, 2) if s.n >= 2 or s.e is not None else None
        base = np.ones_like(r) if loc is None else _area_factor(loc, s, r)
        return base * s.measure_density(r)

    return _integrate(s, fn, tol, level)


def _energy_density(loc: _Local, s: RadialSmms, r, mu: float):
    """``(R_w + m mu v^{-2}) v^m`` or its infinite/zero-m analogue (w.r.t. dvol)."""
    if s.m.is_zero:
        return loc.R.value
    if s.m.is_finite:
        V = loc.V.value
        return (loc.scalar_w.value + s.m.value * mu / V**2) * V**s.m.value
    phi = loc.Phi.value
    return (loc.scalar_w.value + 2.0 * mu * (phi - s.n)) * np.exp(-phi)


def energy(s: RadialSmms, mu: float, tol: float = 1e-12, level: Optional[int] = None) -> EnergyValue:
    """The (m, mu)-energy of ``s``.

    At a degenerate boundary end the integrand behaves like ``v^{m-2}``, so
    the energy is refused there unless ``m > 1``.
    """
    if _degenerate_ends(s) and s.m.value <= 1:
        raise NonIntegrable("the energy density is not integrable at a degenerate end for m <= 1")

    def fn(r):
        loc = _Local(s, r, 2)
        return _energy_density(loc, s, r, mu) * _area_factor(loc, s, r)

    out = _integrate(s, fn, tol, level)
    out.meta["mu"] = mu
    return out


# ---------------------------------------------------------------------------
# first variation
# ---------------------------------------------------------------------------


def _jet_or_zero(p: Optional[Profile], r, order: int) -> Jet:
    if p is None:
        return Jet.constant(0.0, order, np.shape(r))
    return p.jet(r, order)


def _weight(loc: _Local, s: RadialSmms, r) -> np.ndarray:
    if s.m.is_zero:
        return np.ones_like(r)
    return s.measure_density(r)


def first_variation_density(s: RadialSmms, mu: float, var: VariationDatum, r) -> np.ndarray:
    """Integrand of the first variation with respect to ``dvol_g`` (before the area factor)."""
    r = s.check_points(r)
    loc = _Local(s, r, 2)
    hrr = _jet_or_zero(var.h_rr, r, 0).value
    htan = _jet_or_zero(var.h_tan, r, 0).value
    pv = _jet_or_zero(var.psi_var, r, 0).value
    n = s.n
    Rw = loc.scalar_w.value
    if s.m.is_zero:
        half = 0.5 * loc.R.value
        psi_coef = np.zeros_like(r)
    elif s.m.is_finite:
        mv = s.m.value
        vm2 = loc.V.value ** -2
        half = 0.5 * (Rw + mv * mu * vm2)
        psi_coef = Rw - (2.0 / mv) * loc.lap_phi.value + (mv - 2.0) * mu * vm2
    else:
        phi = loc.Phi.value
        half = 0.5 * (Rw + 2.0 * mu * (phi - n))
        psi_coef = Rw + 2.0 * mu * (phi - n - 1.0)
    inner = (loc.ric_rr.value - half) * hrr
    if n >= 2:
        inner = inner + (n - 1) * (loc.ric_tan.value - half) * htan
    return -(inner + psi_coef * pv) * _weight(loc, s, r)


def first_variation_analytic(
    s: RadialSmms, mu: float, var: VariationDatum, tol: float = 1e-12, level: Optional[int] = None
) -> EnergyValue:
    """``dW/ds`` from the closed-form first variation.

    ``dW = -int [<Ric_w - (R_w + m mu v^{-2}) g / 2, h> + (R_w - (2/m) Delta_phi phi
    + (m-2) mu v^{-2}) psi] v^m dvol``, with ``<A, h> = A_rr h_rr + (n-1) A_tan h_tan``.
    At ``m = +-inf`` the bracket is ``<Ric_w - (R_w + 2 mu (phi-n)) g/2, h>
    + (R_w + 2 mu (phi - n - 1)) psi`` against ``e^{-phi} dvol``; at ``m = 0``
    only the metric part of the unweighted formula remains.
    """
    var.check_support(s)
    if var.is_zero:
        return EnergyValue(0.0, True, 0.0, 0, {"mu": mu})
    if _degenerate_ends(s) and s.m.value <= 1:
        raise NonIntegrable("the first variation is not integrable at a degenerate end for m <= 1")

    def fn(r):
        loc = _Local(s, r, 2)
        return first_variation_density(s, mu, var, r) * _area_factor(loc, s, r)

    out = _integrate(s, fn, tol, level)
    out.meta["mu"] = mu
    return out


def perturb(s: RadialSmms, var: VariationDatum, eps: float) -> RadialSmms:
    """The SMMS with metric ``g + eps h`` and potential ``phi + eps psi_var``.

    ``e^2 -> e^2 (1 + eps h_rr)``, ``psi^2 -> psi^2 (1 + eps h_tan)``; the
    measure is recomputed from the perturbed coefficients.
    """
    changes: dict = {}
    if var.h_rr is not None:
        fac = (1.0 + var.h_rr * eps) ** 0.5
        changes["e"] = fac if s.e is None else s.e * fac
    if var.h_tan is not None and s.n >= 2:
        changes["psi"] = s.psi * (1.0 + var.h_tan * eps) ** 0.5
    if var.psi_var is not None and not s.m.is_zero:
        if s.m.is_infinite or s.density_kind == "phi":
            base = s.density if s.density is not None else P.constant(0.0)
            changes["density"] = base + var.psi_var * eps
            changes["density_kind"] = "phi"
        else:
            base = s.density if s.density is not None else P.constant(1.0)
            changes["density"] = base * P.exp(var.psi_var * (-eps / s.m.value))
    return s.with_(**changes)


def first_variation_fd(
    s: RadialSmms, mu: float, var: VariationDatum, step: float, level: int = 7
) -> float:
    """Centred difference ``(W(s + step var) - W(s - step var)) / (2 step)``.

    A fixed quadrature level is used on both sides so that the quotient is
    a smooth function of ``step``.
    """
    if var.is_zero:
        return 0.0
    sp = perturb(s, var, step)
    sm = perturb(s, var, -step)
    for t in (sp, sm):
        r = _probe(t)
        if t.e is not None and np.any(t.e(r) <= 0):
            raise ValueError("step too large: metric loses positivity")
        if t.psi is not None and np.any(t.psi(r) <= 0):
            raise ValueError("step too large: warping loses positivity")
    wp = energy(sp, mu, level=level).value
    wm = energy(sm, mu, level=level).value
    return (wp - wm) / (2.0 * step)


def _probe(s: RadialSmms) -> np.ndarray:
    from .core import interior_grid

    return interior_grid(s, 101)


@dataclass(frozen=True)
class FdConvergence:
    steps: tuple
    fd: tuple
    analytic: float
    errors: tuple
    orders: tuple

    @property
    def min_order(self) -> float:
        return min(self.orders)


def fd_convergence(
    s: RadialSmms, mu: float, var: VariationDatum, steps: Sequence[float] = (1e-3, 5e-4, 2.5e-4), level: int = 7
) -> FdConvergence:
    """Compare the analytic first variation with centred differences at several steps.

    Observed orders are ``log2`` ratios of successive errors.  The analytic
    value is computed with the same quadrature rule as the differences.
    """
    exact = first_variation_analytic(s, mu, var, level=level).value
    fds = [first_variation_fd(s, mu, var, h, level=level) for h in steps]
    errs = [abs(f - exact) for f in fds]

    def order(i):
        # exact agreement (e.g. an identically vanishing energy) counts as infinite order
        if errs[i + 1] == 0.0:
            return math.inf
        if errs[i] == 0.0:
            return -math.inf
        return float(np.log(errs[i] / errs[i + 1]) / np.log(steps[i] / steps[i + 1]))

    orders = tuple(order(i) for i in range(len(steps) - 1))
    return FdConvergence(tuple(steps), tuple(fds), exact, tuple(errs), orders)


def constraint_integral(s: RadialSmms, var: VariationDatum, tol: float = 1e-12, level: Optional[int] = None) -> float:
    """``int (psi_var - tr h / 2) e^{-phi} dvol``, the variation of the weighted volume (up to sign)."""

    def fn(r):
        loc = _Local(s, r, 2)
        hrr = _jet_or_zero(var.h_rr, r, 0).value
        htan = _jet_or_zero(var.h_tan, r, 0).value
        pv = _jet_or_zero(var.psi_var, r, 0).value
        tr = hrr + (s.n - 1) * htan
        return (pv - 0.5 * tr) * _weight(loc, s, r) * _area_factor(loc, s, r)

    return _integrate(s, fn, tol, level).value


def constrain_variation(s: RadialSmms, var: VariationDatum, bump: Profile, level: Optional[int] = None) -> VariationDatum:
    """Subtract a multiple of ``bump`` from ``psi_var`` so the volume constraint holds."""
    c0 = constraint_integral(s, var, level=level)
    cb = constraint_integral(s, VariationDatum(psi_var=bump, closed=True), level=level)
    if cb == 0:
        raise ValueError("bump has zero weighted integral")
    corr = bump * (-c0 / cb)
    pv = corr if var.psi_var is None else var.psi_var + corr
    return VariationDatum(var.h_rr, var.h_tan, pv, var.closed)


def diffeomorphism_variation(s: RadialSmms, xi: Profile) -> VariationDatum:
    """The variation ``(L_X g, X phi)`` for the radial field ``X = xi d/dr``.

    Orthonormal components: ``h_rr = 2 xi'``, ``h_tan = 2 xi psi'/psi`` and
    ``psi_var = xi phi'``.  Needs an arclength radial coordinate.
    """
    if s.e is not None:
        raise ValueError("diffeomorphism variations need an arclength radial coordinate")
    h_rr = xi.derivative() * 2.0
    h_tan = xi * s.psi.derivative() / s.psi * 2.0 if s.n >= 2 else None
    psi_var = None
    if s.density is not None and not s.m.is_zero:
        if s.density_kind == "phi":
            phi = s.density
        else:
            phi = P.log(s.density) * (-s.m.value)
        psi_var = xi * phi.derivative()
    return VariationDatum(h_rr, h_tan, psi_var)


# ---------------------------------------------------------------------------
# variation of the weighted scalar curvature
# ---------------------------------------------------------------------------


def delta_R_formula(s: RadialSmms, var: VariationDatum, r) -> np.ndarray:
    """``-<Ric_w, h> + div_phi^2 h - Delta_phi tr h + 2 (Delta_phi psi - m^{-1} <dphi, dpsi>)``."""
    r = s.check_points(r)
    loc = _Local(s, r, 3)
    n = s.n
    hrr = _jet_or_zero(var.h_rr, r, 3)
    htan = _jet_or_zero(var.h_tan, r, 3) if n >= 2 else Jet.constant(0.0, 3, np.shape(r))
    pv = _jet_or_zero(var.psi_var, r, 3)
    inner = loc.ric_rr.value * hrr.value
    if n >= 2:
        inner = inner + (n - 1) * loc.ric_tan.value * htan.value
    d = loc.div_phi(hrr, htan)
    dd = loc.D(d) + (loc.hp * (n - 1) - loc.phi_s) * d
    tr = hrr + htan * (n - 1)
    out = -inner + dd.value - loc.laplacian(tr).value
    if not s.m.is_zero:
        out = out + 2.0 * loc.laplacian(pv).value
        if s.m.is_finite and not s.m.is_zero:
            out = out - 2.0 * (loc.phi_s * loc.D(pv)).value / s.m.value
    return out


def delta_R_check(s: RadialSmms, var: VariationDatum, r, step: float = 1e-4) -> np.ndarray:
    """Formula for the variation of ``R_w`` minus a centred difference of ``R_w``."""
    from .core import weighted_scalar

    r = s.check_points(r)
    exact = delta_R_formula(s, var, r)
    if var.is_zero:
        return exact
    fd = (weighted_scalar(perturb(s, var, step), r) - weighted_scalar(perturb(s, var, -step), r)) / (2 * step)
    return exact - fd


# ---------------------------------------------------------------------------
# m -> infinity limit of the energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyLimitTable:
    ms: tuple
    brackets: tuple
    limit: float
    errors: tuple
    constants: tuple
    decreasing: bool

    @property
    def fitted_constant(self) -> float:
        return max(self.constants)

    def to_dict(self) -> dict:
        return {
            "m": list(self.ms),
            "bracket": list(self.brackets),
            "limit": self.limit,
            "errors": list(self.errors),
            "m_times_error": list(self.constants),
            "decreasing": self.decreasing,
        }


def energy_limit_check(
    n: int,
    domain,
    psi: Optional[Profile],
    phi: Optional[Profile],
    mu: float = 1.0,
    ms: Sequence[float] = (1e2, 1e3, 1e4),
    poles=(),
    compact: bool = True,
    level: int = 8,
) -> EnergyLimitTable:
    """Tabulate ``W^m_mu - (m + 2n) Vol_phi`` against ``W^inf_mu`` for fixed ``phi``.

    The finite-m SMMS uses ``v = e^{-phi/m}``.  The bracket converges at
    rate ``1/m`` only for ``mu = 1``; for other ``mu`` it diverges like
    ``m (mu - 1) Vol_phi`` and the table reports this without judgement.
    """
    if not compact:
        raise ValueError("the energy limit is checked on compact domains only")

    def make(m):
        return RadialSmms(n, m, domain, psi=psi, density=phi, density_kind="phi", poles=poles, compact=compact, check=False)

    winf = energy(make("+inf"), mu, level=level).value
    brackets, errors, consts = [], [], []
    for m in ms:
        s = make(float(m))
        b = energy(s, mu, level=level).value - (m + 2 * n) * weighted_volume(s, level=level).value
        brackets.append(b)
        errors.append(abs(b - winf))
        consts.append(errors[-1] * m)
    dec = all(errors[i + 1] < errors[i] for i in range(len(errors) - 1))
    return EnergyLimitTable(tuple(float(m) for m in ms), tuple(brackets), winf, tuple(errors), tuple(consts), dec)
