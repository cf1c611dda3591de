"""Rotationally symmetric smooth metric measure spaces and their weighted curvature.

A radial SMMS is ``g = e(r)^2 dr^2 + psi(r)^2 dtheta^2`` on an interval times
the unit ``(n-1)``-sphere, with measure ``v^m dvol_g``.  Usually ``e = 1`` so
``r`` is arclength; a nontrivial ``e`` lets the same code evaluate metrics
that are not written in arclength, such as perturbed metrics.  All
derivatives below are with respect to arclength ``s`` (``d/ds = e^{-1} d/dr``).

Conventions: the divergence of a symmetric 2-tensor is the trace of its
covariant derivative, and the Laplacian is ``div grad``, so ``Delta r^2 = 2n``
on flat space.  For a diagonal tensor with eigenvalues ``A`` (radial) and
``B`` (tangential) the radial component of the weighted divergence is

    (div_phi T)_r = A' + (n-1)(psi'/psi)(A - B) - phi' A.

The density is handled by the value of ``m``.

* finite ``m != 0``: formulas written in terms of ``v`` with explicit factors
  of ``m`` (no division by ``m``).
* ``m = +-inf``: formulas in terms of ``phi`` with ``1/m = 0``.
* ``m = 0``: the density is ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import jets as J
from .jets import Jet
from .profiles import DomainError, Profile, constant, profile_from_spec

__all__ = [
    "DimParam",
    "RadialSmms",
    "CurvaturePoint",
    "QEReport",
    "InequalityCheck",
    "FieldSample",
    "weighted_laplacian",
    "radial_hessian",
    "bakry_emery_ricci",
    "weighted_scalar",
    "curvature",
    "bianchi_residual",
    "bianchi_operator_residual",
    "qe_verify",
    "qe_from_fields",
    "field_sample",
    "mu_limit_check",
    "pole_limit",
    "interior_grid",
]


# ---------------------------------------------------------------------------
# dimensional parameter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimParam:
    """The dimensional parameter ``m``: a finite real or ``+inf``/``-inf``."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("m must not be NaN")
        object.__setattr__(self, "value", v)

    @classmethod
    def parse(cls, x: Any) -> "DimParam":
        if isinstance(x, DimParam):
            return x
        if isinstance(x, str):
            token = x.strip().lower()
            if token in ("+inf", "inf", "+infinity", "infinity"):
                return cls(math.inf)
            if token in ("-inf", "-infinity"):
                return cls(-math.inf)
            try:
                return cls(float(token))
            except ValueError:
                raise ValueError(f"cannot parse dimensional parameter {x!r}") from None
        if isinstance(x, bool) or not isinstance(x, (int, float, np.floating, np.integer)):
            raise ValueError(f"cannot parse dimensional parameter {x!r}")
        return cls(float(x))

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def is_pos_inf(self) -> bool:
        return self.value == math.inf

    @property
    def is_neg_inf(self) -> bool:
        return self.value == -math.inf

    @property
    def is_infinite(self) -> bool:
        return not self.is_finite

    @property
    def variant(self) -> str:
        if self.is_pos_inf:
            return "PosInfinity"
        if self.is_neg_inf:
            return "NegInfinity"
        return "Finite"

    def to_json(self):
        if self.is_pos_inf:
            return "+inf"
        if self.is_neg_inf:
            return "-inf"
        return self.value

    def __float__(self):
        return self.value

    def __str__(self):
        return str(self.to_json())


def _as_dim(m) -> DimParam:
    return DimParam.parse(m)


# ---------------------------------------------------------------------------
# the radial SMMS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialSmms:
    """Rotationally symmetric SMMS ``(I x S^{n-1}, e^2 dr^2 + psi^2 dtheta^2, v^m dvol)``.

    Parameters
    ----------
    n:
        Dimension of the manifold.  For ``n = 1`` there is no ``psi``.
    m:
        Dimensional parameter (number, ``"+inf"``, ``"-inf"`` or a
        :class:`DimParam`).
    domain:
        The interval ``(r0, r1)``; endpoints may be infinite.
    psi:
        Warping profile.
    density:
        ``v`` when ``density_kind == "v"``, ``phi`` when ``"phi"``.  ``None``
        means ``v = 1`` (equivalently ``phi = 0``).  For ``m = +-inf`` the
        density must be given as ``phi``.
    poles:
        Endpoints (``"left"``/``"right"``) where ``psi`` closes up smoothly.
    e:
        Optional radial metric factor, ``g_rr = e^2``.
    compact:
        Whether the SMMS is compact (closed manifold, or compact closure
        whose boundary is where the measure degenerates).
    """

    n: int
    m: Any
    domain: tuple
    psi: Optional[Profile] = None
    density: Optional[Profile] = None
    density_kind: str = "v"
    poles: tuple = ()
    e: Optional[Profile] = None
    compact: bool = False
    label: str = ""
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "m", _as_dim(self.m))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        object.__setattr__(self, "poles", tuple(self.poles))
        n = int(self.n)
        if n != self.n or n < 1:
            raise ValueError("n must be an integer >= 1")
        object.__setattr__(self, "n", n)
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy r0 < r1")
        if n >= 2 and self.psi is None:
            raise ValueError("a warping profile psi is required for n >= 2")
        if self.density_kind not in ("v", "phi"):
            raise ValueError("density_kind must be 'v' or 'phi'")
        if self.m.is_infinite and self.density is not None and self.density_kind != "phi":
            raise ValueError("for m = +-inf the density must be given as phi")
        for p in self.poles:
            if p not in ("left", "right"):
                raise ValueError(f"unknown pole flag {p!r}")
        for prof in (self.psi, self.density, self.e):
            if prof is None:
                continue
            plo, phi_ = prof.domain
            span = 1e-12 * max(1.0, abs(lo) if math.isfinite(lo) else 1, abs(hi) if math.isfinite(hi) else 1)
            if plo > lo + span or phi_ < hi - span:
                raise ValueError("profile domain does not cover the SMMS domain")
        if self.check:
            self._validate()

    # -- validation -------------------------------------------------------
    def _validate(self, tol: float = 1e-6):
        r = interior_grid(self, 201)
        if self.psi is not None and np.any(self.psi(r) <= 0):
            raise ValueError("psi must be positive on the open domain")
        if self.density is not None and self.density_kind == "v" and not self.m.is_zero:
            if np.any(self.density(r) <= 0):
                raise ValueError("density v must be positive on the open domain")
        if self.e is not None and np.any(self.e(r) <= 0):
            raise ValueError("radial factor e must be positive")
        for side in self.poles:
            r0 = self.domain[0] if side == "left" else self.domain[1]
            if not math.isfinite(r0):
                raise ValueError("a pole must sit at a finite endpoint")
            if self.psi is None:
                raise ValueError("pole flags need a warping profile")
            w, w1 = self.psi.derivatives(r0, 1)
            ee = 1.0 if self.e is None else float(self.e(r0))
            if abs(w) > tol or abs(abs(w1) / ee - 1.0) > tol:
                raise ValueError(f"{side} pole: need psi = 0 and |psi'| = 1")
            if self.density is not None:
                d1 = self.density.derivatives(r0, 1)[1]
                if abs(d1) > tol:
                    raise ValueError(f"{side} pole: density must have zero derivative")

    @property
    def closed(self) -> bool:
        """Compact without boundary: every end is a smooth pole.

        For ``n = 1`` a compact SMMS is read as a circle.
        """
        if not self.compact:
            return False
        if self.n == 1:
            return all(math.isfinite(x) for x in self.domain) and self._periodic_density()
        return set(self.poles) == {"left", "right"}

    def _periodic_density(self) -> bool:
        if self.density is None:
            return True
        a, b = self.domain
        try:
            va, vb = float(self.density(a)), float(self.density(b))
        except Exception:
            return False
        if self.density_kind == "v" and min(abs(va), abs(vb)) < 1e-8:
            return False
        return abs(va - vb) < 1e-9

    # -- convenience ------------------------------------------------------
    def with_(self, **changes) -> "RadialSmms":
        """Copy with some fields replaced."""
        kw = {f: getattr(self, f) for f in ("n", "m", "domain", "psi", "density", "density_kind", "poles", "e", "compact", "label")}
        kw["check"] = False
        kw.update(changes)
        return RadialSmms(**kw)

    def field_sample(self, grid) -> "FieldSample":
        return field_sample(self, grid)

    def interior_grid(self, npts: int = 64, margin: float = 1e-3, cap: float = 40.0) -> np.ndarray:
        return interior_grid(self, npts, margin, cap)

    def check_points(self, r) -> np.ndarray:
        """Reject points outside the open domain (poles included)."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        if np.any(~(r > lo)) or np.any(~(r < hi)):
            if np.any(r == lo) and "left" in self.poles or np.any(r == hi) and "right" in self.poles:
                raise DomainError("direct evaluation at a smooth pole is refused; use pole_limit")
            raise DomainError(f"point outside the open domain ({lo}, {hi})")
        return r

    def v(self, r) -> np.ndarray:
        """Density ``v`` at ``r`` (finite m only)."""
        if self.m.is_infinite:
            raise ValueError("v is not defined for m = +-inf; use phi")
        r = np.asarray(r, dtype=float)
        if self.density is None:
            return np.ones_like(r)
        if self.density_kind == "v":
            return self.density(r)
        if self.m.is_zero:
            return np.ones_like(r)
        return np.exp(-self.density(r) / self.m.value)

    def phi(self, r) -> np.ndarray:
        """Potential ``phi`` (``-m log v`` for finite m, 0 at m = 0)."""
        r = np.asarray(r, dtype=float)
        if self.density is None or self.m.is_zero:
            return np.zeros_like(r)
        if self.density_kind == "phi":
            return self.density(r)
        return -self.m.value * np.log(self.density(r))

    def measure_density(self, r) -> np.ndarray:
        """``v^m`` (or ``e^{-phi}``), the weight relative to ``dvol_g``."""
        r = np.asarray(r, dtype=float)
        if self.density is None or self.m.is_zero:
            return np.ones_like(r)
        if self.m.is_finite and self.density_kind == "v":
            return self.density(r) ** self.m.value
        return np.exp(-self.phi(r))

    # -- serialisation ----------------------------------------------------
    def to_spec(self) -> dict:
        spec: dict[str, Any] = {
            "n": self.n,
            "m": self.m.to_json(),
            "domain": [_num_json(self.domain[0]), _num_json(self.domain[1])],
        }
        if self.psi is not None:
            spec["psi"] = self.psi.to_spec()
        if self.density is not None:
            spec[self.density_kind] = self.density.to_spec()
        if self.poles:
            spec["poles"] = list(self.poles)
        if self.e is not None:
            spec["radial_factor"] = self.e.to_spec()
        if self.compact:
            spec["compact"] = True
        if self.label:
            spec["label"] = self.label
        return spec

    @classmethod
    def from_spec(cls, spec: dict) -> "RadialSmms":
        if not isinstance(spec, dict):
            raise ValueError("SMMS descriptor must be a JSON object")
        try:
            n = spec["n"]
            m = DimParam.parse(spec["m"])
            lo, hi = spec["domain"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed SMMS descriptor: {exc}") from None
        if not isinstance(n, int):
            raise ValueError("n must be an integer")
        if "v" in spec and "phi" in spec:
            raise ValueError("give either v or phi, not both")
        kind = "phi" if "phi" in spec else "v"
        dens = spec.get(kind)
        return cls(
            n=n,
            m=m,
            domain=(float(lo), float(hi)),
            psi=profile_from_spec(spec["psi"]) if "psi" in spec else None,
            density=profile_from_spec(dens) if dens is not None else None,
            density_kind=kind,
            poles=tuple(spec.get("poles", ())),
            e=profile_from_spec(spec["radial_factor"]) if "radial_factor" in spec else None,
            compact=bool(spec.get("compact", False)),
            label=str(spec.get("label", "")),
        )


def _num_json(x: float):
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return x


def interior_grid(s: RadialSmms, npts: int = 64, margin: float = 1e-3, cap: float = 40.0) -> np.ndarray:
    """Evenly spaced points strictly inside the domain.

    Infinite ends are truncated ``cap`` units from the finite end.
    """
    lo, hi = s.domain
    if not math.isfinite(lo) and not math.isfinite(hi):
        lo, hi = -cap / 2, cap / 2
    elif not math.isfinite(hi):
        hi = lo + cap
    elif not math.isfinite(lo):
        lo = hi - cap
    d = (hi - lo) * margin
    return np.linspace(lo + d, hi - d, npts)


# ---------------------------------------------------------------------------
# local jets
# ---------------------------------------------------------------------------


class _Local:
    """Arclength jets of the geometric quantities at a set of points."""

    def __init__(self, s: RadialSmms, r: np.ndarray, order: int):
        self.s = s
        self.n = n = s.n
        self.order = order
        shape = np.shape(r)
        self.E = None if s.e is None else s.e._jet(r, order)

        if n >= 2:
            P = s.psi._jet(r, order)
            P1 = self.D(P)
            P2 = self.D(P1)
            self.P, self.P1 = P, P1
            self.hp = P1 / P
            ric_rr = P2 / P * (-(n - 1))
            ric_tan = -(P2 / P) + (1.0 - P1 * P1) / (P * P) * (n - 2)
            self.R = P2 / P * (-2.0 * (n - 1)) + (1.0 - P1 * P1) / (P * P) * ((n - 1) * (n - 2))
        else:
            zero = Jet.constant(0.0, order - 1, shape)
            self.P = self.P1 = None
            self.hp = zero
            ric_rr = Jet.constant(0.0, order - 2, shape)
            ric_tan = Jet.constant(np.nan, order - 2, shape)
            self.R = Jet.constant(0.0, order - 2, shape)
        self.Ric_rr, self.Ric_tan = ric_rr, ric_tan

        m = s.m
        self.V = self.V1 = None
        self.Phi = None
        if s.density is None or m.is_zero:
            self.ric_rr, self.ric_tan = ric_rr, ric_tan
            self.scalar_w = self.R
            self.lap_phi = Jet.constant(0.0, order - 2, shape)
            self.phi_s = Jet.constant(0.0, order - 1, shape)
            self.inv_m_phi_s = Jet.constant(0.0, order - 1, shape)
            if m.is_finite:
                self.V = Jet.constant(1.0, order, shape)
                self.V1 = Jet.constant(0.0, order - 1, shape)
            else:
                self.Phi = Jet.constant(0.0, order, shape)
        elif m.is_finite:
            mv = m.value
            if s.density_kind == "v":
                V = s.density._jet(r, order)
            else:
                V = J.exp(s.density._jet(r, order) * (-1.0 / mv))
            V1 = self.D(V)
            V2 = self.D(V1)
            a = V1 / V
            b = V2 / V
            hp = self.hp
            self.V, self.V1 = V, V1
            self.ric_rr = ric_rr - b * mv
            self.ric_tan = ric_tan - hp * a * mv if n >= 2 else ric_tan
            lapv_v = b + hp * a * (n - 1)
            self.scalar_w = self.R - lapv_v * (2.0 * mv) - a * a * (mv * (mv - 1.0))
            self.lap_phi = lapv_v * (-mv) - a * a * (mv * (mv - 1.0))
            self.phi_s = a * (-mv)
            self.inv_m_phi_s = -a
        else:
            Phi = s.density._jet(r, order)
            F1 = self.D(Phi)
            F2 = self.D(F1)
            hp = self.hp
            self.Phi = Phi
            self.ric_rr = ric_rr + F2
            self.ric_tan = ric_tan + hp * F1 if n >= 2 else ric_tan
            lap = F2 + hp * F1 * (n - 1)
            self.scalar_w = self.R + lap * 2.0 - F1 * F1
            self.lap_phi = lap - F1 * F1
            self.phi_s = F1
            self.inv_m_phi_s = Jet.constant(0.0, order - 1, shape)

    def D(self, w: Jet) -> Jet:
        """Arclength derivative."""
        d = w.deriv()
        if self.E is None:
            return d
        return d / self.E

    def tr_ric(self) -> Jet:
        if self.n == 1:
            return self.ric_rr
        return self.ric_rr + self.ric_tan * (self.n - 1)

    def div_phi(self, A: Jet, B: Jet) -> Jet:
        """Radial component of the weighted divergence of diag(A, B, ..., B)."""
        out = self.D(A) - self.phi_s * A
        if self.n >= 2:
            out = out + self.hp * (A - B) * (self.n - 1)
        return out

    def laplacian(self, w: Jet) -> Jet:
        """Weighted Laplacian of a radial function given by its jet."""
        W1 = self.D(w)
        W2 = self.D(W1)
        return W2 + self.hp * W1 * (self.n - 1) - self.phi_s * W1

    def hessian(self, w: Jet):
        """Orthonormal-frame Hessian components ``(rr, tan)`` of a radial function."""
        W1 = self.D(w)
        return self.D(W1), self.hp * W1


def _local(s: RadialSmms, r, order: int) -> _Local:
    return _Local(s, s.check_points(r), order)


# ---------------------------------------------------------------------------
# public curvature operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvaturePoint:
    """Weighted curvature at one or more points (orthonormal frame)."""

    r: np.ndarray
    ric_rr: np.ndarray
    ric_tan: np.ndarray
    scalar_w: np.ndarray
    lap_phi: np.ndarray
    bianchi_residual: np.ndarray

    def trace_defect(self, n: int) -> np.ndarray:
        """``R_w - (tr Ric_w + Delta_phi phi)``; zero by the trace identity."""
        tan = 0.0 if n == 1 else (n - 1) * self.ric_tan
        return self.scalar_w - (self.ric_rr + tan + self.lap_phi)


def weighted_laplacian(s: RadialSmms, w: Profile, r) -> np.ndarray:
    """``Delta_phi w = w'' + (n-1)(psi'/psi) w' - phi' w'`` for radial ``w``."""
    r = s.check_points(r)
    loc = _Local(s, r, 2)
    return loc.laplacian(w.jet(r, 2)).value


def radial_hessian(s: RadialSmms, w: Profile, r):
    """Hessian of a radial function: radial and tangential eigenvalues."""
    r = s.check_points(r)
    loc = _Local(s, r, 2)
    rr, tan = loc.hessian(w.jet(r, 2))
    return rr.value, tan.value


def bakry_emery_ricci(s: RadialSmms, r):
    """The two eigenvalues ``(ric_rr, ric_tan)`` of ``Ric - m v^{-1} Hess v``."""
    loc = _local(s, r, 2)
    return loc.ric_rr.value, loc.ric_tan.value


def weighted_scalar(s: RadialSmms, r):
    """Weighted scalar curvature ``R - 2m v^{-1} Delta v - m(m-1) v^{-2}|dv|^2``."""
    return _local(s, r, 2).scalar_w.value


def _bianchi_pair(loc: _Local):
    ric_rr = loc.ric_rr
    ric_tan = loc.ric_tan
    div = loc.div_phi(ric_rr, ric_tan)
    res1 = div - loc.D(loc.scalar_w) * 0.5 + loc.lap_phi * loc.inv_m_phi_s
    res2 = div - loc.D(loc.tr_ric()) * 0.5 - loc.D(loc.lap_phi) * 0.5 + loc.lap_phi * loc.inv_m_phi_s
    return res1.value, res2.value


def bianchi_residual(s: RadialSmms, r):
    """Radial component of ``div_phi Ric_w - d R_w / 2 + m^{-1} (Delta_phi phi) dphi``."""
    return _bianchi_pair(_local(s, r, 3))[0]


def bianchi_operator_residual(s: RadialSmms, r):
    """Radial defect of ``B_phi Ric_w = e^{2phi/m} d(e^{-2phi/m} Delta_phi phi) / 2``.

    ``B_phi T = div_phi T - d(tr T)/2``; the trace derivative is taken
    separately from the derivative of ``Delta_phi phi``.
    """
    return _bianchi_pair(_local(s, r, 3))[1]


def curvature(s: RadialSmms, r, with_bianchi: bool = True) -> CurvaturePoint:
    """All weighted curvature quantities at ``r`` in one pass."""
    r = s.check_points(r)
    loc = _Local(s, r, 3 if with_bianchi else 2)
    bres = _bianchi_pair(loc)[0] if with_bianchi else np.full(np.shape(r), np.nan)
    return CurvaturePoint(
        r=r,
        ric_rr=loc.ric_rr.value,
        ric_tan=loc.ric_tan.value,
        scalar_w=loc.scalar_w.value,
        lap_phi=loc.lap_phi.value,
        bianchi_residual=bres,
    )


def pole_limit(func, s: RadialSmms, side: str = "left", h0: float = 1e-2, levels: int = 5):
    """One-sided limit of ``func(s, r)`` at a smooth pole.

    Near a pole every smooth radial quantity is even in the distance ``h``
    to the pole (``psi = h + O(h^3)``), so values at ``h0, h0/2, ...`` are
    Richardson-extrapolated in powers of ``h^2``.  Returns
    ``(value, error_estimate)``.
    """
    if side not in s.poles:
        raise ValueError(f"no smooth pole on the {side}")
    r0 = s.domain[0] if side == "left" else s.domain[1]
    sign = 1.0 if side == "left" else -1.0
    hs = h0 / 2.0 ** np.arange(levels)
    T = list(np.asarray(func(s, r0 + sign * hs), dtype=float))
    prev_best = T[-1]
    for j in range(1, levels):
        fac = 4.0**j
        prev_best = T[-1]
        T = [(fac * T[i + 1] - T[i]) / (fac - 1.0) for i in range(len(T) - 1)]
    best = T[-1]
    return float(best), float(abs(best - prev_best))


# ---------------------------------------------------------------------------
# quasi-Einstein verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSample:
    """Pointwise curvature data for a quasi-Einstein test.

    ``blocks`` lists ``(multiplicity, values)`` for the eigenvalues of the
    Bakry-Emery Ricci tensor in an orthonormal frame.
    """

    n: int
    m: DimParam
    blocks: list
    scalar: np.ndarray
    scalar_w: np.ndarray
    lap_phi: np.ndarray
    v: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    grad_v_sq: Optional[np.ndarray] = None
    compact: bool = False
    ric: Optional[list] = None
    hess_v: Optional[list] = None
    lap_v: Optional[np.ndarray] = None
    closed: bool = False


def field_sample(s: RadialSmms, grid) -> FieldSample:
    r = s.check_points(grid)
    loc = _Local(s, r, 2)
    blocks = [(1, loc.ric_rr.value)]
    if s.n >= 2:
        blocks.append((s.n - 1, loc.ric_tan.value))
    v = gv = phi = hess = lap_v = None
    ric = [(1, loc.Ric_rr.value)] + ([(s.n - 1, loc.Ric_tan.value)] if s.n >= 2 else [])
    if s.m.is_finite and loc.V is not None:
        v = loc.V.value
        gv = loc.V1.value ** 2
        hrr, htan = loc.hessian(loc.V)
        hess = [(1, hrr.value)] + ([(s.n - 1, htan.value)] if s.n >= 2 else [])
        lap_v = hrr.value + (s.n - 1) * htan.value
    if not s.m.is_finite:
        phi = s.phi(r)
    elif not s.m.is_zero:
        phi = s.phi(r)
    return FieldSample(
        n=s.n,
        m=s.m,
        blocks=blocks,
        scalar=loc.R.value,
        scalar_w=loc.scalar_w.value,
        lap_phi=loc.lap_phi.value,
        v=v,
        phi=phi,
        grad_v_sq=gv,
        compact=s.compact,
        ric=ric,
        hess_v=hess,
        lap_v=lap_v,
        closed=s.closed,
    )


@dataclass(frozen=True)
class InequalityCheck:
    """A verified inequality ``margin >= 0`` (to tolerance)."""

    name: str
    passed: bool
    margin: float
    equality: bool
    statement: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "margin": self.margin, "equality": self.equality, "statement": self.statement}


@dataclass(frozen=True)
class QEReport:
    """Outcome of a quasi-Einstein test.

    ``mu_fit`` is the characteristic constant.  At ``m = +inf`` it is set
    to ``lambda_fit`` (the limit of the finite-m constants) and the
    constant of the limiting first integral is reported as ``mu_prime``.
    """

    n: int
    m: DimParam
    lambda_fit: float
    max_residual: float
    mu_fit: Optional[float]
    mu_variation: float
    mu_prime: Optional[float] = None
    mu_scale: float = 1.0
    inequality_checks: dict = field(default_factory=dict)
    notes: tuple = ()
    tol: float = 1e-9

    @property
    def is_quasi_einstein(self) -> bool:
        return self.max_residual <= self.tol

    @property
    def mu_constant(self) -> bool:
        return self.mu_variation <= self.tol * self.mu_scale

    @property
    def checks_pass(self) -> bool:
        return all(c.passed for c in self.inequality_checks.values())

    @property
    def passed(self) -> bool:
        return self.is_quasi_einstein and self.mu_constant and self.checks_pass

    def failing(self) -> list[str]:
        out = []
        if not self.is_quasi_einstein:
            out.append("quasi_einstein_residual")
        if not self.mu_constant:
            out.append("characteristic_constant_variation")
        out += [k for k, c in self.inequality_checks.items() if not c.passed]
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m.to_json(),
            "lambda_fit": self.lambda_fit,
            "max_residual": self.max_residual,
            "mu_fit": self.mu_fit,
            "mu_prime": self.mu_prime,
            "mu_variation": self.mu_variation,
            "mu_scale": self.mu_scale,
            "tol": self.tol,
            "passed": self.passed,
            "failing": self.failing(),
            "inequality_checks": {k: c.to_dict() for k, c in self.inequality_checks.items()},
            "notes": list(self.notes),
        }


def _ineq(name, values, tol, statement) -> InequalityCheck:
    margin = float(np.min(values))
    return InequalityCheck(name, margin >= -tol, margin, abs(margin) <= tol, statement)


def qe_from_fields(fs: FieldSample, tol: float = 1e-9, characteristic: str = "auto") -> QEReport:
    """Fit ``lambda`` and ``mu`` to sampled curvature data and run the estimates.

    ``characteristic`` selects which first integral to report: ``"mu"``,
    ``"mu_prime"`` (only at ``m = +inf``) or ``"auto"``.
    """
    if characteristic not in ("auto", "mu", "mu_prime"):
        raise ValueError("characteristic must be 'auto', 'mu' or 'mu_prime'")
    comps = [np.asarray(vals, dtype=float).ravel() for _, vals in fs.blocks]
    allc = np.concatenate(comps)
    if allc.size == 0:
        raise ValueError("empty grid")
    lam = float(np.mean(allc))
    max_res = float(np.max(np.abs(allc - lam)))
    m = fs.m
    n = fs.n
    notes: list[str] = []
    mu_fit = None
    mu_prime = None
    mu_var = 0.0
    mu_scale = 1.0

    if m.is_neg_inf:
        if characteristic == "mu_prime":
            raise ValueError("the mu' first integral is only defined for m = +inf")
        notes.append("m = -inf: no characteristic constant convention; mu not reported")
    elif m.is_pos_inf:
        if characteristic == "mu":
            notes.append("m = +inf: mu is set to lambda; the first integral is mu'")
        mp = -(fs.scalar_w + 2.0 * lam * (fs.phi - n))
        mu_prime = float(np.mean(mp))
        mu_var = float(np.ptp(mp))
        mu_scale = float(max(1.0, 2.0 * n * abs(lam), np.max(np.abs(fs.phi)) * 2.0 * abs(lam)))
        mu_fit = lam
    elif m.is_zero:
        if characteristic == "mu_prime":
            raise ValueError("the mu' first integral is only defined for m = +inf")
        notes.append("m = 0: density ignored, no characteristic constant")
    else:
        if characteristic == "mu_prime":
            raise ValueError("the mu' first integral is only defined for m = +inf")
        mv = m.value
        v2 = fs.v**2
        mu_pts = ((mv + n) * lam - fs.scalar_w) * v2 / mv
        # the error of each pointwise value scales like v^2, so weight by v^-4
        wts = 1.0 / v2**2
        mu_fit = float(np.sum(wts * mu_pts) / np.sum(wts))
        mu_var = float(np.ptp(mu_pts))
        mu_scale = float(max(1.0, np.max(v2) * abs(mv + n) / abs(mv)))

    checks: dict[str, InequalityCheck] = {}
    if fs.compact:
        trivial_margin = None
        if fs.grad_v_sq is not None:
            trivial_margin = float(np.max(np.sqrt(fs.grad_v_sq)))
        elif fs.phi is not None:
            trivial_margin = float(np.ptp(fs.phi))
        hyp = lam <= tol or (m.is_finite and not m.is_zero and mu_fit is not None and mu_fit <= tol)
        if hyp and trivial_margin is not None and fs.closed:
            checks["compact_positive_constants"] = InequalityCheck(
                "compact_positive_constants",
                trivial_margin <= max(tol, 1e3 * tol),
                -trivial_margin,
                trivial_margin <= tol,
                "compact with nonpositive constant implies trivial density",
            )
        if m.is_finite and m.value > 1 and lam > 0:
            mv = m.value
            checks["scalar_lower_bound"] = _ineq(
                "scalar_lower_bound",
                fs.scalar - n * (n - 1) * lam / (mv + n - 1),
                tol,
                "R >= n(n-1) lambda / (m+n-1)",
            )
            if mu_fit is not None and mu_fit > 0 and mv != 1:
                checks["gradient_estimate"] = _ineq(
                    "gradient_estimate",
                    mu_fit / (mv - 1) - (fs.grad_v_sq + lam * fs.v**2 / (mv + n - 1)),
                    tol,
                    "|dv|^2 + lambda v^2/(m+n-1) <= mu/(m-1)",
                )
        if m.is_finite and m.value < 1 - n:
            M = 2.0 - m.value - n  # dual parameter, > 1
            if lam > 0 and mu_fit is not None:
                checks["dual_gradient_estimate"] = _ineq(
                    "dual_gradient_estimate",
                    lam * fs.v**2 / (M - 1) - (fs.grad_v_sq + mu_fit / (M + n - 1)),
                    tol,
                    "|du|^2 + mu/(M+n-1) <= lambda u^2/(M-1), M = 2-m-n",
                )
            if mu_fit is not None and mu_fit > 0:
                lower = fs.scalar + n * (n - 1) * lam / (M - 1)
                upper = (M + 2 * n - 2) * lam - fs.scalar
                checks["dual_scalar_bounds"] = _ineq(
                    "dual_scalar_bounds",
                    np.minimum(lower, upper),
                    tol,
                    "-n(n-1) lambda/(M-1) < R <= (M+2n-2) lambda, M = 2-m-n",
                )
        if m.is_finite and m.value == 1:
            notes.append("m = 1: gradient estimates are vacuous and omitted")
    return QEReport(
        n=n,
        m=m,
        lambda_fit=lam,
        max_residual=max_res,
        mu_fit=mu_fit,
        mu_variation=mu_var,
        mu_prime=mu_prime,
        mu_scale=mu_scale,
        inequality_checks=checks,
        notes=tuple(notes),
        tol=tol,
    )


def qe_verify(s: RadialSmms, grid=None, tol: float = 1e-9, characteristic: str = "auto") -> QEReport:
    """Test ``Ric_w = lambda g`` on a grid and extract the constants.

    ``lambda`` is the least-squares constant over both eigenvalues and all
    grid points; ``max_residual`` is the sup of their deviation from it.
    """
    if grid is None:
        grid = interior_grid(s, 64)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid.size < 8:
        raise ValueError("qe_verify needs at least 8 grid points")
    return qe_from_fields(field_sample(s, grid), tol=tol, characteristic=characteristic)


# ---------------------------------------------------------------------------
# m -> infinity limit of the characteristic constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitRow:
    m: float
    lam: float
    mu: float
    scaled_gap: float
    lam_error: float
    mu_error: float
    gap_error: float


@dataclass(frozen=True)
class LimitTable:
    rows: list
    target_lambda: float
    target_gap: float
    rates: dict

    def to_dict(self) -> dict:
        return {
            "rows": [r.__dict__ for r in self.rows],
            "target_lambda": self.target_lambda,
            "target_gap": self.target_gap,
            "rates": self.rates,
        }


def _rate(ms, errs):
    ms = np.asarray(ms, dtype=float)
    errs = np.asarray(errs, dtype=float)
    ok = errs > 0
    if ok.sum() < 2:
        return float("inf")
    slope = np.polyfit(np.log(ms[ok]), np.log(errs[ok]), 1)[0]
    return float(-slope)


def mu_limit_check(family: Iterable, target: Sequence[float], n: int, tol: Optional[float] = None) -> LimitTable:
    """Tabulate ``lambda_i -> lambda``, ``mu_i -> lambda`` and ``m_i (mu_i - lambda_i) -> mu' - n lambda``.

    ``family`` yields ``(m, lambda, mu)`` triples or :class:`QEReport`
    objects; ``target`` is ``(lambda, mu')``.  If reports are given and
    ``tol`` is set, every member must be quasi-Einstein to ``tol``.
    The reported rates are fitted exponents ``p`` in ``error ~ m^{-p}``.
    """
    lam_t, mup_t = float(target[0]), float(target[1])
    gap_t = mup_t - n * lam_t
    rows = []
    for item in family:
        if isinstance(item, QEReport):
            if tol is not None and item.max_residual > tol:
                raise ValueError(f"family member at m={item.m} is not quasi-Einstein to tolerance")
            m, lam, mu = item.m.value, item.lambda_fit, item.mu_fit
        else:
            m, lam, mu = (float(x) for x in item)
        gap = m * (mu - lam)
        rows.append(LimitRow(m, lam, mu, gap, abs(lam - lam_t), abs(mu - lam_t), abs(gap - gap_t)))
    if not rows:
        raise ValueError("empty family")
    rows.sort(key=lambda r: r.m)
    ms = [r.m for r in rows]
    rates = {
        "lambda": _rate(ms, [r.lam_error for r in rows]),
        "mu": _rate(ms, [r.mu_error for r in rows]),
        "scaled_gap": _rate(ms, [r.gap_error for r in rows]),
    }
    return LimitTable(rows, lam_t, gap_t, rates)
