"""Quasi-Einstein metrics on S^2-bundles over Kähler-Einstein manifolds.

The base is ``dt^2 + f(t)^2 sigma^2 + h(t)^2 g_B`` on ``(0, l)``, where
``sigma`` is the connection form of a circle bundle of twist ``s/q`` over a
Kähler-Einstein manifold ``(B^{n-2}, g_B)`` with ``Ric = n g_B``.  With
``c = n^2 s^2 / q^2`` the weighted Ricci eigenvalues are

    tt: -f''/f - (n-2) h''/h - m v''/v
    ff: -f''/f - (n-2) f'h'/(f h) - m f'v'/(f v) + (n-2) c f^2/(4 h^4)
    hh: -h''/h - f'h'/(f h) - m h'v'/(h v) - (n-3) (h'/h)^2 + n/h^2 - c f^2/(2 h^4)

and setting each equal to ``lambda`` gives a system of three second-order
ODEs.  At ``m = +inf`` the density terms become ``phi''``, ``f'phi'/f``
and ``h'phi'/h``.  Smooth closure needs ``f(0) = 0 = f(l)``,
``f'(0) = 1 = -f'(l)`` and ``h' = v' = 0`` at both ends.

The boundary value problem is solved by two-sided shooting: one solution
starts at ``t = 0``, the other at ``t = l`` (the system is reversible, so
it is integrated in ``l - t``), and the two are matched at ``l/2``.  The
equations are first normalised to ``lambda = 1``, ``v(0) = 1`` (or
``phi(0) = 0``), leaving the unknowns ``(h(0), mu, h(l), v(l), l)``
(``(h(0), phi''(0), h(l), phi''(l), l)`` at infinity, where ``phi(l)`` is
fixed by the first integral).  The ``m = +inf`` solution is found by a
coarse grid search followed by least squares; finite ``m`` is reached by
continuation in ``1/m``.  Finally a homothety sets ``mu = m - 1``
(finite ``m``) or a shift of ``phi`` sets ``mu' = 0`` (``m = +inf``).
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .. import jets as J
from ..core import DimParam, FieldSample, _as_dim
from ..profiles import OdeProfile
from .trajectory import NonConvergence, Trajectory

__all__ = ["LppParams", "MultiProfileSmms", "lpp_solve", "lpp_soliton_search"]

_T0 = 1e-6
_FLIP = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class LppParams:
    n: int
    s: int
    q: int

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError("n must be an even integer >= 4")
        if not 1 <= self.s < self.q:
            raise ValueError("need 1 <= s < q")

    @property
    def c(self) -> float:
        return self.n**2 * self.s**2 / self.q**2


def _second_derivs(p: LppParams, lam: float, m: Optional[float], y, lib=np):
    """``(f'', h'', density'')`` from the state ``(f, f', h, h', d, d')``.

    ``d`` is ``v`` for finite ``m`` and ``phi`` for ``m = None`` (infinity).
    Works on floats, arrays and jets.
    """
    n, c = p.n, p.c
    f, fp, h, hp, d, dp = y
    h2 = h * h
    h4 = h2 * h2
    if m is None:
        fpp = -f * lam - fp * hp * (n - 2) / h + fp * dp + f * f * f * ((n - 2) * c / 4.0) / h4
        hpp = -h * lam - fp * hp / f + hp * dp - hp * hp * (n - 3) / h + n / h - f * f * (c / 2.0) / (h2 * h)
        dpp = fpp / f + hpp * (n - 2) / h + lam
    else:
        fpp = -f * lam - fp * hp * (n - 2) / h - fp * dp * m / d + f * f * f * ((n - 2) * c / 4.0) / h4
        hpp = -h * lam - fp * hp / f - hp * dp * m / d - hp * hp * (n - 3) / h + n / h - f * f * (c / 2.0) / (h2 * h)
        dpp = d * (-lam - fpp / f - hpp * (n - 2) / h) / m
    return fpp, hpp, dpp


def _rhs(p, lam, m):
    def f(t, y):
        fpp, hpp, dpp = _second_derivs(p, lam, m, y)
        return [y[1], fpp, y[3], hpp, y[5], dpp]

    return f


def _jet_rhs(p, lam, m):
    def f(ys):
        fpp, hpp, dpp = _second_derivs(p, lam, m, ys)
        return [ys[1], fpp, ys[3], hpp, ys[5], dpp]

    return f


def _start(p, lam, m, h0, d0, d2, t0=None):
    """Series data at ``t0`` for a smooth start at a zero of ``f``.

    ``d2`` is the second derivative of the density at the pole (``phi''``
    at infinity); for finite ``m`` it follows from ``mu`` via
    ``v''(0) = (mu - lam v0^2) / (2 v0)``.
    """
    t0 = _T0 if t0 is None else t0
    n = p.n
    h2 = h0 * (n / h0**2 - lam) / 2.0
    if m is None:
        f3 = (-lam - (n - 2) * h2 / h0 + d2) / 6.0
    else:
        f3 = -(lam + (n - 2) * h2 / h0 + m * d2 / d0) / 6.0
    return np.array(
        [t0 + f3 * t0**3, 1.0 + 3.0 * f3 * t0**2, h0 + h2 * t0**2 / 2.0, h2 * t0, d0 + d2 * t0**2 / 2.0, d2 * t0]
    )


def _half(p, lam, m, h0, d0, d2, T, rtol, dense=False):
    # f, h' and the density derivative vanish at the pole and are divided
    # by f in the equations, so they need absolute accuracy well below t0

    sol = solve_ivp(
        _rhs(p, lam, m), (_T0, T), _start(p, lam, m, h0, d0, d2), method="DOP853",
        rtol=rtol, atol=rtol * _T0 * np.array([1.0, 1e2, 1e2, 1.0, 1e2, 1.0]), dense_output=dense,
    )
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        return None
    return sol


# ---------------------------------------------------------------------------
# shooting in the normalised problem (lambda = 1)
# ---------------------------------------------------------------------------


def _mismatch_inf(p, x, rtol):
    h0, p0, hl, pl, l = x
    if h0 <= 0 or hl <= 0 or l <= 4 * _T0:
        return np.full(6, 10.0)
    a = _half(p, 1.0, None, h0, 0.0, p0, l / 2, rtol)
    b = _half(p, 1.0, None, hl, p0 - pl, pl, l / 2, rtol)
    if a is None or b is None:
        return np.full(6, 10.0)
    return a.y[:, -1] - b.y[:, -1] * _FLIP


def _mismatch_finite(p, m, x, rtol):
    h0, mu, hl, vl, l = x
    if h0 <= 0 or hl <= 0 or vl <= 0 or l <= 4 * _T0:
        return np.full(6, 10.0)
    a = _half(p, 1.0, m, h0, 1.0, (mu - 1.0) / 2.0, l / 2, rtol)
    b = _half(p, 1.0, m, hl, vl, (mu - vl**2) / (2.0 * vl), l / 2, rtol)
    if a is None or b is None:
        return np.full(6, 10.0)
    return a.y[:, -1] - b.y[:, -1] * _FLIP


def _solve(fun, x0, rtol):
    ls = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
    return ls.x, float(np.max(np.abs(ls.fun)))


@dataclass(frozen=True)
class SolitonSeed:
    x: np.ndarray
    mismatch: float
    seeds_tried: int


@functools.lru_cache(maxsize=16)
def lpp_soliton_search(p: LppParams, tol: float = 1e-9, rtol: float = 1e-12, coarse_rtol: float = 1e-7, keep: int = 8) -> SolitonSeed:
    """Find the nontrivial ``m = +inf``, ``lambda = 1`` solution.

    A coarse grid over ``(h(0), phi''(0), h(l), phi''(l), l)`` is scored by
    the matching defect; the best nontrivial candidates (``phi'' `` not
    identically small) are refined by least squares.  Solutions with
    constant ``phi`` (Einstein metrics) are rejected.
    """
    hs = (1.0, 1.5, 2.0, 2.5)
    ps = (-0.6, -0.2, 0.2, 0.6)
    ls = (2.5, 3.0, 3.5)
    scored = []
    for h0, hl, p0, pl, l in itertools.product(hs, hs, ps, ps, ls):
        if h0 > hl:
            continue
        x = np.array([h0, p0, hl, pl, l])
        r = _mismatch_inf(p, x, coarse_rtol)
        scored.append((float(np.linalg.norm(r)), x))
    scored.sort(key=lambda z: z[0])
    tried = 0
    for _, x0 in scored[: keep * 4]:
        tried += 1
        x, res = _solve(lambda z: _mismatch_inf(p, z, rtol), x0, rtol)
        if res <= tol and abs(x[1] - x[3]) + abs(x[1]) > 1e-3 and x[0] > 0 and x[2] > 0:
            if x[0] > x[2]:  # canonical orientation: smaller h at t = 0
                x = np.array([x[2], x[3], x[0], x[1], x[4]])
            return SolitonSeed(x, res, tried)
        if tried >= keep:
            break
    raise NonConvergence("coarse search found no nontrivial soliton")


_SCHEDULE = (1e4, 2e3, 500.0, 200.0, 100.0, 50.0, 30.0, 20.0, 14.0, 10.0, 7.0, 5.0, 4.0, 3.0, 2.5, 2.0, 1.6, 1.3, 1.15, 1.07)


def _continue(p, soliton, m_target, tol, rtol):
    h0, p0, hl, pl, l = soliton
    phil = p0 - pl
    mup = p.n - 2.0 * p0
    path = [m for m in _SCHEDULE if m > m_target * 1.0001] + [m_target]
    x = None
    res = np.inf
    for m in path:
        if x is None:
            x = np.array([h0, 1.0 + (mup - p.n) / m, hl, math.exp(-phil / m), l])
        x, res = _solve(lambda z: _mismatch_finite(p, m, z, rtol), x, rtol)
        if res > 1e3 * tol:
            raise NonConvergence(f"continuation failed at m = {m} (defect {res:.3g})")
    if res > tol:
        raise NonConvergence(f"shooting defect {res:.3g} above tolerance")
    return x, res, path


# ---------------------------------------------------------------------------
# the solved space
# ---------------------------------------------------------------------------


class _GluedState:
    """State on ``[t0, l - t0]`` glued from the two half solutions."""

    def __init__(self, left, right, l):
        self.left, self.right, self.l = left, right, l

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((6, t.size))
        mid = t <= self.l / 2
        if np.any(mid):
            out[:, mid] = self.left(t[mid])
        if np.any(~mid):
            out[:, ~mid] = self.right(self.l - t[~mid]) * _FLIP[:, None]
        return out


@dataclass
class MultiProfileSmms:
    """``(dt^2 + f^2 sigma^2 + h^2 g_B, v^m dvol)`` on ``(0, l)`` with ODE-backed profiles."""

    n: int
    m: DimParam
    domain: tuple
    f: OdeProfile
    h: OdeProfile
    density: OdeProfile
    density_kind: str
    s: int
    q: int
    lam: float
    base_einstein: float
    compact: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def closed(self) -> bool:
        return True

    def interior_grid(self, npts: int = 200, margin: float = 0.01) -> np.ndarray:
        lo, hi = self.domain
        d = (hi - lo) * margin
        return np.linspace(lo + d, hi - d, npts)

    def _jets(self, t, order=2):
        return self.f.jet(t, order), self.h.jet(t, order), self.density.jet(t, order)

    def field_sample(self, grid) -> FieldSample:
        t = np.asarray(grid, dtype=float)
        n = self.n
        c = self.n**2 * self.s**2 / self.q**2
        F, H, D = self._jets(t)
        f, f1, f2 = F.derivatives()
        h, h1, h2 = H.derivatives()
        d, d1, d2 = D.derivatives()
        Ric_tt = -f2 / f - (n - 2) * h2 / h
        Ric_ff = -f2 / f - (n - 2) * f1 * h1 / (f * h) + (n - 2) * c * f**2 / (4 * h**4)
        Ric_hh = -h2 / h - f1 * h1 / (f * h) - (n - 3) * (h1 / h) ** 2 + self.base_einstein / h**2 - c * f**2 / (2 * h**4)
        R = Ric_tt + Ric_ff + (n - 2) * Ric_hh
        mean_curv = f1 / f + (n - 2) * h1 / h
        ric = [(1, Ric_tt), (1, Ric_ff), (n - 2, Ric_hh)]
        if self.m.is_finite:
            mv = self.m.value
            hess = [(1, d2), (1, f1 * d1 / f), (n - 2, h1 * d1 / h)]
            lap_v = d2 + mean_curv * d1
            blocks = [(k, r - mv * hv / d) for (k, r), (_, hv) in zip(ric, hess)]
            gv = d1**2
            scalar_w = R - 2 * mv * lap_v / d - mv * (mv - 1) * gv / d**2
            lap_phi = -mv * lap_v / d - mv * (mv - 1) * gv / d**2
            return FieldSample(n, self.m, blocks, R, scalar_w, lap_phi, v=d, phi=-mv * np.log(d), grad_v_sq=gv,
                               compact=True, ric=ric, hess_v=hess, lap_v=lap_v, closed=True)
        hess_phi = [(1, d2), (1, f1 * d1 / f), (n - 2, h1 * d1 / h)]
        blocks = [(k, r + hp) for (k, r), (_, hp) in zip(ric, hess_phi)]
        lap = d2 + mean_curv * d1
        return FieldSample(n, self.m, blocks, R, R + 2 * lap - d1**2, lap - d1**2, phi=d, compact=True, ric=ric,
                           closed=True)

    def closure_defects(self) -> dict:
        return dict(self.meta.get("closure", {}))


def _integrability(p, lam, m, mu, y):
    """Pointwise first integral minus its constant, relative to the constant's size.

    The integrator tolerance is relative, so the residual is divided by
    ``max(1, |mu|)`` (``max(1, n lambda)`` at infinity) to be comparable
    with it.
    """
    f, fp, h, hp, d, dp = y
    _, _, dpp = _second_derivs(p, lam, m, y)
    if m is None:
        # -mu' = Delta phi - |dphi|^2 + 2 lam phi - n lam
        val = -(dpp + (fp / f + (p.n - 2) * hp / h) * dp - dp**2 + 2 * lam * d - p.n * lam)
        scale = max(1.0, p.n * abs(lam))
    else:
        val = lam * d**2 + d * dpp + d * fp * dp / f + (p.n - 2) * d * hp * dp / h + (m - 1) * dp**2
        scale = max(1.0, abs(mu))
    return (val - mu) / scale


def lpp_solve(n: int = 4, m=3.0, s: int = 1, q: int = 2, tol: float = 1e-9, rtol: float = 1e-12, npts: int = 401) -> Trajectory:
    """Solve the closed quasi-Einstein problem and return its trajectory.

    ``trajectory.smms`` is a :class:`MultiProfileSmms`; ``constants``
    carries ``lambda`` and ``mu`` (``mu_prime`` at infinity), ``l`` and the
    closure (matching) defect.
    """
    p = LppParams(n, s, q)
    mdim = _as_dim(m)
    if mdim.is_neg_inf or (mdim.is_finite and not mdim.value > 1):
        raise ValueError("lpp_solve needs m > 1")
    seed = lpp_soliton_search(p, tol=tol, rtol=rtol)
    notes = [f"m=inf seed found after {seed.seeds_tried} refinements"]
    if mdim.is_pos_inf:
        h0, p0, hl, pl, l = seed.x
        mup = n - 2.0 * p0
        shift = mup / 2.0  # phi -> phi + mu'/(2 lambda) gives mu' = 0
        lam, mfin, mu = 1.0, None, 0.0
        left_init = (h0, shift, p0)
        right_init = (hl, shift + p0 - pl, pl)
        defect = seed.mismatch
        path = []
    else:
        mv = mdim.value
        x, defect, path = _continue(p, seed.x, mv, tol, rtol)
        h0, mu1, hl, vl, l = x
        c2 = mu1 / (mv - 1.0)  # homothety factor squared
        cc = math.sqrt(c2)
        lam, mfin, mu = 1.0 / c2, mv, mv - 1.0
        h0, hl, l = h0 * cc, hl * cc, l * cc
        left_init = (h0, 1.0, (mu - lam) / 2.0)
        right_init = (hl, vl, (mu - lam * vl**2) / (2.0 * vl))
    left = _half(p, lam, mfin, *left_init, l / 2, rtol, dense=True)
    right = _half(p, lam, mfin, *right_init, l / 2, rtol, dense=True)
    if left is None or right is None:
        raise NonConvergence("final integration failed")
    match = left.y[:, -1] - right.y[:, -1] * _FLIP
    state = _GluedState(left.sol, right.sol, l)
    rhs = _jet_rhs(p, lam, mfin)
    dom = (_T0, l - _T0)
    tt = np.linspace(dom[0], dom[1], npts)
    ys = state(tt)
    fprof = OdeProfile(state, rhs, lambda z: z[0], dom, samples=(tt, ys[0]))
    hprof = OdeProfile(state, rhs, lambda z: z[2], dom, samples=(tt, ys[2]))
    dprof = OdeProfile(state, rhs, lambda z: z[4], dom, samples=(tt, ys[4]))
    closure = {
        "match_f": float(abs(match[0])),
        "match_df": float(abs(match[1])),
        "match_h": float(abs(match[2])),
        "match_dh": float(abs(match[3])),
        "match_density": float(abs(match[4])),
        "match_ddensity": float(abs(match[5])),
    }
    smms = MultiProfileSmms(
        n, mdim, (0.0, l), fprof, hprof, dprof, "phi" if mfin is None else "v", s, q, lam, float(n),
        meta={"closure": closure},
    )
    # integrability residual along the integrator's own steps
    steps = np.concatenate([left.t, l - right.t[::-1]])
    ystep = state(steps)
    integ = _integrability(p, lam, mfin, mu, ystep)
    cols = {
        "r": steps,
        "psi": ystep[0],
        "v": ystep[4] if mfin is not None else np.full(steps.size, np.nan),
        "phi": ystep[4] if mfin is None else -mfin * np.log(ystep[4]),
        "integrability_residual": integ,
    }
    consts = {"lambda": lam, "l": l, "shooting_defect": defect, "closure_defect": max(closure.values())}
    if mfin is None:
        consts["mu_prime"] = 0.0
    else:
        consts["mu"] = mu
    traj = Trajectory("lpp", n, mdim, steps, ystep, ("f", "df", "h", "dh", "density", "ddensity"), smms, cols, consts,
                      notes=tuple(notes), extra={"continuation": path, "rtol": rtol})
    return traj
