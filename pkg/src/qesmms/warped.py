"""Ricci curvature of multiply warped products over an interval.

This module is an independent curvature routine used as an oracle.  For

    gbar = dt^2 + sum_i f_i(t)^2 g_i,

with each fiber ``(F_i^{d_i}, g_i)`` Einstein, ``Ric_{g_i} = c_i g_i``, the
Ricci tensor is diagonal with orthonormal eigenvalues

    Ric(dt, dt) = - sum_i d_i f_i'' / f_i
    Ric on F_i  = - f_i''/f_i - (d_i - 1)(f_i'/f_i)^2 + c_i / f_i^2
                  - (f_i'/f_i) sum_{j != i} d_j f_j'/f_j.

A radial SMMS with integer ``m`` and fiber ``(F^m, h)`` gives the auxiliary
manifold ``dt^2 + psi^2 g_{S^{n-1}} + v^2 h``: the unit sphere has
``c = n - 2`` and ``F`` has ``c = mu``.  Its base block is the Bakry-Emery
Ricci tensor of the SMMS.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RadialSmms
from .profiles import Profile

__all__ = ["WarpFiber", "multiply_warped_ricci", "auxiliary_ricci", "auxiliary_einstein_defect"]


@dataclass(frozen=True)
class WarpFiber:
    """An Einstein fiber of dimension ``dim`` with constant ``einstein`` and warping ``f``."""

    dim: int
    einstein: float
    f: Profile


def multiply_warped_ricci(fibers: list, t) -> tuple:
    """Ricci eigenvalues ``(ric_tt, [ric_fiber_i ...])`` at points ``t``."""
    t = np.asarray(t, dtype=float)
    vals = []
    for fb in fibers:
        w, w1, w2 = fb.f.derivatives(t, 2)
        vals.append((fb.dim, fb.einstein, w, w1 / w, w2 / w))
    ric_tt = -sum(d * b for d, _, _, _, b in vals)
    out = []
    for i, (d, c, w, a, b) in enumerate(vals):
        others = sum(dj * aj for j, (dj, _, _, aj, _) in enumerate(vals) if j != i)
        out.append(-b - (d - 1) * a * a + c / w**2 - a * others)
    return ric_tt, out


def _fibers(s: RadialSmms, m: int, fiber_einstein: float) -> list:
    if s.e is not None:
        raise ValueError("the auxiliary manifold needs an arclength radial coordinate")
    if not s.m.is_finite or int(s.m.value) != s.m.value or s.m.value < 1:
        raise ValueError("the auxiliary manifold exists for positive integer m")
    fibers = []
    if s.n >= 2:
        fibers.append(WarpFiber(s.n - 1, float(s.n - 2), s.psi))
    from .conformal import _v_profile

    fibers.append(WarpFiber(m, float(fiber_einstein), _v_profile(s)))
    return fibers


def auxiliary_ricci(s: RadialSmms, r, fiber_einstein: float = 0.0):
    """Ricci eigenvalues of ``g + v^2 h`` with ``Ric_h = fiber_einstein * h``.

    Returns ``(ric_rr, ric_tan, ric_fiber)``; ``ric_tan`` is NaN for ``n = 1``.
    """
    m = int(s.m.value) if s.m.is_finite else -1
    r = s.check_points(r)
    fibers = _fibers(s, m, fiber_einstein)
    tt, fb = multiply_warped_ricci(fibers, r)
    if s.n >= 2:
        return tt, fb[0], fb[1]
    return tt, np.full_like(tt, np.nan), fb[0]


def auxiliary_einstein_defect(s: RadialSmms, r, lam: float, mu: float) -> float:
    """Sup of ``|Ric - lam gbar|`` for the auxiliary manifold with fiber constant ``mu``."""
    rr, tan, fib = auxiliary_ricci(s, r, mu)
    parts = [rr, fib] + ([tan] if s.n >= 2 else [])
    return float(max(np.max(np.abs(p - lam)) for p in parts))
