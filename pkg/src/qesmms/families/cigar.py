"""Two-dimensional BER-flat spaces: Schwarzschild bases and the cigar.

For finite ``m > 1`` the space is ``dt^2 + psi^2 dtheta^2`` with density
``v^m``, where ``psi = (m-1) v'/2`` and ``((m-1) v'/2)^2 = 1 - v^{1-m}``,
``v(0) = 1``.  Differentiating the first integral gives the regular system

    v'   = 2 psi / (m - 1)
    psi' = v^{-m}

with ``v(0) = 1``, ``psi(0) = 0``.  The pole at ``t = 0`` is a regular
point of this system, so no series start-up is needed.  The first integral
``psi^2 - 1 + v^{1-m}`` is monitored as the integrability residual.

At ``m = +inf`` the solution is ``psi = tanh t`` with
``phi = log sech^2 t`` (weight ``cosh^2 t``).
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .. import jets as J
from .. import profiles as P
from ..core import RadialSmms, _as_dim
from ..profiles import OdeProfile
from .trajectory import NonConvergence, Trajectory

__all__ = ["cigar_solve", "cigar_mu"]


def cigar_mu(m) -> float:
    """Characteristic constant ``4/(m-1)``; at ``m = +inf`` the constant ``mu' = 4``."""
    m = _as_dim(m)
    if m.is_pos_inf:
        return 4.0
    return 4.0 / (m.value - 1.0)


def _rhs(m):
    def f(t, y):
        v, psi = y
        return [2.0 * psi / (m - 1.0), v ** (-m)]

    return f


def _jet_rhs(m):
    def f(ys):
        v, psi = ys
        return [psi * (2.0 / (m - 1.0)), J.exp(J.log(v) * (-m))]

    return f


def cigar_solve(m, t_max: float = 10.0, tol: float = 1e-12, npts: int = 401) -> Trajectory:
    """Solve for the BER-flat cigar-type space on ``[0, t_max]``."""
    m = _as_dim(m)
    if m.is_neg_inf or (m.is_finite and not m.value > 1):
        raise ValueError("the cigar family needs m > 1")
    t = np.linspace(0.0, t_max, npts)
    if m.is_pos_inf:
        psi = P.tanh()
        phi = P.log(P.sech2())
        s = RadialSmms(2, m, (0.0, t_max), psi=psi, density=phi, density_kind="phi", poles=("left",), label="cigar")
        cols = {"r": t, "psi": np.tanh(t), "v": np.full_like(t, np.nan)}
        cols["phi"] = -2.0 * np.log(np.cosh(t))
        return Trajectory("cigar", 2, m, t, np.atleast_2d(np.full_like(t, np.nan)), ("v_state",), s, cols,
                          {"lambda": 0.0, "mu_prime": 4.0}, notes=("closed form",))
    mv = m.value
    sol = solve_ivp(_rhs(mv), (0.0, t_max), [1.0, 0.0], method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True)
    if sol.status != 0:
        raise NonConvergence(f"cigar integration failed: {sol.message}")
    dense = sol.sol
    rhs = _jet_rhs(mv)
    y = dense(t)
    vprof = OdeProfile(dense, rhs, lambda ys: ys[0], (0.0, t_max), samples=(t, y[0]))
    pprof = OdeProfile(dense, rhs, lambda ys: ys[1], (0.0, t_max), samples=(t, y[1]))
    s = RadialSmms(2, m, (0.0, t_max), psi=pprof, density=vprof, poles=("left",), label="cigar")
    integ = y[1] ** 2 - 1.0 + y[0] ** (1.0 - mv)
    cols = {"r": t, "psi": y[1], "v": y[0], "integrability_residual": integ}
    return Trajectory("cigar", 2, m, t, y, ("v_state", "psi_state"), s, cols,
                      {"lambda": 0.0, "mu": cigar_mu(m), "tol": tol})
