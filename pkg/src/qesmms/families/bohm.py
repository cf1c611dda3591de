"""Rotationally symmetric BER-flat spaces for ``n >= 3``: Böhm and Bryant.

In the coordinates

    X = c1 psi' Y,   Y = c2 ((m-1) psi v'/v + (n-1) psi')^{-1},
    W = c3 psi Y / v,   dr = c4 psi Y dt,

with ``c1 = sqrt((m+n-2)/((m-1)(n-2)))``, ``c2 = sqrt((m-1)(n-1)(n-2)/m)``,
``c3 = sqrt(m mu/((n-1)(n-2)))`` and ``c4 = sqrt(m/((m-1)(n-1)(n-2)))``, the
quasi-Einstein equation with ``lambda = 0`` becomes the polynomial system

    X' = X (X^2 - a Y^2) + b Y^2 - X
    Y' = Y (X^2 - a Y^2) - b X Y + a Y
    W' = W (X^2 - a Y^2)

where ``a = 1/(m-1)`` and ``b = a sqrt(m(m+n-2)/(n-1))``.  The first
integral of the equations puts solutions on the unit sphere.  The smooth
solution leaves the saddle ``I`` (at ``t = -inf``) along the eigenvector
``(0, 0, 1)`` and tends to ``K``.  At ``m = +inf`` we have ``a = 0`` and
``b = 1/sqrt(n-1)``; ``W`` decouples and ``(X, Y) -> (0, 0)``.

The geometry is recovered from

    d(log psi)/dt = (c4/c1) X,
    d(log v)/dt   = c4 (c2 - (n-1) X / c1) / (m - 1)   (finite m),
    d(phi)/dt     = sqrt(n-1) X - 1                    (m = +inf),

normalised by ``mu = 1/(m-1)`` (``mu' = 1`` at infinity) and
``phi(0) = 1``.  The reconstructed space uses ``t`` as its radial
coordinate with metric factor ``e = c4 psi Y``, so all curvature is
evaluated from exact derivatives of the ODE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853, OdeSolution, Radau
from scipy.interpolate import CubicSpline

from .. import jets as J
from ..core import RadialSmms, _as_dim, _Local
from ..profiles import OdeProfile
from .trajectory import NonConvergence, Trajectory

__all__ = [
    "bohm_coefficients",
    "bohm_field",
    "bohm_jacobian",
    "fixed_point_I",
    "fixed_point_K",
    "linearization_eigenvalues",
    "lyapunov_kappa",
    "lyapunov_log_kappa",
    "bohm_bryant_solve",
    "fit_power",
    "bryant_asymptotics_check",
    "ber_flat_background_check",
    "epsilon_independence",
]


def _check(n, m):
    m = _as_dim(m)
    if n < 3:
        raise ValueError("the Böhm system needs n >= 3")
    if m.is_neg_inf or (m.is_finite and not m.value > 1):
        raise ValueError("the Böhm system needs m > 1")
    return m


def bohm_coefficients(n: int, m) -> tuple:
    """``(a, b)`` with ``a = 1/(m-1)``, ``b = a sqrt(m(m+n-2)/(n-1))``."""
    m = _check(n, m)
    if m.is_pos_inf:
        return 0.0, 1.0 / math.sqrt(n - 1)
    mv = m.value
    a = 1.0 / (mv - 1.0)
    return a, a * math.sqrt(mv * (mv + n - 2.0) / (n - 1.0))


def bohm_field(n: int, m):
    """The vector field as a function of a state ``(X, Y, W)`` (arrays allowed)."""
    a, b = bohm_coefficients(n, m)

    def f(y):
        X, Y, W = y[0], y[1], y[2]
        q = X * X - a * Y * Y
        return np.array([X * q + b * Y * Y - X, Y * q - b * X * Y + a * Y, W * q])

    return f


def bohm_jacobian(n: int, m, y) -> np.ndarray:
    a, b = bohm_coefficients(n, m)
    X, Y, W = (float(c) for c in y)
    q = X * X - a * Y * Y
    return np.array(
        [
            [q + 2 * X * X - 1.0, -2 * a * X * Y + 2 * b * Y, 0.0],
            [2 * X * Y - b * Y, q - 2 * a * Y * Y - b * X + a, 0.0],
            [2 * X * W, -2 * a * Y * W, q],
        ]
    )


def fixed_point_I(n: int, m) -> np.ndarray:
    m = _check(n, m)
    if m.is_pos_inf:
        return np.array([1.0 / math.sqrt(n - 1), math.sqrt((n - 2) / (n - 1)), 0.0])
    mv = m.value
    return np.array(
        [math.sqrt((mv + n - 2) / (mv * (n - 1))), math.sqrt((mv - 1) * (n - 2) / (mv * (n - 1))), 0.0]
    )


def fixed_point_K(n: int, m) -> np.ndarray:
    m = _check(n, m)
    if m.is_pos_inf:
        return np.array([0.0, 0.0, 1.0])
    mv = m.value
    return np.array(
        [
            math.sqrt((n - 1) / (mv * (mv + n - 2))),
            math.sqrt((mv - 1) * (n - 1) / (mv * (mv + n - 2))),
            math.sqrt((mv - 1) / (mv + n - 2)),
        ]
    )


def linearization_eigenvalues(n: int, m) -> np.ndarray:
    """Sorted eigenvalues of the linearisation at ``I``."""
    ev = np.linalg.eigvals(bohm_jacobian(n, m, fixed_point_I(n, m)))
    return np.sort(ev.real)


def lyapunov_log_kappa(n: int, m, state) -> np.ndarray:
    """``log kappa``; finite ``m`` uses the three-factor formula, ``m = +inf`` uses ``W^{-2}``."""
    m = _check(n, m)
    X, Y, W = (np.asarray(c, dtype=float) for c in state[:3])
    if m.is_pos_inf:
        if np.any(W <= 0) or np.any(X < 0) or np.any(Y < 0):
            raise ValueError("state outside the open first octant")
        return -2.0 * np.log(W)
    if np.any(X <= 0) or np.any(Y <= 0) or np.any(W <= 0):
        raise ValueError("state outside the open first octant")
    mv = m.value
    c = math.sqrt((n - 1) / (mv * (mv + n - 2)))
    return (
        -(2 * mv / (mv + n - 1)) * np.log(W)
        - (2 * (n - 1) / (mv + n - 1)) * np.log(Y)
        + 2.0 * np.log(np.abs(1.0 - c * X))
    )


def lyapunov_kappa(n: int, m, state) -> np.ndarray:
    """Böhm's Lyapunov function; ``-1/(X^2+Y^2-1)`` at ``m = +inf``."""
    return np.exp(lyapunov_log_kappa(n, m, state))


def _constants(n: int, m):
    if m.is_pos_inf:
        c1 = 1.0 / math.sqrt(n - 2)
        c2 = math.sqrt((n - 1) * (n - 2))
        c3 = math.sqrt(1.0 / ((n - 1) * (n - 2)))  # mu' = 1
        c4 = 1.0 / math.sqrt((n - 1) * (n - 2))
        return c1, c2, c3, c4, None
    mv = m.value
    mu = 1.0 / (mv - 1.0)
    c1 = math.sqrt((mv + n - 2) / ((mv - 1) * (n - 2)))
    c2 = math.sqrt((mv - 1) * (n - 1) * (n - 2) / mv)
    c3 = math.sqrt(mv * mu / ((n - 1) * (n - 2)))
    c4 = math.sqrt(mv / ((mv - 1) * (n - 1) * (n - 2)))
    return c1, c2, c3, c4, mu


def _augmented(n: int, m):
    """Right-hand sides (numeric and jet) of ``(X, Y, W, log psi, log v or phi, r)``."""
    a, b = bohm_coefficients(n, m)
    c1, c2, c3, c4, _ = _constants(n, m)
    inf = m.is_pos_inf
    mm1 = None if inf else m.value - 1.0

    def num(t, y):
        X, Y, W, L, D, _r = y
        q = X * X - a * Y * Y
        dD = math.sqrt(n - 1) * X - 1.0 if inf else c4 * (c2 - (n - 1) * X / c1) / mm1
        return np.array(
            [X * q + b * Y * Y - X, Y * q - b * X * Y + a * Y, W * q, (c4 / c1) * X, dD, c4 * math.exp(L) * Y]
        )

    def jet(ys):
        X, Y, W, L, D, _r = ys
        q = X * X - Y * Y * a
        dD = X * math.sqrt(n - 1) - 1.0 if inf else (X * (-(n - 1) / c1) + c2) * (c4 / mm1)
        return [X * q + Y * Y * b - X, Y * q - X * Y * b + Y * a, W * q, X * (c4 / c1), dD, J.exp(L) * Y * c4]

    return num, jet


@dataclass(frozen=True)
class _Run:
    t: np.ndarray
    y: np.ndarray
    defect: np.ndarray
    dense: OdeSolution
    status: str


# distance to K in the (X, Y) plane below which the m = +inf flow is treated as stiff
_STIFF_SWITCH = 0.05


def _integrate(n, m, y0, t_end, tol, stop_tol, max_step):
    """Step along the orbit, projecting back onto the sphere after every step.

    At ``m = +inf`` the final approach is stiff: ``X`` relaxes at rate one
    while ``Y`` decays only like ``t^{-1/2}``, so once the orbit is close to
    ``K`` the explicit method is replaced by the implicit Radau method,
    whose step can grow with ``t``.
    """
    num, _ = _augmented(n, m)
    K = fixed_point_K(n, m)
    # W and r start at the size of the offset, so their absolute tolerances scale with it
    small = max(min(abs(y0[2]), abs(y0[5])), 1e-300)
    atol = tol * 1e-3 * np.array([1.0, 1.0, small, 1.0, 1.0, small])
    solver = DOP853(num, 0.0, y0, t_end, rtol=tol, atol=atol, max_step=max_step)
    ts, ys, defects, interps = [0.0], [y0.copy()], [0.0], []
    status = "t_span_exhausted"
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise NonConvergence(f"Böhm integration failed: {msg}")
        interps.append(solver.dense_output())
        y = solver.y.copy()
        nrm2 = float(y[0] ** 2 + y[1] ** 2 + y[2] ** 2)
        defects.append(nrm2 - 1.0)
        y[:3] /= math.sqrt(nrm2)
        solver.y = y
        solver.f = num(solver.t, y)
        if np.any(y[:3] < 0) or (m.is_finite and y[2] <= 0):
            raise NonConvergence("trajectory left the first octant")
        ts.append(solver.t)
        ys.append(y)
        dist = np.linalg.norm(y[:2] - K[:2]) if m.is_pos_inf else np.linalg.norm(y[:3] - K)
        if dist <= stop_tol:
            status = "converged"
            break
        if m.is_pos_inf and dist <= _STIFF_SWITCH and isinstance(solver, DOP853) and solver.status == "running":
            solver = Radau(num, solver.t, y, t_end, rtol=tol, atol=atol, max_step=max_step)
    return _Run(np.array(ts), np.array(ys).T, np.array(defects), OdeSolution(ts, interps), status)


def bohm_bryant_solve(
    n: int,
    m,
    t_span: tuple | None = None,
    tol: float = 1e-12,
    eps: float = 1e-8,
    stop_tol: float | None = None,
    max_step: float = np.inf,
    require_convergence: bool = True,
) -> Trajectory:
    """Integrate the unstable orbit out of ``I`` and rebuild ``(r, psi, v)``.

    The stop criterion is ``|state - K| <= stop_tol`` (default ``1e-6``).
    At ``m = +inf`` the approach to the origin of the ``(X, Y)`` plane is
    only algebraic (``Y ~ t^{-1/2}``), so the default there is ``5e-3``
    over a longer span.
    """
    m = _check(n, m)
    if stop_tol is None:
        stop_tol = 5e-3 if m.is_pos_inf else 1e-6
    if t_span is None:
        t_span = (0.0, 2e6) if m.is_pos_inf else (0.0, 4000.0)
    c1, c2, c3, c4, mu = _constants(n, m)
    p = fixed_point_I(n, m) + np.array([0.0, 0.0, eps])
    p = p / np.linalg.norm(p)
    X0, Y0, W0 = p
    if m.is_pos_inf:
        D0 = 1.0
        psi0 = W0 / (c3 * Y0)
    else:
        D0 = -1.0 / m.value
        psi0 = math.exp(D0) * W0 / (c3 * Y0)
    y0 = np.array([X0, Y0, W0, math.log(psi0), D0, psi0])
    run = _integrate(n, m, y0, t_span[1] - t_span[0], tol, stop_tol, max_step)
    if run.status != "converged" and require_convergence:
        raise NonConvergence(f"no convergence to the limit point within t_span (status {run.status})")

    _, jet_rhs = _augmented(n, m)
    t = run.t
    y = run.y
    X, Y, W, L, D, r = y
    dom = (float(t[0]), float(t[-1]))
    psi_p = OdeProfile(run.dense, jet_rhs, lambda ys: J.exp(ys[3]), dom, samples=(t, np.exp(L)))
    e_p = OdeProfile(run.dense, jet_rhs, lambda ys: J.exp(ys[3]) * ys[1] * c4, dom, samples=(t, c4 * np.exp(L) * Y))
    if m.is_pos_inf:
        dens = OdeProfile(run.dense, jet_rhs, lambda ys: ys[4], dom, samples=(t, D))
        s = RadialSmms(n, m, dom, psi=psi_p, density=dens, density_kind="phi", e=e_p, label="bryant", check=False)
        v_col = np.full_like(t, np.nan)
    else:
        dens = OdeProfile(run.dense, jet_rhs, lambda ys: J.exp(ys[4]), dom, samples=(t, np.exp(D)))
        s = RadialSmms(n, m, dom, psi=psi_p, density=dens, e=e_p, label="bohm", check=False)
        v_col = np.exp(D)
    psi = np.exp(L)
    dpsi_dr = X / (c1 * Y)
    log_kappa = lyapunov_log_kappa(n, m, y[:3])
    if m.is_finite:
        w_alg = c3 * psi * Y / v_col
        integ = w_alg - W
    else:
        integ = c3 * psi * Y - W
    cols = {
        "r": r,
        "psi": psi,
        "v": v_col,
        "phi": D if m.is_pos_inf else -m.value * D,
        "kappa": np.exp(log_kappa),
        "log_kappa": log_kappa,
        "sphere_defect": run.defect,
        "integrability_residual": integ,
        "dpsi_dr": dpsi_dr,
    }
    consts = {"lambda": 0.0, "asymptotic_slope_sq": float(dpsi_dr[-1] ** 2)}
    if m.is_finite:
        consts["mu"] = mu
        consts["predicted_slope_sq"] = (n - 2) / (m.value + n - 2)
    else:
        consts["mu_prime"] = 1.0
    # sample points for curvature checks: away from the start, where psi ~ eps
    good = np.nonzero(psi > 1e-2 * max(1.0, psi.max() * 1e-3))[0]
    first = good[0] if good.size else 0
    qe_grid = np.linspace(t[first], t[-1], 200)[1:-1]
    return Trajectory(
        "bohm" if m.is_finite else "bryant",
        n,
        m,
        t,
        y[:3],
        ("X", "Y", "W"),
        s,
        cols,
        consts,
        status=run.status,
        extra={"qe_grid": qe_grid, "eps": eps, "tol": tol},
    )


def fit_power(x, y) -> tuple:
    """Least-squares fit of ``y = c x^p`` in log-log coordinates; returns ``(p, c)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power fit needs at least two positive samples")
    p, logc = np.polyfit(np.log(x), np.log(y), 1)
    return float(p), float(math.exp(logc))


def bryant_asymptotics_check(traj: Trajectory, tail: float = 0.1) -> dict:
    """Fit ``psi^2 ~ c r^p`` on the tail (the last ``tail`` fraction in ``log r``).

    Also reports ``X/Y^2`` at the end, to be compared with ``b``.
    """
    r = traj.columns["r"]
    psi = traj.columns["psi"]
    X, Y = traj.state[0], traj.state[1]
    lr = np.log(r)
    cut = lr[-1] - tail * (lr[-1] - lr[0])
    sel = lr >= cut
    if sel.sum() < 10:
        raise ValueError("tail too short for an asymptotic fit")
    p, c = fit_power(r[sel], psi[sel] ** 2)
    _, b = bohm_coefficients(traj.n, traj.m)
    return {
        "exponent": p,
        "coefficient": c,
        "ratio_X_over_Y2": float(X[-1] / Y[-1] ** 2),
        "ratio_limit": b,
        "r_range": (float(r[sel][0]), float(r[-1])),
    }


def ber_flat_background_check(s: RadialSmms, mu: float | None = None, grid=None, tail: float = 0.25) -> dict:
    """Residual of ``Delta phi - |dphi|^2 = -m mu e^{2 phi/m}`` (or ``= -mu'`` at infinity).

    ``Delta phi - |dphi|^2`` is the weighted Laplacian of ``phi``.  When
    ``mu`` is not given it is estimated from the equation on the last
    ``tail`` fraction of the grid and the residual is then checked on the
    whole grid.
    """
    from ..core import interior_grid

    if grid is None:
        grid = interior_grid(s, 200)
    grid = np.asarray(grid, dtype=float)
    loc = _Local(s, s.check_points(grid), 2)
    lap = loc.lap_phi.value
    if s.m.is_zero:
        raise ValueError("m = 0 has no density to test")
    if s.m.is_finite:
        scale = s.m.value / loc.V.value ** 2
    else:
        scale = np.ones_like(lap)
    est = mu is None
    if est:
        k = max(1, int(len(grid) * tail))
        mu = float(np.mean(-lap[-k:] / scale[-k:]))
    res = lap + mu * scale
    trivial = bool(np.ptp(s.phi(grid)) < 1e-12)
    return {
        "mu": mu,
        "estimated": est,
        "max_residual": float(np.max(np.abs(res))),
        "trivial": trivial,
        "mu_positive": bool(mu > 0),
        "consistent": bool(trivial or mu > 0),
    }


def epsilon_independence(n: int, m, eps: float = 1e-8, tol: float = 1e-12, npts: int = 200) -> float:
    """Relative sup over a common ``r`` range of ``|psi_eps(r) - psi_{eps/10}(r)|``.

    Both curves are resampled with cubic splines in ``r``, so the comparison
    is not limited by linear interpolation between solver steps.
    """
    a = bohm_bryant_solve(n, m, eps=eps, tol=tol)
    b = bohm_bryant_solve(n, m, eps=eps / 10, tol=tol)
    ra, rb = a.columns["r"], b.columns["r"]
    hi = min(ra[-1], rb[-1])
    lo = max(ra[0], rb[0])
    rr = np.linspace(lo, hi, npts)
    pa = CubicSpline(ra, a.columns["psi"])(rr)
    pb = CubicSpline(rb, b.columns["psi"])(rr)
    return float(np.max(np.abs(pa - pb)) / np.max(np.abs(pa)))
