"""Elliptic Gaussians: the closed-form model quasi-Einstein spaces."""
from __future__ import annotations

import math

from .. import profiles as P
from ..core import DimParam, RadialSmms, _as_dim

__all__ = ["elliptic_gaussian", "elliptic_constants", "hyperbolic_space"]


def elliptic_constants(n: int, m, sign: int = 1) -> tuple:
    """``(lambda, mu)`` of the elliptic Gaussian; ``mu`` is ``None`` at infinity."""
    m = _as_dim(m)
    if m.is_infinite:
        return float(sign), None
    mv = m.value
    return float(sign), sign * (mv - 1.0) / (mv + n - 1.0)


def elliptic_gaussian(n: int, m, sign: int = 1) -> RadialSmms:
    """The positive (``sign=+1``) or negative (``sign=-1``) elliptic Gaussian.

    Finite ``m > 1 - n``: with ``k = sqrt(m+n-1)``, the positive one is
    ``psi = k sin(r/k)``, ``v = cos(r/k)`` on ``(0, k pi/2)`` (a hemisphere
    whose boundary is where the measure degenerates); the negative one is
    ``psi = k sinh(r/k)``, ``v = cosh(r/k)`` on ``(0, inf)``.  At
    ``m = +inf``: ``psi = r`` and ``phi = +-r^2/2``.  For ``n = 1`` the
    interval is symmetric about 0 and there is no warping.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = int(n)
    m = _as_dim(m)
    if m.is_neg_inf:
        raise ValueError("elliptic Gaussians need m > 1 - n")
    label = f"elliptic-gaussian{'+' if sign > 0 else '-'}"
    if m.is_pos_inf:
        phi = P.polynomial([0.0, 0.0, 0.5 * sign])
        if n == 1:
            return RadialSmms(1, m, (-math.inf, math.inf), density=phi, density_kind="phi", label=label)
        return RadialSmms(n, m, (0.0, math.inf), psi=P.identity(), density=phi, density_kind="phi", poles=("left",), label=label)
    mv = m.value
    if not mv > 1 - n:
        raise ValueError("elliptic Gaussians need m > 1 - n")
    k = math.sqrt(mv + n - 1.0)
    if sign > 0:
        psi = P.sin(amp=k, freq=1.0 / k)
        v = P.cos(freq=1.0 / k)
        if n == 1:
            return RadialSmms(1, m, (-0.5 * k * math.pi, 0.5 * k * math.pi), density=v, compact=True, label=label)
        return RadialSmms(n, m, (0.0, 0.5 * k * math.pi), psi=psi, density=v, poles=("left",), compact=True, label=label)
    psi = P.sinh(amp=k, freq=1.0 / k)
    v = P.cosh(freq=1.0 / k)
    if n == 1:
        return RadialSmms(1, m, (-math.inf, math.inf), density=v, label=label)
    return RadialSmms(n, m, (0.0, math.inf), psi=psi, density=v, poles=("left",), label=label)


def hyperbolic_space(n: int, k: float = 1.0, m=0) -> RadialSmms:
    """``H^n`` of curvature ``-1/k^2`` with trivial density and parameter ``m``."""
    return RadialSmms(n, DimParam.parse(m), (0.0, math.inf), psi=P.sinh(amp=k, freq=1.0 / k), poles=("left",), label="hyperbolic")
