"""Products of a quasi-Einstein space with an Einstein fiber.

Given a quasi-Einstein ``(M^n, g, v^m dvol)`` with constants
``(lambda, mu)`` and an Einstein ``(N^k, h)`` with ``Ric_h = c h``:

* the flat product ``(M x N, g + h, v^m dvol)`` is quasi-Einstein with the
  same ``(lambda, mu, m)`` when ``c = lambda``;
* the warped product ``(M x N, g + v^2 h, v^(m-k) dvol)`` is quasi-Einstein
  with the same ``(lambda, mu)`` and parameter ``m - k`` when ``c = mu``.

Both are verified blockwise from the base field sample.  In the warped
case the fiber eigenvalue (in a ``g + v^2 h`` orthonormal frame) of the
plain Ricci tensor is ``c/v^2 - Delta v/v - (k-1)|dv|^2/v^2``, the base
block becomes ``Ric - k Hess v / v``, and the Hessian of ``v`` acquires the
fiber eigenvalue ``|dv|^2/v``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import DimParam, FieldSample, QEReport, qe_from_fields

__all__ = ["Fiber", "ProductSmms", "ProductResult", "product_flat", "product_warped"]


@dataclass(frozen=True)
class Fiber:
    """An Einstein fiber of dimension ``k`` with ``Ric = einstein_const * h``."""

    k: int
    einstein_const: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("fiber dimension must be nonnegative")


@dataclass
class ProductSmms:
    """A flat or warped product over a base SMMS."""

    base: Any
    fiber: Fiber
    kind: str  # "flat" or "warped"
    n: int
    m: DimParam

    def field_sample(self, grid) -> FieldSample:
        fs = self.base.field_sample(grid)
        if self.fiber.k == 0:
            return fs
        if self.kind == "flat":
            return _flat_sample(fs, self.fiber)
        return _warped_sample(fs, self.fiber)

    def to_spec(self) -> dict:
        base = self.base.to_spec() if hasattr(self.base, "to_spec") else {"type": type(self.base).__name__}
        return {
            "type": "product",
            "kind": self.kind,
            "n": self.n,
            "m": self.m.to_json(),
            "fiber": {"k": self.fiber.k, "einstein_const": self.fiber.einstein_const},
            "base": base,
        }


@dataclass
class ProductResult:
    product: ProductSmms
    report: QEReport
    inherited: dict
    block_residuals: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def passed(self) -> bool:
        return self.report.passed and all(r <= self.report.tol for r in self.block_residuals.values())


def _flat_sample(fs: FieldSample, fib: Fiber) -> FieldSample:
    k, c = fib.k, fib.einstein_const
    shape = np.shape(fs.scalar)
    cfull = np.full(shape, float(c))
    blocks = list(fs.blocks) + [(k, cfull)]
    ric = None if fs.ric is None else list(fs.ric) + [(k, cfull)]
    hess = None if fs.hess_v is None else list(fs.hess_v) + [(k, np.zeros(shape))]
    return FieldSample(
        n=fs.n + k,
        m=fs.m,
        blocks=blocks,
        scalar=fs.scalar + k * c,
        scalar_w=fs.scalar_w + k * c,
        lap_phi=fs.lap_phi,
        v=fs.v,
        phi=fs.phi,
        grad_v_sq=fs.grad_v_sq,
        compact=fs.compact,
        ric=ric,
        hess_v=hess,
        lap_v=fs.lap_v,
        closed=fs.closed,
    )


def _warped_sample(fs: FieldSample, fib: Fiber) -> FieldSample:
    if fs.ric is None or fs.hess_v is None or fs.lap_v is None:
        raise ValueError("the warped product needs a finite-m base sample with Ricci and Hessian blocks")
    k, c = fib.k, fib.einstein_const
    m = fs.m.value
    mk = m - k
    v, gv, lap_v = fs.v, fs.grad_v_sq, fs.lap_v
    fib_ric = c / v**2 - lap_v / v - (k - 1) * gv / v**2
    fib_hess = gv / v
    ric = [(mult, r - k * hv / v) for (mult, r), (_, hv) in zip(fs.ric, fs.hess_v)] + [(k, fib_ric)]
    hess = list(fs.hess_v) + [(k, fib_hess)]
    blocks = [(mult, r - mk * hv / v) for (mult, r), (_, hv) in zip(ric, hess)]
    R = sum(mult * r for mult, r in ric)
    lap_new = lap_v + k * gv / v
    lap_phi = -mk * lap_new / v - mk * (mk - 1) * gv / v**2
    scalar_w = R - 2 * mk * lap_new / v - mk * (mk - 1) * gv / v**2
    mdim = DimParam.parse(mk)
    return FieldSample(
        n=fs.n + k,
        m=mdim,
        blocks=blocks,
        scalar=R,
        scalar_w=scalar_w,
        lap_phi=lap_phi,
        v=v,
        phi=None if mk == 0 else -mk * np.log(v),
        grad_v_sq=gv,
        compact=fs.compact,
        ric=ric,
        hess_v=hess,
        lap_v=lap_new,
        closed=fs.closed,
    )


def _base_constants(base, grid, tol):
    rep = qe_from_fields(base.field_sample(grid), tol=tol)
    return rep


def _grid(base, grid):
    if grid is not None:
        return np.asarray(grid, dtype=float)
    if hasattr(base, "interior_grid"):
        return base.interior_grid(200)
    from ..core import interior_grid

    return interior_grid(base, 128)


def product_flat(base, fiber: Fiber, grid=None, tol: float = 1e-9) -> ProductResult:
    """Flat product ``g + h`` with unchanged density ``v^m``.

    The fiber should satisfy ``Ric_h = lambda h``; otherwise a warning is
    issued and ``block_residuals['fiber']`` records ``|lambda - c|``.
    """
    grid = _grid(base, grid)
    brep = _base_constants(base, grid, tol)
    lam = brep.lambda_fit
    warns = []
    if abs(fiber.einstein_const - lam) > tol and fiber.k > 0:
        msg = f"fiber constant {fiber.einstein_const} differs from lambda = {lam}; the product is not quasi-Einstein"
        warnings.warn(msg)
        warns.append(msg)
    prod = ProductSmms(base, fiber, "flat", base.n + fiber.k, base.m)
    fs = prod.field_sample(grid)
    rep = qe_from_fields(fs, tol=tol)
    resid = {"base": brep.max_residual}
    if fiber.k > 0:
        resid["fiber"] = float(np.max(np.abs(np.asarray(fs.blocks[-1][1]) - lam)))
    inherited = {"lambda": lam, "mu": brep.mu_fit, "mu_prime": brep.mu_prime, "m": base.m.to_json()}
    return ProductResult(prod, rep, inherited, resid, tuple(warns))


def product_warped(base, fiber: Fiber, grid=None, tol: float = 1e-9) -> ProductResult:
    """Warped product ``g + v^2 h`` with density ``v^(m-k)``.

    Needs finite ``m`` and ``Ric_h = mu h``.  With ``k = m`` (integer) the
    product is Einstein with constant ``lambda``.
    """
    if not base.m.is_finite or base.m.is_zero:
        raise ValueError("the warped product needs a finite nonzero m (at infinity it coincides with the flat one)")
    grid = _grid(base, grid)
    brep = _base_constants(base, grid, tol)
    mu = brep.mu_fit
    warns = []
    if fiber.k > 0 and abs(fiber.einstein_const - mu) > tol * max(1.0, abs(mu)):
        msg = f"fiber constant {fiber.einstein_const} differs from mu = {mu}; the product is not quasi-Einstein"
        warnings.warn(msg)
        warns.append(msg)
    mk = DimParam.parse(base.m.value - fiber.k)
    prod = ProductSmms(base, fiber, "warped", base.n + fiber.k, mk)
    fs = prod.field_sample(grid)
    rep = qe_from_fields(fs, tol=tol)
    resid = {"base": float(max(np.max(np.abs(np.asarray(b) - brep.lambda_fit)) for _, b in fs.blocks[:-1])) if fiber.k else brep.max_residual}
    if fiber.k > 0:
        resid["fiber"] = float(np.max(np.abs(np.asarray(fs.blocks[-1][1]) - brep.lambda_fit)))
    inherited = {"lambda": brep.lambda_fit, "mu": mu, "m": base.m.to_json(), "m_new": mk.to_json()}
    return ProductResult(prod, rep, inherited, resid, tuple(warns))
