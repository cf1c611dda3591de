"""Scalar profiles of one variable: the building blocks of every ansatz.

Three kinds are provided.

* Closed-form profiles from a small named catalog, combined with ``+``,
  ``-``, ``*``, ``/`` and ``**``.  They are evaluated on Taylor jets, so all
  derivatives are exact.
* :class:`SampledProfile`: a spline through grid values.  With spline degree
  ``k`` on spacing ``h`` the value, first and second derivative carry errors
  of order ``h^(k+1)``, ``h^k`` and ``h^(k-1)``.  The third derivative is one
  centred difference of the spline's second derivative with step ``h``,
  which costs one more power of ``h``.  The default ``k = 5`` gives
  ``O(h^4)`` for ``w''`` and ``O(h^3)`` for ``w'''``.
* :class:`OdeProfile`: one component of a dense ODE solution.  The state is
  interpolated, and higher derivatives come from the ODE itself by Taylor
  recursion, so they are as accurate as the interpolated state.

Evaluation outside a profile's domain raises :class:`DomainError`; nothing
is ever extrapolated.
"""
from __future__ import annotations

import math
from typing import Any, Callable, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from . import jets as J
from .jets import Jet

__all__ = [
    "DomainError",
    "InsufficientSmoothness",
    "Profile",
    "ClosedForm",
    "SampledProfile",
    "OdeProfile",
    "constant",
    "polynomial",
    "identity",
    "sin",
    "cos",
    "sinh",
    "cosh",
    "tanh",
    "sech2",
    "exp_quadratic",
    "exp",
    "log",
    "profile_from_spec",
]

_EDGE_TOL = 1e-12


class DomainError(ValueError):
    """Evaluation requested outside a profile's (or SMMS's) domain."""


class InsufficientSmoothness(ValueError):
    """More derivatives requested than a sampled profile can provide."""


def _intersect(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


class Profile:
    """Abstract scalar function with derivatives.

    Subclasses implement :meth:`_jet`, which receives points already checked
    against :attr:`domain`.
    """

    domain: tuple[float, float] = (-math.inf, math.inf)

    def _jet(self, r: np.ndarray, order: int) -> Jet:  # pragma: no cover
        raise NotImplementedError

    def to_spec(self) -> dict:  # pragma: no cover
        raise NotImplementedError

    # -- evaluation -------------------------------------------------------
    def check_domain(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        span = max(1.0, abs(lo) if math.isfinite(lo) else 1.0, abs(hi) if math.isfinite(hi) else 1.0)
        if np.any(r < lo - _EDGE_TOL * span) or np.any(r > hi + _EDGE_TOL * span) or np.any(np.isnan(r)):
            raise DomainError(f"evaluation point outside profile domain [{lo}, {hi}]")
        return r

    def jet(self, r, order: int = 2) -> Jet:
        """Taylor jet of the profile at ``r`` up to the given order."""
        return self._jet(self.check_domain(r), order)

    def __call__(self, r):
        return self.jet(r, 0).value

    def derivatives(self, r, k: int = 2) -> tuple:
        """``(w, w', ..., w^(k))`` at ``r``."""
        return tuple(self.jet(r, k).derivatives())

    @property
    def is_closed_form(self) -> bool:
        return False

    # -- algebra ----------------------------------------------------------
    def _wrap(self, other) -> "Profile":
        if isinstance(other, Profile):
            return other
        return constant(float(other))

    def __add__(self, other):
        return _Sum([self, self._wrap(other)])

    def __radd__(self, other):
        return _Sum([self._wrap(other), self])

    def __sub__(self, other):
        return _Sum([self, _Scaled(self._wrap(other), -1.0)])

    def __rsub__(self, other):
        return _Sum([self._wrap(other), _Scaled(self, -1.0)])

    def __neg__(self):
        return _Scaled(self, -1.0)

    def __mul__(self, other):
        if not isinstance(other, Profile):
            return _Scaled(self, float(other))
        return _Product([self, other])

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if not isinstance(other, Profile):
            return _Scaled(self, 1.0 / float(other))
        return _Product([self, _Power(other, -1.0)])

    def __rtruediv__(self, other):
        return _Product([self._wrap(other), _Power(self, -1.0)])

    def __pow__(self, p):
        return _Power(self, float(p))

    def restrict(self, lo: float, hi: float) -> "Profile":
        """The same function on a smaller domain."""
        return _Restricted(self, (lo, hi))

    def derivative(self) -> "Profile":
        """The profile ``w'``."""
        return _Derivative(self)


# ---------------------------------------------------------------------------
# closed-form catalog
# ---------------------------------------------------------------------------


class ClosedForm(Profile):
    """A named catalog function ``amp * F(freq * r + phase)`` and friends."""

    _FUNCS: dict[str, Callable[[Jet], Jet]] = {
        "sin": J.sin,
        "cos": J.cos,
        "sinh": J.sinh,
        "cosh": J.cosh,
        "tanh": J.tanh,
        "sech2": lambda a: J.cosh(a) ** -2.0,
    }

    def __init__(self, expr: str, params: dict | None = None, domain=(-math.inf, math.inf)):
        params = dict(params or {})
        if expr not in {"constant", "polynomial", "exp-quadratic"} | set(self._FUNCS):
            raise ValueError(f"unknown catalog expression {expr!r}")
        self.expr = expr
        self.params = params
        self.domain = (float(domain[0]), float(domain[1]))

    @property
    def is_closed_form(self) -> bool:
        return True

    def _jet(self, r, order):
        x = Jet.variable(r, order)
        p = self.params
        if self.expr == "constant":
            return Jet.constant(p.get("value", 0.0), order, np.shape(r))
        if self.expr == "polynomial":
            coeffs = list(p.get("coeffs", [0.0]))
            out = Jet.constant(coeffs[-1], order, np.shape(r))
            for a in reversed(coeffs[:-1]):
                out = out * x + a
            return out
        if self.expr == "exp-quadratic":
            arg = x * x * p.get("a", 0.0) + x * p.get("b", 0.0) + p.get("c", 0.0)
            return J.exp(arg) * p.get("amp", 1.0)
        arg = x * p.get("freq", 1.0) + p.get("phase", 0.0)
        return self._FUNCS[self.expr](arg) * p.get("amp", 1.0)

    def to_spec(self) -> dict:
        spec = {"kind": "closed-form", "expr": self.expr, "params": dict(self.params)}
        if self.domain != (-math.inf, math.inf):
            spec["domain"] = list(self.domain)
        return spec

    def __repr__(self):
        return f"ClosedForm({self.expr!r}, {self.params})"


class _Combined(Profile):
    children: list

    @property
    def is_closed_form(self) -> bool:
        return all(c.is_closed_form for c in self.children)

    def _child_jets(self, r, order):
        return [c._jet(r, order) for c in self.children]

    def _spec(self, expr: str, **extra) -> dict:
        spec = {"kind": "closed-form", "expr": expr}
        spec.update(extra)
        return spec


class _Sum(_Combined):
    def __init__(self, terms):
        self.children = list(terms)
        d = (-math.inf, math.inf)
        for t in self.children:
            d = _intersect(d, t.domain)
        self.domain = d

    def _jet(self, r, order):
        js = self._child_jets(r, order)
        out = js[0]
        for j in js[1:]:
            out = out + j
        return out

    def to_spec(self):
        return self._spec("sum", terms=[c.to_spec() for c in self.children])


class _Product(_Combined):
    def __init__(self, factors):
        self.children = list(factors)
        d = (-math.inf, math.inf)
        for t in self.children:
            d = _intersect(d, t.domain)
        self.domain = d

    def _jet(self, r, order):
        js = self._child_jets(r, order)
        out = js[0]
        for j in js[1:]:
            out = out * j
        return out

    def to_spec(self):
        return self._spec("product", factors=[c.to_spec() for c in self.children])


class _Scaled(_Combined):
    def __init__(self, base, factor: float):
        self.children = [base]
        self.factor = float(factor)
        self.domain = base.domain

    def _jet(self, r, order):
        return self.children[0]._jet(r, order) * self.factor

    def to_spec(self):
        return self._spec("scale", arg=self.children[0].to_spec(), factor=self.factor)


class _Power(_Combined):
    def __init__(self, base, exponent: float):
        self.children = [base]
        self.exponent = float(exponent)
        self.domain = base.domain

    def _jet(self, r, order):
        return self.children[0]._jet(r, order) ** self.exponent

    def to_spec(self):
        return self._spec("power", base=self.children[0].to_spec(), exponent=self.exponent)


class _Apply(_Combined):
    _FUNCS = {"exp": J.exp, "log": J.log}

    def __init__(self, name: str, arg: Profile):
        self.name = name
        self.children = [arg]
        self.domain = arg.domain

    def _jet(self, r, order):
        return self._FUNCS[self.name](self.children[0]._jet(r, order))

    def to_spec(self):
        return self._spec(self.name, arg=self.children[0].to_spec())


class _Restricted(_Combined):
    def __init__(self, base: Profile, domain):
        self.children = [base]
        self.domain = _intersect(base.domain, (float(domain[0]), float(domain[1])))

    def _jet(self, r, order):
        return self.children[0]._jet(r, order)

    def to_spec(self):
        spec = self.children[0].to_spec()
        if spec.get("kind") == "closed-form" and "domain" not in spec:
            spec = dict(spec, domain=list(self.domain))
            return spec
        return self._spec("restrict", arg=spec, domain=list(self.domain))


class _Derivative(_Combined):
    def __init__(self, base: Profile):
        self.children = [base]
        self.domain = base.domain

    def _jet(self, r, order):
        return self.children[0]._jet(r, order + 1).deriv()

    def to_spec(self):
        return self._spec("derivative", arg=self.children[0].to_spec())


# catalog constructors --------------------------------------------------------


def constant(value: float) -> ClosedForm:
    return ClosedForm("constant", {"value": float(value)})


def polynomial(coeffs: Sequence[float]) -> ClosedForm:
    """``sum(coeffs[i] * r**i)``, coefficients in ascending order."""
    return ClosedForm("polynomial", {"coeffs": [float(c) for c in coeffs]})


def identity() -> ClosedForm:
    return polynomial([0.0, 1.0])


def _trig(name):
    def make(amp: float = 1.0, freq: float = 1.0, phase: float = 0.0) -> ClosedForm:
        return ClosedForm(name, {"amp": float(amp), "freq": float(freq), "phase": float(phase)})

    make.__name__ = name
    make.__doc__ = f"``amp * {name}(freq * r + phase)``"
    return make


sin = _trig("sin")
cos = _trig("cos")
sinh = _trig("sinh")
cosh = _trig("cosh")
tanh = _trig("tanh")
sech2 = _trig("sech2")


def exp_quadratic(a: float, b: float = 0.0, c: float = 0.0, amp: float = 1.0) -> ClosedForm:
    """``amp * exp(a r^2 + b r + c)``."""
    return ClosedForm("exp-quadratic", {"amp": float(amp), "a": float(a), "b": float(b), "c": float(c)})


def exp(p: Profile) -> Profile:
    return _Apply("exp", p)


def log(p: Profile) -> Profile:
    return _Apply("log", p)


# ---------------------------------------------------------------------------
# sampled profiles
# ---------------------------------------------------------------------------


class SampledProfile(Profile):
    """Spline interpolant through ``(grid, values)``.

    Parameters
    ----------
    grid, values:
        Strictly increasing abscissae and the function values there.
    order:
        Spline degree, at least 4 so that the second derivative is accurate
        to ``O(h^3)`` or better.
    """

    def __init__(self, grid, values, order: int = 5):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if order < 4:
            raise ValueError("sampled profiles need spline order >= 4")
        if grid.size < order + 1:
            raise ValueError(f"need at least {order + 1} samples for order {order}")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.grid = grid
        self.values = values
        self.order = int(order)
        self.domain = (float(grid[0]), float(grid[-1]))
        self._spl = make_interp_spline(grid, values, k=self.order)
        self._d2 = self._spl.derivative(2)
        self.h = float(np.max(np.diff(grid)))

    @property
    def error_orders(self) -> dict:
        """Convergence order in ``h`` of each derivative."""
        k = self.order
        return {0: k + 1, 1: k, 2: k - 1, 3: k - 2}

    def _jet(self, r, order):
        if order > 3:
            raise InsufficientSmoothness("sampled profiles provide at most three derivatives")
        derivs = [self._spl(r, nu=k) for k in range(min(order, 2) + 1)]
        if order == 3:
            lo, hi = self.domain
            rp = np.minimum(r + self.h, hi)
            rm = np.maximum(r - self.h, lo)
            derivs.append((self._d2(rp) - self._d2(rm)) / (rp - rm))
        return Jet.from_derivatives(derivs)

    def to_spec(self) -> dict:
        return {
            "kind": "sampled",
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "order": self.order,
        }


# ---------------------------------------------------------------------------
# ODE-backed profiles
# ---------------------------------------------------------------------------


class OdeProfile(Profile):
    """A function of the state of an autonomous ODE ``y' = F(y)``.

    Parameters
    ----------
    state:
        Callable returning the interpolated state, shape ``(d, N)``, at
        points ``t`` (typically a dense-output object).
    rhs:
        Jet version of ``F``: maps a list of ``d`` jets to ``d`` jets.
    reader:
        Maps the list of state jets to the jet of this profile.
    domain:
        Interval covered by the solution.
    samples:
        Optional ``(t, values)`` used for serialisation as a sampled profile.
    """

    def __init__(self, state, rhs, reader, domain, samples=None):
        self.state = state
        self.rhs = rhs
        self.reader = reader
        self.domain = (float(domain[0]), float(domain[1]))
        self.samples = samples

    def _jet(self, r, order):
        y = np.atleast_2d(self.state(np.atleast_1d(r)))
        ys = J.taylor_integrate(self.rhs, list(y), order)
        out = self.reader(ys)
        if np.ndim(r) == 0:
            out = Jet(out.c[:, 0])
        return out

    def to_spec(self) -> dict:
        if self.samples is None:
            raise ValueError("this ODE profile has no samples to serialise")
        t, vals = self.samples
        return SampledProfile(t, vals).to_spec()


# ---------------------------------------------------------------------------
# JSON specs
# ---------------------------------------------------------------------------


def profile_from_spec(spec: dict[str, Any]) -> Profile:
    """Build a profile from its JSON description."""
    if not isinstance(spec, dict):
        raise ValueError("profile spec must be an object")
    kind = spec.get("kind", "closed-form")
    if kind == "sampled":
        return SampledProfile(spec["grid"], spec["values"], int(spec.get("order", 5)))
    if kind != "closed-form":
        raise ValueError(f"unknown profile kind {kind!r}")
    expr = spec.get("expr")
    if expr == "sum":
        p: Profile = _Sum([profile_from_spec(s) for s in spec["terms"]])
    elif expr == "product":
        p = _Product([profile_from_spec(s) for s in spec["factors"]])
    elif expr == "power":
        p = _Power(profile_from_spec(spec["base"]), float(spec["exponent"]))
    elif expr == "scale":
        p = _Scaled(profile_from_spec(spec["arg"]), float(spec["factor"]))
    elif expr == "derivative":
        p = _Derivative(profile_from_spec(spec["arg"]))
    elif expr in ("exp", "log"):
        p = _Apply(expr, profile_from_spec(spec["arg"]))
    elif expr == "restrict":
        p = _Restricted(profile_from_spec(spec["arg"]), spec["domain"])
    else:
        if not isinstance(expr, str):
            raise ValueError("closed-form spec needs an 'expr' name")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise ValueError("'params' must be an object")
        p = ClosedForm(expr, params)
    if "domain" in spec and expr != "restrict":
        lo, hi = spec["domain"]
        p = _Restricted(p, (float(lo), float(hi))) if not isinstance(p, ClosedForm) else ClosedForm(p.expr, p.params, (lo, hi))
    return p
