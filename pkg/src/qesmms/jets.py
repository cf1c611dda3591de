"""Truncated Taylor series ("jets") with vectorised arithmetic.

A :class:`Jet` of order ``K`` stores the normalised Taylor coefficients
``c[k] = w^{(k)}(r) / k!`` for ``k = 0..K`` at an array of base points.  All
arithmetic propagates the coefficients exactly (up to rounding), so any
expression built from the supported primitives yields exact derivatives.
This is what gives the closed-form profile catalog its exact first, second
and third derivatives.

Elementary functions use the usual recurrences obtained by differentiating
``w = F(a)`` and matching coefficients, e.g. ``w' = a' w`` for ``exp``.
"""
from __future__ import annotations

from math import factorial
from typing import Callable, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class Jet:
    """Taylor coefficients of a function at a set of points.

    Parameters
    ----------
    coeffs:
        Array of shape ``(K + 1, ...)``.  ``coeffs[k]`` is the k-th
        normalised Taylor coefficient.
    """

    __slots__ = ("c",)
    __array_priority__ = 100.0

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    # -- construction -----------------------------------------------------
    @classmethod
    def variable(cls, x: ArrayLike, order: int) -> "Jet":
        """Jet of the identity function at points ``x``."""
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: ArrayLike, order: int, shape=()) -> "Jet":
        value = np.broadcast_to(np.asarray(value, dtype=float), shape)
        c = np.zeros((order + 1,) + np.shape(value))
        c[0] = value
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        """Build a jet from a list of derivative arrays ``[w, w', w'', ...]``."""
        arr = [np.asarray(d, dtype=float) / factorial(k) for k, d in enumerate(derivs)]
        return cls(np.stack(np.broadcast_arrays(*arr)))

    # -- accessors --------------------------------------------------------
    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def d(self, k: int) -> np.ndarray:
        """The k-th derivative at the base points."""
        if k > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative {k}")
        return self.c[k] * factorial(k)

    def derivatives(self) -> list[np.ndarray]:
        return [self.d(k) for k in range(self.order + 1)]

    def deriv(self) -> "Jet":
        """Jet of the derivative; the order drops by one."""
        K = self.order
        if K == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, K + 1).reshape((K,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"

    # -- helpers ----------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, np.broadcast_shapes(np.shape(other), self.c.shape[1:]))

    @staticmethod
    def _align(a: "Jet", b: "Jet"):
        K = min(a.order, b.order)
        ca, cb = np.broadcast_arrays(a.c[: K + 1], b.c[: K + 1])
        return ca, cb, K

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return Jet(-self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            c = self.c.copy() + 0.0 * np.asarray(other)
            c[0] = c[0] + other
            return Jet(c)
        ca, cb, _ = self._align(self, other)
        return Jet(ca + cb)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other, dtype=float))
        a, b, K = self._align(self, other)
        out = np.zeros_like(a)
        for k in range(K + 1):
            out[k] = np.einsum("i...,i...->...", a[: k + 1], b[k::-1])
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        a, b, K = self._align(self, other)
        out = np.zeros_like(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            for k in range(K + 1):
                acc = a[k].copy()
                for j in range(1, k + 1):
                    acc = acc - b[j] * out[k - j]
                out[k] = acc / b[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == int(p) and 0 <= p <= 4:
            out = Jet.constant(1.0, self.order, self.c.shape[1:])
            for _ in range(int(p)):
                out = out * self
            return out
        if p == -1.0:
            return 1.0 / self
        return _power(self, p)

    def __rpow__(self, base):
        return exp(self * np.log(base))


def _power(a: Jet, p: float) -> Jet:
    """``a**p`` via the recurrence from ``a w' = p a' w``."""
    c = a.c
    K = a.order
    out = np.zeros_like(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[0] = np.power(c[0], p)
        for k in range(1, K + 1):
            acc = np.zeros_like(c[0])
            for j in range(1, k + 1):
                acc = acc + ((p + 1.0) * j - k) * c[j] * out[k - j]
            out[k] = acc / (k * c[0])
    return Jet(out)


def _unary_exp_like(a: Jet, f0: Callable, sign: float):
    """Coupled recurrence for (sin, cos) or (sinh, cosh).

    With ``s = F(a)`` and ``c = G(a)`` satisfying ``s' = a' c`` and
    ``c' = sign * a' s``.
    """
    K = a.order
    s = np.zeros_like(a.c)
    co = np.zeros_like(a.c)
    s[0], co[0] = f0(a.c[0])
    for k in range(1, K + 1):
        acc_s = np.zeros_like(a.c[0])
        acc_c = np.zeros_like(a.c[0])
        for j in range(1, k + 1):
            acc_s = acc_s + j * a.c[j] * co[k - j]
            acc_c = acc_c + j * a.c[j] * s[k - j]
        s[k] = acc_s / k
        co[k] = sign * acc_c / k
    return Jet(s), Jet(co)


def exp(a: Jet) -> Jet:
    K = a.order
    out = np.zeros_like(a.c)
    out[0] = np.exp(a.c[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(a.c[0])
        for j in range(1, k + 1):
            acc = acc + j * a.c[j] * out[k - j]
        out[k] = acc / k
    return Jet(out)


def log(a: Jet) -> Jet:
    K = a.order
    out = np.zeros_like(a.c)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[0] = np.log(a.c[0])
        for k in range(1, K + 1):
            acc = np.zeros_like(a.c[0])
            for j in range(1, k):
                acc = acc + j * out[j] * a.c[k - j]
            out[k] = (a.c[k] - acc / k) / a.c[0]
    return Jet(out)


def sin(a: Jet) -> Jet:
    return _unary_exp_like(a, lambda x: (np.sin(x), np.cos(x)), -1.0)[0]


def cos(a: Jet) -> Jet:
    return _unary_exp_like(a, lambda x: (np.sin(x), np.cos(x)), -1.0)[1]


def sinh(a: Jet) -> Jet:
    return _unary_exp_like(a, lambda x: (np.sinh(x), np.cosh(x)), 1.0)[0]


def cosh(a: Jet) -> Jet:
    return _unary_exp_like(a, lambda x: (np.sinh(x), np.cosh(x)), 1.0)[1]


def tanh(a: Jet) -> Jet:
    s, c = _unary_exp_like(a, lambda x: (np.sinh(x), np.cosh(x)), 1.0)
    return s / c


def sqrt(a: Jet) -> Jet:
    return _power(a, 0.5)


def as_jet(x, order: int) -> Jet:
    """Promote scalars and arrays to constant jets."""
    if isinstance(x, Jet):
        return x
    return Jet.constant(x, order, np.shape(x))


def taylor_integrate(rhs, y0: list, order: int) -> list[Jet]:
    """Taylor coefficients of the solution of an autonomous ODE ``y' = rhs(y)``.

    ``rhs`` maps a list of jets to a list of jets.  Starting from the state
    ``y0`` (list of arrays), the k-th pass fixes coefficient ``k + 1`` of
    every component, because the k-th coefficient of ``rhs(y)`` only depends
    on coefficients ``0..k`` of ``y``.
    """
    shape = np.broadcast_shapes(*[np.shape(v) for v in y0])
    ys = []
    for v in y0:
        c = np.zeros((order + 1,) + shape)
        c[0] = v
        ys.append(Jet(c))
    for k in range(order):
        f = rhs(ys)
        for y, fy in zip(ys, f):
            y.c[k + 1] = fy.c[k] / (k + 1)
    return ys
