"""Shared builders for the test suite: random catalog spaces and cached solves."""
from __future__ import annotations

import functools

import numpy as np

from qesmms import profiles as P
from qesmms.core import RadialSmms

M_CHOICES = (-3.0, -0.5, 0.0, 0.7, 1.0, 2.0, 7.0, "+inf", "-inf")


def positive_profile(rng: np.random.Generator, kind: int | None = None) -> P.Profile:
    """A smooth profile bounded away from zero on ``[0.2, 3]``."""
    kind = int(rng.integers(4)) if kind is None else kind
    if kind == 0:
        return P.polynomial([rng.uniform(0.5, 1.5), rng.uniform(0.0, 0.8), rng.uniform(0.0, 0.3)])
    if kind == 1:
        return P.cosh(rng.uniform(0.5, 1.5), rng.uniform(0.2, 1.0), rng.uniform(-0.5, 0.5))
    if kind == 2:
        return P.exp_quadratic(rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5), 0.0, rng.uniform(0.5, 1.5))
    return P.constant(rng.uniform(1.2, 2.0)) + P.sin(rng.uniform(0.1, 0.9), rng.uniform(0.5, 2.0), rng.uniform(0, 3))


def smooth_profile(rng: np.random.Generator) -> P.Profile:
    """A smooth profile of either sign (used for potentials)."""
    kind = int(rng.integers(3))
    if kind == 0:
        return P.polynomial(list(rng.uniform(-1, 1, size=4)))
    if kind == 1:
        return P.sin(rng.uniform(0.3, 1.5), rng.uniform(0.5, 2.0), rng.uniform(0, 3))
    return P.exp_quadratic(rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5), 0.0, rng.uniform(-1, 1))


def random_smms(rng: np.random.Generator, n: int | None = None, m=None, with_e: bool | None = None) -> RadialSmms:
    """A random rotationally symmetric space built from catalog profiles."""
    n = int(rng.integers(1, 6)) if n is None else n
    if m is None:
        m = M_CHOICES[int(rng.integers(len(M_CHOICES)))]
    lo = float(rng.uniform(0.3, 0.8))
    hi = lo + float(rng.uniform(0.5, 1.5))
    psi = positive_profile(rng) if n >= 2 else None
    if with_e is None:
        with_e = bool(rng.integers(2))
    e = positive_profile(rng, 0) if with_e else None
    if isinstance(m, str):
        dens, kind = smooth_profile(rng), "phi"
    else:
        dens, kind = positive_profile(rng), "v"
    return RadialSmms(n, m, (lo, hi), psi=psi, density=dens, density_kind=kind, e=e)


def catalog_sample(count: int, seed: int = 20240611) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        # cycle through every m so each variant is exercised
        m = M_CHOICES[i % len(M_CHOICES)]
        out.append(random_smms(rng, m=m))
    return out


@functools.lru_cache(maxsize=None)
def lpp(m) -> object:
    from qesmms.families import lpp_solve

    return lpp_solve(4, m, 1, 2)


@functools.lru_cache(maxsize=None)
def cigar(m) -> object:
    from qesmms.families import cigar_solve

    return cigar_solve(m)


@functools.lru_cache(maxsize=None)
def bohm(n, m, max_step=np.inf) -> object:
    from qesmms.families import bohm_bryant_solve

    return bohm_bryant_solve(n, m, max_step=max_step)
