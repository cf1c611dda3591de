"""Constructors for the example quasi-Einstein families."""
from .bohm import (
    ber_flat_background_check,
    bohm_bryant_solve,
    bohm_field,
    bryant_asymptotics_check,
    epsilon_independence,
    fit_power,
    fixed_point_I,
    fixed_point_K,
    linearization_eigenvalues,
    lyapunov_kappa,
)
from .cigar import cigar_mu, cigar_solve
from .elliptic import elliptic_constants, elliptic_gaussian, hyperbolic_space
from .lpp import LppParams, MultiProfileSmms, lpp_solve
from .products import Fiber, ProductResult, ProductSmms, product_flat, product_warped
from .trajectory import CSV_COLUMNS, NonConvergence, Trajectory

__all__ = [
    "ber_flat_background_check",
    "bohm_bryant_solve",
    "bohm_field",
    "bryant_asymptotics_check",
    "epsilon_independence",
    "fit_power",
    "fixed_point_I",
    "fixed_point_K",
    "linearization_eigenvalues",
    "lyapunov_kappa",
    "cigar_mu",
    "cigar_solve",
    "elliptic_constants",
    "elliptic_gaussian",
    "hyperbolic_space",
    "LppParams",
    "MultiProfileSmms",
    "lpp_solve",
    "Fiber",
    "ProductResult",
    "ProductSmms",
    "product_flat",
    "product_warped",
    "CSV_COLUMNS",
    "NonConvergence",
    "Trajectory",
]
