"""Weighted curvature and quasi-Einstein structure on smooth metric measure spaces."""
from .core import (
    DimParam,
    FieldSample,
    QEReport,
    RadialSmms,
    bakry_emery_ricci,
    bianchi_residual,
    curvature,
    field_sample,
    interior_grid,
    mu_limit_check,
    qe_from_fields,
    qe_verify,
    weighted_scalar,
)
from .conformal import ConformalDatum, ScaleTuple, conformal_transform, duality_map, four_equivalences_check
from .variational import VariationDatum, energy, first_variation_analytic, weighted_volume

__version__ = "0.1.0"

__all__ = [
    "DimParam",
    "FieldSample",
    "QEReport",
    "RadialSmms",
    "bakry_emery_ricci",
    "bianchi_residual",
    "curvature",
    "field_sample",
    "interior_grid",
    "mu_limit_check",
    "qe_from_fields",
    "qe_verify",
    "weighted_scalar",
    "ConformalDatum",
    "ScaleTuple",
    "conformal_transform",
    "duality_map",
    "four_equivalences_check",
    "VariationDatum",
    "energy",
    "first_variation_analytic",
    "weighted_volume",
]
