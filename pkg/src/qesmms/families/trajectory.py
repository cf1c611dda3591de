"""The solved-ODE container shared by the family constructors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

CSV_COLUMNS = ("t", "r", "psi", "v", "kappa", "sphere_defect", "integrability_residual")


class NonConvergence(RuntimeError):
    """A shooting or integration step did not converge."""


@dataclass
class Trajectory:
    """A solved family member.

    ``state`` has shape ``(len(state_names), len(t))``.  ``smms`` is the
    reconstructed space (a :class:`~qesmms.core.RadialSmms` or
    :class:`~qesmms.families.lpp.MultiProfileSmms`).  ``columns`` holds the
    per-point geometric curves (``r``, ``psi``, ``v`` and diagnostics); any
    column that does not apply to a family is filled with NaN.
    """

    family: str
    n: int
    m: Any
    t: np.ndarray
    state: np.ndarray
    state_names: tuple
    smms: Any
    columns: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    status: str = "converged"
    notes: tuple = ()
    extra: Optional[dict] = None

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name in self.state_names:
            return self.state[self.state_names.index(name)]
        return np.asarray(self.columns.get(name, np.full_like(self.t, np.nan)), dtype=float)

    def header(self) -> list:
        return ["t", *self.state_names, *CSV_COLUMNS[1:]]

    def rows(self):
        cols = [self.column(h) for h in self.header()]
        return np.vstack(cols).T

    def summary(self) -> dict:
        from ..core import DimParam

        return {
            "family": self.family,
            "n": self.n,
            "m": DimParam.parse(self.m).to_json() if not isinstance(self.m, DimParam) else self.m.to_json(),
            "status": self.status,
            "constants": dict(self.constants),
            "notes": list(self.notes),
        }
