"""Descriptor files and tabular output.

Floats are written with 17 significant digits so that a value read back is
bit-identical.  JSON has no infinity literal, so ``m = +-inf`` (and any other
infinite float) is written as the string token ``"+inf"`` / ``"-inf"``;
NaN becomes ``null``.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .core import DimParam, RadialSmms

__all__ = [
    "format_float",
    "dumps",
    "write_json",
    "read_json",
    "load_descriptor",
    "save_descriptor",
    "smms_from_descriptor",
    "write_csv",
]


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, DimParam):
        return _encode(obj.to_json(), indent, level)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"+inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(v is None or isinstance(v, (int, float, np.number, str)) for v in obj)
        if flat:
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with 17-digit floats and ``"+inf"``/``"-inf"`` tokens."""
    return _encode(obj, indent, 0)


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def read_json(path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None


def smms_from_descriptor(desc: dict):
    """Build an SMMS from a descriptor.

    A descriptor is either the full form written by :func:`save_descriptor`
    or a family shorthand such as
    ``{"family": "elliptic-gaussian", "n": 2, "m": 3, "sign": 1}``.
    """
    if not isinstance(desc, dict):
        raise ValueError("descriptor must be a JSON object")
    fam = desc.get("family")
    if fam is None:
        return RadialSmms.from_spec(desc)
    from . import families as F

    try:
        if fam == "elliptic-gaussian":
            return F.elliptic_gaussian(int(desc["n"]), desc["m"], int(desc.get("sign", 1)))
        if fam == "hyperbolic":
            return F.hyperbolic_space(int(desc["n"]), float(desc.get("k", 1.0)), desc.get("m", 0))
        if fam == "cigar":
            return F.cigar_solve(desc["m"], float(desc.get("t_max", 10.0)), float(desc.get("tol", 1e-12))).smms
    except KeyError as exc:
        raise ValueError(f"descriptor for {fam!r} is missing {exc}") from None
    raise ValueError(f"unknown family {fam!r}")


def load_descriptor(path):
    return smms_from_descriptor(read_json(path))


def save_descriptor(s: RadialSmms, path) -> Path:
    return write_json(path, s.to_spec())


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """CSV with 17-digit floats; the first line is the header."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return path
