"""Command-line interface.

Subcommands: ``verify``, ``energy``, ``solve-cigar``, ``solve-bryant``,
``solve-lpp``, ``sweep-m``, ``duality`` and ``export``.

Exit codes: 0 all checks pass, 1 input error, 2 a check failed, 3 a solver
did not converge.  ``--config FILE`` reads a JSON object whose keys are the
long option names (dashes or underscores); explicit flags win.  The
environment variable ``QESMMS_THREADS`` caps the number of worker
processes used by ``sweep-m``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import io
from .core import DimParam, curvature, interior_grid, qe_from_fields, qe_verify
from .families.trajectory import NonConvergence

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_SOLVER = 0, 1, 2, 3

SWEEP_COLUMNS = ("m", "lambda", "mu", "mu_prime", "max_residual", "mu_variation", "integrability", "passed")
"""Header of the ``sweep-m`` table.  ``mu`` is empty at ``m = +inf``."""

SWEEP_FAMILIES = ("cigar", "elliptic-gaussian", "bryant", "lpp")


class InputError(ValueError):
    """Bad arguments or input files (exit code 1)."""


def _sorted_ms(values) -> tuple:
    ms = [DimParam.parse(x) for x in values]
    return tuple(sorted(ms, key=lambda d: d.value))


def parse_m_list(text: str) -> tuple:
    """``"2,10,100,+inf"`` or a log range ``"log:1e1:1e3:5"`` (plus optional ``,+inf``)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part.startswith("log:"):
            try:
                _, lo, hi, num = part.split(":")
                out.extend(np.geomspace(float(lo), float(hi), int(num)).tolist())
            except ValueError:
                raise InputError(f"bad log range {part!r}; use log:lo:hi:count") from None
        else:
            out.append(part)
    try:
        return _sorted_ms(out)
    except ValueError as exc:
        raise InputError(str(exc)) from None


@dataclass
class RunConfig:
    """Validated settings for one CLI run."""

    subcommand: str
    inputs: tuple = ()
    tol: float = 1e-9
    bianchi_tol: float = 1e-9
    npts: int = 64
    m_values: tuple = ()
    out_dir: Path = Path(".")
    fmt: str = "json"
    family: Optional[str] = None
    n: int = 2
    m: Any = None
    sign: int = 1
    s: int = 1
    q: int = 2
    t_max: float = 10.0
    mu: Optional[float] = None
    expect_lambda: Optional[float] = None
    expect_mu: Optional[float] = None
    ode_tol: float = 1e-12
    max_step: float = math.inf
    t_span: Optional[float] = None
    threads: int = 1

    def __post_init__(self):
        for name in ("tol", "bianchi_tol", "ode_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.npts < 2:
            raise InputError("npts must be at least 2")
        if self.fmt not in ("json", "csv"):
            raise InputError("format must be json or csv")
        self.m_values = _sorted_ms(self.m_values)
        self.out_dir = Path(self.out_dir)
        self.threads = max(1, int(self.threads))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qesmms", description="Quasi-Einstein smooth metric measure spaces.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.add_argument("--out", dest="out_dir", default=None, help="output directory (default .)")
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--npts", type=int, default=None)

    sp = sub.add_parser("verify", help="quasi-Einstein test, Bianchi identity and estimates")
    common(sp)
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--bianchi-tol", type=float, default=None)
    sp.add_argument("--expect-lambda", type=float, default=None)
    sp.add_argument("--expect-mu", type=float, default=None)

    sp = sub.add_parser("energy", help="weighted volume and energy")
    common(sp)
    sp.add_argument("inputs", nargs=1)
    sp.add_argument("--mu", type=float, default=None)

    sp = sub.add_parser("solve-cigar")
    common(sp)
    sp.add_argument("--m", required=False, default=None)
    sp.add_argument("--t-max", type=float, default=None)
    sp.add_argument("--ode-tol", type=float, default=None)

    sp = sub.add_parser("solve-bryant")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--m", default=None)
    sp.add_argument("--ode-tol", type=float, default=None)
    sp.add_argument("--max-step", type=float, default=None)
    sp.add_argument("--t-span", type=float, default=None, help="integration length in the dynamical time")

    sp = sub.add_parser("solve-lpp")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--m", default=None)
    sp.add_argument("--s", type=int, default=None)
    sp.add_argument("--q", type=int, default=None)
    sp.add_argument("--ode-tol", type=float, default=None)

    sp = sub.add_parser("sweep-m", help="tabulate constants over a list of m")
    common(sp)
    sp.add_argument("--family", choices=SWEEP_FAMILIES, default=None)
    sp.add_argument("--m-values", default=None, help='e.g. "2,10,100,+inf" or "log:2:1e3:6,+inf"')
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--sign", type=int, default=None)
    sp.add_argument("--s", type=int, default=None)
    sp.add_argument("--q", type=int, default=None)

    sp = sub.add_parser("duality", help="apply the duality map and compare scale-system residuals")
    common(sp)
    sp.add_argument("inputs", nargs=1)

    sp = sub.add_parser("export", help="write curves to CSV")
    common(sp)
    sp.add_argument("inputs", nargs="*")
    sp.add_argument("--family", choices=("cigar", "bryant", "lpp"), default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--m", default=None)
    sp.add_argument("--t-max", type=float, default=None)
    return p


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values: dict[str, Any] = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from None
        if not isinstance(raw, dict):
            raise InputError("config must be a JSON object")
        values.update({k.replace("-", "_"): v for k, v in raw.items()})
    for k, v in vars(args).items():
        if k == "config" or v is None:
            continue
        values[k] = v
    if "format" in values:
        values["fmt"] = values.pop("format")
    if "out" in values:
        values["out_dir"] = values.pop("out")
    mv = values.pop("m_values", ())
    values["m_values"] = parse_m_list(mv) if isinstance(mv, str) else _sorted_ms(mv)
    values["inputs"] = tuple(values.get("inputs", ()))
    env = os.environ.get("QESMMS_THREADS")
    if env:
        try:
            values["threads"] = int(env)
        except ValueError:
            raise InputError("QESMMS_THREADS must be an integer") from None
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown options: {sorted(unknown)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _out(cfg: RunConfig, name: str) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / name


def _grid(s, npts: int) -> np.ndarray:
    # stay 1% away from the ends: near a degenerate boundary the v^-k terms
    # make the pointwise identities roundoff-limited
    return interior_grid(s, npts, margin=1e-2)


def _load(path: str):
    try:
        return io.load_descriptor(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except (ValueError, TypeError, KeyError) as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None


def cmd_verify(cfg: RunConfig) -> int:
    status = EXIT_OK
    for path in cfg.inputs:
        s = _load(path)
        grid = _grid(s, cfg.npts)
        rep = qe_verify(s, grid, tol=cfg.tol)
        cp = curvature(s, grid)
        bianchi = float(np.max(np.abs(cp.bianchi_residual)))
        trace = float(np.max(np.abs(cp.trace_defect(s.n))))
        failing = rep.failing()
        if bianchi > cfg.bianchi_tol:
            failing.append("bianchi_identity")
        if trace > cfg.bianchi_tol:
            failing.append("trace_identity")
        if cfg.expect_lambda is not None and abs(rep.lambda_fit - cfg.expect_lambda) > cfg.tol:
            failing.append("expected_lambda")
        if cfg.expect_mu is not None and (rep.mu_fit is None or abs(rep.mu_fit - cfg.expect_mu) > cfg.tol):
            failing.append("expected_mu")
        out = rep.to_dict()
        out.update(input=str(path), bianchi_residual=bianchi, trace_defect=trace, failing=failing, passed=not failing)
        io.write_json(_out(cfg, Path(path).stem + ".qe_report.json"), out)
        if failing:
            print(f"{path}: FAIL {', '.join(failing)}", file=sys.stderr)
            status = EXIT_CHECK
        else:
            print(f"{path}: ok lambda={io.format_float(rep.lambda_fit)} mu={rep.mu_fit}")
    return status


def cmd_energy(cfg: RunConfig) -> int:
    from .variational import NonIntegrable, energy, weighted_volume

    s = _load(cfg.inputs[0])
    mu = cfg.mu
    if mu is None:
        mu = qe_verify(s, _grid(s, cfg.npts), tol=cfg.tol).mu_fit
        if mu is None:
            raise InputError("no characteristic constant available; pass --mu")
    out: dict[str, Any] = {"input": cfg.inputs[0], "m": s.m.to_json(), "mu": mu, "W": None, "Vol": None, "error_est": {}}
    status = EXIT_OK
    for key, fn in (("Vol", lambda: weighted_volume(s)), ("W", lambda: energy(s, mu))):
        try:
            ev = fn()
        except NonIntegrable as exc:
            out.setdefault("refused", {})[key] = str(exc)
            status = EXIT_CHECK
            continue
        out[key] = ev.value
        out["error_est"][key] = ev.error_estimate
    io.write_json(_out(cfg, Path(cfg.inputs[0]).stem + ".energy.json"), out)
    print(io.dumps(out))
    return status


def _write_trajectory(cfg: RunConfig, traj, stem: str) -> None:
    io.write_csv(_out(cfg, stem + ".csv"), traj.header(), traj.rows())
    io.write_json(_out(cfg, stem + ".json"), traj.summary())


def _require_m(cfg: RunConfig) -> DimParam:
    if cfg.m is None:
        raise InputError("--m is required")
    try:
        return DimParam.parse(cfg.m)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _family_trajectory(cfg: RunConfig, family: str, m: DimParam):
    from .families import bohm_bryant_solve, cigar_solve, lpp_solve

    try:
        if family == "cigar":
            return cigar_solve(m, t_max=cfg.t_max, tol=cfg.ode_tol)
        if family == "bryant":
            span = None if cfg.t_span is None else (0.0, cfg.t_span)
            return bohm_bryant_solve(cfg.n, m, t_span=span, tol=cfg.ode_tol, max_step=cfg.max_step)
        if family == "lpp":
            return lpp_solve(cfg.n, m, cfg.s, cfg.q, rtol=cfg.ode_tol)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    raise InputError(f"unknown family {family!r}")


def _trajectory_report(traj, tol: float):
    s = traj.smms
    if traj.extra and "qe_grid" in traj.extra:
        grid = traj.extra["qe_grid"]
    elif traj.family == "lpp":
        grid = s.interior_grid(200)
    else:
        grid = interior_grid(s, 128)
    return qe_from_fields(s.field_sample(grid), tol=tol)


def _solve_cmd(cfg: RunConfig, family: str) -> int:
    m = _require_m(cfg)
    traj = _family_trajectory(cfg, family, m)
    rep = _trajectory_report(traj, max(cfg.tol, 10 * cfg.ode_tol))
    stem = f"{family}_n{traj.n}_m{m}"
    _write_trajectory(cfg, traj, stem)
    io.write_json(_out(cfg, stem + ".qe_report.json"), rep)
    print(io.dumps({"constants": traj.constants, "qe": {"lambda": rep.lambda_fit, "mu": rep.mu_fit, "mu_prime": rep.mu_prime, "passed": rep.passed}}))
    return EXIT_OK if rep.passed else EXIT_CHECK


def _sweep_row(args) -> list:
    family, m, cfg = args
    from .families import elliptic_gaussian

    if family == "elliptic-gaussian":
        s = elliptic_gaussian(cfg.n, m, cfg.sign)
        rep = qe_verify(s, _grid(s, cfg.npts), tol=cfg.tol)
        integ = float("nan")
    else:
        traj = _family_trajectory(replace(cfg, m=m), family, m)
        rep = _trajectory_report(traj, cfg.tol)
        col = traj.column("integrability_residual")
        integ = float(np.nanmax(np.abs(col))) if np.any(np.isfinite(col)) else float("nan")
    mu = None if m.is_infinite else rep.mu_fit
    return [m.to_json(), rep.lambda_fit, mu, rep.mu_prime, rep.max_residual, rep.mu_variation, integ, rep.passed]


def cmd_sweep_m(cfg: RunConfig) -> int:
    if not cfg.family:
        raise InputError("--family is required")
    if not cfg.m_values:
        raise InputError("empty m list")
    jobs = [(cfg.family, m, cfg) for m in cfg.m_values]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(jobs))) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    stem = f"sweep_{cfg.family}"
    if cfg.fmt == "csv":
        io.write_csv(_out(cfg, stem + ".csv"), SWEEP_COLUMNS, [["" if x is None else x for x in r] for r in rows])
    else:
        io.write_json(_out(cfg, stem + ".json"), {"columns": list(SWEEP_COLUMNS), "rows": rows})
    for r in rows:
        print(" ".join("-" if x is None else (io.format_float(x) if isinstance(x, float) else str(x)) for x in r))
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_CHECK


def cmd_duality(cfg: RunConfig) -> int:
    from .conformal import ScaleTuple, _v_profile, duality_map, scale_residuals
    from .profiles import constant

    path = cfg.inputs[0]
    try:
        raw = io.read_json(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    try:
        if isinstance(raw, dict) and "tuple" in raw:
            t = ScaleTuple.from_spec(raw["tuple"])
            metric = io.smms_from_descriptor(raw["metric"])
        else:
            metric = io.smms_from_descriptor(raw)
            rep = qe_verify(metric, _grid(metric, cfg.npts), tol=cfg.tol)
            if rep.mu_fit is None:
                raise InputError("duality needs finite m")
            t = ScaleTuple(constant(1.0), _v_profile(metric), rep.lambda_fit, rep.mu_fit, metric.m, metric.n)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if t.m.is_infinite:
        raise InputError("duality needs finite m")
    d = duality_map(t)
    dd = duality_map(d)
    involution = (dd.lam, dd.mu, dd.m.value, dd.n) == (t.lam, t.mu, t.m.value, t.n)
    grid = _grid(metric, cfg.npts)
    r0 = scale_residuals(metric, t, grid)
    r1 = scale_residuals(metric, d, grid)
    # the dual system is the same three equations with the roles swapped
    invariance = float(max(np.max(np.abs(r0[0] - r1[0])), np.max(np.abs(r0[1] - r1[2])), np.max(np.abs(r0[2] - r1[1]))))
    out = {
        "input": path,
        "tuple": {"lambda": t.lam, "mu": t.mu, "m": t.m.to_json(), "n": t.n},
        "dual": {"lambda": d.lam, "mu": d.mu, "m": d.m.to_json(), "n": d.n},
        "involution": involution,
        "residual_invariance": invariance,
        "residual_max": float(max(np.max(np.abs(x)) for x in r0)),
    }
    io.write_json(_out(cfg, Path(path).stem + ".duality.json"), out)
    print(io.dumps(out))
    return EXIT_OK if involution and invariance <= cfg.tol else EXIT_CHECK


EXPORT_COLUMNS = ("r", "psi", "v", "phi", "scalar", "scalar_w", "ric_w_rr", "ric_w_tan")
"""Header for descriptor exports; trajectories use :meth:`Trajectory.header`."""


def cmd_export(cfg: RunConfig) -> int:
    if cfg.family:
        m = _require_m(cfg)
        traj = _family_trajectory(cfg, cfg.family, m)
        _write_trajectory(cfg, traj, f"{cfg.family}_n{traj.n}_m{m}")
        return EXIT_OK
    if not cfg.inputs:
        raise InputError("give a descriptor or --family")
    for path in cfg.inputs:
        s = _load(path)
        grid = _grid(s, cfg.npts)
        fs = s.field_sample(grid)
        tan = fs.blocks[1][1] if len(fs.blocks) > 1 else np.full_like(grid, np.nan)
        psi = s.psi(grid) if s.psi is not None else np.full_like(grid, np.nan)
        v = s.v(grid) if s.m.is_finite else np.full_like(grid, np.nan)
        cols = [grid, psi, v, s.phi(grid), fs.scalar, fs.scalar_w, fs.blocks[0][1], tan]
        io.write_csv(_out(cfg, Path(path).stem + ".curves.csv"), EXPORT_COLUMNS, np.vstack(cols).T)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "energy": cmd_energy,
    "solve-cigar": lambda c: _solve_cmd(c, "cigar"),
    "solve-bryant": lambda c: _solve_cmd(c, "bryant"),
    "solve-lpp": lambda c: _solve_cmd(c, "lpp"),
    "sweep-m": cmd_sweep_m,
    "duality": cmd_duality,
    "export": cmd_export,
}


def run(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
