import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qesmms import io
from qesmms import profiles as P
from qesmms.cli import (
    EXIT_CHECK,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_SOLVER,
    EXPORT_COLUMNS,
    SWEEP_COLUMNS,
    InputError,
    RunConfig,
    config_from_args,
    main,
    parse_m_list,
)
from qesmms.core import DimParam, RadialSmms
from qesmms.families import elliptic_gaussian

# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(io.format_float(x)) == x


def test_dumps_handles_numpy_and_specials():
    text = io.dumps({"a": np.float64(0.1), "b": np.arange(3), "c": None, "d": True, "e": "x"})
    back = json.loads(text)
    assert back == {"a": 0.1, "b": [0, 1, 2], "c": None, "d": True, "e": "x"}


def test_read_json_reports_invalid_input(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ValueError, match="invalid JSON"):
        io.read_json(p)


def test_descriptor_round_trip(tmp_path):
    s = RadialSmms(3, 2.5, (0.5, 2.0), psi=P.sin(1.0, 0.9) + 0.2, density=P.cosh(1.0, 0.3), e=P.constant(1.2))
    path = io.save_descriptor(s, tmp_path / "s.json")
    t = io.load_descriptor(path)
    r = np.linspace(0.6, 1.9, 11)
    assert (t.n, t.m, t.domain) == (s.n, s.m, s.domain)
    np.testing.assert_array_equal(t.psi(r), s.psi(r))
    np.testing.assert_array_equal(t.v(r), s.v(r))
    np.testing.assert_array_equal(t.e(r), s.e(r))


@pytest.mark.parametrize(
    "desc",
    [
        {"family": "elliptic-gaussian", "n": 2, "m": 3},
        {"family": "hyperbolic", "n": 3, "k": 2.0},
        {"family": "cigar", "m": "+inf"},
    ],
)
def test_family_shorthands(desc):
    assert isinstance(io.smms_from_descriptor(desc), RadialSmms)


@pytest.mark.parametrize("desc", [[1, 2], {"family": "mystery"}, {"family": "elliptic-gaussian", "m": 3}])
def test_bad_descriptors(desc):
    with pytest.raises(ValueError):
        io.smms_from_descriptor(desc)


def test_write_csv_uses_full_precision(tmp_path):
    p = io.write_csv(tmp_path / "x.csv", ("a", "b"), [[1 / 3, "s"]])
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["a", "b"]
    assert float(rows[1][0]) == 1 / 3


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def test_parse_m_list_sorts_and_expands():
    ms = parse_m_list("+inf, 10, log:1e1:1e3:3, 2")
    assert [m.to_json() for m in ms] == [2.0, 10.0, 10.0, 100.0, 1000.0, "+inf"]
    with pytest.raises(InputError):
        parse_m_list("log:1:2")
    with pytest.raises(InputError):
        parse_m_list("two")


def test_config_file_and_flags_merge(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"tol": 1e-6, "npts": 33, "m-values": [3, "+inf"]}))
    cfg = config_from_args(["sweep-m", "--config", str(cfg_file), "--npts", "40", "--family", "cigar"])
    assert cfg.tol == 1e-6 and cfg.npts == 40
    assert cfg.m_values == (DimParam.parse(3), DimParam.parse("+inf"))


def test_config_validation():
    with pytest.raises(InputError):
        RunConfig("verify", tol=-1.0)
    with pytest.raises(InputError):
        RunConfig("verify", npts=1)


def test_unknown_config_keys_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"tolerance": 1e-6}))
    assert main(["verify", "x.json", "--config", str(cfg_file)]) == EXIT_INPUT


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def test_verify_model_space(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"family": "elliptic-gaussian", "n": 2, "m": 3, "sign": 1}))
    code = main(["verify", str(p), "--out", str(tmp_path), "--expect-lambda", "1", "--expect-mu", "0.5"])
    assert code == EXIT_OK
    rep = json.loads((tmp_path / "g.qe_report.json").read_text())
    assert rep["passed"] and rep["failing"] == []


def test_verify_perturbed_model_fails_named_checks(tmp_path):
    g = elliptic_gaussian(2, 3.0)
    # the density frequency no longer matches the warping
    bad = g.with_(density=P.cos(1.0, 0.49))
    path = io.save_descriptor(bad, tmp_path / "bad.json")
    assert main(["verify", str(path), "--out", str(tmp_path)]) == EXIT_CHECK
    rep = json.loads((tmp_path / "bad.qe_report.json").read_text())
    assert not rep["passed"]
    assert rep["failing"] and all(isinstance(x, str) for x in rep["failing"])


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["verify", str(bad), "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["verify", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["nonsense"]) == EXIT_INPUT
    assert main(["sweep-m", "--family", "cigar", "--m-values", ",", "--out", str(tmp_path)]) == EXIT_INPUT


def test_energy_command(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"family": "elliptic-gaussian", "n": 3, "m": 4, "sign": 1}))
    assert main(["energy", str(p), "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "g.energy.json").read_text())
    assert out["mu"] == pytest.approx(0.5, abs=1e-9)
    assert math.isfinite(out["W"]) and out["Vol"] > 0


def test_energy_refusal_is_a_check_failure(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"family": "elliptic-gaussian", "n": 2, "m": "+inf", "sign": -1}))
    assert main(["energy", str(p), "--mu", "1", "--out", str(tmp_path)]) == EXIT_CHECK
    out = json.loads((tmp_path / "h.energy.json").read_text())
    assert set(out["refused"]) == {"Vol", "W"}


def test_cigar_sweep(tmp_path):
    code = main(["sweep-m", "--family", "cigar", "--m-values", "+inf,100,10,2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    table = json.loads((tmp_path / "sweep_cigar.json").read_text())
    assert table["columns"] == list(SWEEP_COLUMNS)
    rows = table["rows"]
    assert [r[0] for r in rows] == [2.0, 10.0, 100.0, "+inf"]
    for r, mu in zip(rows[:3], (4.0, 4 / 9, 4 / 99)):
        assert r[2] == pytest.approx(mu, rel=1e-9)
    assert rows[3][2] is None
    assert rows[3][3] == pytest.approx(4.0, rel=1e-9)
    assert all(r[-1] for r in rows)


def test_cigar_sweep_csv(tmp_path):
    assert main(["sweep-m", "--family", "cigar", "--m-values", "3,+inf", "--format", "csv", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "sweep_cigar.csv").open()))
    assert rows[0] == list(SWEEP_COLUMNS)
    assert rows[2][2] == ""


def test_cigar_export_is_reproducible(tmp_path):
    args = ["export", "--family", "cigar", "--m", "+inf", "--out"]
    assert main(args + [str(tmp_path / "a")]) == EXIT_OK
    assert main(args + [str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "cigar_n2_m+inf.csv").read_bytes()
    assert a == (tmp_path / "b" / "cigar_n2_m+inf.csv").read_bytes()
    rows = list(csv.reader(a.decode().splitlines()))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    r, psi = data[:, header.index("r")], data[:, header.index("psi")]
    np.testing.assert_allclose(psi, np.tanh(r), atol=1e-12)


def test_descriptor_export(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"family": "elliptic-gaussian", "n": 2, "m": 3}))
    assert main(["export", str(p), "--npts", "20", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "g.curves.csv").open()))
    assert rows[0] == list(EXPORT_COLUMNS) and len(rows) == 21


def test_bryant_short_span_is_solver_failure(tmp_path):
    assert main(["solve-bryant", "--n", "3", "--m", "2", "--t-span", "5", "--out", str(tmp_path)]) == EXIT_SOLVER


def test_solve_cigar_writes_report(tmp_path):
    assert main(["solve-cigar", "--m", "3", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "cigar_n2_m3.0.qe_report.json").read_text())
    assert rep["passed"]


def test_duality_command(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"family": "elliptic-gaussian", "n": 2, "m": 3}))
    assert main(["duality", str(p), "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "g.duality.json").read_text())
    assert out["involution"]
    assert out["dual"]["m"] == -3.0 and out["dual"]["n"] == 2
    q = tmp_path / "s.json"
    q.write_text(json.dumps({"family": "elliptic-gaussian", "n": 2, "m": "+inf"}))
    assert main(["duality", str(q), "--out", str(tmp_path)]) == EXIT_INPUT
