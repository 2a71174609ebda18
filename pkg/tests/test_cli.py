import csv
import io
import json
import subprocess
import sys

import pytest

from qinvariant.cli import main

BESSEL = {"kind": "brownian", "nu": 0.25}


def _run(tmp_path, command, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return main([command, "--config", str(path), *extra])


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_series_at_zero(tmp_path, capsys):
    assert _run(tmp_path, "eval-series", {"exponent": BESSEL, "alpha": 2.0, "z": [0.0, 0.0], "q": [None, 0.7]}) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4 and all(float(r["value"]) == 1.0 for r in rows)


def test_fpt_at_barrier(tmp_path, capsys):
    cfg = {"process": "U", "exponent": BESSEL, "alpha": 2.0, "lam": 1.0, "q": [0.3, 1.0, 4.0], "x": 1.5, "a": 1.5}
    assert _run(tmp_path, "fpt", cfg) == 0
    assert [float(r["value"]) for r in _rows(capsys.readouterr().out)] == [1.0, 1.0, 1.0]


def test_grid_order_and_json(tmp_path, capsys):
    cfg = {"exponent": BESSEL, "alpha": 2.0, "lam": 1.0, "q": [0.5, 2.0], "x": [0.1, 1.0]}
    assert _run(tmp_path, "gamma-transform", cfg, "--format", "json") == 0
    rows = json.loads(capsys.readouterr().out)
    assert [(r["q"], r["x"]) for r in rows] == [(0.5, 0.1), (0.5, 1.0), (2.0, 0.1), (2.0, 1.0)]
    assert max(r["rel_diff"] for r in rows) < 1e-7


def test_wiener_hopf_modes(tmp_path, capsys):
    base = {"alpha": 1.5, "k": 1, "l": 2}
    assert _run(tmp_path, "wiener-hopf", {**base, "points": [[0.3, 0.3], [-3.0, 2.0]]}) == 0
    assert max(float(r["residual"]) for r in _rows(capsys.readouterr().out)) < 1e-10
    assert _run(tmp_path, "wiener-hopf", {**base, "mode": "double_laplace", "side": "below", "q": 1.0, "delta": 1.0, "p": 0.5, "chi": 2.0}) == 0
    assert float(_rows(capsys.readouterr().out)[0]["value"]) > 0


def test_simulate_is_byte_identical(tmp_path):
    cfg = {
        "process": "U", "exponent": BESSEL, "alpha": 2.0, "lam": 1.0, "dt": 2e-3, "horizon": 20.0,
        "scheme": "exact_bessel", "start": 0.5, "barrier": 1.0, "q": [0.7, 1.4],
    }
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.csv"
        assert _run(tmp_path, "simulate", cfg, "--paths", "2000", "--seed", "5", "--out", str(out)) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0].split(",")
    assert header[0] == "process" and header[-1] == "std_error"


def test_exit_codes(tmp_path, capsys):
    assert main(["fpt"]) == 2  # no config
    assert _run(tmp_path, "fpt", {"process": "U"}) == 2  # missing keys
    cfg = {"process": "U", "exponent": BESSEL, "alpha": 2.0, "lam": 1.0, "q": 1.0, "x": 2.0, "a": 1.0}
    assert _run(tmp_path, "fpt", cfg) == 2  # x > a is outside the formula's domain
    assert _run(tmp_path, "eval-series", {"exponent": BESSEL, "alpha": 2.0, "z": 1e7}) == 3  # series overflows
    sim = {
        "process": "U", "exponent": BESSEL, "alpha": 2.0, "lam": 1.0, "dt": 2e-3, "horizon": 0.01,
        "scheme": "exact_bessel", "start": 0.1, "barrier": 3.0, "q": 1.0,
    }
    assert _run(tmp_path, "simulate", sim, "--paths", "1000") == 3  # too few hits
    assert main(["validate", "--suite", "nonexistent"]) == 2
    capsys.readouterr()


def test_validate_kummer(capsys):
    assert main(["validate", "--suite", "kummer"]) == 0
    out = capsys.readouterr().out
    assert "0 failed" in out and "Phi(q, 1-nu, x^2/2)" in out


def test_validate_reports_failure(capsys):
    assert main(["validate", "--suite", "printed_constants"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qinvariant", "validate", "--suite", "gamma_transform", "--format", "json"], capture_output=True, text=True)
    assert r.returncode == 0
    rows = json.loads(r.stdout)
    assert len(rows) == 20 and all(row["status"] == "PASS" for row in rows)
