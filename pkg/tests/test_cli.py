import json
import math
import re
import subprocess
import sys

import numpy as np
import pytest

from channelscope.cli import main

NUMBER = re.compile(r"^-?\d(\.\d+)?(e[-+]\d+)?$|^-?\d+(\.\d+)?(e[-+]\d+)?$")


def write_spec(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, rows, lines


@pytest.fixture
def quasi_spec(tmp_path):
    return write_spec(tmp_path / "quasi.json", {
        "family": "quasi_enm_gad", "params": {"m": 3, "n": 2, "nu": 1},
        "grid": {"t_min": 0, "t_max": 5, "points": 500}})


def test_scan_quasi_enm(tmp_path, quasi_spec, capsys):
    out = tmp_path / "scan.csv"
    assert main(["scan", "--spec", quasi_spec, "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    header, rows, lines = read_csv(out)
    assert header == ["t", "gamma_1", "gamma_2", "choi_min_eig", "td_deriv_max", "trace_D",
                      "hmax_DDT"]
    assert rows.shape == (500, 7)
    g1 = rows[:, 1]
    crossings = np.flatnonzero(np.diff(np.sign(g1)) != 0)
    assert crossings.size == 1
    assert rows[crossings[0], 0] <= math.log(1.5) <= rows[crossings[0] + 1, 0]
    # 12 significant digits, plain ASCII numbers
    for line in lines[1:]:
        for cell in line.split(","):
            assert NUMBER.match(cell), cell
            digits = re.sub(r"e.*$", "", cell).replace("-", "").replace(".", "").lstrip("0")
            assert len(digits) <= 12


def test_scan_pauli_enm_column(tmp_path):
    spec = write_spec(tmp_path / "p.json", {"family": "pauli_enm",
                                            "grid": {"t_min": 0, "t_max": 5, "points": 100}})
    out = tmp_path / "p.csv"
    assert main(["scan", "--spec", spec, "--out", str(out)]) == 0
    header, rows, _ = read_csv(out)
    np.testing.assert_allclose(rows[:, header.index("gamma_3")], -np.tanh(rows[:, 0]) / 2,
                               atol=1e-5)


def test_scan_identity_is_quiet(tmp_path):
    spec = write_spec(tmp_path / "i.json", {"family": "identity",
                                            "grid": {"t_min": 0, "t_max": 1, "points": 11}})
    out = tmp_path / "i.csv"
    assert main(["scan", "--spec", spec, "--out", str(out)]) == 0
    _, rows, _ = read_csv(out)
    np.testing.assert_allclose(rows[:, 1:], 0, atol=1e-9)


def test_scan_is_deterministic(tmp_path, quasi_spec):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["scan", "--spec", quasi_spec, "--grid", "0:2:40", "--seed", "99",
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_stdout_flag(quasi_spec, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["fig1", "--grid", "0:1:3", "--stdout"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("t,gamma_1,gamma_2\n")
    assert not (tmp_path / "fig1.csv").exists()


def test_fig1(tmp_path):
    out = tmp_path / "f1.csv"
    assert main(["fig1", "--out", str(out)]) == 0
    header, rows, _ = read_csv(out)
    assert header == ["t", "gamma_1", "gamma_2"]
    assert rows.shape == (500, 3)
    assert rows[0, 1] == pytest.approx(0.5)
    np.testing.assert_allclose(rows[:, 1] + rows[:, 2], 1.0, atol=1e-9)
    assert np.all(rows[1:, 2] > 0)


def test_fig1_bad_params():
    assert main(["fig1", "--m", "1", "--nu", "2", "--stdout"]) == 4


def test_fig2(tmp_path):
    out = tmp_path / "f2.csv"
    assert main(["fig2", "--m-range", "2:10:9", "--out", str(out)]) == 0
    _, rows, _ = read_csv(out)
    assert rows[1, 0] == 3.0 and rows[1, 1] == pytest.approx(2 / 81, rel=1e-11)
    assert np.all(rows[:, 1] > 0)
    assert main(["fig2", "--m-range", "0.5:3:4", "--stdout"]) == 4


def test_tstar_and_hcla(capsys):
    assert main(["tstar", "--stdout"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == 1
    assert doc["t_star"] == pytest.approx(math.log(1.5), abs=1e-12)
    assert abs(doc["t_star_bisection"] - doc["t_star"]) <= 1e-8
    assert main(["hcla", "--stdout"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["hcla_closed_form"] == pytest.approx(2 / 81, abs=1e-15)
    assert doc["relative_difference"] <= 1e-6


def test_hcla_for_other_spec(tmp_path, capsys):
    spec = write_spec(tmp_path / "p.json", {"family": "pauli_enm",
                                            "grid": {"t_min": 0, "t_max": 2, "points": 10}})
    assert main(["hcla", "--spec", spec, "--stdout"]) == 0
    doc = json.loads(capsys.readouterr().out)
    # -int_0^2 -(1/2) tanh t dt = (1/2) log cosh 2
    assert doc["hcla_quadrature"] == pytest.approx(0.5 * math.log(math.cosh(2.0)), rel=1e-6)


def test_choi_spectrum(tmp_path, quasi_spec):
    out = tmp_path / "c.csv"
    assert main(["choi-spectrum", "--spec", quasi_spec, "--grid", "0:1:6", "--out", str(out)]) == 0
    header, rows, _ = read_csv(out)
    assert header == ["t", "eig_1", "eig_2", "eig_3", "eig_4"]
    np.testing.assert_allclose(rows[:, 1:].sum(axis=1), 1.0, atol=1e-12)
    assert np.all(rows[:, 1:] > -1e-12)
    out2 = tmp_path / "c2.csv"
    assert main(["choi-spectrum", "--spec", quasi_spec, "--grid", "1:2:3", "--eps", "0.001",
                 "--out", str(out2)]) == 0
    _, rows2, _ = read_csv(out2)
    assert np.all(rows2[:, 1] < 0)


@pytest.mark.parametrize(
    "argv",
    [
        ["scan"],
        ["scan", "--spec", "/nonexistent.json"],
        ["scan", "--grid", "1:0:3"],
        ["tstar", "--seed", "-1"],
        ["tstar", "--tol", "bogus=1"],
        ["tstar", "--tol", "cp"],
        ["frobnicate"],
    ],
)
def test_parse_errors_exit_2(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    assert capsys.readouterr().out == ""


def test_bad_curve_spec_exit_4(tmp_path):
    spec = write_spec(tmp_path / "bad.json", {
        "family": "qubit_gad", "curves": {"lam": {"kind": "linear", "slope": 0.05, "offset": 0.1}}})
    assert main(["scan", "--spec", spec, "--stdout"]) == 4


def test_numerical_failure_exit_3(tmp_path, quasi_spec):
    # an absurd step-agreement tolerance makes every generator extraction fail
    out = tmp_path / "x.csv"
    assert main(["scan", "--spec", quasi_spec, "--grid", "0:1:5", "--tol",
                 "step_agreement=1e-30", "--out", str(out)]) == 3
    assert not out.exists()


def test_certify_adversarial_exit_5(tmp_path):
    spec = tmp_path / "adv.yaml"
    spec.write_text("family: qubit_gad\ncurves:\n  lam: {kind: linear, slope: 0.05, offset: 0.1}\n")
    out = tmp_path / "report.json"
    assert main(["certify", "--spec", str(spec), "--out", str(out)]) == 5
    report = json.loads(out.read_text())
    assert report["schema"] == 1
    assert report["failed"] == ["damping_curve_admission"]


def test_certify_quasi_enm(tmp_path, quasi_spec):
    out = tmp_path / "report.json"
    assert main(["certify", "--spec", quasi_spec, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["schema"] == 1
    assert report["analysis"]["onset"] == pytest.approx(math.log(1.5), abs=1e-9)
    assert report["analysis"]["hcla"] == pytest.approx(2 / 81, rel=1e-6)
    for prop in report["properties"]:
        assert prop["samples"] > 0 and prop["worst_margin"] >= 0
    again = tmp_path / "again.json"
    assert main(["certify", "--spec", quasi_spec, "--out", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_entry_point_runs(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "channelscope.cli", "tstar", "--stdout"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema"] == 1
