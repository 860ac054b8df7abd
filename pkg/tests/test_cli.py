import csv
import json
import math
import subprocess
import sys

import pytest

from toricbranes.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_describe_local_p2(capsys):
    code, out, _ = run(capsys, "--fan", "local_p2", "describe")
    report = json.loads(out)
    assert code == 0
    assert report["volume"] == 3 and report["box_size"] == 1
    assert (report["sectors"][0]["dim_H"], report["sectors"][0]["dim_Hc"]) == (3, 3)
    assert sorted(report["fan"]["max_cones"]) == [[1, 2, 4], [1, 3, 4], [2, 3, 4]]


def test_describe_c3_z3(capsys):
    code, out, _ = run(capsys, "describe", "--fan", "c3_z3")
    report = json.loads(out)
    assert report["box_size"] == 3 and report["dims"] == [1, 1, 1]
    assert all(abs(v - round(v)) < 1e-9 for row in report["euler_matrix"] for v in row)


def test_missing_field_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"points": [[0, 1], [1, 1]], "max_cones": [[1, 2]]}))
    code, _, err = run(capsys, "describe", "--fan", str(bad))
    assert code == 2
    assert "psi" in err


def test_syntax_error_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[0, 1], [1, 1]],\n "psi": [0 0]}')
    code, _, err = run(capsys, "describe", "--fan", str(bad))
    assert code == 2
    assert "line 2" in err and "column" in err


def test_toml_fan(tmp_path, capsys):
    f = tmp_path / "line.toml"
    f.write_text('points = [[0, 1], [1, 1]]\nmax_cones = [[1, 2]]\npsi = ["0", "0"]\n')
    code, out, _ = run(capsys, "describe", "--fan", str(f))
    assert code == 0 and json.loads(out)["volume"] == 1


def test_invalid_fan_is_input_error(tmp_path, capsys):
    f = tmp_path / "flat.json"
    f.write_text(json.dumps({"points": [[1, 0, 1], [0, 1, 1], [-1, -1, 1], [0, 0, 1]],
                             "max_cones": [[1, 2, 4], [2, 3, 4], [1, 3, 4]], "psi": [0, 0, 0, 0]}))
    code, _, err = run(capsys, "describe", "--fan", str(f))
    assert code == 2 and "NonConvexPsi" in err


@pytest.mark.parametrize("side", ["A", "B"])
def test_charge_line(capsys, side):
    code, out, _ = run(capsys, "charge", "--fan", "line", "--side", side, "--c", "1,2", "--x", "1,1")
    report = json.loads(out)
    assert code == 0
    assert report["value_re"] == pytest.approx(-1 / (4 * math.pi ** 2), rel=1e-10)


def test_charge_b_with_trivial_bundle(capsys):
    _, out1, _ = run(capsys, "charge", "--fan", "local_p2", "--side", "B", "--c", "0,0,1", "--t", "40")
    _, out2, _ = run(capsys, "charge", "--fan", "local_p2", "--side", "B", "--c", "0,0,1", "--t", "40",
                     "--exps", "0,0,0,0")
    assert json.loads(out1)["value_im"] == json.loads(out2)["value_im"]


def test_charge_bad_point(capsys):
    code, _, err = run(capsys, "charge", "--fan", "line", "--side", "A", "--c", "0,1", "--x", "1,1")
    assert code == 2 and "NotConvergent" in err
    code, _, _ = run(capsys, "charge", "--fan", "line", "--side", "A", "--c", "1,x", "--x", "1,1")
    assert code == 2


def test_verify_all_line(capsys):
    code, out, _ = run(capsys, "verify", "--fan", "line", "--suite", "all")
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert set(report["results"]) == {"bbgkz", "asymptotics", "pairing", "main", "volume", "beta"}


def test_verify_beta(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "beta", "--beta-a", "1,1", "--beta-a", "1/3,1/2,2")
    assert code == 0 and json.loads(out)["passed"]


def test_verify_unreachable_tolerance(capsys):
    code, out, _ = run(capsys, "--tol", "1e-15", "verify", "--fan", "line", "--suite", "main")
    report = json.loads(out)
    assert code == 1
    assert report["results"]["main"]["error"] == "ToleranceNotReached"


def test_xi_table_fixed_v(capsys):
    code, out, _ = run(capsys, "xi-table", "--fan", "line", "--v", "1/2,3/2")
    report = json.loads(out)
    assert code == 0
    assert report["entries"] == [{"c": [0, 0], "d": [1, 2], "I": [1, 2], "xi": 1, "vol": 1}]


def test_xi_table_non_generic(capsys):
    code, _, err = run(capsys, "xi-table", "--fan", "a1_resolved", "--v", "2,2")
    assert code == 1 and "NonGenericV" in err


def test_asymptotics_csv(tmp_path, capsys):
    out = tmp_path / "ratios.csv"
    code, _, _ = run(capsys, "asymptotics", "--fan", "local_p2", "--c", "0,0,1", "--t-grid", "20,40,80,160",
                     "--out", str(out))
    rows = list(csv.DictReader(out.open()))
    assert code == 0
    assert [float(r["t"]) for r in rows] == [20, 40, 80, 160]
    devs = [float(r["deviation"]) for r in rows]
    assert devs == sorted(devs, reverse=True)


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["describe", "--fan", "local_f0", "--out", str(path)]) == 0
    assert a.read_text() == b.read_text()
    json.loads(a.read_text())


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "toricbranes.cli", "--fan", "line", "charge", "--side", "B",
                          "--c", "1,2", "--x", "2,1"], capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["value_re"] == pytest.approx(-1 / (8 * math.pi ** 2), rel=1e-12)
