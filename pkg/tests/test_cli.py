import csv
import io
import json
import subprocess
import sys

import pytest

from hypermt import cli
from hypermt.asymptotics_lab import CSV_HEADER

LAMBDA_STAR_4 = 0.020707308194284423


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_missing_command(capsys):
    code, _, err = run(capsys)
    assert code == 2 and err.startswith("error:usage:")


def test_solve_rejects_lambda_outside(capsys):
    code, out, err = run(capsys, "solve", "--lambda", "0.3")
    assert code == 2 and out == ""
    assert err.startswith("error:usage:") and err.count("\n") == 1


def test_solve_needs_exactly_one_target(capsys):
    assert run(capsys, "solve")[0] == 2
    assert run(capsys, "solve", "--lambda", "0.05", "--c", "3")[0] == 2


def test_solve_bad_config(capsys):
    assert run(capsys, "solve", "--lambda", "0.05", "--s-max", "-1")[0] == 2


def test_solve_by_peak_height(capsys):
    code, out, _ = run(capsys, "solve", "--c", "4.0")
    assert code == 0
    doc = json.loads(out)
    assert doc["lambda"] == pytest.approx(LAMBDA_STAR_4, abs=1e-10)
    assert doc["c"] == pytest.approx(4.0, abs=1e-9)
    assert set(doc) == {"schema_version", "lambda", "c", "r_lambda", "lambda_c2", "decay_rate",
                        "tail_amplitude", "energies", "pohozaev", "grid_summary"}
    assert set(doc["pohozaev"]) == {"d", "residual", "relative"}


def test_solve_bracket_failure_exit(capsys):
    code, _, err = run(capsys, "solve", "--c", "0.5")
    assert code == 3 and err.startswith("error:bracket:")


def test_solve_writes_identical_files(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "solve", "--lambda", "0.05", "--out", str(a))[0] == 0
    assert run(capsys, "solve", "--lambda", "0.05", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["lambda_c2"] == pytest.approx(0.4376158659987039, abs=1e-9)
    assert b"\r\n" not in a.read_bytes()


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--lambda-grid", "0.05:0.1:2", "--threads", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_HEADER
    assert [float(r[0]) for r in rows[1:]] == [0.05, 0.1]
    assert all(r[-1] == "ok" for r in rows[1:])
    # 17 significant digits for reals
    assert rows[1][1] == "%.17g" % 2.9584315641863475


def test_sweep_deterministic(capsys):
    first = run(capsys, "sweep", "--lambda-grid", "0.05:0.1:2")[1]
    second = run(capsys, "sweep", "--lambda-grid", "0.05:0.1:2", "--threads", "1")[1]
    assert first == second


@pytest.mark.parametrize("grid", ["0.1:0.25:4", "0:0.1:3", "0.1:0.2", "0.1:0.2:x", "0.1:0.2:3:log",
                                  "0.1:0.2:0", "0.1:0.2:1"])
def test_sweep_bad_grid(capsys, grid):
    code, _, err = run(capsys, "sweep", "--lambda-grid", grid)
    assert code == 2 and err.startswith("error:usage:")


def test_parse_lambda_grid():
    assert cli.parse_lambda_grid("0.01:0.1:2:geom") == [0.01, 0.1]
    g = cli.parse_lambda_grid("0.01:0.1:3:geom")
    assert g[1] == pytest.approx(0.1 / 10 ** 0.5)
    assert cli.parse_lambda_grid("0.1:0.01:4") == sorted(cli.parse_lambda_grid("0.01:0.1:4"))
    assert cli.parse_lambda_grid("0.05:0.05:1") == [0.05]


def test_verify_unknown_suite(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2


def test_verify_profiles(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "profiles")
    assert code == 0
    doc = json.loads(out)
    names = {c["name"]: c for c in doc["checks"]}
    for key in ("beta_farfield_slope", "beta_quadrature", "beta_table", "integral[eta0^3]"):
        assert names[key]["passed"]
    assert doc["summary"]["passed"] is True


def test_verify_injected_corruption(capsys):
    code, out, err = run(capsys, "verify", "--suite", "profiles", "--inject-w0-offset", "1e-3")
    assert code == 1
    assert err.startswith("error:verification:")
    assert json.loads(out)["summary"]["failed"] >= 4


def test_verify_deterministic(capsys):
    assert run(capsys, "verify", "--suite", "profiles")[1] == run(capsys, "verify", "--suite", "profiles")[1]


def test_profiles_export(capsys):
    code, out, _ = run(capsys, "profiles")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == cli.PROFILE_HEADER
    one = [r for r in rows[1:] if float(r[0]) == 1.0]
    assert len(one) == 1
    assert float(one[0][2]) == pytest.approx(0.0666263, abs=1e-7)
    assert float(one[0][1]) == pytest.approx(-0.6931472, abs=1e-7)
    rs = [float(r[0]) for r in rows[1:]]
    assert rs == sorted(rs) and rs[0] == pytest.approx(1e-3) and rs[-1] == pytest.approx(1e4)


@pytest.mark.parametrize("argv", [["--samples", "0"], ["--rmax", "-5"], ["--rmax", "1e20"],
                                  ["--samples", "two"]])
def test_profiles_bad_ranges(capsys, argv):
    assert run(capsys, "profiles", *argv)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hypermt", "profiles", "--samples", "3", "--rmax", "10"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == ",".join(cli.PROFILE_HEADER)
    assert len(lines) == 1 + 4
    proc = subprocess.run([sys.executable, "-m", "hypermt", "solve", "--lambda", "0.3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2
    assert proc.stderr.startswith("error:usage:")
