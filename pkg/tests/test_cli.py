import csv
import io
import json
import subprocess
import sys

import pytest

from eightvertex.cli import main, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_range():
    assert parse_range("-2..1") == [-2, -1, 0, 1]
    assert parse_range("4") == [4]


def test_exact_table(capsys):
    code, out, _ = run(capsys, "exact", "--p", "0.1", "--r", "0.25", "--i", "-2..2",
                       "--t", "0..2", "--backend", "rational")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 15
    assert {(r["i"], r["t"]): r["c8"] for r in rows}[("0", "2")] == "9/400"


def test_weights_route(capsys):
    code, out, _ = run(capsys, "--backend", "rational", "exact", "--a", "1", "--b", "2",
                       "--c", "3", "--d", "2", "--t", "1")
    assert code == 0 and out.splitlines()[1] == "0,1,1/4"


def test_bad_weights_exit_2(capsys):
    code, _, err = run(capsys, "exact", "--a", "1", "--b", "2", "--c", "3", "--d", "3")
    assert code == 2 and "a+c=b+d" in err


def test_missing_params_exit_2(capsys):
    assert run(capsys, "exact", "--p", "0.2")[0] == 2
    assert run(capsys, "exact", "--p", "0.2", "--r", "0.1", "--a", "1")[0] == 2
    assert run(capsys, "bogus")[0] == 2


def test_out_of_range_param_exit(capsys):
    code, _, err = run(capsys, "exact", "--p", "1.5", "--r", "0.2")
    assert code in (2, 3) and err


def test_paths_regime_exit_3(capsys):
    code, _, err = run(capsys, "oracle", "paths", "--p", "0.8", "--r", "0.6", "--t", "2")
    assert code == 3 and err


@pytest.mark.parametrize("method", ["walk", "series", "paths"])
def test_oracles_agree_with_exact(capsys, method):
    args = ["--p", "1/5", "--r", "1/3", "--i", "-3..3", "--t", "0..4", "--backend", "rational"]
    _, ref, _ = run(capsys, "exact", *args)
    _, out, _ = run(capsys, "oracle", method, *args)
    strip = lambda text: [line.rsplit(",", 1)[1] for line in text.splitlines()[1:]]
    assert strip(out) == strip(ref)


def test_sample_reproducible(capsys, tmp_path):
    args = ["sample", "--p", "0.2", "--r", "0.4", "--i", "1", "--t", "3", "--samples", "20000"]
    a = run(capsys, "--seed", "7", "--threads", "1", *args)[1]
    b = run(capsys, *args, "--seed", "7", "--threads", "3")[1]
    c = run(capsys, *args, "--seed", "8")[1]
    assert a == b and a != c
    row = next(csv.DictReader(io.StringIO(a)))
    assert abs(float(row["estimate"]) - float(row["c8"])) <= 5 * float(row["std_error"])

    traj = tmp_path / "traj.csv"
    assert main(args + ["--trajectory", str(traj)]) == 0
    lines = traj.read_text().splitlines()
    assert lines[0] == "t,i,state" and len(lines) == 1 + 4 * 12


def test_sample_degenerate_init(capsys):
    code, _, err = run(capsys, "sample", "--p", "0.2", "--r", "0.4", "--init", "ones",
                       "--samples", "100")
    assert code == 3 and err
    assert run(capsys, "sample", "--p", "0.2", "--r", "0.4", "--init", "wat")[0] == 2


def test_enumerate_json(capsys, tmp_path):
    out_file = tmp_path / "z.json"
    code, _, _ = run(capsys, "enumerate", "--lattice", "kbar", "--n", "2", "--a", "1",
                     "--b", "2", "--c", "3", "--d", "2", "--output", str(out_file))
    data = json.loads(out_file.read_text())
    assert code == 0 and data["Z"] == str(16 * 4 ** 3) and data["match"] is True
    code, out, _ = run(capsys, "enumerate", "--lattice", "kbar", "--n", "2", "--bc", "fixed:0110")
    assert json.loads(out)["Z"] == "8"
    code, out, _ = run(capsys, "enumerate", "--lattice", "k", "--n", "1", "--bc", "half:1/3",
                       "--format", "csv")
    assert out.startswith("lattice,N,bc,Z")


def test_pca_json(capsys):
    code, out, _ = run(capsys, "pca", "--kernel", "a8", "--p", "0.3", "--r", "0.6")
    data = json.loads(out)
    assert code == 0 and data["solved"] and data["D"] == [[0.5, 0.5], [0.5, 0.5]]
    code, out, _ = run(capsys, "pca", "--kernel", "a6", "--p", "0.4", "--q", "0.2")
    assert json.loads(out)["residual"] <= 1e-12


def test_asymp_csv(capsys):
    code, out, _ = run(capsys, "asymp", "--p", "0.2", "0.3", "--r", "0.4", "--t-max", "60")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2 and rows[0]["lambda"] == "0.6"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "eightvertex", "exact", "--p", "0.5",
                          "--r", "0.5", "--t", "2", "--i", "0"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.splitlines()[0] == "i,t,c8"
