import json

import numpy as np
import pytest

from specdiff.cli import main
from specdiff.core import TimeSeries, write_csv
from specdiff.procgen import replication_seed, simulate_pair, zoo


def _write_model(path, model, n, seed):
    x, _ = simulate_pair(zoo(model), zoo(model), n, n, 0.0, replication_seed(seed, 0))
    write_csv(TimeSeries(x.values, path.stem), path)
    return path


def test_compare_json(tmp_path, capsys):
    a = _write_model(tmp_path / "a.csv", "X1", 300, 1)
    b = _write_model(tmp_path / "b.csv", "X3", 500, 2)
    assert main(["compare", str(a), str(b), "--json", "--epsilon", "0.2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    for key in ("method", "statistic", "p_value", "reject", "alpha", "d1", "d2", "d12",
                "d_squared", "r_squared", "sigma2_h0", "sigma2_alt", "n1", "n2", "swapped"):
        assert key in rep
    assert rep["n1"] == 300 and rep["n2"] == 500 and rep["swapped"] is False
    assert rep["precise"]["method"] == "precise"


def test_compare_same_file_usually_accepts(tmp_path, capsys):
    a = _write_model(tmp_path / "a.csv", "X2", 512, 3)
    assert main(["compare", str(a), str(a), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["reject"] is False


def test_compare_text(tmp_path, capsys):
    a = _write_model(tmp_path / "a.csv", "X1", 64, 4)
    assert main(["compare", str(a), str(a), "--no-center"]) == 0
    assert "statistic:" in capsys.readouterr().out


def test_short_file_exits_2(tmp_path, capsys):
    p = tmp_path / "short.csv"
    p.write_text("1\n2\n3\n")
    ok = _write_model(tmp_path / "ok.csv", "X1", 64, 5)
    assert main(["compare", str(p), str(ok)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "short.csv" in err and err.count("\n") == 1


def test_bad_row_named(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("1\n2\nabc\n" + "4\n" * 10)
    assert main(["compare", str(p), str(p)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_bad_flag_exits_2(capsys):
    assert main(["compare", "a", "b", "--alpha", "3"]) == 2
    assert capsys.readouterr().err.startswith("error:")
    assert main([]) == 2


def test_cluster_two_files(tmp_path, capsys):
    a = _write_model(tmp_path / "A.csv", "X1", 128, 6)
    b = _write_model(tmp_path / "B.csv", "X2", 200, 7)
    mat = tmp_path / "m.csv"
    assert main(["cluster", str(a), str(b), "--matrix-out", str(mat)]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("(A:") and ",B:" in out and out.endswith(");")
    h1 = out[3:out.index(",")]
    assert out == f"(A:{h1},B:{h1});"
    assert mat.read_text().splitlines()[0] == ",A,B"


def test_cluster_duplicate_labels(tmp_path, capsys):
    d1, d2 = tmp_path / "x", tmp_path / "y"
    d1.mkdir()
    d2.mkdir()
    a = _write_model(d1 / "name.csv", "X1", 128, 8)
    b = _write_model(d2 / "name.csv", "X2", 128, 9)
    assert main(["cluster", str(a), str(b), "--format", "json"]) == 0
    tree = json.loads(capsys.readouterr().out)
    assert sorted(c["label"] for c in tree["children"]) == ["name", "name_2"]


def test_cluster_needs_two(tmp_path, capsys):
    a = _write_model(tmp_path / "A.csv", "X1", 64, 1)
    assert main(["cluster", str(a)]) == 2


def test_simulate_and_determinism(tmp_path, monkeypatch):
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert main(["simulate", "--model", "X2", "--n", "100", "--seed", "3", "--out", str(out1)]) == 0
    monkeypatch.setenv("SPECDIFF_SEED", "3")
    assert main(["simulate", "--model", "X2", "--n", "100", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len(out1.read_text().splitlines()) == 101


def test_simulate_pair(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--model", "X1", "--n", "50", "--pair-model", "X3", "--pair-n", "75",
                 "--rho", "0.5", "--seed", "1", "--out", str(a), "--pair-out", str(b),
                 "--param", "theta=0.1"]) == 0
    assert len(b.read_text().splitlines()) == 76


def test_simulate_bad_model(capsys):
    assert main(["simulate", "--model", "X9", "--n", "10"]) == 2
    assert "X9" in capsys.readouterr().err


def test_table1_tiny(tmp_path):
    out = tmp_path / "t.csv"
    args = ["table1", "--seed", "2", "--reps", "2", "--columns", "X1,X4", "--sizes", "32x48",
            "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    rows = json.loads(out.with_suffix(".json").read_text())
    assert len(rows) == 4 and rows[0]["model_pair"] == "X1"
    assert main(args) == 0
    assert out.read_bytes() == first


def test_table1_bad_column(capsys):
    assert main(["table1", "--columns", "X7", "--reps", "1"]) == 2


def test_spectrum(tmp_path, capsys):
    a = _write_model(tmp_path / "a.csv", "X1", 40, 1)
    assert main(["spectrum", str(a), "--grid-n", "16"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "lambda,I" and len(lines) == 1 + 8
    lam, val = map(float, lines[-1].split(","))
    assert lam == pytest.approx(np.pi) and val >= 0
