import json

import numpy as np
import pytest

from csk import greens
from csk.cli import main
from csk.grid import GridFunction
from csk.symbols import ProblemParams


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 5
    out[inside] = np.exp(-1 / (1 - (t[inside] / 5) ** 2))
    return out


def test_constants_reports_nulls_with_note(capsys):
    assert main(["constants", "--N", "3", "--gamma", "0.5", "--p", "2.5"]) == 0
    out, err = capsys.readouterr()
    doc = json.loads(out)
    assert doc["data"]["A"] is None and doc["data"]["Lambda"] == pytest.approx(2 / np.pi)
    assert "note" in err


def test_invalid_input_exits_2(capsys):
    assert main(["constants", "--N", "1", "--gamma", "0.5"]) == 2
    assert "params.N" in capsys.readouterr().err
    assert main(["ball", "--N", "3", "--gamma", "0.5", "--p", "1.8"]) == 2


def test_numerical_failure_exits_3(capsys):
    code = main(["ball", "--N", "3", "--gamma", "0.5", "--p", "1.8", "--lam", "5",
                 "--n-r", "16", "--n-ang", "8"])
    assert code == 3
    assert "NoConvergence" in capsys.readouterr().err


def test_pole_ladder(capsys):
    assert main(["poles", "--N", "3", "--gamma", "0.5", "--count", "4"]) == 0
    entries = json.loads(capsys.readouterr().out)["data"]["entries"]
    assert [e["sigma"] for e in entries] == pytest.approx([1, 3, 5, 7], abs=1e-10)


def test_solve_mode_csv_round_trip(tmp_path):
    h = GridFunction.from_function(_bump, -12, 12, 481)
    src = tmp_path / "h.csv"
    h.to_csv(src, "h")
    out = tmp_path / "w.csv"
    args = ["solve-mode", "--N", "3", "--gamma", "0.5", "--p", "2.0", "--input", str(src), "--out", str(out)]
    assert main(args) == 0
    header = out.read_text().splitlines()[0]
    assert header.startswith("# csk command=solve-mode") and "input_sha256=" in header
    w = GridFunction.from_csv(out)
    ref = greens.solve_mode(greens.green_series(ProblemParams(3, 0.5, 2.0), 0, 0.0), h)
    assert w.decay_plus == ref.decay_plus and w.decay_minus == ref.decay_minus
    assert np.array_equal(w.values, ref.values)
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# kernel run\nN = 3\ngamma = 0.5\np = 1.8\nn = 11\nt-min = 0.1\nt-max = 1.1\n")
    assert main(["kernel", "--config", str(cfg), "--n", "6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "n=6" in lines[0] and len(lines) == 2 + 6


def test_config_sweep_writes_one_file_per_value(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("N=3\ngamma=0.5\np=1.6,1.8\n")
    assert main(["constants", "--config", str(cfg), "--out", str(tmp_path / "c.json")]) == 0
    names = sorted(f.name for f in tmp_path.glob("c_*.json"))
    assert names == ["c_p=1.6.json", "c_p=1.8.json"]


def test_bad_config_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("N=3\ngamma=0.5\nflavour=vanilla\n")
    assert main(["constants", "--config", str(cfg)]) == 2


def test_ball_writes_manifest(tmp_path):
    out = tmp_path / "ball.csv"
    assert main(["ball", "--N", "3", "--gamma", "0.5", "--p", "1.8", "--lam", "0.1",
                 "--n-r", "16", "--n-ang", "8", "--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "ball.csv.manifest.json").read_text())
    assert manifest["data"]["iterations"] > 0 and "bound" in manifest["data"]


def test_verify_only(capsys):
    assert main(["verify", "--only", "1,12"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]  1" in out and "2/2 criteria passed" in out
