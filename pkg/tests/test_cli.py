import csv
import io
import json

import numpy as np
import pytest

from gqd import cli
from gqd.expansion import EreParams
from gqd.fitting import synth_phase_shifts


def _run(capsys, *argv):
    code = cli.run(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_verify_optical_lo_unit(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "optical", "--preset", "lo-unit")
    assert code == cli.EXIT_OK
    assert all(r[-1] == "1" for r in _rows(out)[1:])


def test_unknown_subcommand(capsys):
    code, _, err = _run(capsys, "frobnicate")
    assert code == cli.EXIT_CONFIG
    assert "usage" in err


def test_phase_shifts_threshold(capsys):
    code, out, _ = _run(capsys, "phase-shifts", "--a", "1", "--m", "1", "--p", "0")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["p [natural]", "delta [rad]", "pcotdelta [natural]"]
    assert float(rows[1][2]) == -1.0


def test_physical_units(capsys):
    code, out, _ = _run(capsys, "phase-shifts", "--units", "physical", "--a", "-23.7", "--p", "0")
    assert code == 0
    rows = _rows(out)
    assert rows[0][2] == "pcotdelta [1/fm]"
    assert abs(float(rows[1][2]) - 1 / 23.7) < 1e-14


def test_output_deterministic(tmp_path):
    args = ["phase-shifts", "--a", "2", "--shape", "0.5", "--n", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run(args + ["--output", str(a)]) == 0
    assert cli.run(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_json_format(capsys):
    code, out, _ = _run(capsys, "phase-shifts", "--a", "1", "--p", "0.1", "0.2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data["rows"]) == 2 and len(data["columns"]) == 3


def test_headers_carry_units(capsys):
    _, out, _ = _run(capsys, "tmatrix", "--p", "0.1", "0.2", "--z-re", "-0.5")
    assert all("[" in h and h.endswith("]") for h in _rows(out)[0])


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scattering length\na = 2\np = 0\n", encoding="utf-8")
    _, out, _ = _run(capsys, "phase-shifts", "--config", str(cfg))
    assert float(_rows(out)[1][2]) == -0.5
    _, out, _ = _run(capsys, "phase-shifts", "--config", str(cfg), "--a", "4")
    assert float(_rows(out)[1][2]) == -0.25


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n", encoding="utf-8")
    code, _, err = _run(capsys, "phase-shifts", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG and "colour" in err


def test_missing_required_option(capsys):
    code, _, _ = _run(capsys, "phase-shifts", "--p", "0.1")
    assert code == cli.EXIT_CONFIG


def test_fit_from_csv(tmp_path, capsys):
    data = synth_phase_shifts(EreParams(-1.8, (0.7,)), np.linspace(0.05, 0.5, 10))
    path = tmp_path / "data.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p [natural]", "delta [rad]", "sigma [rad]"])
        w.writerows(zip(data.p, data.delta, data.sigma))
    code, out, _ = _run(capsys, "fit", "--input", str(path))
    rows = {r[0]: float(r[1]) for r in _rows(out)[1:]}
    assert code == 0
    assert abs(rows["a"] + 1.8) < 1e-8 and abs(rows["r0"] - 0.7) < 1e-8


def test_model_and_probe_run(capsys):
    code, out, _ = _run(capsys, "model", "--alpha", "0.75", "--z", "-0.5")
    assert code == 0 and "b1" in out
    code, out, _ = _run(capsys, "probe", "--C0", "-25.132741228718345", "--p", "0.5", "--theta", "0.7")
    assert code == 0 and len(_rows(out)) == 2


@pytest.mark.slow
def test_evolve_runs(capsys):
    code, out, _ = _run(capsys, "evolve", "--t-max", "4", "--n-t", "5")
    rows = _rows(out)
    assert code == 0 and float(rows[1][3]) == pytest.approx(1.0, abs=1e-10)
