import csv
import json

import pytest

from cavsignal import __version__
from cavsignal.channel2 import compute_second_order
from cavsignal.cli import main
from cavsignal.field import CavityConfig, DetectorParams

FIG1 = {
    "L": 10,
    "N_C": 100,
    "detector_A": {"x": 4, "n": 4, "lambda": 0.01},
    "detector_B": {"x": 6, "n": 4, "lambda": 0.01},
    "T": 3.0,
}


def write_config(tmp_path, extra=None, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps({**FIG1, **(extra or {})}, indent=2))
    return str(path)


def rows(path):
    with open(path) as fh:
        return [r for r in csv.reader(fh) if r and not r[0].startswith("#")]


def test_coeffs_zero_time(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["coeffs", "--config", write_config(tmp_path, {"T": 0}), "--out", str(out)]) == 0
    body = rows(out)[1:]
    assert [r[0] for r in body][:6] == ["P2", "Q2", "R2", "S2", "C2", "D2"]
    assert all(float(x) == 0 for r in body for x in r[1:])


def test_coeffs_noise_row_is_bit_identical(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["coeffs", "--config", write_config(tmp_path), "--out", str(out)]) == 0
    p2 = compute_second_order(CavityConfig(10, 100), DetectorParams(4, 4), DetectorParams(6, 4), 3.0).P2
    row = rows(out)[1]
    assert row[0] == "P2" and float(row[1]) == p2


def test_header_comment_carries_snapshot(tmp_path):
    out = tmp_path / "c.csv"
    main(["coeffs", "--config", write_config(tmp_path), "--set", "T=2.5", "--out", str(out)])
    first = out.read_text().splitlines()[0]
    assert first.startswith(f"# cavsignal {__version__} command=coeffs config=")
    snap = json.loads(first.split("config=", 1)[1])
    assert snap["T"] == 2.5 and snap["L"] == 10


def test_missing_config_is_input_error(tmp_path, capsys):
    assert main(["coeffs", "--config", str(tmp_path / "nope.json")]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["coeffs"]) == 2


def test_invalid_value_reports_line(tmp_path, capsys):
    path = write_config(tmp_path, {"N_C": -3})
    assert main(["coeffs", "--config", path]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    assert main(["coeffs", "--config", write_config(tmp_path, {"colour": 1})]) == 2
    assert "line" in capsys.readouterr().err


def test_envelope_of_synthetic_series(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text("axis,value_re,value_im,value_abs\n1,0.5,0,0.5\n2,0.7,0,0.7\n3,0.2,0,0.2\n")
    out = tmp_path / "e.csv"
    assert main(["envelope", "--series", str(src), "--out", str(out)]) == 0
    assert [float(r[3]) for r in rows(out)[1:]] == [0.7, 0.7, 0.2]
    assert rows(out)[0] == ["axis", "value_re", "value_im", "value_abs"]


def test_fit_of_synthetic_power_law(tmp_path):
    n = range(1, 51)
    lines = ["axis,value_re,value_im,value_abs"] + [f"{k},{k**-3.0!r},0,{k**-3.0!r}" for k in n]
    src = tmp_path / "s.csv"
    src.write_text("\n".join(lines) + "\n")
    out = tmp_path / "f.csv"
    assert main(["fit", "--series", str(src), "--out", str(out)]) == 0
    fit = rows(tmp_path / "f_fit.csv")
    assert fit[0] == ["n_min", "n_max", "slope", "intercept", "r_squared"]
    assert float(fit[1][2]) == pytest.approx(-3.0, abs=1e-12)


def test_lightcone_fit_pipeline(tmp_path):
    extra = {"coefficient": "A4", "cutoffs": {"start": 1, "stop": 200}, "on_lightcone": True,
             "reference": {"T": 3.0, "N_C": 100}, "fit_window": [8, 200]}
    out = tmp_path / "fig.csv"
    assert main(["fit", "--config", write_config(tmp_path, extra), "--out", str(out), "--svg"]) == 0
    series = rows(out)
    assert len(series) == 201
    env = [float(r[3]) for r in series[1:]]
    assert all(a >= b for a, b in zip(env, env[1:]))
    fit = rows(tmp_path / "fig_fit.csv")[1]
    assert float(fit[2]) < 0 and float(fit[4]) > 0.9
    assert (tmp_path / "fig.svg").read_text().lstrip().startswith("<?xml")


def test_oracle_check_exit_codes(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle-check", "--out", str(out)]) == 0
    table = {r[0]: r for r in rows(out)[1:]}
    assert float(table["trace_order_2"][1]) <= 1e-9
    assert all(r[3] == "pass" for r in table.values())
    assert main(["oracle-check", "--tolerance-scale", "0", "--out", str(out)]) == 1


def test_identical_config_gives_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, {"coefficient": "C2+D2*", "times": {"start": 0.1, "stop": 4, "num": 12}})
    outputs = []
    for k in range(2):
        out = tmp_path / f"t{k}.csv"
        assert main(["sweep", "--kind", "time", "--config", cfg, "--out", str(out), "--svg", "--threads", "2"]) == 0
        outputs.append((out.read_bytes(), out.with_suffix(".svg").read_bytes()))
    assert outputs[0] == outputs[1]


def test_cost_guard_exit(tmp_path, capsys):
    cfg = write_config(tmp_path, {"N_C": 5000, "fourth_order": True})
    assert main(["coeffs", "--config", cfg]) == 3
    assert "cost guard" in capsys.readouterr().err


def test_fermi_and_pm_commands(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "f.csv"
    assert main(["fermi", "--config", cfg, "--out", str(out)]) == 0
    got = {r[0]: float(r[1]) for r in rows(out)[1:]}
    assert got["difference"] == pytest.approx(got["p_excited"] - got["p_ground"], abs=1e-18)
    assert main(["pm", "--config", cfg, "--out", str(out)]) == 0
    got = {r[0]: float(r[1]) for r in rows(out)[1:]}
    assert got["p_plus_given_plus"] + got["p_plus_given_minus"] == pytest.approx(1.0, abs=1e-15)
    assert main(["fermi", "--config", cfg, "--set", 'rho_B="plus"']) == 2
