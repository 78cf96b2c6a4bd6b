import json
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_spectral.cli import main
from nonlocal_spectral.io import read_csv


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def test_multipliers_oracle_example(tmp_path):
    code, out = run(["multipliers", "--n", "1", "--beta", "1.0", "--delta", "0.1", "--rmin", "1",
                     "--rmax", "999.0", "--count", "1000", "--oracle"], tmp_path)
    assert code == 0
    rows = read_csv(out / "multipliers.csv")
    assert len(rows["r"]) == 1000 and rows["r"][-1] == 999.0
    assert rows["rel_err"][-1] <= 1e-12


def test_multipliers_classical(tmp_path):
    code, out = run(["multipliers", "--n", "2", "--beta", "4", "--delta", "0.5", "--rmax", "50", "--count", "40"],
                    tmp_path)
    assert code == 0
    rows = read_csv(out / "multipliers.csv")
    assert np.array_equal(rows["m"], -rows["r"] ** 2)


@pytest.mark.parametrize("argv", [
    ["multipliers", "--n", "1", "--beta", "1", "--delta", "0.1", "--count", "0"],
    ["multipliers", "--n", "1", "--beta", "5", "--delta", "0.1", "--count", "3"],
    ["multipliers", "--n", "1", "--beta", "1", "--delta", "-0.1"],
    ["multipliers", "--beta", "1", "--delta", "0.1"],
    ["multipliers", "--n", "1", "--beta", "1", "--delta", "0.1", "--rmin", "5", "--rmax", "1"],
    ["wave-compare", "--preset", "no-such-row"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(tmp_path, argv, capsys):
    code, out = run(argv, tmp_path)
    assert code == 2
    assert not out.exists()
    assert "usage" in capsys.readouterr().err


def test_existing_output_dir_rejected(tmp_path):
    (tmp_path / "out").mkdir()
    code, _ = run(["multipliers", "--n", "1", "--beta", "1", "--delta", "0.1", "--count", "2"], tmp_path)
    assert code == 2


def test_config_file_and_provenance(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 1, "beta": 0.5, "delta": 0.2, "count": 5, "rmax": 10.0}))
    code, out = run(["multipliers", "--config", str(cfg), "--count", "7"], tmp_path)
    assert code == 0
    echo = json.loads((out / "config.json").read_text())
    assert echo["count"] == 7 and echo["beta"] == 0.5
    assert (out / "config.source.json").read_text() == cfg.read_text()
    assert (out / "VERSION").read_text().startswith("nonlocal_spectral")
    assert len(read_csv(out / "multipliers.csv")["r"]) == 7


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 1, "beta": 0.5, "delta": 0.2, "speed": 3}))
    code, _ = run(["multipliers", "--config", str(cfg)], tmp_path)
    assert code == 2


def test_identical_configs_give_identical_csv(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "beta": 1.5, "delta": 0.3, "count": 50, "rmax": 300.0}))
    run(["multipliers", "--config", str(cfg)], tmp_path, "a")
    run(["multipliers", "--config", str(cfg)], tmp_path, "b")
    assert (tmp_path / "a" / "multipliers.csv").read_bytes() == (tmp_path / "b" / "multipliers.csv").read_bytes()


def test_table_bench_smoke(tmp_path):
    code, out = run(["table-bench", "--n", "1", "--beta", "0.5", "--delta", "1.0", "--K", "10", "--N", "60",
                     "--M", "400", "--probe-count", "200"], tmp_path)
    assert code == 0
    summary = read_csv(out / "summary.csv")
    assert summary["max_error"][0] <= 1e-8
    assert any(p.suffix == ".nlmt" for p in out.iterdir())


def test_fd_spectrum_fig7_left(tmp_path):
    code, out = run(["fd-spectrum", "--N", "100", "--r", "3", "--beta", "0.3333333333", "--L", "1"], tmp_path)
    assert code == 0
    rows = read_csv(out / "eigencurve.csv")
    assert len(rows["k"]) == 101
    assert rows["lambda_fd"][0] == pytest.approx(0.0, abs=1e-6)


def test_fd_spectrum_fixed_delta_preset(tmp_path):
    code, out = run(["fd-spectrum", "--preset", "fig7-right"], tmp_path)
    assert code == 0
    assert sorted(p.name for p in out.glob("eigencurve_r*.csv")) == [
        "eigencurve_r216.csv", "eigencurve_r36.csv", "eigencurve_r6.csv"]


def test_oracle_command(tmp_path):
    code, out = run(["oracle", "--n", "3", "--beta", "2.5", "--delta", "1.0", "--r", "1", "50"], tmp_path)
    assert code == 0
    assert np.all(read_csv(out / "oracle.csv")["rel_err"] <= 1e-12)


def test_oracle_rejects_nonintegrable(tmp_path):
    code, _ = run(["oracle", "--n", "1", "--beta", "3.5", "--delta", "1.0"], tmp_path)
    assert code == 2


def test_heat_single_panel(tmp_path):
    code, out = run(["heat", "--preset", "fig5", "--panels", "single", "--beta", "1", "--delta", "1",
                     "--points", "32"], tmp_path)
    assert code == 0
    assert (out / "summary.csv").exists()


def test_brusselator_numerical_failure_exit_1(tmp_path):
    code, out = run(["brusselator", "--beta", "3", "--delta", "0.5", "--N", "256", "--t-end", "2",
                     "--cfl", "40"], tmp_path)
    assert code == 1
    assert not out.exists()


def test_brusselator_short_run(tmp_path):
    code, out = run(["brusselator", "--preset", "fig6-beta2", "--N", "64", "--t-end", "0.5",
                     "--snapshots", "3"], tmp_path)
    assert code == 0
    summary = read_csv(out / "summary.csv")
    assert summary["t_end"][0] == 0.5


@pytest.mark.slow
def test_wave_compare_table3_row1(tmp_path):
    code, out = run(["wave-compare", "--preset", "table3-row1"], tmp_path)
    assert code == 0
    rows = read_csv(out / "summary.csv")
    err = dict(zip(rows["method"], rows["error"]))
    assert err["spectral"] <= 1e-5
    assert 0.23 <= err["fd"] <= 0.93


def test_validate_subset():
    assert main(["validate", "--only", "1"]) == 0
    assert main(["validate", "--only", "x"]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nonlocal_spectral.cli", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "nonlocal" in proc.stdout
