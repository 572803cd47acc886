import json
import math
import os

import numpy as np
import pytest

from chaoscope.cli import (
    Config,
    ConfigError,
    check_bounds_cmd,
    emit_plots,
    fit_slope,
    format_row,
    main,
    read_results,
    validate,
    write_results,
)


def write_cfg(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_config_parsing(tmp_path):
    path = write_cfg(
        tmp_path,
        "mode = exact-run\n# comment\nS = 2\nf0 = 0.7, 0.3  # inline\nN_list = 4, 6\n",
    )
    cfg = Config.load(path)
    assert cfg.get("mode") == "exact-run"
    assert cfg.get_int("S") == 2
    assert cfg.get_list("f0", float) == [0.7, 0.3]
    assert cfg.get_list("N_list", int) == [4, 6]


def test_config_bad_line(tmp_path):
    path = write_cfg(tmp_path, "mode exact-run\n")
    with pytest.raises(ConfigError):
        Config.load(path)


def test_validate_rejects_inconsistent(tmp_path):
    cfg = Config(raw={"mode": "exact-run", "S": "2", "N": "4", "j_max": "6"})
    with pytest.raises(ConfigError, match="j_max"):
        validate(cfg)
    cfg = Config(raw={"mode": "exact-run", "S": "2", "N": "4", "j_max": "2", "f0": "0.9, 0.3"})
    with pytest.raises(ConfigError, match="sum"):
        validate(cfg)
    with pytest.raises(ConfigError, match="mode"):
        validate(Config(raw={"mode": "nonsense"}))


def test_fit_slope_synthetic():
    Ns = np.array([8.0, 16.0, 32.0, 64.0])
    slope, ci = fit_slope(np.log(Ns), np.log(1.0 / Ns))
    assert slope == pytest.approx(-1.0, abs=1e-12)
    assert ci < 1e-10
    slope2, _ = fit_slope(np.log(Ns), np.log(1.0 / Ns**2))
    assert slope2 == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_slope([1.0, 2.0], [1.0, 2.0])


def test_results_roundtrip(tmp_path):
    rows = [format_row(8, 1, 0.5, "E_norm", 0.123456789, 0.001), format_row(16, 2, 1.0, "E_norm", 1e-9)]
    path = tmp_path / "results.csv"
    write_results(path, rows)
    back = read_results(path)
    assert back[0]["N"] == 8 and back[0]["stderr"] == 0.001
    assert back[1]["value"] == 1e-9 and back[1]["stderr"] is None


def test_exact_run_end_to_end(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "mode = exact-run\nS = 2\npreset = uniform\nbeta = 1.0\nf0 = 0.7, 0.3\n"
        "N_list = 4, 6, 8\nj_max = 2\ndt = 0.02\nt_checkpoints = 0.5\n",
    )
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["exact-run", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["exact-run", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
    assert (out1 / "config.copy").exists()
    report = json.loads((out1 / "report.json").read_text())
    assert all(c["main_theorem_pass"] for c in report["checks"])
    svgs = list((out1 / "plots").glob("*.svg"))
    assert svgs


def test_verify_hierarchy_cli(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "mode = hierarchy-verify\nS = 2\npreset = uniform\nf0 = 0.7, 0.3\nN = 4\n"
        "dt = 0.01\nt_checkpoints = 0.5\ntolerance = 1e-8\n",
    )
    out = tmp_path / "vh"
    assert main(["verify-hierarchy", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] and report["max_discrepancy"] <= 1e-8


def test_mode_command_mismatch(tmp_path):
    cfg = write_cfg(tmp_path, "mode = mc-run\n")
    rc = main(["exact-run", "--config", cfg, "--out", str(tmp_path / "x")])
    assert rc == 2


def test_malformed_config_nonzero_exit(tmp_path):
    cfg = write_cfg(tmp_path, "mode = exact-run\nS = 2\nN = 4\nj_max = 9\n")
    rc = main(["exact-run", "--config", cfg, "--out", str(tmp_path / "y")])
    assert rc == 2


def test_check_bounds_cmd(tmp_path):
    rows = [
        format_row(8, 1, 0.0, "E_norm", 0.0),
        format_row(8, 1, 1.0, "E_norm", 0.02),
        format_row(8, 2, 1.0, "chaos_distance", 0.05),
    ]
    res = tmp_path / "results.csv"
    write_results(res, rows)
    rc = check_bounds_cmd(str(res), str(tmp_path / "report.json"), normV=1.5)
    assert rc == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert any(block["kind"] == "main" for block in data)


def test_plot_deterministic(tmp_path):
    rows = [format_row(N, 1, 1.0, "E_norm", 1.0 / N) for N in (8, 16, 32)]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    d1.mkdir(), d2.mkdir()
    emit_plots(rows, str(d1))
    emit_plots(rows, str(d2))
    f1 = (d1 / "plots" / "E_norm_j1.svg").read_bytes()
    f2 = (d2 / "plots" / "E_norm_j1.svg").read_bytes()
    assert f1 == f2
