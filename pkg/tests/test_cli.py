from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ssh_transfer import cli
from ssh_transfer.cli import PRESETS, main


def _run(args, tmp_path, capsys):
    code = main(list(args) + ["--output-dir", str(tmp_path), "-q"])
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv(path):
    lines = path.read_text().splitlines()
    header = lines[0]
    cols = lines[1].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
    return header, cols, data


def test_list_presets(capsys):
    assert main(["--list-presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig1", "fig2", "fig4b", "fig4c", "fig5", "fig6", "fig7", "fig8", "fig9", "tableI"):
        assert name in out
    assert set(PRESETS) == {"fig1", "fig2", "fig4b", "fig4c", "fig5", "fig6", "fig7", "fig8", "fig9", "tableI"}
    assert main(["transfer", "--list-presets"]) == 0


def test_transfer_fig1(tmp_path, capsys):
    code, out, _ = _run(["transfer", "--preset", "fig1"], tmp_path, capsys)
    assert code == 0
    p = float(out.strip().split("=")[1])
    assert out.startswith("transfer_probability=") and p >= 0.999
    header, cols, data = _csv(tmp_path / "transfer_fig1.csv")
    assert header.startswith("# ssh-transfer") and "master_seed=" in header and '"schedule": "polynomial"' in header
    assert cols == ["t", "p_A1", "p_Alast", "norm"]
    assert data[0, 1] == 1.0 and data[-1, 2] >= 0.999
    np.testing.assert_allclose(data[:, 3], 1.0, atol=1e-8)


def test_transfer_no_drive(tmp_path, capsys):
    code, out, _ = _run(["transfer", "--preset", "fig1", "--no-drive"], tmp_path, capsys)
    assert code == 0 and float(out.split("=")[1]) < 0.01


def test_transfer_fig4c(tmp_path, capsys):
    code, out, _ = _run(["transfer", "--preset", "fig4c"], tmp_path, capsys)
    assert code == 0 and float(out.split("=")[1]) >= 0.999


def test_drive_fig2(tmp_path, capsys):
    code, _, _ = _run(["drive", "--preset", "fig2"], tmp_path, capsys)
    assert code == 0
    _, cols, data = _csv(tmp_path / "drive_fig2.csv")
    assert cols == ["t"] + [f"rho_{n}" for n in range(1, 10)]
    assert np.all(data[0, 1:] == 0) and np.all(data[-1, 1:] == 0)


def test_drive_three_site(tmp_path, capsys):
    code, _, _ = _run(["drive", "--chain", "single", "--sites", "3", "--schedule", "sinusoidal"], tmp_path, capsys)
    assert code == 0
    _, cols, data = _csv(tmp_path / "drive_single_sinusoidal.csv")
    assert cols == ["t", "rho_1"]
    np.testing.assert_allclose(data[:, 1], -math.pi / 4, atol=1e-10)


def test_drive_fig4b_half_time_row(tmp_path, capsys):
    code, _, _ = _run(["drive", "--preset", "fig4b"], tmp_path, capsys)
    assert code == 0
    _, _, data = _csv(tmp_path / "drive_fig4b.csv")
    row = data[data[:, 0] == 20.0]
    assert row.shape == (1, 10) and np.all(row[0, 1:] == 0)


def test_sweep_table1(tmp_path, capsys):
    code, out, _ = _run(["sweep", "--preset", "tableI"], tmp_path, capsys)
    assert code == 0
    _, cols, data = _csv(tmp_path / "nnn_single_none_simplification_index.csv")
    assert cols == ["simplification_index", "mean", "std", "stderr", "n"]
    np.testing.assert_allclose(data[:4, 1], [0.12, 0.88, 0.87, 0.99], atol=0.01)
    payload = json.loads((tmp_path / "nnn_single_none_simplification_index.json").read_text())
    assert payload["provenance"]["master_seed"] == cli.DEFAULTS["seed"]
    assert len(payload["stats"]) == 5


def test_sweep_fig9_trend_flag(tmp_path, capsys):
    code, out, _ = _run(["sweep", "--preset", "fig9", "--realizations", "200"], tmp_path, capsys)
    assert code == 0
    assert "monotone_increasing=true" in out and "endpoint_improvement=true" in out
    assert (tmp_path / "nnn_single_correlated_gamma.csv").exists()


def test_ensemble_fig5_reports_fraction(tmp_path, capsys):
    code, out, _ = _run(["ensemble", "--preset", "fig5", "--realizations", "300"], tmp_path, capsys)
    assert code == 0 and "fraction_above_0.95=" in out
    data = json.loads((tmp_path / "nnn_single_drive_bias_ensemble.json").read_text())
    assert sum(data["histogram"]["counts"]) == 300 and len(data["records"]) == 300
    assert 0 <= data["fraction_above_0.95"] <= 1
    hist = (tmp_path / "nnn_single_drive_bias_ensemble_histogram.csv").read_text().splitlines()
    assert hist[0].startswith("# ") and hist[1] == "bin_lo,bin_hi,count" and len(hist) == 102


def test_compare(tmp_path, capsys):
    code, out, _ = _run(
        ["compare", "--preset", "fig7", "--realizations", "20", "--baseline-realizations", "10"], tmp_path, capsys
    )
    assert code == 0 and "paired_mean_difference=" in out and "n_paired=10" in out
    lines = (tmp_path / "nnn_single_diagonal_compare.csv").read_text().splitlines()
    assert lines[1] == "protocol,mean,std,stderr,n" and lines[3].startswith("adiabatic_pump,")


def test_outputs_are_bit_stable(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(["ensemble", "--preset", "fig8", "--realizations", "40"], d, capsys)[0] == 0
    name = "nnn_single_offdiagonal_ensemble.json"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    assert b"\r\n" not in (a / name).read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("chain: single\nsites: 3\nschedule: sinusoidal\nT: 4.0\npoints: 11\n")
    code, _, _ = _run(["drive", "--config", str(cfg), "--T", "2"], tmp_path, capsys)
    assert code == 0
    header, _, data = _csv(tmp_path / "drive_single_sinusoidal.csv")
    assert data.shape == (11, 2) and data[-1, 0] == 2.0
    np.testing.assert_allclose(data[:, 1], -math.pi / 4, atol=1e-10)
    assert '"T": 2.0' in header


@pytest.mark.parametrize(
    "content",
    ["colour: red\n", "alpha: [1, 2\n", "- a\n- b\n", "sites: {a: 1}\n", "sites: 4\n", "schedule: stirap\n"],
)
def test_config_errors_exit_2(tmp_path, capsys, content):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(content)
    code, _, err = _run(["transfer", "--config", str(cfg)], tmp_path, capsys)
    assert code == 2 and "config error" in err


def test_bad_flags_exit_2(tmp_path, capsys):
    assert _run(["transfer", "--preset", "fig99"], tmp_path, capsys)[0] == 2
    assert _run(["transfer", "--sites", "4"], tmp_path, capsys)[0] == 2
    assert _run(["ensemble", "--schedule", "sinusoidal", "--sites", "3"], tmp_path, capsys)[0] == 2
    assert _run(["sweep", "--realizations", "2"], tmp_path, capsys)[0] == 2
    assert _run(["transfer", "--simplification", "9"], tmp_path, capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["transfer", "--disorder", "plaid"])
    assert info.value.code == 2


def test_numerical_failure_exit_3(tmp_path, capsys, monkeypatch):
    from ssh_transfer.dynamics import IntegratorError

    def boom(*a, **k):
        raise IntegratorError("norm drift")

    monkeypatch.setattr(cli, "propagate", boom)
    code, _, err = _run(["transfer", "--preset", "fig1"], tmp_path, capsys)
    assert code == 3 and "numerical failure" in err


def test_env_var_sets_default_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["drive", "--preset", "fig2", "--points", "5", "-q"]) == 0
    capsys.readouterr()
    assert (tmp_path / "env" / "drive_fig2.csv").exists()


def test_help_lists_config_keys(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for key in ("realizations", "baseline_T", "output_dir", "gamma"):
        assert key in out


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "ssh_transfer", "drive", "--preset", "fig2", "--points", "3", "--output-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and "bonds=9" in r.stdout
