import os

import pytest

from ymflow.cli import main


def write(path, text):
    path.write_text(text)
    return str(path)


BASE = "n = 6\nT = 0.02\nsteps = 6\ngrading = 1\ndata = smooth\namplitude = 1.0\nband = 1\ndealias = false\n"


def test_zero_data_run(tmp_path):
    cfg = write(tmp_path / "z.cfg", "n = 6\ndata = zero\nT = 0.01\nsteps = 3\n")
    assert main(["flow", "run", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "series.csv").exists()
    assert (tmp_path / "out" / "series.png").exists()
    assert (tmp_path / "out" / "trajectory" / "node_00003.ymh").exists()


def test_usage_and_config_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["flow", "run", "--bogus"])
    assert err.value.code == 2
    cfg = write(tmp_path / "bad.cfg", "n = 6\nwidth = 3\n")
    assert main(["flow", "run", "--config", cfg]) == 2
    assert main(["flow", "run", "--config", str(tmp_path / "missing.cfg")]) == 2
    good = write(tmp_path / "g.cfg", BASE + "diagnostics = nonsense\n")
    assert main(["flow", "run", "--config", good, "--out", str(tmp_path / "o")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_repeated_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path / "r.cfg", BASE.replace("data = smooth", "data = rough"))
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["flow", "run", "--config", cfg, "--out", str(out)]) == 0
        outs.append(out)
    for name in ("series.csv", "trajectory/node_00006.ymh", "trajectory/manifest.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_run_with_diagnostics_and_diag_command(tmp_path):
    cfg = write(tmp_path / "d.cfg", BASE + "diagnostics = energy, inequalities, gfs, kato, action, order1, order2\n")
    out = tmp_path / "o"
    assert main(["flow", "run", "--config", cfg, "--out", str(out)]) == 0
    for name in ("energy.csv", "energy.png", "gfs.png", "checks.csv"):
        assert (out / name).exists()
    assert main(["diag", "cauchy", "--traj", str(out / "trajectory"), "--out", str(tmp_path / "dg")]) == 0
    assert main(["diag", "nope", "--traj", str(out / "trajectory")]) == 2
    assert main(["diag", "energy", "--traj", str(tmp_path / "missing")]) == 2


def test_direct_run_rejects_augmented_only_diagnostic(tmp_path):
    cfg = write(tmp_path / "d.cfg", BASE + "kind = direct\ndiagnostics = kato\n")
    assert main(["flow", "run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_reconstruct(tmp_path):
    cfg = write(tmp_path / "r.cfg", BASE.replace("n = 6", "n = 16").replace("band = 1", "band = 1\nbc = neumann"))
    assert main(["flow", "reconstruct", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "reconstruct.png").exists()


def test_oracle_and_battery_commands(tmp_path):
    assert main(["oracle", "abelian", "--n", "8", "--T", "0.02", "--h", "0.005", "--out", str(tmp_path / "a")]) == 0
    assert main(["oracle", "inequalities", "--trials", "3", "--out", str(tmp_path / "i")]) == 0
    assert main(["gauge-group", "battery", "--n", "8", "--bc", "neumann", "--trials", "2",
                 "--out", str(tmp_path / "g")]) == 0
    # products of Dirichlet-parity fields alias, so the identity battery fails there
    assert main(["gauge-group", "battery", "--n", "8", "--bc", "dirichlet", "--trials", "1",
                 "--out", str(tmp_path / "gd")]) == 1
    assert os.path.exists(tmp_path / "gd" / "checks.csv")


def test_bisect(tmp_path):
    cfg = write(tmp_path / "b.cfg", BASE + "kind = direct\n")
    assert main(["flow", "bisect", "--config", cfg, "--set", "steps=1", "--lo", "0.1", "--hi", "0.5", "--iters", "2",
                 "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "bisect.csv").exists()


def test_report_only_diagnostics(tmp_path):
    cfg = write(tmp_path / "r.cfg", BASE + "diagnostics = order3, gauge_family, exponents\n")
    out = tmp_path / "o"
    assert main(["flow", "run", "--config", cfg, "--out", str(out)]) == 0
    for name in ("order3.csv", "order3.png", "gauge_family.csv"):
        assert (out / name).exists()
