import struct

import numpy as np
import pytest

from ymflow import flow as fl
from ymflow import forms as F
from ymflow import io
from ymflow.lattice import Lattice
from ymflow.lie import get_algebra


@pytest.mark.parametrize("bc,group,degree", [("periodic", "su2", 1), ("neumann", "u1", 2), ("dirichlet", "su2", 0)])
def test_snapshot_round_trip(tmp_path, bc, group, degree):
    lat = Lattice((6, 5, 4), (1.0, 2.0, 3.0), bc)
    w = F.random_form(lat, get_algebra(group), degree, 3)
    path = tmp_path / "w.ymh"
    io.write_snapshot(path, w, 0.125)
    back, t = io.read_snapshot(path)
    assert t == 0.125
    assert np.array_equal(back.data, w.data)
    assert back.lattice == lat and back.degree == degree and back.algebra.name == group
    io.write_snapshot(tmp_path / "again.ymh", back, t)
    assert (tmp_path / "again.ymh").read_bytes() == path.read_bytes()


def test_snapshot_header_layout():
    lat = Lattice.cube(4, "neumann")
    w = F.random_form(lat, get_algebra("su2"), 1, 0)
    buf = io.snapshot_bytes(w, 2.5)
    magic, version, g, b, deg, n1, n2, n3 = struct.unpack_from("<4sIBBB3I", buf)
    assert (magic, version, g, b, deg, n1) == (b"YMH1", 1, 0, 1, 1, 4)
    assert len(buf) == io.HEADER.size + 9 * 64 * 8
    # first payload value is component 0, algebra coordinate 0, site (0, 0, 0)
    assert struct.unpack_from("<d", buf, io.HEADER.size)[0] == w.data[0, 0, 0, 0, 0]


def test_snapshot_rejects_corruption():
    lat = Lattice.cube(4, "periodic")
    buf = io.snapshot_bytes(F.random_form(lat, get_algebra("su2"), 1, 0), 0.0)
    with pytest.raises(io.FormatError):
        io.parse_snapshot(b"XXXX" + buf[4:])
    with pytest.raises(io.FormatError):
        io.parse_snapshot(buf[:-8])
    with pytest.raises(io.FormatError):
        io.parse_snapshot(buf[:10])
    bad_version = buf[:4] + struct.pack("<I", 9) + buf[8:]
    with pytest.raises(io.FormatError):
        io.parse_snapshot(bad_version)


def test_csv_full_precision(tmp_path):
    t = np.array([0.0, 1 / 3, 2 / 3])
    col = np.array([np.pi, np.e, 1e-300])
    io.write_csv(tmp_path / "s.csv", t, {"x": col})
    back = io.read_csv(tmp_path / "s.csv")
    assert np.array_equal(back["t"], t) and np.array_equal(back["x"], col)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t,x"


def test_config_grammar():
    cfg = io.parse_config("n = 8  # comment\nbc = neumann\ndealias = false\ndiagnostics = energy, kato\n",
                          {"seed": "4"})
    assert cfg.n == 8 and cfg.bc == "neumann" and cfg.dealias is False and cfg.seed == 4
    assert cfg.diagnostics == ("energy", "kato")
    assert io.parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", ["colour = red", "n = 8\nn = 9", "n = eight", "bc = robin", "T = -1",
                                  "just words", "dealias = maybe", "a = 1.0"])
def test_config_errors(text):
    with pytest.raises(io.ConfigError):
        io.parse_config(text)


def test_trajectory_round_trip(tmp_path):
    lat = Lattice.cube(6, "periodic")
    C0 = fl.smooth_initial_data(lat, get_algebra("su2"), 1.0, 0, band=1)
    traj = fl.run_flow(C0, fl.TimeMesh(0.05, 3), a=0.75)
    io.write_trajectory(tmp_path / "tr", traj, io.RunConfig())
    back = io.read_trajectory(tmp_path / "tr")
    assert back.kind == traj.kind and back.a == 0.75
    assert np.array_equal(back.times, traj.times)
    assert all(np.array_equal(x, y) for x, y in zip(back.fields, traj.fields))
    assert np.array_equal(back.series["B_L2"], traj.series["B_L2"])
    assert io.load_config(tmp_path / "tr" / "run.cfg") == io.RunConfig()
