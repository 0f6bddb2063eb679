"""Snapshots, CSV time series and run configuration files.

Snapshot layout (little endian):

    magic  b"YMH1"
    u32    format version (1)
    u8     group tag (0 = su2, 1 = u1)
    u8     boundary tag (0 = periodic, 1 = neumann, 2 = dirichlet)
    u8     form degree
    u32*3  grid points N1 N2 N3
    f64*3  extents L1 L2 L3
    f64    time
    u32    component count (form components times algebra dimension)
    f64    one row-major N1*N2*N3 array per component, form components outermost,
           algebra coordinates (orthonormal basis) innermost

Configuration files hold one ``key = value`` pair per line; ``#`` starts a
comment.  Unknown keys, duplicate keys and out-of-range values are errors.
"""
from __future__ import annotations

import csv
import os
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

from .forms import FormField
from .lattice import Lattice
from .lie import get_algebra

MAGIC = b"YMH1"
VERSION = 1
HEADER = struct.Struct("<4sIBBB3I3ddI")
GROUP_TAGS = {"su2": 0, "u1": 1}
BC_TAGS = {"periodic": 0, "neumann": 1, "dirichlet": 2}


class FormatError(ValueError):
    """Malformed snapshot file."""


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


# snapshots -------------------------------------------------------------------------


def snapshot_bytes(w: FormField, t: float) -> bytes:
    lat = w.lattice
    ncomp = w.data.shape[0] * w.data.shape[1]
    head = HEADER.pack(MAGIC, VERSION, GROUP_TAGS[w.algebra.name], BC_TAGS[lat.bc], w.degree,
                       *lat.shape, *lat.lengths, float(t), ncomp)
    body = np.ascontiguousarray(w.data, dtype="<f8").tobytes(order="C")
    return head + body


def write_snapshot(path, w: FormField, t: float) -> None:
    with open(path, "wb") as fh:
        fh.write(snapshot_bytes(w, t))


def parse_snapshot(buf: bytes) -> tuple[FormField, float]:
    if len(buf) < HEADER.size:
        raise FormatError("file shorter than the snapshot header")
    magic, version, gtag, btag, degree, n1, n2, n3, l1, l2, l3, t, ncomp = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    groups = {v: k for k, v in GROUP_TAGS.items()}
    bcs = {v: k for k, v in BC_TAGS.items()}
    if gtag not in groups or btag not in bcs or degree > 3:
        raise FormatError("bad group, boundary or degree tag")
    alg = get_algebra(groups[gtag])
    lat = Lattice((n1, n2, n3), (l1, l2, l3), bcs[btag])
    nform = len(lat.form_parities(degree))
    if ncomp != nform * alg.dim:
        raise FormatError("component count does not match degree and group")
    size = ncomp * n1 * n2 * n3 * 8
    if len(buf) != HEADER.size + size:
        raise FormatError("payload size mismatch")
    data = np.frombuffer(buf, dtype="<f8", offset=HEADER.size).reshape((nform, alg.dim, n1, n2, n3))
    return FormField(data.astype(float), degree, lat, alg), float(t)


def read_snapshot(path) -> tuple[FormField, float]:
    with open(path, "rb") as fh:
        return parse_snapshot(fh.read())


# CSV ------------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, t, columns: dict) -> None:
    """Header ``t,name1,...`` and one row per node at full double precision."""
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t"] + names)
        for i, ti in enumerate(np.asarray(t, dtype=float)):
            wr.writerow([_fmt(ti)] + [_fmt(c[i]) for c in cols])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {k: np.asarray([float(r[i]) for r in body]) for i, k in enumerate(head)}


def write_table(path, rows: list[dict]) -> None:
    """Rows of name/value records (reports that are not time series)."""
    keys = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(keys)
        for r in rows:
            wr.writerow([_fmt(r[k]) if isinstance(r[k], (float, np.floating)) else r[k] for k in keys])


# run configuration ------------------------------------------------------------------


@dataclass
class RunConfig:
    n: int = 12
    length: float = 0.0  # 0 selects 2 pi (periodic) or pi (box)
    bc: str = "periodic"
    group: str = "su2"
    kind: str = "augmented"
    data: str = "rough"  # rough | smooth | zero
    a: float = 0.5
    amplitude: float = 1.0
    eps: float = 0.1
    band: int = 2
    T: float = 0.1
    steps: int = 40
    grading: float = 0.0  # 0 selects the default 2/(1-a) clipped to [2, 8]
    h_max: float = 0.0  # 0 means one step per mesh interval
    integrator: str = "etd2rk"
    dealias: bool = True
    seed: int = 0
    diagnostics: tuple = ()
    output: str = "out"

    def validate(self) -> "RunConfig":
        checks = [
            (4 <= self.n <= 128, "n must lie in [4, 128]"),
            (self.length >= 0, "length must be nonnegative"),
            (self.bc in BC_TAGS, "bc must be periodic, neumann or dirichlet"),
            (self.group in GROUP_TAGS, "group must be su2 or u1"),
            (self.kind in ("augmented", "direct"), "kind must be augmented or direct"),
            (self.data in ("rough", "smooth", "zero"), "data must be rough, smooth or zero"),
            (0.0 <= self.a < 1.0, "a must lie in [0, 1)"),
            (self.amplitude >= 0, "amplitude must be nonnegative"),
            (0.0 <= self.eps <= 1.0, "eps must lie in [0, 1]"),
            (self.band >= 1, "band must be at least 1"),
            (0.0 < self.T <= 10.0, "T must lie in (0, 10]"),
            (1 <= self.steps <= 100000, "steps must lie in [1, 100000]"),
            (self.grading == 0 or 1.0 <= self.grading <= 8.0, "grading must be 0 or lie in [1, 8]"),
            (self.h_max >= 0, "h_max must be nonnegative"),
            (self.integrator in ("etd2rk", "picard"), "integrator must be etd2rk or picard"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def lattice(self) -> Lattice:
        return Lattice.cube(self.n, self.bc, self.length or None)

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, (tuple, list)):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    typ = _TYPES[key]
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "tuple":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        return raw
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {raw!r}") from err


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, raw)
    return RunConfig(**values).validate()


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    return parse_config(text, overrides)


# trajectories on disk -------------------------------------------------------------------


def write_trajectory(directory, traj, config: RunConfig | None = None) -> None:
    """One snapshot per node plus a manifest with kind, a and the run config."""
    os.makedirs(directory, exist_ok=True)
    for n in range(len(traj)):
        write_snapshot(os.path.join(directory, f"node_{n:05d}.ymh"), traj.field(n), traj.times[n])
    with open(os.path.join(directory, "manifest.txt"), "w") as fh:
        fh.write(f"kind = {traj.kind}\na = {_fmt(traj.a)}\nnodes = {len(traj)}\n")
    if config is not None:
        with open(os.path.join(directory, "run.cfg"), "w") as fh:
            fh.write(config.to_text())


def read_trajectory(directory):
    from .flow import Trajectory, path_series

    meta = {}
    with open(os.path.join(directory, "manifest.txt")) as fh:
        for line in fh:
            if "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                meta[k] = v
    n = int(meta["nodes"])
    fields_, times = [], []
    lat = alg = None
    for i in range(n):
        w, t = read_snapshot(os.path.join(directory, f"node_{i:05d}.ymh"))
        lat, alg = w.lattice, w.algebra
        fields_.append(w.data)
        times.append(t)
    traj = Trajectory(lat, alg, meta["kind"], np.asarray(times), fields_, a=float(meta["a"]))
    traj.series = path_series(traj)
    return traj
