import json
import struct

import numpy as np
import pytest

from vkt.analysis import diag_row
from vkt.config import DEFAULT_CFL, dump_document, load_config, parse_config, parse_document
from vkt.errors import BadFormat, ConfigError
from vkt.fileio import (
    MAGIC,
    DiagnosticsWriter,
    emit_heatmap,
    heatmap_pixels,
    parse_snapshot,
    read_diagnostics,
    read_pgm,
    read_snapshot,
    snapshot_bytes,
    write_snapshot,
)
from vkt.initdata import initial_state
from vkt.model import Params, State


# configuration ------------------------------------------------------------------

def test_empty_document_gives_defaults():
    spec = parse_config("")
    assert spec.preset == "uniform" and spec.delta == 0.0
    p = spec.run.params
    assert (p.mu, p.beta, p.gamma, p.A) == (1.0, 4.0, 2.0, 1.0)
    assert spec.run.cfl == DEFAULT_CFL and spec.run.dt is None
    assert spec.warnings == ()
    assert parse_document({}).run == spec.run


def test_beta_relaxation_is_recorded():
    spec = parse_document({"physics": {"beta": 2.5}})
    assert spec.run.params.beta == 2.5
    assert len(spec.warnings) == 1 and "beta" in spec.warnings[0]


@pytest.mark.parametrize("doc, path", [
    ({"physics": {"gamma": 0.9}}, "physics.gamma"),
    ({"physics": {"mu": 0}}, "physics.mu"),
    ({"grid": {"n": 33}}, "grid.n"),
    ({"preset": {"name": "vortex"}}, "preset.name"),
    ({"output": {"colour": True}}, "output"),
    ({"time": {"dt": 1e-3, "cfl": 0.5}}, "time"),
])
def test_schema_violations_carry_path(doc, path):
    with pytest.raises(ConfigError) as info:
        parse_document(doc)
    assert info.value.path == path


def test_malformed_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_dump_round_trip(tmp_path):
    spec = parse_document({"grid": {"n": 32}, "time": {"dt": 1e-3, "t_end": 0.1},
                           "preset": {"name": "acoustic", "args": {"mode": 2}}})
    path = tmp_path / "cfg.json"
    path.write_text(dump_document(spec))
    again = load_config(path)
    assert again.run == spec.run and again.preset_args == {"mode": 2}
    assert dump_document(again) == dump_document(spec)


# snapshots ----------------------------------------------------------------------

def random_state(n=16, seed=5):
    rng = np.random.default_rng(seed)
    return State(0.123456789, 0.5 + rng.random((n, n)), rng.standard_normal((2, n, n)))


def test_snapshot_round_trip_bit_exact(tmp_path):
    s = random_state()
    path = tmp_path / "s.vkt"
    write_snapshot(s, path)
    back = read_snapshot(path)
    assert back.t == s.t
    assert back.rho.tobytes() == s.rho.tobytes() and back.mom.tobytes() == s.mom.tobytes()
    assert not (tmp_path / "s.vkt.tmp").exists()


def test_snapshot_bad_inputs():
    data = snapshot_bytes(random_state(8))
    for bad in (data[:10], data[:-8], data + b"\0"):
        with pytest.raises(BadFormat):
            parse_snapshot(bad)
    with pytest.raises(BadFormat):
        parse_snapshot(b"XXXX" + data[4:])
    with pytest.raises(BadFormat):
        parse_snapshot(data[:4] + struct.pack("<I", 99) + data[8:])


def test_snapshot_fixed_endianness():
    # test vector built independently: header and body packed field by field, little-endian
    n = 2
    vals = [1.5, -2.25, 3.0, 1e-300, 0.1, 0.2, 0.3, 0.4, -0.0, 7.0, 8.0, 9.0]
    blob = MAGIC + struct.pack("<IId", 1, n, 0.5) + b"".join(struct.pack("<d", v) for v in vals)
    s = parse_snapshot(blob)
    assert s.t == 0.5
    assert s.rho.ravel().tolist() == vals[:4]
    assert s.mom[0].ravel().tolist() == vals[4:8]
    assert s.mom[1].ravel().tolist() == vals[8:]
    # a big-endian host would byte-swap in memory; the file bytes must not change
    swapped = State(0.5, s.rho.astype(">f8"), s.mom.astype(">f8"))
    assert snapshot_bytes(swapped) == blob


# diagnostics CSV -------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    p = Params(mu=3e-4, A=10.0)
    rows = [diag_row(initial_state("acoustic", 16, p, rho_bar=0.1, amplitude=0.05), p)]
    path = tmp_path / "d.csv"
    with DiagnosticsWriter(path) as w:
        for r in rows * 2:
            w.write(r)
    back = read_diagnostics(path)
    assert len(back) == 2
    flat = rows[0].flat()
    assert list(back[0]) == list(flat)
    assert all(back[0][k] == float(v) for k, v in flat.items())


def test_csv_rejects_header_change(tmp_path):
    p = Params()
    s = State(0.0, np.ones((8, 8)), np.zeros((2, 8, 8)))
    with DiagnosticsWriter(tmp_path / "d.csv") as w:
        w.write(diag_row(s, p, norm_ks=(2,)))
        with pytest.raises(ValueError):
            w.write(diag_row(s, p, norm_ks=(2, 4)))


# heatmaps -----------------------------------------------------------------------

def test_heatmap_constant_field():
    px = heatmap_pixels(np.full((8, 8), 3.0))
    assert px.dtype == np.uint16 and np.all(px == px[0, 0])


def test_heatmap_extremes_and_orientation():
    f = np.zeros((4, 6))
    f[0, 0] = -1.0  # x1 = 0, x2 = 0: bottom-left pixel
    f[3, 5] = 2.0   # top-right
    px = heatmap_pixels(f)
    assert px.shape == (6, 4)
    assert px[-1, 0] == 0 and px[0, -1] == 65535
    assert px.min() == 0 and px.max() == 65535


def test_heatmap_checkerboard():
    i, j = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    f = np.cos(np.pi * (i + j))  # Nyquist mode in both directions
    px = heatmap_pixels(f)
    expect = np.where((i + j) % 2 == 0, 65535, 0).T[::-1]
    assert np.array_equal(px, expect)
    assert set(np.unique(px).tolist()) == {0, 65535}


def test_heatmap_range_and_pgm(tmp_path):
    with pytest.raises(ValueError):
        heatmap_pixels(np.ones((4, 4)), vrange=(1.0, 1.0))
    f = np.linspace(-1, 1, 64).reshape(8, 8)
    px = heatmap_pixels(f, vrange=(-0.5, 0.5))
    assert px.min() == 0 and px.max() == 65535  # clamped
    path = tmp_path / "h.pgm"
    emit_heatmap(f, path)
    assert path.read_bytes().startswith(b"P5\n8 8\n65535\n")
    assert np.array_equal(read_pgm(path), heatmap_pixels(f))
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(BadFormat):
        read_pgm(bad)


def test_config_file_is_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"n": 16}}))
    assert load_config(path).run.n == 16
