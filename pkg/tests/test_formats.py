"""Image, cost-volume, CSV, and config file round-trip tests."""

import numpy as np
import pytest

from curlift.formats import (
    FormatError,
    read_config,
    read_cost_volume,
    read_pgm,
    read_ppm,
    to_uint8,
    write_cost_volume,
    write_csv,
    write_pgm,
    write_ppm,
    write_report,
)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
    p = tmp_path / "a.pgm"
    write_pgm(p, img)
    assert np.array_equal(read_pgm(p), img)


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(4, 6, 3), dtype=np.uint8)
    p = tmp_path / "a.ppm"
    write_ppm(p, img)
    assert np.array_equal(read_ppm(p), img)


def test_pnm_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([1, 2, 3, 4]))
    assert np.array_equal(read_pgm(p), np.array([[1, 2], [3, 4]]))


def test_pnm_errors(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(FormatError):
        read_pgm(p)  # wrong magic
    p.write_bytes(b"P5\n2 2\n255\n" + bytes(3))
    with pytest.raises(FormatError, match="payload size mismatch"):
        read_pgm(p)
    p.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(FormatError, match="8-bit"):
        read_pgm(p)
    p.write_bytes(b"P5\n2")
    with pytest.raises(FormatError):
        read_pgm(p)


def test_cost_volume_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(2)
    vol = rng.standard_normal((4, 4, 8)).astype(np.float32)
    p = tmp_path / "v.cvol"
    write_cost_volume(p, vol)
    back = read_cost_volume(p)
    assert back.dtype == np.float32
    assert np.array_equal(back.view(np.uint32), vol.view(np.uint32))
    # write the read-back volume again: files must match byte-for-byte
    q = tmp_path / "v2.cvol"
    write_cost_volume(q, back)
    assert p.read_bytes() == q.read_bytes()


def test_cost_volume_layout_x_fastest(tmp_path):
    vol = np.arange(2 * 3 * 2, dtype=np.float32).reshape(2, 3, 2)
    p = tmp_path / "v.cvol"
    write_cost_volume(p, vol)
    raw = p.read_bytes()
    assert raw.startswith(b"CVOL 2 3 2\n")
    payload = np.frombuffer(raw.split(b"\n", 1)[1], dtype="<f4")
    # first two entries vary x at fixed (y, label)
    assert payload[0] == vol[0, 0, 0]
    assert payload[1] == vol[1, 0, 0]
    assert payload[2] == vol[0, 1, 0]


def test_cost_volume_errors(tmp_path):
    p = tmp_path / "v.cvol"
    p.write_bytes(b"NOPE 1 1 1\n" + bytes(4))
    with pytest.raises(FormatError):
        read_cost_volume(p)
    p.write_bytes(b"CVOL 2 2 2\n" + bytes(4 * 7))
    with pytest.raises(FormatError, match="payload size mismatch"):
        read_cost_volume(p)
    p.write_bytes(b"CVOL 2 2 2\n" + np.full(8, np.nan, "<f4").tobytes())
    with pytest.raises(FormatError, match="non-finite"):
        read_cost_volume(p)


def test_csv_and_report(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b"], [(1, 0.5), (2, 0.25)])
    lines = p.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "1,0.5"
    r = tmp_path / "rep.txt"
    write_report(r, {"energy": 1.25, "iterations": 10})
    assert "energy: 1.25\niterations: 10\n" == r.read_text()


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nlabels = 8\ntol=1e-5\n\n")
    cfg = read_config(p)
    assert cfg == {"labels": "8", "tol": "1e-5"}
    p.write_text("no equals sign\n")
    with pytest.raises(FormatError):
        read_config(p)


def test_to_uint8_clipping():
    out = to_uint8(np.array([-0.5, 0.0, 0.5, 1.0, 2.0]))
    assert np.array_equal(out, [0, 0, 128, 255, 255])
