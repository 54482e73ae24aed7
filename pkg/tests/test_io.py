import numpy as np

from kobgeo import Disk
from kobgeo.io import format_value, read_pgm, write_csv, write_heatmap_pgm, write_mask_pgm, write_pgm


def test_pgm_round_trip(tmp_path):
    img = (np.arange(35).reshape(5, 7) * 7).astype(np.uint8)
    p = write_pgm(tmp_path / "a.pgm", img)
    assert p.read_bytes().startswith(b"P5\n7 5\n255\n")
    assert np.array_equal(read_pgm(p), img)


def test_pgm_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    assert read_pgm(p).tolist() == [[0, 255]]


def test_mask_pgm_puts_top_row_first(tmp_path):
    r = Disk().rasterize(0.25)
    img = read_pgm(write_mask_pgm(tmp_path / "m.pgm", r))
    assert np.array_equal(img[::-1] == 255, r.mask)


def test_heatmap_pgm(tmp_path):
    v = np.array([[0.0, 1.0], [np.nan, 2.0]])
    img = read_pgm(write_heatmap_pgm(tmp_path / "h.pgm", v))
    # rows flipped; nan is black, the range maps onto 1..255
    assert img.tolist() == [[0, 255], [1, 128]]


def test_format_value():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(True) == "1"
    assert format_value(np.int64(7)) == "7"
    assert format_value(float("nan")) == "nan"
    assert format_value(-float("inf")) == "-inf"
    assert format_value(1 - 2j) == "1-2j"


def test_csv_layout(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["n", "x"], [(1, 0.5), (2, 1e-20)])
    assert p.read_bytes() == b"n,x\n1,0.5\n2,1e-20\n"
