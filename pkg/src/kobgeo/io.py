"""File formats: PGM masks and heatmaps, CSV tables."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["read_pgm", "write_pgm", "write_mask_pgm", "write_heatmap_pgm", "write_csv", "format_value"]


def _tokens(data, start, count):
    """Read ``count`` whitespace-separated header tokens (skipping comments)."""
    out, i = [], start
    while len(out) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        out.append(data[i:j])
        i = j
    return out, i + 1


def read_pgm(path) -> np.ndarray:
    """Binary (P5) PGM as a uint8/uint16 array, first row at the top of the file."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    (w, h, maxval), pos = _tokens(data, 2, 3)
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    return arr.reshape(h, w).astype(np.uint16 if maxval >= 256 else np.uint8)


def write_pgm(path, image) -> Path:
    img = np.asarray(image, dtype=np.uint8)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())
    return path


def write_mask_pgm(path, raster) -> Path:
    """Raster mask as PGM, 255 = inside.  Rows are written top (largest y) first."""
    img = np.where(raster.mask, 255, 0).astype(np.uint8)[::-1]
    return write_pgm(path, img)


def write_heatmap_pgm(path, values, mask=None) -> Path:
    """Linear grey-scale heatmap of finite values; masked-out cells are black."""
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) if mask is None else (np.asarray(mask, dtype=bool) & np.isfinite(v))
    img = np.zeros(v.shape, dtype=np.uint8)
    if ok.any():
        lo, hi = float(v[ok].min()), float(v[ok].max())
        scale = 254.0 / (hi - lo) if hi > lo else 0.0
        img[ok] = (1 + np.round((v[ok] - lo) * scale)).astype(np.uint8)
    return write_pgm(path, img[::-1])


def format_value(v):
    """Deterministic text for one CSV cell."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    if isinstance(v, complex):
        return f"{format_value(v.real)}{'+' if v.imag >= 0 else '-'}{format_value(abs(v.imag))}j"
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Comma separated, header row, LF line endings."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path
