"""File formats: binary PGM/PPM images, cost-volume files, CSV, run reports.

Images are 8-bit binary netpbm (P5 grayscale, P6 color), row-major.  Cost
volumes use a one-line text header ``CVOL <nx> <ny> <nlabels>`` followed by
a little-endian float32 payload in x-fastest order.
"""

import csv

import numpy as np


class FormatError(ValueError):
    """Raised for malformed or inconsistent input files."""


# ---------------------------------------------------------------------------
# netpbm images
# ---------------------------------------------------------------------------


def _read_pnm_tokens(data: bytes, count: int):
    """Read `count` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset one byte past the final separator.
    """
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise FormatError("truncated image header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or not data[i:i + 1].isspace():
        raise FormatError("truncated image header")
    return tokens, i + 1


def _read_pnm(path, magic: bytes, channels: int) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(magic):
        raise FormatError(f"expected {magic.decode()} image: {path}")
    tokens, off = _read_pnm_tokens(data[2:], 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"malformed image header: {path}")
    if w <= 0 or h <= 0:
        raise FormatError(f"bad image dimensions {w}x{h}: {path}")
    if maxval != 255:
        raise FormatError(f"only 8-bit images supported, maxval={maxval}")
    payload = data[2 + off:]
    need = w * h * channels
    if len(payload) < need:
        raise FormatError(f"payload size mismatch: {path}")
    img = np.frombuffer(payload[:need], dtype=np.uint8)
    shape = (h, w) if channels == 1 else (h, w, channels)
    return img.reshape(shape)


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit grayscale image; returns uint8 (rows, cols)."""
    return _read_pnm(path, b"P5", 1)


def read_ppm(path) -> np.ndarray:
    """Read a binary 8-bit color image; returns uint8 (rows, cols, 3)."""
    return _read_pnm(path, b"P6", 3)


def _write_pnm(path, magic: bytes, img: np.ndarray):
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def write_pgm(path, img: np.ndarray):
    """Write a (rows, cols) array as binary 8-bit grayscale."""
    if img.ndim != 2:
        raise ValueError("grayscale image must be 2-d")
    _write_pnm(path, b"P5", img)


def write_ppm(path, img: np.ndarray):
    """Write a (rows, cols, 3) array as binary 8-bit color."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("color image must be (rows, cols, 3)")
    _write_pnm(path, b"P6", img)


def to_uint8(values: np.ndarray, lo: float = 0.0, hi: float = 1.0):
    """Quantize real values in [lo, hi] to uint8 with clipping."""
    scaled = (np.asarray(values, dtype=float) - lo) / (hi - lo)
    return np.clip(np.round(scaled * 255.0), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# cost volumes
# ---------------------------------------------------------------------------


def read_cost_volume(path) -> np.ndarray:
    """Read a cost volume file; returns float32 (nx, ny, nlabels)."""
    with open(path, "rb") as f:
        header = f.readline()
        payload = f.read()
    parts = header.split()
    if len(parts) != 4 or parts[0] != b"CVOL":
        raise FormatError(f"not a cost volume file: {path}")
    try:
        nx, ny, nl = (int(p) for p in parts[1:])
    except ValueError:
        raise FormatError(f"malformed cost volume header: {path}")
    if nx <= 0 or ny <= 0 or nl <= 0:
        raise FormatError(f"bad cost volume shape {nx}x{ny}x{nl}: {path}")
    need = nx * ny * nl * 4
    if len(payload) != need:
        raise FormatError(
            f"payload size mismatch: expected {need} bytes, got {len(payload)}")
    flat = np.frombuffer(payload, dtype="<f4")
    if not np.all(np.isfinite(flat)):
        raise FormatError(f"non-finite values in cost volume: {path}")
    # x-fastest: x, then y, then label
    return flat.reshape(nl, ny, nx).transpose(2, 1, 0)


def write_cost_volume(path, values: np.ndarray):
    """Write an (nx, ny, nlabels) array as a cost volume file."""
    values = np.asarray(values)
    if values.ndim != 3:
        raise ValueError("cost volume must be 3-d (nx, ny, nlabels)")
    if not np.all(np.isfinite(values)):
        raise ValueError("cost volume must be finite")
    nx, ny, nl = values.shape
    with open(path, "wb") as f:
        f.write(b"CVOL %d %d %d\n" % (nx, ny, nl))
        f.write(values.transpose(2, 1, 0).astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# CSV and run reports
# ---------------------------------------------------------------------------


def write_csv(path, header, rows):
    """Write rows (iterable of sequences) with a header row."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return v


def write_report(path, fields: dict):
    """Write a run report: one `key: value` line per entry, insertion order."""
    with open(path, "w") as f:
        for key, val in fields.items():
            if isinstance(val, float):
                val = repr(val)
            f.write(f"{key}: {val}\n")


def read_config(path) -> dict:
    """Read a flat key=value config file; '#' starts a comment line."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(
                    f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out
