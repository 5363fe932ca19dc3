"""Image IO: 8-bit PNG with the exact sRGB transfer, and a minimal
uncompressed float32 EXR codec for lossless linear data.

PNG values decode through the IEC 61966-2-1 transfer into linear floats and
encode back exactly, so an 8-bit round trip is bit-identical.  EXR files
carry float32 RGB scanlines with no compression; decode errors report the
byte offset of the failure.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageDecodeError(ValueError):
    """Unreadable image; message carries the byte offset of the failure."""


@dataclass(frozen=True)
class Grid:
    """Row-major image payload: (height, width, channels) float64."""
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3:
            raise ValueError("grid data must be (H, W) or (H, W, C)")
        if not np.isfinite(d).all():
            raise ValueError("grid contains non-finite values")
        object.__setattr__(self, "data", d)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]


# ---------------------------------------------------------------------------
# sRGB transfer (IEC 61966-2-1)
# ---------------------------------------------------------------------------

def srgb_to_linear(c):
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(x):
    x = np.asarray(x, dtype=np.float64)
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.0031308, x * 12.92, 1.055 * x ** (1.0 / 2.4) - 0.055)


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def _png_failure_offset(blob: bytes) -> int:
    """Walk the chunk structure and return the offset where it breaks."""
    sig = b"\x89PNG\r\n\x1a\n"
    if blob[:8] != sig:
        return next((i for i in range(min(8, len(blob))) if i >= len(blob) or blob[i] != sig[i]), 0)
    off = 8
    while off + 8 <= len(blob):
        (length,) = struct.unpack_from(">I", blob, off)
        end = off + 8 + length + 4
        if end > len(blob):
            return off
        off = end
    return off


def _load_png(path: str) -> Grid:
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        with open(path, "rb") as f:
            blob = f.read()
        raise ImageDecodeError(
            f"{path}: PNG decoding failed at byte offset {_png_failure_offset(blob)} ({e})"
        ) from e
    return Grid(srgb_to_linear(arr))


def _save_png(grid: Grid, path: str):
    srgb = linear_to_srgb(grid.data)
    u8 = np.round(srgb * 255.0).astype(np.uint8)
    if u8.shape[2] == 1:
        u8 = np.repeat(u8, 3, axis=2)
    Image.fromarray(u8, mode="RGB").save(path, format="PNG")


# ---------------------------------------------------------------------------
# EXR (uncompressed float32 RGB scanlines)
# ---------------------------------------------------------------------------

_EXR_MAGIC = b"\x76\x2f\x31\x01"


def _exr_attr(name: bytes, type_: bytes, payload: bytes) -> bytes:
    return name + b"\0" + type_ + b"\0" + struct.pack("<I", len(payload)) + payload


def _save_exr(grid: Grid, path: str):
    h, w, c = grid.data.shape
    if c == 1:
        data = np.repeat(grid.data, 3, axis=2)
    elif c == 3:
        data = grid.data
    else:
        raise ValueError("EXR writer expects 1 or 3 channels")
    pix = data.astype("<f4")

    chan = b""
    for name in (b"B", b"G", b"R"):  # alphabetical, as the format requires
        chan += name + b"\0" + struct.pack("<i", 2) + b"\0\0\0\0" + struct.pack("<ii", 1, 1)
    chan += b"\0"
    box = struct.pack("<iiii", 0, 0, w - 1, h - 1)
    header = b"".join([
        _exr_attr(b"channels", b"chlist", chan),
        _exr_attr(b"compression", b"compression", b"\0"),
        _exr_attr(b"dataWindow", b"box2i", box),
        _exr_attr(b"displayWindow", b"box2i", box),
        _exr_attr(b"lineOrder", b"lineOrder", b"\0"),
        _exr_attr(b"pixelAspectRatio", b"float", struct.pack("<f", 1.0)),
        _exr_attr(b"screenWindowCenter", b"v2f", struct.pack("<ff", 0.0, 0.0)),
        _exr_attr(b"screenWindowWidth", b"float", struct.pack("<f", 1.0)),
        b"\0",
    ])
    row_bytes = 3 * 4 * w
    table_start = 8 + len(header)
    data_start = table_start + 8 * h
    with open(path, "wb") as f:
        f.write(_EXR_MAGIC + struct.pack("<I", 2) + header)
        for y in range(h):
            f.write(struct.pack("<Q", data_start + y * (8 + row_bytes)))
        for y in range(h):
            f.write(struct.pack("<ii", y, row_bytes))
            f.write(pix[y, :, 2].tobytes())  # B
            f.write(pix[y, :, 1].tobytes())  # G
            f.write(pix[y, :, 0].tobytes())  # R

def _exr_fail(path, off, why):
    raise ImageDecodeError(f"{path}: EXR decoding failed at byte offset {off} ({why})")


def _load_exr(path: str) -> Grid:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _EXR_MAGIC:
        _exr_fail(path, 0, "bad magic")
    off = 8
    attrs = {}
    while True:
        if off >= len(blob):
            _exr_fail(path, off, "header truncated")
        if blob[off] == 0:
            off += 1
            break
        try:
            name_end = blob.index(b"\0", off)
            type_end = blob.index(b"\0", name_end + 1)
        except ValueError:
            _exr_fail(path, off, "unterminated attribute name")
        name = blob[off:name_end].decode("latin-1")
        (size,) = struct.unpack_from("<I", blob, type_end + 1)
        payload_start = type_end + 5
        if payload_start + size > len(blob):
            _exr_fail(path, payload_start, "attribute payload truncated")
        attrs[name] = blob[payload_start:payload_start + size]
        off = payload_start + size
    if "compression" in attrs and attrs["compression"] != b"\0":
        _exr_fail(path, 0, "only uncompressed EXR is supported")
    try:
        x0, y0, x1, y1 = struct.unpack("<iiii", attrs["dataWindow"])
    except (KeyError, struct.error):
        _exr_fail(path, off, "missing or malformed dataWindow")
    w, h = x1 - x0 + 1, y1 - y0 + 1
    table_end = off + 8 * h
    if table_end > len(blob):
        _exr_fail(path, off, "scanline offset table truncated")
    out = np.empty((h, w, 3), dtype=np.float64)
    row_bytes = 3 * 4 * w
    for y in range(h):
        (pos,) = struct.unpack_from("<Q", blob, off + 8 * y)
        if pos + 8 + row_bytes > len(blob):
            _exr_fail(path, pos, f"scanline {y} truncated")
        row = np.frombuffer(blob, dtype="<f4", count=3 * w, offset=pos + 8)
        out[y, :, 2] = row[:w]
        out[y, :, 1] = row[w:2 * w]
        out[y, :, 0] = row[2 * w:]
    return Grid(out)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def load_image(path: str) -> Grid:
    """Decode a PNG (sRGB -> linear) or EXR (linear pass-through) image."""
    p = str(path)
    if p.lower().endswith(".exr"):
        return _load_exr(p)
    if p.lower().endswith(".png"):
        return _load_png(p)
    raise ImageDecodeError(f"{p}: unsupported image format (expected .png or .exr)")


def save_image(grid, path: str):
    """Encode linear data: PNG applies the inverse sRGB transfer, EXR is raw."""
    if not isinstance(grid, Grid):
        grid = Grid(np.asarray(grid))
    p = str(path)
    if p.lower().endswith(".exr"):
        _save_exr(grid, p)
    elif p.lower().endswith(".png"):
        _save_png(grid, p)
    else:
        raise ValueError(f"{p}: unsupported image format (expected .png or .exr)")
