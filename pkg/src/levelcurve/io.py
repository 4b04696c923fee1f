"""Binary netpbm codecs (P5 grayscale, P6 colour, maxval 255)."""

from __future__ import annotations

import os

import numpy as np

from .exceptions import CorruptHeader, IoError, TruncatedData, UnsupportedFormat

_CHANNELS = {b"P5": 1, b"P6": 3}


def _header(buf: bytes) -> tuple[bytes, int, int, int, int]:
    """Parse magic, width, height and maxval; return them with the data offset."""
    magic = buf[:2]
    if magic not in _CHANNELS:
        raise UnsupportedFormat(f"unsupported magic number {magic!r}; expected P5 or P6")
    fields: list[int] = []
    pos = 2
    n = len(buf)
    while len(fields) < 3:
        # skip whitespace and comments
        while pos < n and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CorruptHeader("header ended before width, height and maxval were read")
        fields.append(int(buf[start:pos]))
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise CorruptHeader("missing whitespace after maxval")
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise CorruptHeader(f"non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"maxval {maxval} unsupported; only 255 is accepted")
    return magic, width, height, maxval, pos + 1


def decode(buf: bytes) -> np.ndarray:
    """Decode netpbm bytes into a float array, (H, W) for P5 or (H, W, 3) for P6."""
    magic, width, height, _, offset = _header(buf)
    channels = _CHANNELS[magic]
    need = width * height * channels
    data = buf[offset:offset + need]
    if len(data) < need:
        raise TruncatedData(f"expected {need} data bytes, found {len(data)}")
    arr = np.frombuffer(data, dtype=np.uint8).astype(float)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape)


def encode(image) -> bytes:
    arr = np.asarray(image)
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise UnsupportedFormat(f"cannot encode array of shape {arr.shape}")
    pixels = np.clip(np.rint(arr.astype(float)), 0, 255).astype(np.uint8)
    h, w = arr.shape[:2]
    return b"%s\n%d %d\n255\n" % (magic, w, h) + pixels.tobytes()


def read_image(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {os.fspath(path)!r}: {exc.strerror or exc}") from exc
    return decode(buf)


def write_image(path, image) -> None:
    payload = encode(image)
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def write_mask(path, mask) -> None:
    """Write a boolean mask as P5 with foreground 255 and background 0."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise UnsupportedFormat(f"mask must be 2-D, got shape {m.shape}")
    write_image(path, np.where(m.astype(bool), 255, 0))


def read_mask(path) -> np.ndarray:
    """Read a P5 file as a boolean mask: nonzero pixels are selected."""
    img = read_image(path)
    if img.ndim != 2:
        raise UnsupportedFormat(f"{os.fspath(path)!r} is a colour image, a P5 mask is required")
    return img > 0
