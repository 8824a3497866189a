"""Minimal PNG support: encode an RGB array, read dimensions from headers.

The hub treats image payloads as opaque bytes and only needs to confirm
that a frame is a PNG of the declared size; the mock tooling needs to
emit deterministic PNGs. Both fit in a few chunks of stdlib zlib/struct,
which keeps fixture bytes stable across library versions.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def encode_rgb_png(pixels: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as a non-interlaced RGB PNG."""
    arr = np.asarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected (H, W, 3) pixels, got shape {arr.shape}")
    height, width = arr.shape[:2]
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    raw = b"".join(b"\x00" + arr[row].tobytes() for row in range(height))
    return (
        PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, 6))
        + _chunk(b"IEND", b"")
    )


def png_dimensions(data: bytes) -> tuple[int, int]:
    """(width, height) from the PNG header; raises ValueError if not a PNG."""
    if len(data) < 24 or data[:8] != PNG_SIGNATURE:
        raise ValueError("not a PNG: bad signature")
    if data[12:16] != b"IHDR":
        raise ValueError("not a PNG: missing IHDR")
    width, height = struct.unpack(">II", data[16:24])
    if width < 1 or height < 1:
        raise ValueError(f"bad PNG dimensions {width}x{height}")
    return width, height
