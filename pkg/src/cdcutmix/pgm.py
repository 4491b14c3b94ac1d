"""Binary PGM (P5) encoding and decoding.

Label maps are stored as P5 with maxval 255 (0 = source cell, 255 = target
cell); the reader also accepts two-byte maxvals so prediction maps can
carry more resolution. Comments (#) are allowed anywhere in the header.
"""

from __future__ import annotations

import numpy as np


def write_pgm(values: np.ndarray, maxval: int = 255) -> bytes:
    """Encode a 2-D array of samples in [0, maxval] as binary PGM bytes."""
    if values.ndim != 2:
        raise ValueError(f"PGM payload must be 2-D, got shape {values.shape}")
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must be in [1, 65535], got {maxval}")
    arr = np.asarray(values)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise ValueError("sample values exceed maxval")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval < 256:
        payload = arr.astype(np.uint8).tobytes()
    else:
        payload = arr.astype(">u2").tobytes()
    return header + payload


def read_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode binary PGM bytes to (2-D sample array, maxval)."""
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise ValueError(f"not a binary PGM (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ValueError(f"malformed PGM header: {exc}") from exc
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ValueError(f"invalid PGM dimensions {width}x{height} maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    sample_bytes = 1 if maxval < 256 else 2
    expected = width * height * sample_bytes
    payload = data[pos : pos + expected]
    if len(payload) != expected or pos + expected != len(data):
        raise ValueError(
            f"PGM payload is {len(data) - pos} bytes, expected exactly {expected}"
        )
    dtype = np.uint8 if sample_bytes == 1 else np.dtype(">u2")
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if arr.max(initial=0) > maxval:
        raise ValueError("PGM samples exceed declared maxval")
    return arr.astype(np.uint16) if sample_bytes == 2 else np.array(arr), maxval
