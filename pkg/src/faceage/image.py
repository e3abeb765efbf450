"""Grayscale raster input/output.

Images are 2-D ``uint8`` numpy arrays in row-major order, value range 0..255.
The mandatory on-disk formats are the portable anymaps PGM and PPM, in both
their ASCII (P2/P3) and binary (P5/P6) variants, with maxval up to 255.
Color input is reduced to luma 0.299 R + 0.587 G + 0.114 B, rounded half-up.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DataError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def luma(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


class _TokenScanner:
    """Whitespace/comment-aware scanner over PNM header and ASCII payloads."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def next_token(self) -> bytes:
        data, n = self.data, len(self.data)
        i = self.pos
        while i < n:
            c = data[i]
            if c in b" \t\r\n\x0b\x0c":
                i += 1
            elif c == ord("#"):
                while i < n and data[i] not in b"\r\n":
                    i += 1
            else:
                break
        if i >= n:
            raise DataError("truncated image header")
        start = i
        while i < n and data[i] not in b" \t\r\n\x0b\x0c":
            i += 1
        self.pos = i
        return data[start:i]

    def next_int(self, what: str) -> int:
        tok = self.next_token()
        try:
            return int(tok)
        except ValueError:
            raise DataError(f"bad {what} in image header: {tok!r}") from None

    def skip_single_whitespace(self) -> int:
        """Binary payloads start after exactly one whitespace byte."""
        if self.pos >= len(self.data):
            raise DataError("image truncated before pixel data")
        self.pos += 1
        return self.pos


def decode_pnm(data: bytes) -> np.ndarray:
    """Decode P2/P3/P5/P6 bytes into a grayscale uint8 array."""
    scanner = _TokenScanner(data)
    magic = scanner.next_token()
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise DataError(f"unsupported image magic {magic!r} (PGM/PPM required)")
    width = scanner.next_int("width")
    height = scanner.next_int("height")
    maxval = scanner.next_int("maxval")
    if width < 1 or height < 1:
        raise DataError(f"bad image dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise DataError(f"unsupported maxval {maxval} (1..255 required)")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        start = scanner.skip_single_whitespace()
        raw = data[start : start + count]
        if len(raw) < count:
            raise DataError(f"pixel data truncated: expected {count} bytes, got {len(raw)}")
        values = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
    else:
        values = np.empty(count, dtype=np.int64)
        for k in range(count):
            values[k] = scanner.next_int("pixel value")
    if (values > maxval).any():
        raise DataError(f"pixel value exceeds declared maxval {maxval}")

    if maxval != 255:
        values = np.floor(values * (255.0 / maxval) + 0.5).astype(np.int64)
    if channels == 3:
        rgb = values.reshape(height, width, 3).astype(np.float64)
        return luma(rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2])
    return values.reshape(height, width).astype(np.uint8)


def load_image(path: str | os.PathLike) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return decode_pnm(data)


def encode_pgm(img: np.ndarray) -> bytes:
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 image")
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()


def save_pgm(path: str | os.PathLike, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))
