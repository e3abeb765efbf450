"""Per-pixel texture codes: local binary patterns and binarized filter
responses.

LBP uses the integer 3x3 ring (8 neighbors, radius 1, no interpolation).
Each interior pixel gets the 8-bit code sum(s(g_p - g_c) * 2^p) where the
threshold s(x) is 1 for x >= 0, and neighbors are visited starting at the
right neighbor, then counter-clockwise as displayed (up-right, up, up-left,
left, down-left, down, down-right). Any fixed order is a bijection on codes;
this one is the documented choice. The code image covers the interior only,
so it is 2 pixels smaller per side.

Binarized filter codes apply a bank of n learned l x l filters at every
pixel: bit i is 1 iff the filter response sum(W_i * X) over the window X
centered at the pixel is strictly positive. The border is extended
circularly (wrap-around), so the code image keeps the input size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError

# (dx, dy) per bit: right first, then counter-clockwise as displayed (y down).
LBP_NEIGHBOR_OFFSETS = (
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
)


@dataclass
class CodeImage:
    codes: np.ndarray  # (h, w) int32
    n_bits: int

    def __post_init__(self):
        if self.codes.ndim != 2:
            raise ValueError("codes must be 2-D")
        if self.n_bits < 1:
            raise ValueError("n_bits must be positive")

    @property
    def n_values(self) -> int:
        return 1 << self.n_bits


def lbp_threshold(x: float) -> int:
    return 1 if x >= 0 else 0


def lbp_code_image(img: np.ndarray) -> CodeImage:
    h, w = img.shape
    if h < 3 or w < 3:
        raise ValueError(f"image {w}x{h} too small for 3x3 neighborhoods")
    g = img.astype(np.int32)
    center = g[1 : h - 1, 1 : w - 1]
    codes = np.zeros_like(center)
    for p, (dx, dy) in enumerate(LBP_NEIGHBOR_OFFSETS):
        neighbor = g[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int32) << p
    return CodeImage(codes, 8)


@dataclass
class FilterBank:
    """n filters of size l x l plus free-text provenance (training source,
    seed). Filters must be linearly independent."""

    coeffs: np.ndarray  # (n, l, l) float64
    provenance: str = ""

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise ValueError("coeffs must be (n, l, l)")
        if coeffs.shape[1] % 2 == 0:
            raise ValueError("filter side length must be odd")
        if not np.isfinite(coeffs).all():
            raise ValueError("filter coefficients must be finite")
        n = coeffs.shape[0]
        if np.linalg.matrix_rank(coeffs.reshape(n, -1)) < n:
            raise ValueError("filters are linearly dependent")
        self.coeffs = coeffs

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def l(self) -> int:
        return self.coeffs.shape[1]


def bsif_response(patch: np.ndarray, filt: np.ndarray) -> float:
    """Single filter response sum(W(u,v) * X(u,v)) over one patch."""
    patch = np.asarray(patch, dtype=np.float64)
    filt = np.asarray(filt, dtype=np.float64)
    if patch.shape != filt.shape:
        raise ValueError(f"shape mismatch: patch {patch.shape} vs filter {filt.shape}")
    return float(np.sum(patch * filt))


def bsif_code_image(img: np.ndarray, bank: FilterBank) -> CodeImage:
    r = bank.l // 2
    padded = np.pad(img.astype(np.float64), r, mode="wrap")
    windows = sliding_window_view(padded, (bank.l, bank.l))
    responses = np.tensordot(windows, bank.coeffs, axes=([2, 3], [1, 2]))  # (h, w, n)
    weights = (1 << np.arange(bank.n, dtype=np.int64))
    codes = (responses > 0).astype(np.int64) @ weights
    return CodeImage(codes.astype(np.int32), bank.n)


BANK_MAGIC = "bsif-bank v1"


def encode_filterbank(bank: FilterBank) -> str:
    """Text form: magic line, n, l, provenance, then n*l rows of l
    coefficients at 17 significant digits (lossless for doubles)."""
    lines = [
        BANK_MAGIC,
        f"n: {bank.n}",
        f"l: {bank.l}",
        "provenance: " + " ".join(bank.provenance.split()),
    ]
    for filt in bank.coeffs:
        for row in filt:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def decode_filterbank(text: str) -> FilterBank:
    lines = text.splitlines()
    if not lines or lines[0].strip() != BANK_MAGIC:
        raise DataError(f"line 1: expected {BANK_MAGIC!r} header")

    def header_int(lineno: int, key: str) -> int:
        if lineno > len(lines):
            raise DataError(f"line {lineno}: missing {key!r} header")
        parts = lines[lineno - 1].split(":", 1)
        if len(parts) != 2 or parts[0].strip() != key:
            raise DataError(f"line {lineno}: expected {key!r} header, got {lines[lineno - 1]!r}")
        try:
            return int(parts[1])
        except ValueError:
            raise DataError(f"line {lineno}: {key} is not an integer") from None

    n = header_int(2, "n")
    l = header_int(3, "l")
    if len(lines) < 4 or not lines[3].startswith("provenance:"):
        raise DataError("line 4: expected 'provenance:' header")
    provenance = lines[3].split(":", 1)[1].strip()

    values: list[float] = []
    for lineno, raw in enumerate(lines[4:], start=5):
        if not raw.strip():
            continue
        for tok in raw.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise DataError(f"line {lineno}: bad coefficient {tok!r}") from None
    if len(values) != n * l * l:
        raise DataError(f"expected {n * l * l} coefficients, found {len(values)}")
    coeffs = np.array(values, dtype=np.float64).reshape(n, l, l)
    try:
        return FilterBank(coeffs, provenance)
    except ValueError as exc:
        raise DataError(f"invalid filter bank: {exc}") from None


def load_filterbank(path) -> FilterBank:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read filter bank {path}: {exc}") from exc
    try:
        return decode_filterbank(text)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
