"""Block-histogram features over texture code images.

A code image is summarized by the whole-image histogram plus one histogram
per cell of a rows x cols grid (4 x 3 by default, 12 cells). Grid boundaries
are floor(i * dim / count), so cells tile the image exactly. Each histogram
is L1-normalized so blocks of unequal pixel count contribute on the same
scale; blocks are concatenated in row-major order, whole image first, with
the LBP group ahead of the binarized-filter group. With all defaults that is
26 histograms of 256 bins: a 6656-value vector.

Both descriptors are gridded on their own code image; the LBP code image is
2 pixels smaller per side, so its block boundaries are recomputed for that
size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .descriptors import CodeImage, FilterBank, bsif_code_image, lbp_code_image
from .errors import DataError
from .geometry import AlignedFace

DEFAULT_GRID_ROWS = 4
DEFAULT_GRID_COLS = 3


class Rect(NamedTuple):
    """Half-open pixel rectangle [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


def block_partition(w: int, h: int, rows: int, cols: int) -> list[Rect]:
    """Row-major grid rectangles tiling a w x h raster exactly."""
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and column")
    if rows > h or cols > w:
        raise ValueError(f"grid {rows}x{cols} larger than image {w}x{h}")
    xb = [j * w // cols for j in range(cols + 1)]
    yb = [i * h // rows for i in range(rows + 1)]
    return [
        Rect(xb[j], yb[i], xb[j + 1], yb[i + 1])
        for i in range(rows)
        for j in range(cols)
    ]


def region_histogram(codes: CodeImage, rect: Rect, normalized: bool = True) -> np.ndarray:
    """Histogram of code values inside rect; L1-normalized unless raw counts
    are requested."""
    h, w = codes.codes.shape
    if not (0 <= rect.x0 <= rect.x1 <= w and 0 <= rect.y0 <= rect.y1 <= h):
        raise ValueError(f"rectangle {rect} outside {w}x{h} code image")
    if rect.area == 0:
        raise ValueError("empty rectangle")
    region = codes.codes[rect.y0 : rect.y1, rect.x0 : rect.x1]
    counts = np.bincount(region.ravel(), minlength=codes.n_values).astype(np.float64)
    if normalized:
        return counts / counts.sum()
    return counts


@dataclass(frozen=True)
class FeatureLayout:
    """Shape contract for a feature vector: canonical face size, grid shape
    and descriptor order with bit widths. Model files store the string form
    and prediction refuses inputs whose layout differs."""

    face_w: int
    face_h: int
    grid_rows: int
    grid_cols: int
    descriptors: tuple[tuple[str, int], ...]  # (name, n_bits) in order

    def __post_init__(self):
        if not self.descriptors:
            raise ValueError("layout needs at least one descriptor")
        for name, bits in self.descriptors:
            if name not in ("lbp", "bsif"):
                raise ValueError(f"unknown descriptor {name!r}")
            if bits < 1:
                raise ValueError("descriptor bit width must be positive")

    @property
    def blocks_per_descriptor(self) -> int:
        return 1 + self.grid_rows * self.grid_cols

    @property
    def dims(self) -> int:
        return self.blocks_per_descriptor * sum(1 << bits for _, bits in self.descriptors)

    def describe(self) -> str:
        desc = "+".join(f"{name}:{bits}" for name, bits in self.descriptors)
        return (
            f"AGL1|face={self.face_w}x{self.face_h}"
            f"|grid={self.grid_rows}x{self.grid_cols}|desc={desc}|blocks=row-major"
        )

    @classmethod
    def parse(cls, text: str) -> "FeatureLayout":
        parts = text.split("|")
        if len(parts) != 5 or parts[0] != "AGL1" or parts[4] != "blocks=row-major":
            raise DataError(f"bad feature layout {text!r}")
        try:
            face = parts[1].removeprefix("face=").split("x")
            grid = parts[2].removeprefix("grid=").split("x")
            descs = tuple(
                (name, int(bits))
                for name, bits in (d.split(":") for d in parts[3].removeprefix("desc=").split("+"))
            )
            return cls(int(face[0]), int(face[1]), int(grid[0]), int(grid[1]), descs)
        except (ValueError, IndexError):
            raise DataError(f"bad feature layout {text!r}") from None


def default_layout(
    use_lbp: bool = True,
    use_bsif: bool = True,
    bsif_bits: int = 8,
    face_w: int = 120,
    face_h: int = 126,
    grid_rows: int = DEFAULT_GRID_ROWS,
    grid_cols: int = DEFAULT_GRID_COLS,
) -> FeatureLayout:
    descs = []
    if use_lbp:
        descs.append(("lbp", 8))
    if use_bsif:
        descs.append(("bsif", bsif_bits))
    return FeatureLayout(face_w, face_h, grid_rows, grid_cols, tuple(descs))


def _descriptor_histograms(code: CodeImage, rows: int, cols: int) -> list[np.ndarray]:
    h, w = code.codes.shape
    hists = [region_histogram(code, Rect(0, 0, w, h))]
    for rect in block_partition(w, h, rows, cols):
        hists.append(region_histogram(code, rect))
    return hists


def extract_features(
    face: AlignedFace,
    layout: FeatureLayout,
    bank: FilterBank | None = None,
) -> np.ndarray:
    """Concatenated block histograms for one canonical face crop."""
    h, w = face.image.shape
    if (w, h) != (layout.face_w, layout.face_h):
        raise ValueError(
            f"face is {w}x{h}, layout expects {layout.face_w}x{layout.face_h}"
        )
    parts: list[np.ndarray] = []
    for name, bits in layout.descriptors:
        if name == "lbp":
            code = lbp_code_image(face.image)
        else:
            if bank is None:
                raise ValueError("layout includes binarized filter codes but no bank was given")
            if bank.n != bits:
                raise ValueError(f"bank has {bank.n} filters, layout expects {bits}")
            code = bsif_code_image(face.image, bank)
        parts.extend(_descriptor_histograms(code, layout.grid_rows, layout.grid_cols))
    return np.concatenate(parts)
