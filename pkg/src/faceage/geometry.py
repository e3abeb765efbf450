"""Landmark parsing and eye-driven face normalization.

Coordinate convention used throughout: continuous image positions with x
growing rightward and y growing downward; pixel (row i, col j) covers the
unit square [j, j+1) x [i, i+1) and its center sits at (j + 0.5, i + 0.5).
Landmark files are interpreted in the same system.

The in-plane compensation works from the eye line. The raw eye-line angle is
atan2(right.y - left.y, right.x - left.x); the image and all landmarks are
then rotated about the image center by the angle that levels the eyes (the
negative of the raw angle under this y-down convention). After alignment the
two transformed eye centers share their y coordinate to well under half a
pixel, which makes the inter-eye distance equal to the x gap.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataError


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class LandmarkScheme:
    """Named landmark layout: point count plus eye-center index groups."""

    name: str
    n_points: int
    left_eye_indices: tuple[int, ...]
    right_eye_indices: tuple[int, ...]

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("scheme needs at least one point")
        for label, group in (("left", self.left_eye_indices), ("right", self.right_eye_indices)):
            if not group:
                raise ValueError(f"{label} eye index group is empty")
            if any(i < 0 or i >= self.n_points for i in group):
                raise ValueError(f"{label} eye index out of range for {self.n_points} points")
        if set(self.left_eye_indices) & set(self.right_eye_indices):
            raise ValueError("eye index groups overlap")


# The public 68-point markup used with FG-NET annotations places the pupil
# centers at indices 31 and 36 (0-based).
FGNET_68 = LandmarkScheme("fgnet68", 68, (31,), (36,))

BUILTIN_SCHEMES = {FGNET_68.name: FGNET_68}


@dataclass
class LandmarkSet:
    scheme: LandmarkScheme
    points: np.ndarray  # (n_points, 2) float64

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if pts.shape[0] != self.scheme.n_points:
            raise ValueError(
                f"scheme {self.scheme.name!r} expects {self.scheme.n_points} points, got {pts.shape[0]}"
            )
        if not np.isfinite(pts).all():
            raise ValueError("landmark coordinates must be finite")
        self.points = pts


@dataclass(frozen=True)
class RoiRatios:
    """Crop ratios relative to the inter-eye distance: k1 above the eye
    line, k3 below it, k2 to each side of the eye midpoint."""

    k1: float = 0.35
    k2: float = 1.0
    k3: float = 1.75

    def __post_init__(self):
        if not all(v > 0 and math.isfinite(v) for v in (self.k1, self.k2, self.k3)):
            raise ValueError("ratios must be positive finite")


CANONICAL_WIDTH = 120
CANONICAL_HEIGHT = 126


@dataclass
class AlignedFace:
    """Rotation-compensated face crop at canonical size."""

    image: np.ndarray
    angle: float  # radians actually applied to the content
    eye_distance: float  # pixels, post-alignment
    source_id: str = ""

    def __post_init__(self):
        if self.eye_distance <= 0:
            raise ValueError("eye distance must be positive")


def parse_scheme(text: str, name: str = "custom") -> LandmarkScheme:
    """Parse a key/value scheme description.

    Recognized keys: ``n_points``, ``left_eye_indices``, ``right_eye_indices``
    (comma-separated, 0-based) and optional ``name``; ``=`` and ``:`` both
    work as separators, ``#`` starts a comment.
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*[:=]\s*(.*)$", line)
        if not m:
            raise DataError(f"line {lineno}: malformed scheme entry {line!r}")
        fields[m.group(1)] = m.group(2).strip()
    try:
        n_points = int(fields["n_points"])
        left = tuple(int(t) for t in fields["left_eye_indices"].split(","))
        right = tuple(int(t) for t in fields["right_eye_indices"].split(","))
    except KeyError as exc:
        raise DataError(f"scheme is missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise DataError(f"bad scheme value: {exc}") from None
    try:
        return LandmarkScheme(fields.get("name", name), n_points, left, right)
    except ValueError as exc:
        raise DataError(f"invalid scheme: {exc}") from None


_SEPARATORS = str.maketrans("(),", "   ")


def parse_landmark_file(data: bytes | str, scheme: LandmarkScheme) -> LandmarkSet:
    """Parse a points file against a scheme.

    Grammar: header lines ``version: 1`` and ``n_points: N``, an opening
    ``{``, then N coordinate pairs (whitespace separated; parentheses and
    commas are tolerated), then ``}``. Errors carry the offending line
    number.
    """
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    lines = text.splitlines()

    def content_lines():
        for lineno, raw in enumerate(lines, start=1):
            stripped = raw.strip()
            if stripped:
                yield lineno, stripped

    it = content_lines()

    def expect_header(key: str) -> tuple[int, str]:
        try:
            lineno, line = next(it)
        except StopIteration:
            raise DataError(f"malformed header: missing {key!r} line") from None
        m = re.match(rf"{key}\s*:\s*(\S+)$", line)
        if not m:
            raise DataError(f"line {lineno}: malformed header, expected {key!r}, got {line!r}")
        return lineno, m.group(1)

    _, version = expect_header("version")
    if version != "1":
        raise DataError(f"unsupported points-file version {version!r}")
    lineno, n_str = expect_header("n_points")
    try:
        declared = int(n_str)
    except ValueError:
        raise DataError(f"line {lineno}: malformed header, n_points not an integer: {n_str!r}") from None
    if declared != scheme.n_points:
        raise DataError(
            f"line {lineno}: wrong point count: scheme {scheme.name!r} expects "
            f"{scheme.n_points} points, file declares {declared}"
        )

    try:
        lineno, line = next(it)
    except StopIteration:
        raise DataError("malformed header: missing '{'") from None
    if line != "{":
        raise DataError(f"line {lineno}: malformed header, expected '{{', got {line!r}")

    coords: list[float] = []
    closed = False
    for lineno, line in it:
        if line == "}":
            closed = True
            break
        for tok in line.translate(_SEPARATORS).split():
            try:
                value = float(tok)
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric coordinate {tok!r}") from None
            if not math.isfinite(value):
                raise DataError(f"line {lineno}: non-finite coordinate {tok!r}")
            coords.append(value)
        if len(coords) > 2 * declared:
            raise DataError(f"line {lineno}: wrong point count: more than the declared {declared} points")
    if not closed:
        raise DataError("unterminated point list: missing '}'")
    if len(coords) % 2:
        raise DataError(f"line {lineno}: dangling coordinate (odd value count)")
    found = len(coords) // 2
    if found != declared:
        raise DataError(f"line {lineno}: wrong point count: declared {declared}, found {found}")
    points = np.array(coords, dtype=np.float64).reshape(-1, 2)
    return LandmarkSet(scheme, points)


def load_landmarks(path, scheme: LandmarkScheme) -> LandmarkSet:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read landmarks {path}: {exc}") from exc
    try:
        return parse_landmark_file(data, scheme)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def eye_centers(lms: LandmarkSet) -> tuple[Point2, Point2]:
    """Arithmetic-mean centers of the two eye index groups, ordered left
    (smaller x) then right; swaps with a warning if the annotation runs the
    other way."""
    pts = lms.points
    left = pts[list(lms.scheme.left_eye_indices)].mean(axis=0)
    right = pts[list(lms.scheme.right_eye_indices)].mean(axis=0)
    if right[0] < left[0]:
        warnings.warn(
            f"scheme {lms.scheme.name!r}: right eye center is left of the left eye center; swapping",
            stacklevel=2,
        )
        left, right = right, left
    return Point2(*left), Point2(*right)


def rotation_angle(left: Point2, right: Point2) -> float:
    """Eye-line angle atan2(right.y - left.y, right.x - left.x)."""
    if left.x == right.x and left.y == right.y:
        raise ValueError("coincident eye points")
    return math.atan2(right.y - left.y, right.x - left.x)


def rotate_point(p: Point2, center: Point2, theta: float) -> Point2:
    """Rotate p about center by theta:
    x' = cx + (x-cx) cos(theta) - (y-cy) sin(theta),
    y' = cy + (x-cx) sin(theta) + (y-cy) cos(theta)."""
    dx = p.x - center.x
    dy = p.y - center.y
    c = math.cos(theta)
    s = math.sin(theta)
    return Point2(center.x + dx * c - dy * s, center.y + dx * s + dy * c)


def _sample_bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear samples at continuous positions, zero outside the frame."""
    h, w = img.shape
    u = xs - 0.5
    v = ys - 0.5
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fx = u - j0
    fy = v - i0

    def fetch(ii, jj):
        inside = (ii >= 0) & (ii < h) & (jj >= 0) & (jj < w)
        out = np.zeros(ii.shape, dtype=np.float64)
        out[inside] = img[ii[inside], jj[inside]]
        return out

    return (
        fetch(i0, j0) * (1 - fx) * (1 - fy)
        + fetch(i0, j0 + 1) * fx * (1 - fy)
        + fetch(i0 + 1, j0) * (1 - fx) * fy
        + fetch(i0 + 1, j0 + 1) * fx * fy
    )


def _to_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def align_face(img: np.ndarray, lms: LandmarkSet) -> tuple[np.ndarray, LandmarkSet, float]:
    """Level the eye line by rotating image and landmarks about the image
    center.

    Returns the resampled image (bilinear, inverse mapping, zero fill), the
    identically transformed landmarks and the angle applied to the content.
    The transformed eye centers end up with equal y up to floating-point
    noise.
    """
    if img.ndim != 2 or img.size == 0:
        raise ValueError("degenerate image")
    h, w = img.shape
    left, right = eye_centers(lms)
    theta = rotation_angle(left, right)
    applied = -theta
    center = Point2(w / 2.0, h / 2.0)
    if applied == 0.0:
        return img.copy(), LandmarkSet(lms.scheme, lms.points.copy()), 0.0

    c = math.cos(applied)
    s = math.sin(applied)
    d = lms.points - (center.x, center.y)
    new_points = np.column_stack(
        (center.x + d[:, 0] * c - d[:, 1] * s, center.y + d[:, 0] * s + d[:, 1] * c)
    )

    # Inverse map: output position q samples the source at C + R(-applied)(q - C).
    jx = np.arange(w, dtype=np.float64) + 0.5
    iy = np.arange(h, dtype=np.float64) + 0.5
    qx, qy = np.meshgrid(jx - center.x, iy - center.y)
    ci = math.cos(-applied)
    si = math.sin(-applied)
    sx = center.x + qx * ci - qy * si
    sy = center.y + qx * si + qy * ci
    out = _to_u8(_sample_bilinear(img, sx, sy))
    return out, LandmarkSet(lms.scheme, new_points), applied


def inter_eye_distance(left: Point2, right: Point2) -> float:
    d = math.hypot(right.x - left.x, right.y - left.y)
    if d == 0.0:
        raise ValueError("zero eye distance")
    return d


def _resample_rect(
    img: np.ndarray,
    left: float,
    top: float,
    right: float,
    bottom: float,
    out_w: int,
    out_h: int,
) -> np.ndarray:
    """Resize the continuous rectangle [left,right] x [top,bottom] to
    out_w x out_h, sampling output pixel centers bilinearly."""
    sx = left + (np.arange(out_w, dtype=np.float64) + 0.5) * (right - left) / out_w
    sy = top + (np.arange(out_h, dtype=np.float64) + 0.5) * (bottom - top) / out_h
    gx, gy = np.meshgrid(sx, sy)
    return _to_u8(_sample_bilinear(img, gx, gy))


def crop_roi_ratios(
    img: np.ndarray,
    eye_mid: Point2,
    eye_distance: float,
    ratios: RoiRatios = RoiRatios(),
    out_w: int = CANONICAL_WIDTH,
    out_h: int = CANONICAL_HEIGHT,
) -> np.ndarray:
    """Crop the face box spanned by the eye midpoint and the inter-eye
    distance, then resize to the canonical raster.

    The box runs k2*l to each side of the midpoint, k1*l above the eye line
    and k3*l below it. Content outside the source image contributes zeros.
    """
    if eye_distance <= 0:
        raise ValueError("eye distance must be positive")
    h, w = img.shape
    x0 = eye_mid.x - ratios.k2 * eye_distance
    x1 = eye_mid.x + ratios.k2 * eye_distance
    y0 = eye_mid.y - ratios.k1 * eye_distance
    y1 = eye_mid.y + ratios.k3 * eye_distance
    if x1 <= 0 or x0 >= w or y1 <= 0 or y0 >= h:
        raise ValueError("ROI entirely outside image")
    return _resample_rect(img, x0, y0, x1, y1, out_w, out_h)


def crop_roi_bbox(
    img: np.ndarray,
    lms: LandmarkSet,
    out_w: int = CANONICAL_WIDTH,
    out_h: int = CANONICAL_HEIGHT,
) -> np.ndarray:
    """Crop the axis-aligned bounding box of all landmarks and resize to the
    canonical raster."""
    pts = lms.points
    if np.unique(pts, axis=0).shape[0] < 2:
        raise ValueError("need at least 2 distinct landmarks")
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    if x0 == x1 or y0 == y1:
        raise ValueError("degenerate landmark bounding box")
    return _resample_rect(img, x0, y0, x1, y1, out_w, out_h)
