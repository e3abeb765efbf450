"""Synthetic face benchmark data.

Renders stylized face rasters whose texture frequency and wrinkle count grow
monotonically with an assigned age, with a random in-plane tilt that the
alignment stage has to undo. Landmarks use an 8-point scheme: two points per
eye plus four face-outline corners (so both ROI styles work). These images
carry a real, learnable age signal while staying free of any dataset
licensing, which makes them suitable for end-to-end benchmarks and tests.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .geometry import LandmarkScheme
from .image import save_pgm
from .io_files import atomic_write_text

SYNTH_SCHEME = LandmarkScheme("synth8", 8, (0, 1), (2, 3))

AGE_LOW = 18.0
AGE_HIGH = 93.0


def scheme_text() -> str:
    return (
        "name = synth8\n"
        "n_points = 8\n"
        "left_eye_indices = 0,1\n"
        "right_eye_indices = 2,3\n"
    )


def render_face(
    age: float,
    size: int,
    rng: np.random.Generator,
    tilt: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Render one face and its 8 landmarks (image coordinates)."""
    if tilt is None:
        tilt = float(rng.uniform(-0.25, 0.25))
    cx = cy = size / 2.0
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
    ct, st = np.cos(tilt), np.sin(tilt)
    # face-frame coordinates: undo the tilt about the center
    xr = ct * (xx - cx) + st * (yy - cy)
    yr = -st * (xx - cx) + ct * (yy - cy)

    t = (age - AGE_LOW) / (AGE_HIGH - AGE_LOW)
    img = 150.0 + 50.0 * (yr / size)
    freq = 3.0 + 17.0 * t
    img += 35.0 * np.sin(2.0 * np.pi * freq * yr / size + rng.uniform(0, 2 * np.pi))

    n_wrinkles = int(round(20.0 * t))
    for _ in range(n_wrinkles):
        y0 = rng.uniform(-0.42, 0.42) * size
        wiggle = 2.0 * np.sin(2.0 * np.pi * rng.uniform(0.5, 2.0) * xr / size + rng.uniform(0, 6.0))
        img -= 50.0 * np.exp(-(((yr - y0 - wiggle) / 1.5) ** 2))

    # eye spacing chosen so the default-ratio ROI (k2 to each side, k1
    # above, k3 below the eye line) stays inside the rendered raster
    eye_dx, eye_dy = 0.16 * size, -0.15 * size
    for ex in (-eye_dx, eye_dx):
        d2 = (xr - ex) ** 2 + (yr - eye_dy) ** 2
        img -= 70.0 * np.exp(-d2 / (2.0 * (0.035 * size) ** 2))

    img += rng.normal(0.0, 3.0, img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)

    def to_image(fx: float, fy: float) -> tuple[float, float]:
        return (cx + ct * fx - st * fy, cy + st * fx + ct * fy)

    half = 0.45 * size
    face_frame_points = [
        (-eye_dx - 2.0, eye_dy),  # left eye pair
        (-eye_dx + 2.0, eye_dy),
        (eye_dx - 2.0, eye_dy),  # right eye pair
        (eye_dx + 2.0, eye_dy),
        (-half, -half),  # outline corners
        (half, -half),
        (half, half),
        (-half, half),
    ]
    points = np.array([to_image(fx, fy) for fx, fy in face_frame_points])
    return img, points


def landmark_text(points: np.ndarray) -> str:
    lines = ["version: 1", f"n_points: {len(points)}", "{"]
    for x, y in points:
        lines.append(f"{x:.4f} {y:.4f}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def build_dataset(
    out_dir: str | Path,
    count: int,
    seed: int,
    size_range: tuple[int, int] = (64, 128),
    images_per_person: int = 1,
) -> tuple[Path, Path]:
    """Write PGMs, landmark files, a scheme file and a manifest.

    Ages are evenly spread over 18..93 and shuffled, so every split carries
    the full range. Returns (manifest_path, scheme_path).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    if count > 1:
        ages = np.linspace(AGE_LOW, AGE_HIGH, count)
    else:
        ages = np.array([(AGE_LOW + AGE_HIGH) / 2.0])
    rng.shuffle(ages)

    rows = []
    for i, age in enumerate(ages):
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        img, points = render_face(float(age), size, rng)
        img_name = f"face_{i:04d}.pgm"
        pts_name = f"face_{i:04d}.pts"
        save_pgm(out_dir / img_name, img)
        (out_dir / pts_name).write_text(landmark_text(points), encoding="utf-8")
        person = f"p{i // images_per_person:04d}"
        rows.append((img_name, pts_name, f"{float(age):.4f}", person))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_path", "landmarks_path", "age", "person_id"])
    writer.writerows(rows)
    manifest_path = out_dir / "manifest.csv"
    atomic_write_text(manifest_path, buf.getvalue())
    scheme_path = out_dir / "scheme.cfg"
    atomic_write_text(scheme_path, scheme_text())
    return manifest_path, scheme_path
