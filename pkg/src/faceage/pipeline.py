"""Composition of the per-image stages: load, align, crop, extract."""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .descriptors import FilterBank
from .features import FeatureLayout, default_layout, extract_features
from .geometry import (
    AlignedFace,
    LandmarkScheme,
    LandmarkSet,
    Point2,
    align_face,
    crop_roi_bbox,
    crop_roi_ratios,
    eye_centers,
    inter_eye_distance,
    load_landmarks,
)
from .image import load_image

ROI_MODES = ("ratios", "bbox")


def layout_for(config: RunConfig, bank: FilterBank | None) -> FeatureLayout:
    bsif_bits = bank.n if (config.use_bsif and bank is not None) else 8
    return default_layout(
        use_lbp=config.use_lbp,
        use_bsif=config.use_bsif,
        bsif_bits=bsif_bits,
        face_w=config.canonical_width,
        face_h=config.canonical_height,
        grid_rows=config.grid_rows,
        grid_cols=config.grid_cols,
    )


def prepare_face(
    img: np.ndarray,
    lms: LandmarkSet,
    roi_mode: str,
    config: RunConfig,
    source_id: str = "",
) -> AlignedFace:
    """Rotation-compensate, measure the eye distance and crop to the
    canonical raster using the requested ROI style."""
    if roi_mode not in ROI_MODES:
        raise ValueError(f"unknown roi mode {roi_mode!r}")
    rotated, rotated_lms, angle = align_face(img, lms)
    left, right = eye_centers(rotated_lms)
    distance = inter_eye_distance(left, right)
    if roi_mode == "ratios":
        mid = Point2((left.x + right.x) / 2.0, (left.y + right.y) / 2.0)
        crop = crop_roi_ratios(
            rotated, mid, distance, config.roi, config.canonical_width, config.canonical_height
        )
    else:
        crop = crop_roi_bbox(rotated, rotated_lms, config.canonical_width, config.canonical_height)
    return AlignedFace(crop, angle, distance, source_id)


def prepare_face_files(
    image_path: str,
    landmarks_path: str,
    scheme: LandmarkScheme,
    roi_mode: str,
    config: RunConfig,
    source_id: str = "",
) -> AlignedFace:
    img = load_image(image_path)
    lms = load_landmarks(landmarks_path, scheme)
    return prepare_face(img, lms, roi_mode, config, source_id or image_path)


def extract_from_files(
    image_path: str,
    landmarks_path: str,
    scheme: LandmarkScheme,
    roi_mode: str,
    config: RunConfig,
    layout: FeatureLayout,
    bank: FilterBank | None,
    source_id: str = "",
) -> np.ndarray:
    face = prepare_face_files(image_path, landmarks_path, scheme, roi_mode, config, source_id)
    return extract_features(face, layout, bank)
