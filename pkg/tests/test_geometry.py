import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from faceage.errors import DataError
from faceage.geometry import (
    FGNET_68,
    LandmarkScheme,
    LandmarkSet,
    Point2,
    RoiRatios,
    align_face,
    crop_roi_bbox,
    crop_roi_ratios,
    eye_centers,
    inter_eye_distance,
    parse_landmark_file,
    parse_scheme,
    rotate_point,
    rotation_angle,
)
from faceage.geometry import _sample_bilinear, _to_u8

from oracles import rotate_matrix_oracle

EYES2 = LandmarkScheme("eyes2", 2, (0,), (1,))

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


# --- landmark file parsing ---


def test_parse_paren_format():
    text = "version: 1\nn_points: 3\n{\n(1.0 2.0)(3 4)(5 6)\n}\n"
    scheme = LandmarkScheme("tri", 3, (0,), (1,))
    lms = parse_landmark_file(text, scheme)
    assert np.array_equal(lms.points, [[1, 2], [3, 4], [5, 6]])


def test_parse_wrong_point_count():
    lines = ["version: 1", "n_points: 68", "{"] + ["1 2"] * 67 + ["}"]
    with pytest.raises(DataError, match="wrong point count"):
        parse_landmark_file("\n".join(lines), FGNET_68)


def test_parse_fgnet_style_file():
    # hand-built 68-point file in the documented grammar
    pts = [(float(i), float(i) / 2.0 + 0.25) for i in range(68)]
    lines = ["version: 1", "n_points: 68", "{"]
    lines += [f"  {x:.2f}   {y:.2f}" for x, y in pts]
    lines += ["}"]
    lms = parse_landmark_file("\n".join(lines).encode(), FGNET_68)
    assert lms.points.shape == (68, 2)
    assert np.allclose(lms.points, pts)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(DataError, match="line 4: non-numeric coordinate 'oops'"):
        parse_landmark_file("version: 1\nn_points: 2\n{\noops 3\n1 1\n}\n", EYES2)
    with pytest.raises(DataError, match="malformed header"):
        parse_landmark_file("n_points: 2\n{\n1 1\n2 2\n}\n", EYES2)
    with pytest.raises(DataError, match="missing '}'"):
        parse_landmark_file("version: 1\nn_points: 2\n{\n1 1\n2 2\n", EYES2)
    with pytest.raises(DataError, match="non-finite"):
        parse_landmark_file("version: 1\nn_points: 2\n{\n1 1\nnan 2\n}\n", EYES2)


def test_parse_scheme_config():
    scheme = parse_scheme("n_points = 68\nleft_eye_indices = 31\nright_eye_indices = 36\n")
    assert scheme.n_points == 68
    assert scheme.left_eye_indices == (31,)
    with pytest.raises(DataError, match="missing key"):
        parse_scheme("n_points = 4\n")
    with pytest.raises(DataError, match="invalid scheme"):
        parse_scheme("n_points = 4\nleft_eye_indices = 0\nright_eye_indices = 9\n")


# --- eye centers ---


def test_eye_center_single_point():
    scheme = LandmarkScheme("s", 2, (0,), (1,))
    lms = LandmarkSet(scheme, np.array([[10.0, 20.0], [40.0, 20.0]]))
    left, right = eye_centers(lms)
    assert left == Point2(10, 20)


def test_eye_center_is_mean():
    scheme = LandmarkScheme("s", 4, (0, 1, 2), (3,))
    lms = LandmarkSet(scheme, np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [9.0, 1.0]]))
    left, _ = eye_centers(lms)
    assert left == Point2(1.0, 1.0)


def test_eye_centers_synthetic_68():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 100, size=(68, 2))
    pts[31] = (20.0, 40.0)
    pts[36] = (60.0, 42.0)
    lms = LandmarkSet(FGNET_68, pts)
    left, right = eye_centers(lms)
    # hand-averaged: single-index groups are the points themselves
    assert left == Point2(20.0, 40.0)
    assert right == Point2(60.0, 42.0)


def test_eye_centers_swap_warns():
    scheme = LandmarkScheme("s", 2, (0,), (1,))
    lms = LandmarkSet(scheme, np.array([[50.0, 10.0], [10.0, 10.0]]))
    with pytest.warns(UserWarning, match="swap"):
        left, right = eye_centers(lms)
    assert left.x < right.x


# --- rotation angle ---


def test_rotation_angle_cases():
    assert rotation_angle(Point2(10, 20), Point2(50, 20)) == 0.0
    assert rotation_angle(Point2(0, 0), Point2(10, 10)) == pytest.approx(math.pi / 4)
    assert rotation_angle(Point2(0, 0), Point2(10, -10)) == pytest.approx(-math.pi / 4)
    with pytest.raises(ValueError, match="coincident"):
        rotation_angle(Point2(1, 1), Point2(1, 1))


@given(coords, coords, coords, coords)
def test_rotation_angle_mirror_antisymmetry(lx, ly, rx, ry):
    # the convention keeps right.x > left.x, which also avoids the atan2
    # branch cut at +-pi where the flip identity cannot hold
    assume(rx > lx)
    a = rotation_angle(Point2(lx, ly), Point2(rx, ry))
    b = rotation_angle(Point2(lx, -ly), Point2(rx, -ry))
    assert a == -b


# --- rotate_point ---


def test_rotate_point_identity_and_quarter_turn():
    p = Point2(3.7, -1.2)
    q0 = rotate_point(p, Point2(10, 10), 0.0)
    assert q0.x == pytest.approx(p.x, rel=1e-12)
    assert q0.y == pytest.approx(p.y, rel=1e-12)
    q = rotate_point(Point2(1, 0), Point2(0, 0), math.pi / 2)
    assert q.x == pytest.approx(0, abs=1e-12)
    assert q.y == pytest.approx(1)


def test_rotate_point_matches_matrix_oracle():
    got = rotate_point(Point2(3, 4), Point2(1, 1), 0.3)
    want = rotate_matrix_oracle((3, 4), (1, 1), 0.3)
    assert got.x == pytest.approx(want[0], abs=1e-12)
    assert got.y == pytest.approx(want[1], abs=1e-12)


@given(coords, coords, coords, coords, angles)
def test_rotate_point_isometry(px, py, cx, cy, theta):
    p, c = Point2(px, py), Point2(cx, cy)
    before = math.hypot(px - cx, py - cy)
    q = rotate_point(p, c, theta)
    after = math.hypot(q.x - cx, q.y - cy)
    assert after == pytest.approx(before, rel=1e-9, abs=1e-9)


# --- align_face ---


def _eye_lms(lx, ly, rx, ry):
    return LandmarkSet(EYES2, np.array([[lx, ly], [rx, ry]], dtype=float))


def test_align_level_eyes_is_identity():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (40, 50)).astype(np.uint8)
    lms = _eye_lms(10, 20, 40, 20)
    out, out_lms, angle = align_face(img, lms)
    assert angle == 0.0
    assert np.array_equal(out, img)
    assert np.array_equal(out_lms.points, lms.points)


def test_align_levels_tilted_eyes():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (100, 100)).astype(np.uint8)
    out, out_lms, angle = align_face(img, _eye_lms(30, 40, 70, 60))
    left, right = eye_centers(out_lms)
    assert abs(left.y - right.y) <= 0.5
    assert out.shape == img.shape


@settings(max_examples=60, deadline=None)
@given(
    st.floats(5, 18),
    st.floats(5, 43),
    st.floats(30, 43),
    st.floats(5, 43),
)
def test_align_levels_random_eye_pairs(lx, ly, rx, ry):
    img = np.zeros((48, 48), dtype=np.uint8)
    _, out_lms, _ = align_face(img, _eye_lms(lx, ly, rx, ry))
    left, right = eye_centers(out_lms)
    assert abs(left.y - right.y) <= 0.5
    d = inter_eye_distance(left, right)
    assert abs(d - abs(right.x - left.x)) <= 0.5


def test_align_roundtrip_recovers_gradient():
    # build a smooth reference, synthesize a tilted copy of it with an
    # independent inverse-mapping sampler, then check alignment restores it
    yy, xx = np.mgrid[0:64, 0:64]
    base = np.clip(xx * 2.0 + yy * 1.5, 0, 255).astype(np.uint8)
    theta = 0.25
    c = Point2(32.0, 32.0)
    level = _eye_lms(20, 32, 44, 32)
    tilted_pts = np.array(
        [rotate_matrix_oracle(tuple(p), (c.x, c.y), theta) for p in level.points]
    )
    jx = np.arange(64) + 0.5
    qx, qy = np.meshgrid(jx - c.x, jx - c.y)
    ci, si = math.cos(-theta), math.sin(-theta)
    tilted = _to_u8(
        _sample_bilinear(base, c.x + qx * ci - qy * si, c.y + qx * si + qy * ci)
    )
    recovered, _, angle = align_face(tilted, LandmarkSet(EYES2, tilted_pts))
    assert angle == pytest.approx(-theta, abs=1e-9)
    interior = (slice(16, 48), slice(16, 48))
    err = np.abs(recovered[interior].astype(float) - base[interior].astype(float)).mean()
    assert err <= 2.0


def test_align_idempotent():
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, (64, 64)).astype(np.uint8)
    _, lms1, _ = align_face(img, _eye_lms(12, 20, 50, 44))
    left, right = eye_centers(lms1)
    assert abs(rotation_angle(left, right)) < 1e-6


def test_align_rejects_degenerate_image():
    with pytest.raises(ValueError, match="degenerate"):
        align_face(np.zeros((0, 5), dtype=np.uint8), _eye_lms(0, 0, 1, 0))


# --- inter-eye distance ---


def test_inter_eye_distance():
    assert inter_eye_distance(Point2(0, 0), Point2(3, 4)) == 5.0
    assert inter_eye_distance(Point2(10, 20), Point2(50, 20)) == 40.0
    with pytest.raises(ValueError, match="zero"):
        inter_eye_distance(Point2(1, 2), Point2(1, 2))


# --- ROI crops ---


def test_roi_rect_from_defaults():
    # mid=(100,100), distance 40: x in [60,140], y in [86,170]
    r = RoiRatios()
    mid = Point2(100.0, 100.0)
    assert mid.x - r.k2 * 40 == 60
    assert mid.x + r.k2 * 40 == 140
    assert mid.y - r.k1 * 40 == 86
    assert mid.y + r.k3 * 40 == 170
    img = np.zeros((300, 300), dtype=np.uint8)
    out = crop_roi_ratios(img, mid, 40.0)
    assert out.shape == (126, 120)


def test_roi_ratios_mapping_preserves_gradient_scales():
    # with k1 = k2 = k3 the crop box is square, so the resize must scale
    # the two axes by rect/out_w and rect/out_h: check both directions on
    # coordinate-gradient images
    size = 200
    k = 0.5
    ratios = RoiRatios(k1=k, k2=k, k3=k)
    mid = Point2(100.0, 100.0)
    distance = 80.0
    rect = 2 * k * distance  # square side
    left = mid.x - k * distance
    top = mid.y - k * distance

    img_x = np.tile(np.arange(size, dtype=np.uint8), (size, 1))
    out = crop_roi_ratios(img_x, mid, distance, ratios, out_w=40, out_h=42)
    expected_x = left + (np.arange(40) + 0.5) * rect / 40 - 0.5
    assert np.abs(out[21].astype(float) - expected_x).max() <= 0.51

    img_y = img_x.T.copy()
    out_y = crop_roi_ratios(img_y, mid, distance, ratios, out_w=40, out_h=42)
    expected_y = top + (np.arange(42) + 0.5) * rect / 42 - 0.5
    assert np.abs(out_y[:, 20].astype(float) - expected_y).max() <= 0.51


def test_roi_ratios_fully_outside_errors():
    img = np.zeros((50, 50), dtype=np.uint8)
    with pytest.raises(ValueError, match="outside"):
        crop_roi_ratios(img, Point2(500.0, 500.0), 10.0)


@given(st.integers(30, 200), st.integers(30, 200), st.integers(1, 12345))
@settings(max_examples=30, deadline=None)
def test_roi_ratios_output_dims_fixed(w, h, seed):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (h, w)).astype(np.uint8)
    mid = Point2(float(rng.uniform(0, w)), float(rng.uniform(0, h)))
    out = crop_roi_ratios(img, mid, float(rng.uniform(1, 60)))
    assert out.shape == (126, 120)


def test_bbox_two_points_and_degenerate():
    img = np.tile(np.arange(100, dtype=np.uint8), (100, 1))
    scheme = LandmarkScheme("s", 2, (0,), (1,))
    lms = LandmarkSet(scheme, np.array([[10.0, 10.0], [50.0, 90.0]]))
    out = crop_roi_bbox(img, lms, out_w=40, out_h=80)
    # column values should span the box [10, 50): centers map linearly
    expected = 10 + (np.arange(40) + 0.5) * 40.0 / 40 - 0.5
    assert np.abs(out[40].astype(float) - expected).max() <= 0.51

    same = LandmarkSet(scheme, np.array([[5.0, 5.0], [5.0, 5.0]]))
    with pytest.raises(ValueError, match="distinct"):
        crop_roi_bbox(img, same)
    flat = LandmarkSet(scheme, np.array([[5.0, 5.0], [9.0, 5.0]]))
    with pytest.raises(ValueError, match="degenerate"):
        crop_roi_bbox(img, flat)


def test_bbox_matches_minmax_oracle():
    rng = np.random.default_rng(11)
    pts = rng.uniform(5, 95, size=(68, 2))
    lo = [min(p[0] for p in pts), min(p[1] for p in pts)]
    hi = [max(p[0] for p in pts), max(p[1] for p in pts)]
    lms = LandmarkSet(FGNET_68, pts)
    img = np.tile(np.arange(100, dtype=np.uint8), (100, 1))
    out = crop_roi_bbox(img, lms, out_w=50, out_h=50)
    expected = lo[0] + (np.arange(50) + 0.5) * (hi[0] - lo[0]) / 50 - 0.5
    assert np.abs(out[25].astype(float) - expected).max() <= 0.51
