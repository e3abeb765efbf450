import numpy as np
import pytest

from faceage.errors import DataError
from faceage.image import decode_pnm, encode_pgm, load_image, luma, save_pgm


def test_p5_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (7, 11)).astype(np.uint8)
    path = tmp_path / "x.pgm"
    save_pgm(path, img)
    assert np.array_equal(load_image(path), img)


def test_p2_ascii_with_comments():
    data = b"P2 # comment\n# another\n3 2\n255\n0 10 20\n30 40 250\n"
    img = decode_pnm(data)
    assert np.array_equal(img, [[0, 10, 20], [30, 40, 250]])


def test_p6_color_to_luma():
    # one red, one gray pixel; luma weights 0.299/0.587/0.114, half-up
    data = b"P6\n2 1\n255\n" + bytes([255, 0, 0, 10, 10, 10])
    img = decode_pnm(data)
    assert img[0, 0] == 76  # floor(255*0.299 + 0.5)
    assert img[0, 1] == 10


def test_p3_ascii_color():
    data = b"P3\n1 1\n255\n0 255 0\n"
    assert decode_pnm(data)[0, 0] == 150  # floor(255*0.587 + 0.5) = 150


def test_maxval_scaling():
    data = b"P2\n2 1\n15\n0 15\n"
    img = decode_pnm(data)
    assert img[0, 0] == 0 and img[0, 1] == 255


def test_decode_errors():
    with pytest.raises(DataError, match="magic"):
        decode_pnm(b"P7\n1 1\n255\n\x00")
    with pytest.raises(DataError, match="truncated"):
        decode_pnm(b"P5\n4 4\n255\n\x00\x00")
    with pytest.raises(DataError, match="maxval"):
        decode_pnm(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(DataError, match="exceeds"):
        decode_pnm(b"P2\n1 1\n10\n11\n")
    with pytest.raises(DataError, match="cannot read"):
        load_image("/nonexistent/file.pgm")


def test_luma_rounds_half_up():
    r = np.array([[1.0]])
    g = np.array([[0.0]])
    b = np.array([[1.0]])
    # 0.299 + 0.114 = 0.413 -> 0
    assert luma(r, g, b)[0, 0] == 0
    assert luma(np.array([[250.0]]), np.array([[90.0]]), np.array([[0.0]]))[0, 0] == 128
    # 0.299*250 + 0.587*90 = 74.75 + 52.83 = 127.58 -> 128


def test_encode_pgm_rejects_bad_input():
    with pytest.raises(ValueError):
        encode_pgm(np.zeros((3, 3), dtype=np.float64))
