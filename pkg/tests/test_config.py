import numpy as np
import pytest

from faceage.config import RunConfig, load_config
from faceage.errors import DataError
from faceage.geometry import LandmarkSet, RoiRatios
from faceage.pipeline import layout_for, prepare_face
from faceage.synthetic import SYNTH_SCHEME, render_face


def test_defaults():
    cfg = RunConfig()
    assert (cfg.canonical_width, cfg.canonical_height) == (120, 126)
    assert (cfg.grid_rows, cfg.grid_cols) == (4, 3)
    assert cfg.roi == RoiRatios(0.35, 1.0, 1.75)
    assert cfg.gammas[0] == 2.0**-15 and cfg.gammas[-1] == 2.0**-5
    assert cfg.lambdas[0] == 2.0**-12 and cfg.lambdas[-1] == 1.0
    assert cfg.cs[0] == 0.5 and cfg.cs[-1] == 2.0**7
    assert cfg.epsilons == (0.5, 1.0, 2.0)
    assert cfg.folds == 5


def test_load_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "canonical_width = 60\n"
        "canonical_height: 63\n"
        "grid_rows = 2\n"
        "grid_cols = 2\n"
        "k1 = 0.4\n"
        "descriptors = lbp\n"
        "algorithm = svr\n"
        "gammas = 0.5, 1.0\n"
        "epsilons = 0.25\n"
        "folds = 3\n"
        "seed = 99\n"
        "bank = sub/bank.txt\n",
        encoding="utf-8",
    )
    cfg = load_config(path)
    assert cfg.canonical_width == 60 and cfg.canonical_height == 63
    assert cfg.use_lbp and not cfg.use_bsif
    assert cfg.algorithm == "svr"
    assert cfg.gammas == (0.5, 1.0)
    assert cfg.epsilons == (0.25,)
    assert cfg.roi.k1 == 0.4
    assert cfg.seed == 99
    assert cfg.bank_path == str(tmp_path / "sub" / "bank.txt")
    grid = cfg.hypergrid()
    assert grid.folds == 3 and grid.seed == 99


def test_load_config_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("mystery = 3\n")
    with pytest.raises(DataError, match="unknown config key"):
        load_config(path)
    path.write_text("gammas = a,b\n")
    with pytest.raises(DataError, match="bad number list"):
        load_config(path)
    path.write_text("descriptors = none\n")
    with pytest.raises(DataError, match="lbp and/or bsif"):
        load_config(path)
    path.write_text("k1 = -1\n")
    with pytest.raises(DataError, match="positive"):
        load_config(path)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(algorithm="forest")
    with pytest.raises(ValueError):
        RunConfig(use_lbp=False, use_bsif=False)


def test_prepare_face_both_roi_modes():
    rng = np.random.default_rng(0)
    img, points = render_face(40.0, 96, rng, tilt=0.1)
    lms = LandmarkSet(SYNTH_SCHEME, points)
    cfg = RunConfig()
    for mode in ("ratios", "bbox"):
        face = prepare_face(img, lms, mode, cfg, "demo")
        assert face.image.shape == (126, 120)
        assert face.eye_distance > 0
        assert face.angle == pytest.approx(-0.1, abs=1e-9)
    with pytest.raises(ValueError, match="roi mode"):
        prepare_face(img, lms, "oval", cfg)


def test_layout_for_follows_bank_width():
    cfg = RunConfig()
    from faceage.descriptors import FilterBank

    bank = FilterBank(np.random.default_rng(1).standard_normal((6, 5, 5)))
    layout = layout_for(cfg, bank)
    assert layout.descriptors == (("lbp", 8), ("bsif", 6))
    assert layout.dims == 13 * 256 + 13 * 64
